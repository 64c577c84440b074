//! Raw delimited input and the train/valid/test split with normalization.

use std::io::BufRead;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::{GridError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Delimiter {
    Comma,
    Whitespace,
    /// Comma if the header line contains one, whitespace otherwise.
    Auto,
}

impl std::str::FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "comma" | "," => Ok(Delimiter::Comma),
            "whitespace" | "space" | "ws" => Ok(Delimiter::Whitespace),
            "auto" => Ok(Delimiter::Auto),
            other => Err(format!("unknown delimiter `{other}` (comma, whitespace, auto)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawData {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl RawData {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

fn split_line(line: &str, delim: Delimiter) -> Vec<&str> {
    match delim {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        _ => line.split_whitespace().collect(),
    }
}

/// Parses delimited text with a header row. Blank lines are skipped.
pub fn read_delimited<R: BufRead>(input: R, delim: Delimiter) -> Result<RawData> {
    let mut lines = input.lines().enumerate().filter(|(_, l)| match l {
        Ok(l) => !l.trim().is_empty(),
        Err(_) => true,
    });
    let (_, header_line) = lines.next().ok_or_else(|| GridError::Data("empty input".into()))?;
    let header_line = header_line?;
    let delim = match delim {
        Delimiter::Auto if header_line.contains(',') => Delimiter::Comma,
        Delimiter::Auto => Delimiter::Whitespace,
        d => d,
    };
    let header: Vec<String> = split_line(&header_line, delim)
        .into_iter()
        .map(|h| h.trim_matches('"').to_owned())
        .collect();
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line = line?;
        let cells = split_line(&line, delim);
        if cells.len() != header.len() {
            return Err(GridError::Parse {
                line: i + 1,
                column: cells.len().min(header.len()) + 1,
                message: format!("expected {} fields, found {}", header.len(), cells.len()),
            });
        }
        let row = cells
            .iter()
            .enumerate()
            .map(|(j, c)| {
                c.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| GridError::Parse {
                        line: i + 1,
                        column: j + 1,
                        message: format!("non-numeric cell `{c}`"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(RawData { header, rows })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 0.6,
            valid: 0.2,
            test: 0.2,
        }
    }
}

impl SplitRatios {
    /// Row counts for `n` rows; the test split takes the remainder.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let total = self.train + self.valid + self.test;
        let n_train = (n as f64 * self.train / total).round() as usize;
        let n_valid = ((n as f64 * self.valid / total).round() as usize).min(n - n_train);
        (n_train, n_valid, n - n_train - n_valid)
    }
}

/// Normalized splits. Features and target are shifted by the training mean
/// and divided by the training variance.
#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub feature_names: Vec<String>,
    pub train_x: Array2<f64>,
    pub train_y: Array1<f64>,
    pub valid_x: Array2<f64>,
    pub valid_y: Array1<f64>,
    pub test_x: Array2<f64>,
    pub test_y: Array1<f64>,
    pub feature_means: Vec<f64>,
    pub feature_scales: Vec<f64>,
    pub target_mean: f64,
    pub target_scale: f64,
}

impl DatasetSplit {
    pub fn n_features(&self) -> usize {
        self.train_x.ncols()
    }

    pub fn denormalize_target(&self, y: f64) -> f64 {
        y * self.target_scale + self.target_mean
    }
}

fn mean_and_variance(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let mean = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

// a zero training variance would blow up the division
fn usable_scale(var: f64) -> f64 {
    if var > 0.0 && var.is_finite() {
        var
    } else {
        1.0
    }
}

pub fn prepare_dataset<R: Rng + ?Sized>(
    raw: &RawData,
    target: usize,
    ratios: SplitRatios,
    rng: &mut R,
) -> Result<DatasetSplit> {
    let n = raw.rows.len();
    if n < 10 {
        return Err(GridError::Data(format!("need at least 10 rows, found {n}")));
    }
    if target >= raw.header.len() {
        return Err(GridError::Data(format!("target column {target} out of range")));
    }
    if [ratios.train, ratios.valid, ratios.test].iter().any(|r| !(r.is_finite() && *r >= 0.0))
        || ratios.train <= 0.0
    {
        return Err(GridError::Data("split ratios must be non-negative with a positive training share".into()));
    }
    let features: Vec<usize> = (0..raw.header.len())
        .filter(|&j| j != target)
        .filter(|&j| raw.rows.iter().any(|r| r[j] != raw.rows[0][j]))
        .collect();
    if features.is_empty() {
        return Err(GridError::Data("every feature column is constant".into()));
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (n_train, n_valid, _) = ratios.sizes(n);
    let (train_rows, rest) = order.split_at(n_train);
    let (valid_rows, test_rows) = rest.split_at(n_valid);

    let mut feature_means = Vec::with_capacity(features.len());
    let mut feature_scales = Vec::with_capacity(features.len());
    for &j in &features {
        let (m, v) = mean_and_variance(train_rows.iter().map(|&i| raw.rows[i][j]));
        feature_means.push(m);
        feature_scales.push(usable_scale(v));
    }
    let (target_mean, target_var) = mean_and_variance(train_rows.iter().map(|&i| raw.rows[i][target]));
    let target_scale = usable_scale(target_var);

    let build = |rows: &[usize]| {
        let x = Array2::from_shape_fn((rows.len(), features.len()), |(r, c)| {
            (raw.rows[rows[r]][features[c]] - feature_means[c]) / feature_scales[c]
        });
        let y = Array1::from_shape_fn(rows.len(), |r| (raw.rows[rows[r]][target] - target_mean) / target_scale);
        (x, y)
    };
    let (train_x, train_y) = build(train_rows);
    let (valid_x, valid_y) = build(valid_rows);
    let (test_x, test_y) = build(test_rows);
    Ok(DatasetSplit {
        feature_names: features.iter().map(|&j| raw.header[j].clone()).collect(),
        train_x,
        train_y,
        valid_x,
        valid_y,
        test_x,
        test_y,
        feature_means,
        feature_scales,
        target_mean,
        target_scale,
    })
}
