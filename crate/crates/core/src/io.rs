//! Line-oriented table files.
//!
//! Line 1 holds a JSON header object; each following line holds the JSON
//! entry of one config, in index order. Floats are written with their
//! shortest round-trip decimal form, so save/load preserves every bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::space::ConfigSpace;
use crate::table::{BenchTable, EvalEntry};
use crate::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub format_version: u32,
    pub dataset_name: String,
    pub max_epochs: usize,
    pub n_seeds: usize,
    pub space: ConfigSpace,
}

impl TableHeader {
    pub fn of(table: &BenchTable) -> Self {
        TableHeader {
            format_version: FORMAT_VERSION,
            dataset_name: table.dataset_name().to_owned(),
            max_epochs: table.max_epochs(),
            n_seeds: table.n_seeds(),
            space: table.space().clone(),
        }
    }
}

pub fn write_table<W: Write>(table: &BenchTable, mut out: W) -> Result<()> {
    serde_json::to_writer(&mut out, &TableHeader::of(table)).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for entry in table.entries() {
        serde_json::to_writer(&mut out, entry).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn save_table(table: &BenchTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    // write next to the target and rename so readers never see a partial file
    let tmp = path.with_extension("partial");
    write_table(table, BufWriter::new(File::create(&tmp)?))?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_table<R: BufRead>(input: R) -> Result<BenchTable> {
    let mut lines = input.lines();
    let header_line = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty file".into(),
    })??;
    let header: TableHeader = serde_json::from_str(&header_line).map_err(|e| Error::Parse {
        line: 1,
        message: format!("header: {e}"),
    })?;
    if header.format_version != FORMAT_VERSION {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported format_version {}", header.format_version),
        });
    }
    let expected = header.space.cardinality();
    let mut entries = Vec::with_capacity(expected);
    for (i, line) in lines.enumerate() {
        let line_no = i + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if entries.len() == expected {
            return Err(Error::Integrity(format!(
                "line {line_no}: more than {expected} entries"
            )));
        }
        let entry: EvalEntry = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            message: format!("entry for config {}: {e}", entries.len()),
        })?;
        if entry.records.len() != header.n_seeds {
            return Err(Error::Parse {
                line: line_no,
                message: format!(
                    "{} records, header declares n_seeds = {}",
                    entry.records.len(),
                    header.n_seeds
                ),
            });
        }
        entries.push(entry);
    }
    if entries.len() != expected {
        return Err(Error::Parse {
            line: entries.len() + 2,
            message: format!(
                "truncated: found {} of {expected} entries",
                entries.len()
            ),
        });
    }
    BenchTable::new(header.space, header.max_epochs, header.dataset_name, entries)
}

pub fn load_table(path: impl AsRef<Path>) -> Result<BenchTable> {
    read_table(BufReader::new(File::open(path)?))
}

#[derive(Deserialize)]
struct SpaceOnly {
    space: ConfigSpace,
}

/// Reads the `space` field of the first JSON object in a file. Accepts a
/// table file or a bare header (pretty-printed or not).
pub fn load_space(path: impl AsRef<Path>) -> Result<ConfigSpace> {
    let text = std::fs::read_to_string(path)?;
    let mut stream = serde_json::Deserializer::from_str(&text).into_iter::<SpaceOnly>();
    match stream.next() {
        Some(Ok(s)) => Ok(s.space),
        Some(Err(e)) => Err(Error::Parse {
            line: e.line(),
            message: e.to_string(),
        }),
        None => Err(Error::Parse {
            line: 1,
            message: "empty space file".into(),
        }),
    }
}

/// SHA-256 of the serialized table, hex encoded.
pub fn table_checksum(table: &BenchTable) -> String {
    struct HashWriter(Sha256);
    impl Write for HashWriter {
        fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
            self.0.update(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> std::io::Result<()> {
            Ok(())
        }
    }
    let mut w = HashWriter(Sha256::new());
    write_table(table, &mut w).expect("hashing never fails");
    hex::encode(w.0.finalize())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;
    use crate::synth::{gen_synthetic, SynthOptions};
    use crate::table::tests::small_table;

    #[test]
    fn roundtrip() {
        let t = small_table();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let back = read_table(buf.as_slice()).unwrap();
        assert_eq!(back, t);
        assert_eq!(table_checksum(&back), table_checksum(&t));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let t = small_table();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let cut = lines[..5].join("\n");
        match read_table(cut.as_bytes()) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("truncated")),
            other => panic!("unexpected {other:?}"),
        }
        // cut mid-line
        let half = &text[..text.len() - 40];
        assert!(matches!(read_table(half.as_bytes()), Err(Error::Parse { .. })));
    }

    #[test]
    fn malformed_field_reports_line() {
        let t = small_table();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines: Vec<String> = text.lines().map(str::to_owned).collect();
        lines[3] = lines[3].replace("\"runtime_seconds\"", "\"runtime\"");
        let text = lines.join("\n");
        match read_table(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn extra_entries_are_integrity_errors() {
        let t = small_table();
        let mut buf = Vec::new();
        write_table(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let last = text.lines().last().unwrap().to_owned();
        let text = format!("{text}{last}\n");
        assert!(matches!(read_table(text.as_bytes()), Err(Error::Integrity(_))));
    }

    #[test]
    fn full_grid_roundtrip_is_bit_exact() {
        let space = ConfigSpace::fcnet();
        let opts = SynthOptions {
            n_seeds: 1,
            max_epochs: 3,
            dataset_name: "bits".into(),
        };
        let mut rng = rng_from_seed(5);
        let t = gen_synthetic(
            &space,
            |p| 0.1 + p.iter().sum::<usize>() as f64 / 7.0,
            |_| 0.013,
            &opts,
            &mut rng,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        save_table(&t, &path).unwrap();
        let back = load_table(&path).unwrap();
        for (a, b) in t.entries().iter().zip(back.entries()) {
            for (ra, rb) in a.records.iter().zip(&b.records) {
                for (x, y) in ra.valid_curve.iter().zip(&rb.valid_curve) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
                assert_eq!(ra.final_test_mse.to_bits(), rb.final_test_mse.to_bits());
                assert_eq!(ra.runtime_seconds.to_bits(), rb.runtime_seconds.to_bits());
            }
        }
        assert_eq!(back, t);
    }

    #[test]
    fn space_from_table_or_header() {
        let t = small_table();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        save_table(&t, &path).unwrap();
        assert_eq!(&load_space(&path).unwrap(), t.space());

        let spec = dir.path().join("space.json");
        std::fs::write(
            &spec,
            "{\n  \"space\": [\n    {\"name\": \"a\", \"kind\": \"ordinal\", \"values\": [1, 2]}\n  ]\n}\n",
        )
        .unwrap();
        assert_eq!(load_space(&spec).unwrap().cardinality(), 2);
    }
}
