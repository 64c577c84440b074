//! Two-hidden-layer regression network with hand-written backpropagation.
//!
//! `x -> dense(h1, act1) -> dropout(p1) -> dense(h2, act2) -> dropout(p2) -> dense(1)`

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Uniform};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Tanh => z.mapv(f64::tanh),
        }
    }

    /// Multiplies `grad` in place by the derivative, given pre-activation
    /// `z` and activation output `a`.
    fn backprop(self, grad: &mut Array2<f64>, z: &Array2<f64>, a: &Array2<f64>) {
        match self {
            Activation::Relu => ndarray::Zip::from(grad).and(z).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }),
            Activation::Tanh => ndarray::Zip::from(grad).and(a).for_each(|g, &a| *g *= 1.0 - a * a),
        }
    }
}

/// Weights and biases. Also used for gradients and Adam moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub w3: Array2<f64>,
    pub b3: Array1<f64>,
}

impl Params {
    pub fn zeros(n_in: usize, h1: usize, h2: usize) -> Self {
        Params {
            w1: Array2::zeros((n_in, h1)),
            b1: Array1::zeros(h1),
            w2: Array2::zeros((h1, h2)),
            b2: Array1::zeros(h2),
            w3: Array2::zeros((h2, 1)),
            b3: Array1::zeros(1),
        }
    }

    /// Uniform in ±sqrt(6 / (fan_in + fan_out)) per weight matrix, zero biases.
    pub fn glorot<R: Rng + ?Sized>(n_in: usize, h1: usize, h2: usize, rng: &mut R) -> Self {
        let mut p = Params::zeros(n_in, h1, h2);
        for w in [&mut p.w1, &mut p.w2, &mut p.w3] {
            let (fan_in, fan_out) = w.dim();
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-limit, limit).expect("finite limit");
            w.mapv_inplace(|_| dist.sample(rng));
        }
        p
    }

    pub fn tensors(&self) -> [&[f64]; 6] {
        [
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.w3.as_slice().expect("standard layout"),
            self.b3.as_slice().expect("standard layout"),
        ]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 6] {
        [
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.w3.as_slice_mut().expect("standard layout"),
            self.b3.as_slice_mut().expect("standard layout"),
        ]
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }
}

#[derive(Clone, Debug)]
pub struct Mlp {
    pub params: Params,
    pub act1: Activation,
    pub act2: Activation,
}

/// Inverted-dropout masks for one mini-batch: entries are 0 or 1/(1-p).
#[derive(Clone, Debug)]
pub struct DropoutMasks {
    pub m1: Option<Array2<f64>>,
    pub m2: Option<Array2<f64>>,
}

impl DropoutMasks {
    pub fn none() -> Self {
        DropoutMasks { m1: None, m2: None }
    }

    pub fn sample<R: Rng + ?Sized>(rows: usize, h1: usize, h2: usize, p1: f64, p2: f64, rng: &mut R) -> Self {
        let mut draw = |h: usize, p: f64| {
            (p > 0.0).then(|| {
                let keep = 1.0 / (1.0 - p);
                Array2::from_shape_fn((rows, h), |_| if rng.random::<f64>() < p { 0.0 } else { keep })
            })
        };
        let m1 = draw(h1, p1);
        let m2 = draw(h2, p2);
        DropoutMasks { m1, m2 }
    }
}

struct Cache {
    z1: Array2<f64>,
    a1: Array2<f64>,
    h1: Array2<f64>,
    z2: Array2<f64>,
    a2: Array2<f64>,
    h2: Array2<f64>,
    out: Array1<f64>,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(n_in: usize, h1: usize, h2: usize, act1: Activation, act2: Activation, rng: &mut R) -> Self {
        Mlp {
            params: Params::glorot(n_in, h1, h2, rng),
            act1,
            act2,
        }
    }

    fn forward_cached(&self, x: ArrayView2<f64>, masks: &DropoutMasks) -> Cache {
        let p = &self.params;
        let z1 = x.dot(&p.w1) + &p.b1;
        let a1 = self.act1.apply(&z1);
        let h1 = match &masks.m1 {
            Some(m) => &a1 * m,
            None => a1.clone(),
        };
        let z2 = h1.dot(&p.w2) + &p.b2;
        let a2 = self.act2.apply(&z2);
        let h2 = match &masks.m2 {
            Some(m) => &a2 * m,
            None => a2.clone(),
        };
        let out = h2.dot(&p.w3).index_axis_move(Axis(1), 0) + p.b3[0];
        Cache { z1, a1, h1, z2, a2, h2, out }
    }

    pub fn predict(&self, x: ArrayView2<f64>) -> Array1<f64> {
        self.forward_cached(x, &DropoutMasks::none()).out
    }

    /// Mean squared error over `x`, evaluated in row chunks without dropout.
    pub fn mse(&self, x: ArrayView2<f64>, y: ArrayView1<f64>) -> f64 {
        const CHUNK: usize = 4096;
        let mut sse = 0.0;
        for (xc, yc) in x.axis_chunks_iter(Axis(0), CHUNK).zip(y.axis_chunks_iter(Axis(0), CHUNK)) {
            let pred = self.predict(xc);
            sse += pred.iter().zip(yc).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
        }
        sse / x.nrows() as f64
    }

    /// Batch loss with fixed masks.
    pub fn loss(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, masks: &DropoutMasks) -> f64 {
        let out = self.forward_cached(x, masks).out;
        out.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / x.nrows() as f64
    }

    /// Returns the batch loss and its gradient with respect to every parameter.
    pub fn loss_and_grad(&self, x: ArrayView2<f64>, y: ArrayView1<f64>, masks: &DropoutMasks) -> (f64, Params) {
        let p = &self.params;
        let c = self.forward_cached(x, masks);
        let n = x.nrows() as f64;
        let resid = &c.out - &y;
        let loss = resid.iter().map(|r| r * r).sum::<f64>() / n;

        let dout = (resid * (2.0 / n)).insert_axis(Axis(1));
        let gw3 = c.h2.t().dot(&dout);
        let gb3 = dout.sum_axis(Axis(0));

        let mut d2 = dout.dot(&p.w3.t());
        if let Some(m) = &masks.m2 {
            d2 *= m;
        }
        self.act2.backprop(&mut d2, &c.z2, &c.a2);
        let gw2 = c.h1.t().dot(&d2);
        let gb2 = d2.sum_axis(Axis(0));

        let mut d1 = d2.dot(&p.w2.t());
        if let Some(m) = &masks.m1 {
            d1 *= m;
        }
        self.act1.backprop(&mut d1, &c.z1, &c.a1);
        let gw1 = x.t().dot(&d1);
        let gb1 = d1.sum_axis(Axis(0));

        // transposed products may come back in column-major order
        let std = |a: Array2<f64>| if a.is_standard_layout() { a } else { a.as_standard_layout().into_owned() };
        (
            loss,
            Params {
                w1: std(gw1),
                b1: gb1,
                w2: std(gw2),
                b2: gb2,
                w3: std(gw3),
                b3: gb3,
            },
        )
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Params,
    v: Params,
}

impl Adam {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPS: f64 = 1e-8;

    pub fn new(shape: &Params) -> Self {
        let zeros = Params::zeros(shape.w1.nrows(), shape.w1.ncols(), shape.w2.ncols());
        Adam {
            beta1: Self::BETA1,
            beta2: Self::BETA2,
            eps: Self::EPS,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn update(&mut self, params: &mut Params, grad: &Params, lr: f64) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        for (((w, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grad.tensors())
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut())
        {
            for i in 0..w.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                w[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
    }
}
