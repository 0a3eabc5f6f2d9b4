use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write;

use num_traits::Float;
use rand::Rng;

use crate::error::{shape_err, Error, Result};
use crate::matrix::Matrix;

/// `tanh` through a single `exp`, several times cheaper than the libm
/// routine. A short series covers the region near zero; elsewhere the
/// relative error stays below 1e-14.
#[inline]
fn tanh(v: f64) -> f64 {
    let a = Float::abs(v);
    if a < 1e-2 {
        let v2 = v * v;
        return v * (1.0 - v2 * (1.0 / 3.0 - v2 * (2.0 / 15.0 - v2 * (17.0 / 315.0))));
    }
    let t = Float::exp(-2.0 * a);
    Float::copysign((1.0 - t) / (1.0 + t), v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Tanh => tanh(v),
            Activation::Identity => v,
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Identity => "identity",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "tanh" => Some(Activation::Tanh),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Fully connected layer `a(x Wᵀ + b)` with `W` stored `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let mut z = x.matmul_t(&self.weight)?;
        for i in 0..z.rows() {
            for (v, b) in z.row_mut(i).iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(z)
    }
}

/// Gradients with the same layout as [`Mlp`] parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGrads {
    pub layers: Vec<(Matrix, Vec<f64>)>,
}

impl MlpGrads {
    pub fn flatten_into(&self, out: &mut Vec<f64>) {
        for (w, b) in &self.layers {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b);
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::new();
        self.flatten_into(&mut v);
        v
    }
}

/// Activations retained by [`Mlp::forward_cached`] for the backward pass.
#[derive(Debug, Clone)]
pub struct Tape {
    /// `outputs[0]` is the input batch, `outputs[k]` the output of layer `k-1`.
    outputs: Vec<Matrix>,
}

impl Tape {
    pub fn output(&self) -> &Matrix {
        self.outputs.last().expect("tape always holds the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
}

impl Mlp {
    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("an MLP needs at least one layer".into()));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.out_dim() {
                return shape_err("Mlp bias", (l.out_dim(), 1), (l.bias.len(), 1));
            }
            if k > 0 && layers[k - 1].out_dim() != l.in_dim() {
                return shape_err(
                    "Mlp layer chain",
                    (l.out_dim(), layers[k - 1].out_dim()),
                    l.weight.shape(),
                );
            }
        }
        Ok(Self { layers })
    }

    /// Tanh hidden layers and an identity output layer. Weights are drawn
    /// from `U(-a, a)` with `a = sqrt(6 / (in + out))`, biases start at zero.
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden: &[usize],
        out_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut widths = Vec::with_capacity(hidden.len() + 2);
        widths.push(in_dim);
        widths.extend_from_slice(hidden);
        widths.push(out_dim);
        if widths.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be at least 1".into()));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for (k, pair) in widths.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let a = Float::sqrt(6.0 / (fan_in + fan_out) as f64);
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-a..a))
                .collect();
            let activation = if k + 2 == widths.len() {
                Activation::Identity
            } else {
                Activation::Tanh
            };
            layers.push(Dense {
                weight: Matrix::from_vec(fan_out, fan_in, data)?,
                bias: vec![0.0; fan_out],
                activation,
            });
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.as_slice().len() + l.bias.len())
            .sum()
    }

    fn check_input(&self, batch: &Matrix) -> Result<()> {
        if batch.cols() != self.in_dim() {
            return shape_err("Mlp input", (batch.rows(), self.in_dim()), batch.shape());
        }
        Ok(())
    }

    pub fn forward(&self, batch: &Matrix) -> Result<Matrix> {
        self.check_input(batch)?;
        let mut h = self.layers[0].forward(batch)?;
        for l in &self.layers[1..] {
            h = l.forward(&h)?;
        }
        Ok(h)
    }

    pub fn forward_cached(&self, batch: &Matrix) -> Result<Tape> {
        self.check_input(batch)?;
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        outputs.push(batch.clone());
        for l in &self.layers {
            let next = l.forward(outputs.last().expect("non-empty"))?;
            outputs.push(next);
        }
        Ok(Tape { outputs })
    }

    /// Reverse-mode pass for `upstream = dL/d(output)`; returns parameter
    /// gradients and `dL/d(input)`.
    pub fn backward(&self, tape: &Tape, upstream: &Matrix) -> Result<(MlpGrads, Matrix)> {
        if upstream.shape() != tape.output().shape() {
            return shape_err("Mlp::backward", tape.output().shape(), upstream.shape());
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut g = upstream.clone();
        for (k, l) in self.layers.iter().enumerate().rev() {
            let out = &tape.outputs[k + 1];
            if l.activation == Activation::Tanh {
                for (gv, ov) in g.as_mut_slice().iter_mut().zip(out.as_slice()) {
                    *gv *= 1.0 - ov * ov;
                }
            }
            let input = &tape.outputs[k];
            let dw = g.t_matmul(input)?;
            let mut db = vec![0.0; l.out_dim()];
            for r in g.row_iter() {
                for (acc, v) in db.iter_mut().zip(r) {
                    *acc += v;
                }
            }
            grads.push((dw, db));
            g = g.matmul(&l.weight)?;
        }
        grads.reverse();
        Ok((MlpGrads { layers: grads }, g))
    }

    pub fn params_into(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(l.weight.as_slice());
            out.extend_from_slice(&l.bias);
        }
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.param_count());
        self.params_into(&mut v);
        v
    }

    /// Overwrites parameters from the front of `src`, returning how many
    /// values were consumed.
    pub fn set_params(&mut self, src: &[f64]) -> Result<usize> {
        if src.len() < self.param_count() {
            return shape_err("Mlp::set_params", (self.param_count(), 1), (src.len(), 1));
        }
        let mut at = 0;
        for l in &mut self.layers {
            let w = l.weight.as_mut_slice();
            w.copy_from_slice(&src[at..at + w.len()]);
            at += w.len();
            let nb = l.bias.len();
            l.bias.copy_from_slice(&src[at..at + nb]);
            at += nb;
        }
        Ok(at)
    }

    /// Text serialization; see `MODEL_FORMAT.md` at the repository root.
    pub fn write_blob(&self, out: &mut String) {
        let _ = writeln!(out, "mlp {}", self.layers.len());
        for l in &self.layers {
            let _ = writeln!(out, "layer {} {} {}", l.out_dim(), l.in_dim(), l.activation.tag());
            write_floats(out, l.weight.as_slice());
            write_floats(out, &l.bias);
        }
    }

    pub fn read_blob<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<Self> {
        let head = next_line(lines)?;
        let count: usize = match head.split_once(' ') {
            Some(("mlp", n)) => parse_num(n)?,
            _ => return Err(Error::Blob(format!("expected `mlp <count>`, got `{head}`"))),
        };
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next_line(lines)?;
            let parts: Vec<&str> = line.split(' ').collect();
            if parts.len() != 4 || parts[0] != "layer" {
                return Err(Error::Blob(format!("bad layer header `{line}`")));
            }
            let rows: usize = parse_num(parts[1])?;
            let cols: usize = parse_num(parts[2])?;
            let activation = Activation::from_tag(parts[3])
                .ok_or_else(|| Error::Blob(format!("unknown activation `{}`", parts[3])))?;
            let w = read_floats(next_line(lines)?, rows * cols)?;
            let b = read_floats(next_line(lines)?, rows)?;
            layers.push(Dense {
                weight: Matrix::from_vec(rows, cols, w)?,
                bias: b,
                activation,
            });
        }
        Self::from_layers(layers)
    }
}

pub(crate) fn next_line<'a, I: Iterator<Item = &'a str>>(lines: &mut I) -> Result<&'a str> {
    lines
        .next()
        .map(|l| l.trim_end_matches('\r'))
        .ok_or_else(|| Error::Blob("unexpected end of blob".into()))
}

pub(crate) fn parse_num<T: core::str::FromStr>(s: &str) -> Result<T> {
    s.trim()
        .parse()
        .map_err(|_| Error::Blob(format!("bad number `{s}`")))
}

fn write_floats(out: &mut String, vals: &[f64]) {
    for (i, v) in vals.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        // `{:e}` prints the shortest representation that round-trips exactly
        let _ = write!(out, "{v:e}");
    }
    out.push('\n');
}

fn read_floats(line: &str, expected: usize) -> Result<Vec<f64>> {
    let vals: Vec<f64> = if line.is_empty() {
        Vec::new()
    } else {
        line.split(' ').map(parse_num).collect::<Result<_>>()?
    };
    if vals.len() != expected {
        return Err(Error::Blob(format!(
            "expected {expected} values, found {}",
            vals.len()
        )));
    }
    Ok(vals)
}
