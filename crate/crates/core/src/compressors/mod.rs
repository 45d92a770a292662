//! δ-compressors, ω-quantizers and linear sketches.
//!
//! A δ-compressor `C` satisfies `E‖C(x) − x‖² ≤ (1 − δ)‖x‖²`; an
//! ω-quantizer `Q` is unbiased with `E‖Q(x)‖² ≤ (1 + ω)‖x‖²`. Every operator
//! here is a pure function of its input and an [`RngStream`], so the same
//! stream always yields the same output.

mod moments;
mod sketch;
mod spec;

use rand::seq::index;

use crate::{Error, Result, RngStream, Vector};

pub use moments::{estimate_moments, MomentEstimate};
pub use sketch::{sketch, SketchBasis, SketchMode, RANK_TOLERANCE};
pub use spec::CompressorSpec;

/// Anything that maps a vector to a (possibly random) compressed vector.
pub trait Compress {
    fn compress(&self, x: &Vector, stream: &RngStream) -> Vector;
}

impl<F> Compress for F
where
    F: Fn(&Vector, &RngStream) -> Vector,
{
    fn compress(&self, x: &Vector, stream: &RngStream) -> Vector {
        self(x, stream)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CompressorKind {
    Identity,
    TopK {
        k: usize,
    },
    RandKBiased {
        k: usize,
    },
    RandKUnbiased {
        k: usize,
    },
    Sketch {
        mode: SketchMode,
        p: usize,
    },
    /// `x ↦ Q(x) / (1 + ω)` for an inner ω-quantizer.
    RescaledQuantizer(Box<CompressorOp>),
}

/// A compression operator on `R^d` together with its governing parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct CompressorOp {
    kind: CompressorKind,
    dim: usize,
    delta: Option<f64>,
    omega: Option<f64>,
    linear: bool,
}

fn check_k(k: usize, d: usize) -> Result<()> {
    if k == 0 || k > d {
        return Err(Error::Parameter(format!(
            "sparsity k = {k} must satisfy 1 <= k <= d = {d}"
        )));
    }
    Ok(())
}

impl CompressorOp {
    pub fn identity(d: usize) -> Self {
        Self {
            kind: CompressorKind::Identity,
            dim: d,
            delta: Some(1.0),
            omega: Some(0.0),
            linear: true,
        }
    }

    /// Top-k sparsification, `δ = k/d`.
    pub fn top_k(d: usize, k: usize) -> Result<Self> {
        check_k(k, d)?;
        Ok(Self {
            kind: CompressorKind::TopK { k },
            dim: d,
            delta: Some(k as f64 / d as f64),
            omega: None,
            linear: false,
        })
    }

    /// Random-k sparsification without rescaling, `δ = k/d`.
    pub fn rand_k_biased(d: usize, k: usize) -> Result<Self> {
        check_k(k, d)?;
        Ok(Self {
            kind: CompressorKind::RandKBiased { k },
            dim: d,
            delta: Some(k as f64 / d as f64),
            omega: None,
            linear: true,
        })
    }

    /// Random-k sparsification rescaled by `d/k`, `ω = d/k − 1`.
    pub fn rand_k_unbiased(d: usize, k: usize) -> Result<Self> {
        check_k(k, d)?;
        Ok(Self {
            kind: CompressorKind::RandKUnbiased { k },
            dim: d,
            delta: None,
            omega: Some(d as f64 / k as f64 - 1.0),
            linear: true,
        })
    }

    /// Projection onto a random `p`-dimensional subspace, `δ = p/d`.
    pub fn random_sketch(d: usize, mode: SketchMode, p: usize) -> Result<Self> {
        if p == 0 || p > d {
            return Err(Error::Parameter(format!(
                "sketch rank p = {p} must satisfy 1 <= p <= d = {d}"
            )));
        }
        Ok(Self {
            kind: CompressorKind::Sketch { mode, p },
            dim: d,
            delta: Some(p as f64 / d as f64),
            omega: None,
            linear: true,
        })
    }

    pub fn from_spec(spec: &CompressorSpec, d: usize) -> Result<Self> {
        match spec {
            CompressorSpec::Identity => Ok(Self::identity(d)),
            CompressorSpec::TopK(k) => Self::top_k(d, *k),
            CompressorSpec::RandK(k) => Self::rand_k_biased(d, *k),
            CompressorSpec::RandKUnbiased(k) => Self::rand_k_unbiased(d, *k),
            CompressorSpec::Sketch(mode, p) => Self::random_sketch(d, *mode, *p),
            CompressorSpec::Rescaled(inner) => rescale_to_compressor(&Self::from_spec(inner, d)?),
        }
    }

    pub fn kind(&self) -> &CompressorKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Contraction parameter if this operator is a δ-compressor.
    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    /// Variance parameter if this operator is an ω-quantizer.
    pub fn omega(&self) -> Option<f64> {
        self.omega
    }

    /// True iff the map is linear for a fixed draw of its randomness.
    pub fn is_linear(&self) -> bool {
        self.linear
    }

    pub fn is_quantizer(&self) -> bool {
        self.omega.is_some()
    }

    pub fn is_compressor(&self) -> bool {
        self.delta.is_some()
    }

    /// Whether the operator consumes randomness at all.
    pub fn is_random(&self) -> bool {
        match &self.kind {
            CompressorKind::Identity | CompressorKind::TopK { .. } => false,
            CompressorKind::RandKBiased { k } | CompressorKind::RandKUnbiased { k } => *k < self.dim,
            CompressorKind::Sketch { mode, p } => *mode == SketchMode::Gaussian || *p < self.dim,
            CompressorKind::RescaledQuantizer(inner) => inner.is_random(),
        }
    }

    /// Rough size in bits of one compressed message: `p⌈log₂ d⌉ + 64p` for
    /// `p` retained coordinates. This is an estimate, not an encoding.
    pub fn message_bits_estimate(&self) -> f64 {
        let d = self.dim as f64;
        let index_bits = d.log2().ceil().max(1.0);
        match &self.kind {
            CompressorKind::Identity => 64.0 * d,
            CompressorKind::TopK { k } | CompressorKind::RandKBiased { k } | CompressorKind::RandKUnbiased { k } => {
                *k as f64 * (index_bits + 64.0)
            }
            CompressorKind::Sketch { mode, p } => match mode {
                SketchMode::Coordinate => *p as f64 * (index_bits + 64.0),
                // Coefficients plus a shared seed.
                SketchMode::Gaussian => *p as f64 * 64.0 + 64.0,
            },
            CompressorKind::RescaledQuantizer(inner) => inner.message_bits_estimate(),
        }
    }

    /// Applies the operator to `x` using the draws of `stream`.
    pub fn apply(&self, x: &Vector, stream: &RngStream) -> Vector {
        debug_assert_eq!(x.len(), self.dim);
        match &self.kind {
            CompressorKind::Identity => x.clone(),
            CompressorKind::TopK { k } => keep(x, &top_k_support(x, *k), 1.0),
            CompressorKind::RandKBiased { k } => keep(x, &rand_k_support(self.dim, *k, stream), 1.0),
            CompressorKind::RandKUnbiased { k } => {
                let scale = self.dim as f64 / *k as f64;
                keep(x, &rand_k_support(self.dim, *k, stream), scale)
            }
            CompressorKind::Sketch { mode, p } => SketchBasis::random(self.dim, *p, *mode, stream).project(x),
            CompressorKind::RescaledQuantizer(inner) => {
                let omega = inner.omega.unwrap_or(0.0);
                inner.apply(x, stream) / (1.0 + omega)
            }
        }
    }
}

impl Compress for CompressorOp {
    fn compress(&self, x: &Vector, stream: &RngStream) -> Vector {
        self.apply(x, stream)
    }
}

fn keep(x: &Vector, support: &[usize], scale: f64) -> Vector {
    let mut out = Vector::zeros(x.len());
    if scale == 1.0 {
        for &j in support {
            out[j] = x[j];
        }
    } else {
        for &j in support {
            out[j] = x[j] * scale;
        }
    }
    out
}

/// Indices of the `k` largest-magnitude entries, ties broken towards the
/// lowest index. Returned in increasing index order.
pub fn top_k_support(x: &Vector, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    let k = k.min(x.len());
    if k < idx.len() {
        let order = |a: &usize, b: &usize| x[*b].abs().total_cmp(&x[*a].abs()).then_with(|| a.cmp(b));
        if k > 0 {
            idx.select_nth_unstable_by(k - 1, order);
        }
        idx.truncate(k);
    }
    idx.sort_unstable();
    idx
}

/// Uniformly random `k`-subset of `0..d` drawn from `stream`, sorted.
pub fn rand_k_support(d: usize, k: usize, stream: &RngStream) -> Vec<usize> {
    if k >= d {
        return (0..d).collect();
    }
    let mut rng = stream.rng();
    let mut idx = index::sample(&mut rng, d, k).into_vec();
    idx.sort_unstable();
    idx
}

/// Keeps the `k` entries of largest magnitude and zeroes the rest.
pub fn top_k(x: &Vector, k: usize) -> Result<Vector> {
    check_k(k, x.len())?;
    Ok(keep(x, &top_k_support(x, k), 1.0))
}

/// Keeps a uniformly random `k`-subset of coordinates, unscaled.
pub fn rand_k_biased(x: &Vector, k: usize, stream: &RngStream) -> Result<Vector> {
    check_k(k, x.len())?;
    Ok(keep(x, &rand_k_support(x.len(), k, stream), 1.0))
}

/// Keeps a uniformly random `k`-subset of coordinates scaled by `d/k`.
pub fn rand_k_unbiased(x: &Vector, k: usize, stream: &RngStream) -> Result<Vector> {
    let d = x.len();
    check_k(k, d)?;
    Ok(keep(x, &rand_k_support(d, k, stream), d as f64 / k as f64))
}

/// Turns an ω-quantizer into the δ-compressor `Q/(1+ω)` with `δ = 1/(1+ω)`.
pub fn rescale_to_compressor(q: &CompressorOp) -> Result<CompressorOp> {
    let omega = q
        .omega
        .ok_or_else(|| Error::Parameter(format!("{:?} is not an omega-quantizer", q.kind)))?;
    if omega == 0.0 && q.kind == CompressorKind::Identity {
        return Ok(CompressorOp::identity(q.dim));
    }
    Ok(CompressorOp {
        kind: CompressorKind::RescaledQuantizer(Box::new(q.clone())),
        dim: q.dim,
        delta: Some(1.0 / (1.0 + omega)),
        omega: None,
        linear: q.linear,
    })
}
