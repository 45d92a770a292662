use rand::Rng;
use rand_distr::StandardNormal;

use super::ProblemSuite;
use crate::{Error, Purpose, Result, RngStream, Vector};

/// `Z²` values tried by [`measure_dissimilarity`]: 1, 1.25, …, 16.
pub const Z_SQ_GRID: (f64, f64, f64) = (1.0, 16.0, 0.25);

/// Certified constants of the bound `(1/n)Σ‖∇f_i(x)‖² ≤ ζ² + Z²‖∇f(x)‖²` on a
/// set of points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DissimilarityReport {
    /// Smallest feasible `ζ²` over the `Z²` grid.
    pub zeta_sq: f64,
    /// Smallest grid `Z²` attaining `zeta_sq`.
    pub z_sq: f64,
    /// Smallest feasible `ζ²` with `Z² = 1`.
    pub zeta_sq_at_z1: f64,
    /// `(1/n)Σ‖∇f_i(x*)‖²`.
    pub zeta_star_sq: f64,
    pub sample_points: usize,
}

/// Smallest `ζ² ≥ 0` with `spread ≤ ζ² + z_sq·grad` at every point, nudged
/// upward until the bound holds in floating point.
fn min_zeta(pairs: &[(f64, f64)], z_sq: f64) -> f64 {
    let mut zeta = pairs.iter().map(|(s, g)| s - z_sq * g).fold(0.0f64, f64::max);
    while pairs.iter().any(|(s, g)| *s > zeta + z_sq * g) {
        zeta = if zeta == 0.0 {
            f64::MIN_POSITIVE
        } else {
            zeta * (1.0 + f64::EPSILON)
        };
    }
    zeta
}

/// Fits `(ζ², Z²)` on `points`; see [`DissimilarityReport`].
pub fn measure_dissimilarity(suite: &ProblemSuite, points: &[Vector]) -> Result<DissimilarityReport> {
    if points.is_empty() {
        return Err(Error::Parameter("need at least one evaluation point".into()));
    }
    let pairs: Vec<(f64, f64)> = points
        .iter()
        .map(|x| (suite.spread_at(x), suite.gradient(x).norm_squared()))
        .collect();
    let zeta_sq_at_z1 = min_zeta(&pairs, 1.0);
    let (start, stop, step) = Z_SQ_GRID;
    let steps = ((stop - start) / step).round() as usize;
    let mut best = (zeta_sq_at_z1, 1.0);
    for k in 1..=steps {
        let z_sq = start + step * k as f64;
        let zeta = min_zeta(&pairs, z_sq);
        if zeta < best.0 {
            best = (zeta, z_sq);
        }
    }
    Ok(DissimilarityReport {
        zeta_sq: best.0,
        z_sq: best.1,
        zeta_sq_at_z1,
        zeta_star_sq: suite.zeta_star_sq(),
        sample_points: points.len(),
    })
}

/// `count` points `x* + radius·u` with `u` Gaussian, from `seed`. The optimum
/// itself is always the first point.
pub fn sample_points(suite: &ProblemSuite, count: usize, radius: f64, seed: u64) -> Vec<Vector> {
    let mut rng = RngStream::synchronized(seed, 0, Purpose::Sampling).rng();
    let d = suite.d();
    let mut out = vec![suite.x_star().clone()];
    while out.len() < count {
        let u = Vector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        out.push(suite.x_star() + u * radius);
    }
    out.truncate(count.max(1));
    out
}
