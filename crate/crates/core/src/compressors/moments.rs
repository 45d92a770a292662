use super::Compress;
use crate::{Error, Result, RngStream, Vector};

/// Monte Carlo estimates of the moments that define δ-compressors and
/// ω-quantizers, with standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentEstimate {
    pub samples: usize,
    /// Sample mean of `op(x)`.
    pub mean: Vector,
    /// Componentwise standard error of `mean`.
    pub mean_stderr: Vector,
    /// `‖mean − x‖`.
    pub bias_norm: f64,
    /// Mean of `‖op(x)‖² / ‖x‖²`.
    pub second_moment_ratio: f64,
    pub second_moment_stderr: f64,
    /// Mean of `‖op(x) − x‖² / ‖x‖²`.
    pub contraction_ratio: f64,
    pub contraction_stderr: f64,
}

impl MomentEstimate {
    /// Largest `|mean_j − x_j|` measured in standard errors. Components with
    /// zero standard error count as 0 if they match exactly, ∞ otherwise.
    pub fn max_bias_z(&self, x: &Vector) -> f64 {
        self.mean
            .iter()
            .zip(x.iter())
            .zip(self.mean_stderr.iter())
            .map(|((m, xj), se)| {
                let dev = (m - xj).abs();
                if *se > 0.0 {
                    dev / se
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Running mean / variance (Welford).
#[derive(Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, v: f64) {
        self.n += 1.0;
        let d = v - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (v - self.mean);
    }

    fn stderr(&self) -> f64 {
        if self.n < 2.0 {
            return 0.0;
        }
        (self.m2 / (self.n - 1.0) / self.n).sqrt()
    }
}

/// Applies `op` to `x` `samples` times, sample `s` drawing from
/// `base.at_round(s)`, and summarises the outputs.
pub fn estimate_moments<C: Compress + ?Sized>(
    op: &C,
    x: &Vector,
    samples: usize,
    base: RngStream,
) -> Result<MomentEstimate> {
    if samples == 0 {
        return Err(Error::Parameter("samples must be at least 1".into()));
    }
    let xx = x.norm_squared();
    if !(xx > 0.0) {
        return Err(Error::Parameter("moment ratios are undefined for x = 0".into()));
    }
    let d = x.len();
    let mut mean = Vector::zeros(d);
    let mut m2 = Vector::zeros(d);
    let mut second = Welford::default();
    let mut contraction = Welford::default();
    for s in 0..samples {
        let y = op.compress(x, &base.at_round(s as u64));
        let k = (s + 1) as f64;
        for j in 0..d {
            let delta = y[j] - mean[j];
            mean[j] += delta / k;
            m2[j] += delta * (y[j] - mean[j]);
        }
        second.push(y.norm_squared() / xx);
        contraction.push((&y - x).norm_squared() / xx);
    }
    let n = samples as f64;
    let mean_stderr = if samples > 1 {
        m2.map(|v| (v / (n - 1.0) / n).sqrt())
    } else {
        Vector::zeros(d)
    };
    Ok(MomentEstimate {
        samples,
        bias_norm: (&mean - x).norm(),
        mean,
        mean_stderr,
        second_moment_ratio: second.mean,
        second_moment_stderr: second.stderr(),
        contraction_ratio: contraction.mean,
        contraction_stderr: contraction.stderr(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{CompressorOp, Purpose};

    fn base() -> RngStream {
        RngStream::worker(3, 0, 0, Purpose::Sampling)
    }

    #[test]
    fn identity_moments() {
        let x = Vector::from_column_slice(&[1.0, -2.0, 3.0]);
        let m = estimate_moments(&CompressorOp::identity(3), &x, 10, base()).unwrap();
        assert_eq!(m.bias_norm, 0.0);
        assert_eq!(m.second_moment_ratio, 1.0);
        assert_eq!(m.contraction_ratio, 0.0);
    }

    #[test]
    fn zero_map_contracts_fully() {
        let zero = |x: &Vector, _: &RngStream| Vector::zeros(x.len());
        let x = Vector::from_column_slice(&[0.3, 4.0]);
        let m = estimate_moments(&zero, &x, 5, base()).unwrap();
        assert_eq!(m.contraction_ratio, 1.0);
        assert_eq!(m.second_moment_ratio, 0.0);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        let op = CompressorOp::identity(2);
        assert!(estimate_moments(&op, &Vector::zeros(2), 10, base()).is_err());
        assert!(estimate_moments(&op, &Vector::from_element(2, 1.0), 0, base()).is_err());
    }

    #[test]
    fn rand1_unbiased_second_moment() {
        let d = 10;
        let op = CompressorOp::rand_k_unbiased(d, 1).unwrap();
        let x = Vector::from_fn(d, |i, _| 1.0 + 0.1 * i as f64 * if i % 2 == 0 { 1.0 } else { -1.0 });
        let m = estimate_moments(&op, &x, 100_000, base()).unwrap();
        assert!(
            (m.second_moment_ratio / 10.0 - 1.0).abs() < 0.02,
            "{}",
            m.second_moment_ratio
        );
        assert!(m.max_bias_z(&x) <= 4.0);
    }
}
