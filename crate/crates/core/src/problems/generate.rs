use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{ProblemSuite, QuadraticNode, SuiteKind};
use crate::{Error, Matrix, Purpose, Result, RngStream, Vector};

fn gaussian_vector(rng: &mut ChaCha8Rng, d: usize) -> Vector {
    Vector::from_fn(d, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric matrix with eigenvalues `lo`, `hi` and `d − 2` further
/// eigenvalues uniform in between.
fn hessian(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> Matrix {
    let g = Matrix::from_fn(d, d, |_, _| rng.sample(StandardNormal));
    let q = g.qr().q();
    let mut lambda = Vector::zeros(d);
    lambda[0] = lo;
    if d > 1 {
        lambda[d - 1] = hi;
        for j in 1..d - 1 {
            lambda[j] = lo + (hi - lo) * rng.random::<f64>();
        }
    }
    let a = &q * Matrix::from_diagonal(&lambda) * q.transpose();
    (&a + a.transpose()) * 0.5
}

/// `n` zero-sum offsets with `(1/n) Σ ‖o_i‖² = ζ²`.
fn offsets(rng: &mut ChaCha8Rng, d: usize, n: usize, zeta_sq: f64) -> Vec<Vector> {
    if zeta_sq == 0.0 {
        return vec![Vector::zeros(d); n];
    }
    let mut o: Vec<Vector> = (0..n).map(|_| gaussian_vector(rng, d)).collect();
    let mean = o.iter().fold(Vector::zeros(d), |acc, v| acc + v) / n as f64;
    for v in o.iter_mut() {
        *v -= &mean;
    }
    let spread = o.iter().map(|v| v.norm_squared()).sum::<f64>() / n as f64;
    let scale = (zeta_sq / spread).sqrt();
    for v in o.iter_mut() {
        *v *= scale;
    }
    o
}

fn check_common(d: usize, n: usize, zeta_star_sq: f64, sigma: f64) -> Result<()> {
    if d == 0 || n == 0 {
        return Err(Error::Parameter(format!(
            "need d >= 1 and n >= 1, got d = {d}, n = {n}"
        )));
    }
    if !(zeta_star_sq >= 0.0) || !zeta_star_sq.is_finite() {
        return Err(Error::Parameter(format!(
            "zeta_star_sq must be >= 0, got {zeta_star_sq}"
        )));
    }
    if n == 1 && zeta_star_sq > 0.0 {
        return Err(Error::Parameter(
            "a single node has zero dissimilarity; zeta_star_sq must be 0".into(),
        ));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    Ok(())
}

/// Nodes sharing one Hessian with spectrum `[lo, hi]`, linear terms
/// `b_i = A m + o_i` around a Gaussian center `m`.
fn shared_nodes(seed: u64, d: usize, n: usize, lo: f64, hi: f64, zeta_star_sq: f64) -> (Vec<QuadraticNode>, Vector) {
    let mut rng = RngStream::synchronized(seed, 0, Purpose::Generator).rng();
    let a = hessian(&mut rng, d, lo, hi);
    let center = gaussian_vector(&mut rng, d);
    let am = &a * &center;
    let nodes = offsets(&mut rng, d, n, zeta_star_sq)
        .into_iter()
        .map(|o| QuadraticNode::new(a.clone(), &am + o))
        .collect();
    (nodes, center)
}

/// Quadratic suite whose mean Hessian has extreme eigenvalues `μ` and `L`
/// and whose gradients at the optimum spread by `ζ*²`.
///
/// All nodes share the Hessian; heterogeneity comes only from zero-sum
/// offsets in the linear terms. Generation is a pure function of `seed`.
pub fn gen_quadratic_suite(
    d: usize,
    n: usize,
    mu: f64,
    l: f64,
    zeta_star_sq: f64,
    sigma: f64,
    seed: u64,
) -> Result<ProblemSuite> {
    check_common(d, n, zeta_star_sq, sigma)?;
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Parameter(format!("L must be positive, got {l}")));
    }
    if !(mu >= 0.0) || mu > l {
        return Err(Error::Parameter(format!("need 0 <= mu <= L, got mu = {mu}, L = {l}")));
    }
    if d == 1 && mu != l {
        return Err(Error::Parameter("d = 1 forces mu = L".into()));
    }
    let (nodes, center) = shared_nodes(seed, d, n, mu, l, zeta_star_sq);
    let mut suite = ProblemSuite::assemble(nodes, l, mu, sigma, SuiteKind::Quadratic, 0.0, center.clone())?;
    // Σ o_i = 0 makes the center an exact minimiser of the mean, and every
    // node gradient there is exactly −o_i.
    let f = suite.value(&center);
    suite.set_optimum(center, f);
    Ok(suite)
}

/// Nonconvex suite: the quadratic nodes (Hessian spectrum `[0, L − 2c]`)
/// plus `c Σ_j φ(x_j − m_j)` with `φ(u) = u²/(1+u²)`.
///
/// Since `φ'' ∈ [−½, 2]` every node is `L`-smooth; the regularizer is
/// nonnegative and vanishes only at the center `m`, which is the unique global
/// minimiser of `f` with `f* = −½ mᵀĀm`. With `c = 0` this is the quadratic
/// suite with `μ = 0` and the same seed.
pub fn gen_nonconvex_suite(d: usize, n: usize, l: f64, c: f64, zeta_star_sq: f64, seed: u64) -> Result<ProblemSuite> {
    check_common(d, n, zeta_star_sq, 0.0)?;
    if !(l > 0.0) || !l.is_finite() {
        return Err(Error::Parameter(format!("L must be positive, got {l}")));
    }
    if !(c >= 0.0) || 2.0 * c > l {
        return Err(Error::Parameter(format!(
            "regularizer weight must satisfy 0 <= c <= L/2, got c = {c}, L = {l}"
        )));
    }
    if d == 1 && 2.0 * c != l {
        return Err(Error::Parameter(
            "d = 1 needs c = L/2 (the spectrum collapses to 0)".into(),
        ));
    }
    let (nodes, center) = shared_nodes(seed, d, n, 0.0, l - 2.0 * c, zeta_star_sq);
    let kind = if c == 0.0 {
        SuiteKind::Quadratic
    } else {
        SuiteKind::NonconvexRegularized
    };
    let mut suite = ProblemSuite::assemble(nodes, l, 0.0, 0.0, kind, c, center.clone())?;
    let f = suite.value(&center);
    suite.set_optimum(center, f);
    Ok(suite)
}

#[cfg(test)]
mod tests {
    use super::super::spectrum_bounds;
    use super::*;

    #[test]
    fn declared_spectrum_matches_eigensolve() {
        for (d, mu, l) in [(8, 1.0, 10.0), (16, 0.1, 3.0), (2, 0.5, 0.5), (5, 0.0, 1.0)] {
            let s = gen_quadratic_suite(d, 3, mu, l, 1.0, 0.0, 4).unwrap();
            let (lo, hi) = spectrum_bounds(s.mean_hessian());
            assert!((hi - l).abs() <= 1e-8 * l, "{hi} vs {l}");
            assert!((lo - mu).abs() <= 1e-8 * l, "{lo} vs {mu}");
        }
    }

    #[test]
    fn zeta_matches_target_and_optimum_is_stationary() {
        for (target, mu) in [(1.0, 1.0), (0.25, 0.1), (7.5, 2.0), (2.0, 0.0)] {
            let s = gen_quadratic_suite(10, 5, mu, 10.0, target, 0.0, 17).unwrap();
            assert!((s.zeta_star_sq() - target).abs() <= 1e-8 * target);
            assert!(s.gradient(s.x_star()).norm() <= 1e-10);
            assert_eq!(s.spread_at(s.x_star()), s.zeta_star_sq());
        }
    }

    #[test]
    fn solver_agrees_with_construction() {
        let s = gen_quadratic_suite(8, 4, 1.0, 10.0, 1.0, 0.0, 6).unwrap();
        let (x, f) = crate::problems::solve_optimum(&s).unwrap();
        assert!((&x - s.x_star()).norm() <= 1e-12 * (1.0 + x.norm()));
        assert!((f - s.f_star()).abs() <= 1e-12 * (1.0 + f.abs()));
        assert!(s.gradient(&x).norm() <= 1e-10 * s.mean_b().norm().max(1.0));
    }

    #[test]
    fn single_node_full_identity() {
        let s = gen_quadratic_suite(4, 1, 2.0, 2.0, 0.0, 0.0, 1).unwrap();
        assert_eq!((s.mu(), s.l()), (2.0, 2.0));
        assert!((s.mean_hessian() - Matrix::identity(4, 4) * 2.0).amax() < 1e-12);
        assert_eq!(s.zeta_star_sq(), 0.0);
    }

    #[test]
    fn identical_nodes_when_zeta_zero() {
        let s = gen_quadratic_suite(6, 4, 1.0, 5.0, 0.0, 0.0, 3).unwrap();
        for node in s.nodes() {
            assert_eq!(node, &s.nodes()[0]);
        }
        assert_eq!(s.zeta_star_sq(), 0.0);
    }

    #[test]
    fn bad_parameters() {
        assert!(gen_quadratic_suite(4, 2, 3.0, 2.0, 1.0, 0.0, 0).is_err());
        assert!(gen_quadratic_suite(4, 2, -1.0, 2.0, 1.0, 0.0, 0).is_err());
        assert!(gen_quadratic_suite(4, 1, 1.0, 2.0, 1.0, 0.0, 0).is_err());
        assert!(gen_quadratic_suite(1, 2, 1.0, 2.0, 1.0, 0.0, 0).is_err());
        assert!(gen_nonconvex_suite(4, 2, 1.0, 0.6, 1.0, 0).is_err());
    }

    #[test]
    fn generation_is_reproducible() {
        let a = gen_quadratic_suite(7, 3, 0.5, 4.0, 1.0, 0.3, 99).unwrap();
        let b = gen_quadratic_suite(7, 3, 0.5, 4.0, 1.0, 0.3, 99).unwrap();
        assert_eq!(a, b);
        let c = gen_quadratic_suite(7, 3, 0.5, 4.0, 1.0, 0.3, 100).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nonconvex_without_regularizer_is_quadratic() {
        let q = gen_quadratic_suite(5, 3, 0.0, 4.0, 1.0, 0.0, 8).unwrap();
        let nc = gen_nonconvex_suite(5, 3, 4.0, 0.0, 1.0, 8).unwrap();
        assert_eq!(q.nodes(), nc.nodes());
        assert_eq!(nc.kind(), SuiteKind::Quadratic);
    }

    #[test]
    fn nonconvex_bounded_below_by_quadratic_part() {
        let s = gen_nonconvex_suite(6, 2, 4.0, 1.0, 1.0, 5).unwrap();
        assert_eq!(s.kind(), SuiteKind::NonconvexRegularized);
        assert!(s.gradient(s.x_star()).norm() <= 1e-10);
        let mut rng = RngStream::synchronized(1, 0, Purpose::Sampling).rng();
        for _ in 0..200 {
            let x = gaussian_vector(&mut rng, 6) * 3.0;
            for i in 0..s.n() {
                assert!(s.node_value(i, &x) >= s.nodes()[i].value(&x));
            }
            assert!(s.gap(&x) >= 0.0);
        }
    }

    #[test]
    fn nonconvex_smoothness_bound() {
        // Hessian = Ā + c·diag(φ''(u_j)); its extreme eigenvalues stay in [−c/2, L].
        let (l, c) = (4.0, 1.5);
        let s = gen_nonconvex_suite(6, 2, l, c, 1.0, 21).unwrap();
        let mut rng = RngStream::synchronized(2, 0, Purpose::Sampling).rng();
        for _ in 0..100 {
            let u = gaussian_vector(&mut rng, 6) * 2.0;
            let diag = u.map(|v| {
                let s2 = v * v;
                (2.0 - 6.0 * s2) / (1.0 + s2).powi(3)
            });
            let h = s.mean_hessian() + Matrix::from_diagonal(&(diag * c));
            let (lo, hi) = spectrum_bounds(&h);
            assert!(hi <= l + 1e-12 && lo >= -0.5 * c - 1e-12);
        }
    }
}
