//! Synthetic heterogeneous objectives `f = (1/n) Σ f_i` with exact and
//! stochastic gradient oracles and a known optimum.
//!
//! Every node is a quadratic `f_i(x) = ½xᵀA_i x − b_iᵀx`; the nonconvex kind
//! adds the bounded regularizer `c Σ_j φ(x_j − m_j)`, `φ(u) = u²/(1+u²)`,
//! around a center `m`.

mod dissimilarity;
mod generate;
mod io;

use rand_distr::{Distribution, Normal};

use crate::{Error, Matrix, Result, RngStream, Vector};

pub use dissimilarity::{measure_dissimilarity, sample_points, DissimilarityReport, Z_SQ_GRID};
pub use generate::{gen_nonconvex_suite, gen_quadratic_suite};
pub use io::{read_suite, write_suite};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SuiteKind {
    Quadratic,
    NonconvexRegularized,
}

impl SuiteKind {
    pub fn name(self) -> &'static str {
        match self {
            SuiteKind::Quadratic => "quadratic",
            SuiteKind::NonconvexRegularized => "nonconvex-regularized",
        }
    }
}

/// `f_i(x) = ½xᵀAx − bᵀx + c` with `A` symmetric positive semidefinite.
/// The constant `c` only shifts values; generated suites use `c = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticNode {
    pub a: Matrix,
    pub b: Vector,
    pub c: f64,
}

impl QuadraticNode {
    pub fn new(a: Matrix, b: Vector) -> Self {
        Self { a, b, c: 0.0 }
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.a * x)) - self.b.dot(x) + self.c
    }

    pub fn gradient(&self, x: &Vector) -> Vector {
        &self.a * x - &self.b
    }
}

fn phi(u: f64) -> f64 {
    let s = u * u;
    s / (1.0 + s)
}

fn phi_prime(u: f64) -> f64 {
    let q = 1.0 + u * u;
    2.0 * u / (q * q)
}

/// `n` node objectives together with their constants and optimum.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSuite {
    nodes: Vec<QuadraticNode>,
    d: usize,
    l: f64,
    mu: f64,
    sigma: f64,
    x_star: Vector,
    f_star: f64,
    zeta_star_sq: f64,
    kind: SuiteKind,
    reg_c: f64,
    center: Vector,
    mean_a: Matrix,
    mean_b: Vector,
    mean_c: f64,
}

fn mean_of(nodes: &[QuadraticNode]) -> (Matrix, Vector, f64) {
    let d = nodes[0].b.len();
    let mut a = Matrix::zeros(d, d);
    let mut b = Vector::zeros(d);
    let mut c = 0.0;
    for node in nodes {
        a += &node.a;
        b += &node.b;
        c += node.c;
    }
    let n = nodes.len() as f64;
    (a / n, b / n, c / n)
}

/// Extreme eigenvalues of a symmetric matrix.
pub fn spectrum_bounds(a: &Matrix) -> (f64, f64) {
    let eig = a.clone().symmetric_eigen().eigenvalues;
    let lo = eig.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eig.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn check_nodes(nodes: &[QuadraticNode]) -> Result<usize> {
    let first = nodes
        .first()
        .ok_or_else(|| Error::Parameter("a suite needs at least one node".into()))?;
    let d = first.b.len();
    if d == 0 {
        return Err(Error::Parameter("dimension must be positive".into()));
    }
    for (i, node) in nodes.iter().enumerate() {
        if node.a.shape() != (d, d) || node.b.len() != d {
            return Err(Error::Parameter(format!("node {i} has inconsistent dimensions")));
        }
        let asym = (&node.a - node.a.transpose()).amax();
        if asym > 1e-12 * node.a.amax().max(1.0) {
            return Err(Error::Parameter(format!("A of node {i} is not symmetric")));
        }
    }
    Ok(d)
}

impl ProblemSuite {
    /// Builds a quadratic suite from explicit nodes. `L` and `μ` are read off
    /// the mean Hessian and the optimum is solved for.
    pub fn from_nodes(nodes: Vec<QuadraticNode>, sigma: f64) -> Result<Self> {
        let d = check_nodes(&nodes)?;
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        let mut l = 0.0f64;
        for (i, node) in nodes.iter().enumerate() {
            let (lo, hi) = spectrum_bounds(&node.a);
            if lo < -1e-10 * hi.abs().max(1.0) {
                return Err(Error::Parameter(format!(
                    "A of node {i} is not positive semidefinite (eigenvalue {lo})"
                )));
            }
            l = l.max(hi);
        }
        let (mean_a, mean_b, mean_c) = mean_of(&nodes);
        let (mu, _) = spectrum_bounds(&mean_a);
        let mu = mu.max(0.0);
        let mut suite = Self {
            nodes,
            d,
            l,
            mu,
            sigma,
            x_star: Vector::zeros(d),
            f_star: 0.0,
            zeta_star_sq: 0.0,
            kind: SuiteKind::Quadratic,
            reg_c: 0.0,
            center: Vector::zeros(d),
            mean_a,
            mean_b,
            mean_c,
        };
        let (x_star, f_star) = solve_optimum(&suite)?;
        suite.set_optimum(x_star.clone(), f_star);
        suite.center = x_star;
        Ok(suite)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn assemble(
        nodes: Vec<QuadraticNode>,
        l: f64,
        mu: f64,
        sigma: f64,
        kind: SuiteKind,
        reg_c: f64,
        center: Vector,
    ) -> Result<Self> {
        let d = check_nodes(&nodes)?;
        let (mean_a, mean_b, mean_c) = mean_of(&nodes);
        Ok(Self {
            nodes,
            d,
            l,
            mu,
            sigma,
            x_star: Vector::zeros(d),
            f_star: 0.0,
            zeta_star_sq: 0.0,
            kind,
            reg_c,
            center,
            mean_a,
            mean_b,
            mean_c,
        })
    }

    /// Stores the optimum and recomputes `ζ*²` there.
    pub(crate) fn set_optimum(&mut self, x_star: Vector, f_star: f64) {
        self.x_star = x_star;
        self.f_star = f_star;
        self.zeta_star_sq = self.spread_at(&self.x_star.clone());
    }

    /// Overrides the stored constants (used when reading a suite file).
    pub(crate) fn restore(&mut self, x_star: Vector, f_star: f64, zeta_star_sq: f64) {
        self.x_star = x_star;
        self.f_star = f_star;
        self.zeta_star_sq = zeta_star_sq;
    }

    /// Same objective with a different noise level.
    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::Parameter(format!("sigma must be finite and >= 0, got {sigma}")));
        }
        Ok(Self { sigma, ..self.clone() })
    }

    pub fn nodes(&self) -> &[QuadraticNode] {
        &self.nodes
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn n(&self) -> usize {
        self.nodes.len()
    }
    pub fn l(&self) -> f64 {
        self.l
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn x_star(&self) -> &Vector {
        &self.x_star
    }
    pub fn f_star(&self) -> f64 {
        self.f_star
    }
    pub fn zeta_star_sq(&self) -> f64 {
        self.zeta_star_sq
    }
    pub fn kind(&self) -> SuiteKind {
        self.kind
    }
    /// Regularizer weight `c` (0 for quadratic suites).
    pub fn reg_c(&self) -> f64 {
        self.reg_c
    }
    /// Regularizer center `m`.
    pub fn center(&self) -> &Vector {
        &self.center
    }
    pub fn mean_hessian(&self) -> &Matrix {
        &self.mean_a
    }
    pub fn mean_b(&self) -> &Vector {
        &self.mean_b
    }

    fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::Parameter(format!(
                "node index {i} out of range for n = {}",
                self.n()
            )));
        }
        Ok(())
    }

    fn reg_value(&self, x: &Vector) -> f64 {
        if self.reg_c == 0.0 {
            return 0.0;
        }
        self.reg_c * x.iter().zip(self.center.iter()).map(|(a, m)| phi(a - m)).sum::<f64>()
    }

    fn add_reg_gradient(&self, x: &Vector, g: &mut Vector) {
        if self.reg_c == 0.0 {
            return;
        }
        for j in 0..self.d {
            g[j] += self.reg_c * phi_prime(x[j] - self.center[j]);
        }
    }

    /// `f_i(x)` without bounds checking.
    pub fn node_value(&self, i: usize, x: &Vector) -> f64 {
        self.nodes[i].value(x) + self.reg_value(x)
    }

    /// `∇f_i(x)` without bounds checking.
    pub fn node_gradient(&self, i: usize, x: &Vector) -> Vector {
        let mut g = self.nodes[i].gradient(x);
        self.add_reg_gradient(x, &mut g);
        g
    }

    /// `f(x) = (1/n) Σ f_i(x)`.
    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.mean_a * x)) - self.mean_b.dot(x) + self.mean_c + self.reg_value(x)
    }

    /// `∇f(x)`.
    pub fn gradient(&self, x: &Vector) -> Vector {
        let mut g = &self.mean_a * x - &self.mean_b;
        self.add_reg_gradient(x, &mut g);
        g
    }

    /// `f(x) − f*`, evaluated around `x*` to avoid cancellation:
    /// `½eᵀĀe + rᵀe + reg(x) − reg(x*)` with `e = x − x*`, `r = Āx* − b̄`.
    pub fn gap(&self, x: &Vector) -> f64 {
        let e = x - &self.x_star;
        let r = &self.mean_a * &self.x_star - &self.mean_b;
        0.5 * e.dot(&(&self.mean_a * &e)) + r.dot(&e) + self.reg_value(x) - self.reg_value(&self.x_star)
    }

    /// `(1/n) Σ ‖∇f_i(x)‖²`.
    pub fn spread_at(&self, x: &Vector) -> f64 {
        let n = self.n() as f64;
        (0..self.n())
            .map(|i| self.node_gradient(i, x).norm_squared())
            .sum::<f64>()
            / n
    }

    /// `∇f_i(x*)` for every node.
    pub fn gradients_at_optimum(&self) -> Vec<Vector> {
        (0..self.n()).map(|i| self.node_gradient(i, &self.x_star)).collect()
    }
}

/// Minimiser of the mean objective of a quadratic suite.
///
/// Uses a Cholesky solve of `Āx = b̄` when `Ā` is positive definite and a
/// pseudo-inverse otherwise; a singular system whose right-hand side is not
/// in the range of `Ā` has no minimiser.
pub fn solve_optimum(suite: &ProblemSuite) -> Result<(Vector, f64)> {
    if suite.kind != SuiteKind::Quadratic {
        return Err(Error::Parameter(
            "solve_optimum applies to quadratic suites only".into(),
        ));
    }
    let a = &suite.mean_a;
    let b = &suite.mean_b;
    let scale = b.norm().max(1.0);
    let mut x = match a.clone().cholesky() {
        Some(ch) if suite.mu > 0.0 => {
            let mut x = ch.solve(b);
            // two rounds of iterative refinement
            for _ in 0..2 {
                let r = b - a * &x;
                x += ch.solve(&r);
            }
            x
        }
        _ => {
            let svd = a.clone().svd(true, true);
            let tol = 1e-12 * svd.singular_values.max().max(f64::MIN_POSITIVE);
            svd.solve(b, tol).map_err(|e| Error::NoUniqueOptimum(e.to_string()))?
        }
    };
    let resid = (a * &x - b).norm();
    if resid > 1e-8 * scale {
        return Err(Error::NoUniqueOptimum(format!(
            "mean Hessian is singular and the system is inconsistent (residual {resid:.3e})"
        )));
    }
    if !x.iter().all(|v| v.is_finite()) {
        x.fill(0.0);
        return Err(Error::NoUniqueOptimum("solve produced non-finite values".into()));
    }
    let f = 0.5 * x.dot(&(a * &x)) - b.dot(&x) + suite.mean_c;
    Ok((x, f))
}

/// `(f_i(x), ∇f_i(x))`.
pub fn oracle_exact(suite: &ProblemSuite, i: usize, x: &Vector) -> Result<(f64, Vector)> {
    suite.check_node(i)?;
    Ok((suite.node_value(i, x), suite.node_gradient(i, x)))
}

/// `∇f_i(x) + ξ` with `ξ ~ N(0, (σ²/d) I)` drawn from `stream`, so that
/// `E‖ξ‖² = σ²`. With `σ = 0` the exact gradient is returned unchanged.
pub fn oracle_stochastic(suite: &ProblemSuite, i: usize, x: &Vector, stream: &RngStream) -> Result<Vector> {
    suite.check_node(i)?;
    Ok(stochastic_gradient(suite, i, x, stream))
}

pub(crate) fn stochastic_gradient(suite: &ProblemSuite, i: usize, x: &Vector, stream: &RngStream) -> Vector {
    let mut g = suite.node_gradient(i, x);
    if suite.sigma > 0.0 {
        let sd = suite.sigma / (suite.d as f64).sqrt();
        let normal = Normal::new(0.0, sd).expect("finite positive standard deviation");
        let mut rng = stream.rng();
        for gj in g.iter_mut() {
            *gj += normal.sample(&mut rng);
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Purpose;

    pub(crate) fn two_node_1d() -> ProblemSuite {
        // f₁ = ½(x−1)² = ½x² − x + ½, f₂ = ½(x+1)² = ½x² + x + ½
        let node = |b: f64| QuadraticNode {
            a: Matrix::from_element(1, 1, 1.0),
            b: Vector::from_element(1, b),
            c: 0.5,
        };
        ProblemSuite::from_nodes(vec![node(1.0), node(-1.0)], 0.0).unwrap()
    }

    #[test]
    fn origin_quadratic() {
        let node = QuadraticNode::new(Matrix::identity(3, 3), Vector::zeros(3));
        let s = ProblemSuite::from_nodes(vec![node], 0.0).unwrap();
        assert_eq!(s.x_star(), &Vector::zeros(3));
        assert_eq!(s.f_star(), 0.0);
        assert_eq!((s.mu(), s.l()), (1.0, 1.0));
    }

    #[test]
    fn two_node_example() {
        let s = two_node_1d();
        assert_eq!(s.x_star()[0], 0.0);
        assert_eq!(s.zeta_star_sq(), 1.0);
        assert_eq!(s.f_star(), 0.5);
        let (v, g) = oracle_exact(&s, 0, &Vector::from_element(1, 0.0)).unwrap();
        assert_eq!((v, g[0]), (0.5, -1.0));
    }

    #[test]
    fn node_minimiser_has_zero_gradient() {
        let s = two_node_1d();
        let (_, g) = oracle_exact(&s, 1, &Vector::from_element(1, -1.0)).unwrap();
        assert_eq!(g[0], 0.0);
        assert!(oracle_exact(&s, 2, &Vector::zeros(1)).is_err());
    }

    #[test]
    fn singular_inconsistent_has_no_optimum() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let node = QuadraticNode::new(a, Vector::from_column_slice(&[1.0, 1.0]));
        assert!(matches!(
            ProblemSuite::from_nodes(vec![node], 0.0),
            Err(Error::NoUniqueOptimum(_))
        ));
    }

    #[test]
    fn singular_consistent_picks_a_minimiser() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let node = QuadraticNode::new(a, Vector::from_column_slice(&[4.0, 0.0]));
        let s = ProblemSuite::from_nodes(vec![node], 0.0).unwrap();
        assert!((s.x_star()[0] - 2.0).abs() < 1e-14);
        assert_eq!(s.mu(), 0.0);
    }

    #[test]
    fn zero_sigma_is_exact_bitwise() {
        let s = gen_quadratic_suite(5, 3, 1.0, 4.0, 0.5, 0.0, 9).unwrap();
        let x = Vector::from_fn(5, |i, _| i as f64 * 0.3 - 1.0);
        let st = RngStream::worker(1, 0, 0, Purpose::Noise);
        assert_eq!(oracle_stochastic(&s, 1, &x, &st).unwrap(), s.node_gradient(1, &x));
    }

    #[test]
    fn stochastic_oracle_moments() {
        let sigma = 1.5;
        let s = gen_quadratic_suite(4, 2, 1.0, 3.0, 1.0, sigma, 2).unwrap();
        let x = Vector::from_column_slice(&[0.2, -0.1, 1.0, 0.5]);
        let g = s.node_gradient(0, &x);
        let samples = 100_000;
        let mut mean = Vector::zeros(4);
        let mut sq = Vector::zeros(4);
        let mut noise_sq = 0.0;
        for t in 0..samples {
            let y = oracle_stochastic(&s, 0, &x, &RngStream::worker(5, 0, t, Purpose::Noise)).unwrap();
            let xi = &y - &g;
            noise_sq += xi.norm_squared();
            mean += &xi;
            sq += xi.component_mul(&xi);
        }
        let n = samples as f64;
        mean /= n;
        for j in 0..4 {
            let var = sq[j] / n - mean[j] * mean[j];
            let se = (var / n).sqrt();
            assert!(mean[j].abs() <= 3.0 * se, "component {j}: {} vs se {se}", mean[j]);
        }
        let m2 = noise_sq / n;
        assert!((m2 / (sigma * sigma) - 1.0).abs() < 0.02, "{m2}");
    }

    #[test]
    fn finite_difference_gradients() {
        for s in [
            gen_quadratic_suite(6, 3, 0.5, 5.0, 2.0, 0.0, 11).unwrap(),
            gen_nonconvex_suite(6, 3, 5.0, 1.0, 2.0, 11).unwrap(),
        ] {
            let x = Vector::from_fn(6, |i, _| (i as f64 * 1.7).sin() * 2.0);
            let h = 1e-5;
            for i in 0..s.n() {
                let (_, g) = oracle_exact(&s, i, &x).unwrap();
                for j in 0..6 {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (s.node_value(i, &xp) - s.node_value(i, &xm)) / (2.0 * h);
                    assert!((fd - g[j]).abs() < 1e-6, "{:?} node {i} coord {j}", s.kind());
                }
            }
        }
    }
}
