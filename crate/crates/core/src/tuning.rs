//! Stepsize tuning from the summation lemmas.
//!
//! A descent recursion `r_{t+1} ≤ (1 − min{γA, F}) r_t − Bγ s_t + Cγ² + Dγ³`
//! valid for `γ ≤ 1/E` determines a constant stepsize for a budget of `T`
//! rounds. [`theorem_constants`] reads `(A, B, C, D, E, F)` off the descent
//! lemma of each method.

use std::fmt;
use std::str::FromStr;

use crate::{Algorithm, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecursionConstants {
    /// Contraction coefficient; only the strongly convex tuner needs `A > 0`.
    pub a: f64,
    pub b: f64,
    /// `γ²` noise coefficient.
    pub c: f64,
    /// `γ³` noise coefficient.
    pub d: f64,
    /// Inverse of the largest admissible stepsize.
    pub e: f64,
    /// Stepsize-free contraction cap in `(0, 1]`.
    pub f: f64,
    /// Initial Lyapunov value.
    pub r0: f64,
}

impl RecursionConstants {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("A", self.a),
            ("B", self.b),
            ("C", self.c),
            ("D", self.d),
            ("E", self.e),
            ("r0", self.r0),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.b <= 0.0 {
            return Err(Error::Parameter(format!("B must be positive, got {}", self.b)));
        }
        if !(self.f > 0.0 && self.f <= 1.0) {
            return Err(Error::Parameter(format!("F must lie in (0, 1], got {}", self.f)));
        }
        Ok(())
    }

    /// Largest stepsize the recursion admits, `1/E`.
    pub fn cap(&self) -> f64 {
        1.0 / self.e
    }

    /// Right-hand side of the recursion for one step.
    pub fn step(&self, gamma: f64, r: f64, s: f64) -> f64 {
        (1.0 - (gamma * self.a).min(self.f)) * r - self.b * gamma * s + self.c * gamma * gamma + self.d * gamma.powi(3)
    }

    /// Guaranteed bound on `(B/W_T) Σ w_t s_t + min{A, F/γ} r_{T+1}` for
    /// the stepsize chosen by [`tune_strongly_convex`].
    pub fn strongly_convex_bound(&self, rounds: usize) -> Result<f64> {
        let tuned = tune_strongly_convex(self, rounds)?;
        let t1 = (rounds + 1) as f64;
        let lt = if tuned.tau.is_nan() { 0.0 } else { tuned.tau.ln() };
        let contraction = if self.e > 0.0 {
            (self.a / self.e).min(self.f)
        } else {
            self.f
        };
        Ok(self.r0 * (self.e + self.a / self.f) * (-contraction * t1).exp()
            + 2.0 * self.c * lt / (self.a * t1)
            + 2.0 * self.d * lt * lt / (self.a * self.a * t1 * t1))
    }
}

/// Which case of the tuning argument produced the stepsize.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branch {
    /// `C = D = 0`: the largest admissible stepsize.
    Noiseless,
    /// The noise-balancing choice exceeded `1/E`.
    StepsizeCap,
    /// `γ = ln τ / (A(T+1))`.
    LogTuned,
    /// One of the `(r₀/(C(T+1)))^{1/2}`, `(r₀/(D(T+1)))^{1/3}` terms.
    NoiseBalanced,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Noiseless => "noiseless",
            Branch::StepsizeCap => "stepsize-cap",
            Branch::LogTuned => "log-tuned",
            Branch::NoiseBalanced => "noise-balanced",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TunedStepsize {
    pub gamma: f64,
    /// The log factor `τ`; `NaN` for the sublinear tuner.
    pub tau: f64,
    pub branch: Branch,
}

fn unbounded() -> Error {
    Error::Parameter("E = 0 with no noise leaves the stepsize unbounded".into())
}

/// `γ = min{1/E, ln τ/(A(T+1))}` with
/// `τ = max{e, min{A²r₀(T+1)²/C, A³r₀(T+1)³/D}}`; zero coefficients drop out.
pub fn tune_strongly_convex(k: &RecursionConstants, rounds: usize) -> Result<TunedStepsize> {
    k.validate()?;
    if k.a <= 0.0 {
        return Err(Error::Parameter(
            "A must be positive for the strongly convex tuner".into(),
        ));
    }
    if rounds == 0 {
        return Err(Error::Parameter("T must be at least 1".into()));
    }
    let cap = k.cap();
    if k.c == 0.0 && k.d == 0.0 {
        if cap.is_infinite() {
            return Err(unbounded());
        }
        return Ok(TunedStepsize {
            gamma: cap,
            tau: f64::NAN,
            branch: Branch::Noiseless,
        });
    }
    let t1 = (rounds + 1) as f64;
    let mut inner = f64::INFINITY;
    if k.c > 0.0 {
        inner = inner.min(k.a * k.a * k.r0 * t1 * t1 / k.c);
    }
    if k.d > 0.0 {
        inner = inner.min(k.a.powi(3) * k.r0 * t1.powi(3) / k.d);
    }
    let tau = inner.max(std::f64::consts::E);
    let log_tuned = tau.ln() / (k.a * t1);
    if log_tuned <= cap {
        Ok(TunedStepsize {
            gamma: log_tuned,
            tau,
            branch: Branch::LogTuned,
        })
    } else {
        Ok(TunedStepsize {
            gamma: cap,
            tau,
            branch: Branch::StepsizeCap,
        })
    }
}

/// `γ = min{1/E, (r₀/(C(T+1)))^{1/2}, (r₀/(D(T+1)))^{1/3}}`; zero
/// coefficients drop out.
pub fn tune_sublinear(k: &RecursionConstants, rounds: usize) -> Result<TunedStepsize> {
    k.validate()?;
    if rounds == 0 {
        return Err(Error::Parameter("T must be at least 1".into()));
    }
    let cap = k.cap();
    if k.c == 0.0 && k.d == 0.0 {
        if cap.is_infinite() {
            return Err(unbounded());
        }
        return Ok(TunedStepsize {
            gamma: cap,
            tau: f64::NAN,
            branch: Branch::Noiseless,
        });
    }
    let t1 = (rounds + 1) as f64;
    let mut noise = f64::INFINITY;
    if k.c > 0.0 {
        noise = noise.min((k.r0 / (k.c * t1)).sqrt());
    }
    if k.d > 0.0 {
        noise = noise.min((k.r0 / (k.d * t1)).cbrt());
    }
    if cap <= noise {
        Ok(TunedStepsize {
            gamma: cap,
            tau: f64::NAN,
            branch: Branch::StepsizeCap,
        })
    } else {
        Ok(TunedStepsize {
            gamma: noise,
            tau: f64::NAN,
            branch: Branch::NoiseBalanced,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObjectiveClass {
    StronglyConvex,
    Convex,
    SmoothNonconvex,
}

impl ObjectiveClass {
    pub fn name(self) -> &'static str {
        match self {
            ObjectiveClass::StronglyConvex => "strongly-convex",
            ObjectiveClass::Convex => "convex",
            ObjectiveClass::SmoothNonconvex => "smooth-nonconvex",
        }
    }
}

impl fmt::Display for ObjectiveClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectiveClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "strongly-convex" => Ok(ObjectiveClass::StronglyConvex),
            "convex" => Ok(ObjectiveClass::Convex),
            "smooth-nonconvex" | "nonconvex" => Ok(ObjectiveClass::SmoothNonconvex),
            other => Err(Error::Config(format!("unknown objective class '{other}'"))),
        }
    }
}

/// Problem-side constants: smoothness, strong convexity, noise level,
/// dissimilarity `(ζ², Z²)`, node count and the initial Lyapunov value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConstants {
    pub l: f64,
    pub mu: f64,
    pub sigma: f64,
    pub zeta_sq: f64,
    pub z_sq: f64,
    pub n: usize,
    pub r0: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressionParams {
    pub delta: f64,
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl Default for CompressionParams {
    fn default() -> Self {
        Self {
            delta: 1.0,
            omega: 0.0,
            alpha: 0.0,
            beta: 1.0,
        }
    }
}

fn check_inputs(p: &ProblemConstants, q: &CompressionParams, class: ObjectiveClass) -> Result<()> {
    let finite_nonneg = [p.l, p.mu, p.sigma, p.zeta_sq, p.z_sq, p.r0, q.omega, q.alpha]
        .iter()
        .all(|v| v.is_finite() && *v >= 0.0);
    if !finite_nonneg || p.l <= 0.0 || p.n == 0 {
        return Err(Error::Parameter(
            "problem constants must be finite, nonnegative, with L > 0 and n ≥ 1".into(),
        ));
    }
    if !(q.delta > 0.0 && q.delta <= 1.0) {
        return Err(Error::Parameter(format!("delta must lie in (0, 1], got {}", q.delta)));
    }
    if !(q.beta > 0.0 && q.beta <= 1.0) {
        return Err(Error::Parameter(format!("beta must lie in (0, 1], got {}", q.beta)));
    }
    if class == ObjectiveClass::StronglyConvex && p.mu <= 0.0 {
        return Err(Error::Parameter("strongly convex class needs mu > 0".into()));
    }
    Ok(())
}

/// Recursion constants of the descent lemma of `algorithm` for the given
/// objective class. `A` is zero for the sublinear classes.
pub fn theorem_constants(
    algorithm: Algorithm,
    p: &ProblemConstants,
    q: &CompressionParams,
    class: ObjectiveClass,
) -> Result<RecursionConstants> {
    check_inputs(p, q, class)?;
    let n = p.n as f64;
    let l = p.l;
    let s2 = p.sigma * p.sigma;
    let z2 = p.z_sq;
    let zeta2 = p.zeta_sq;
    let (delta, omega) = (q.delta, q.omega);
    let sc = class == ObjectiveClass::StronglyConvex;
    let mu = if sc { p.mu } else { 0.0 };
    let k = |a: f64, b: f64, c: f64, d: f64, e: f64, f: f64| RecursionConstants {
        a,
        b,
        c,
        d,
        e,
        f,
        r0: p.r0,
    };
    let out = match (algorithm, class) {
        (Algorithm::Dsgd | Algorithm::Dqsgd, ObjectiveClass::SmoothNonconvex) => {
            let omega = if algorithm == Algorithm::Dsgd { 0.0 } else { omega };
            let c = l * (s2 * (1.0 + omega) + zeta2 * omega) / (2.0 * n);
            k(0.0, 0.5, c, 0.0, 2.0 * l * (1.0 + z2 * omega / n), 1.0)
        }
        (Algorithm::Dsgd | Algorithm::Dqsgd, _) => {
            let omega = if algorithm == Algorithm::Dsgd { 0.0 } else { omega };
            let c = (s2 * (1.0 + omega) + zeta2 * omega) / n;
            k(mu, 1.0, c, 0.0, 2.0 * l * (1.0 + z2 * omega / n), 1.0)
        }
        (Algorithm::DqsgdLinearSync, ObjectiveClass::SmoothNonconvex) => {
            let c = l * s2 * (1.0 + omega) / (2.0 * n);
            k(0.0, 0.5, c, 0.0, 2.0 * l * (1.0 + omega), 1.0)
        }
        (Algorithm::DqsgdLinearSync, _) => k(mu, 1.0, s2 * (1.0 + omega) / n, 0.0, 2.0 * l * (1.0 + omega), 1.0),
        (Algorithm::Defsgd, ObjectiveClass::SmoothNonconvex) => {
            let d = l * l * (1.0 - delta) * (2.0 * zeta2 / (delta * delta) + s2 / delta);
            k(
                0.0,
                0.125,
                l * s2 / (2.0 * n),
                d,
                4.0 * l * (1.0 + z2.sqrt()) / delta,
                1.0,
            )
        }
        (Algorithm::Defsgd, _) => {
            let d = (1.0 - delta) * (24.0 * l * zeta2 / (delta * delta) + 12.0 * l * s2 / delta);
            k(
                mu / 2.0,
                0.25,
                s2 / n,
                d,
                14.0 * l * (1.0 + z2.sqrt() / delta),
                delta / 4.0,
            )
        }
        (Algorithm::DefsgdLinearSync, ObjectiveClass::SmoothNonconvex) => {
            let s2n = s2 / n;
            let d = l * l * (1.0 - delta) * s2n / delta;
            k(0.0, 0.125, l * s2n / 2.0, d, 8.0 * l / delta, 1.0)
        }
        (Algorithm::DefsgdLinearSync, _) => {
            let s2n = s2 / n;
            let d = (1.0 - delta) * 12.0 * l * s2n / delta;
            k(mu / 2.0, 0.25, s2n, d, 14.0 * l * (1.0 + 1.0 / delta), delta / 4.0)
        }
        (Algorithm::Diana, ObjectiveClass::SmoothNonconvex) => {
            let c = l * (s2 * (2.0 + omega) + 2.0 * zeta2 * omega) / (2.0 * n);
            k(0.0, 0.25, c, 0.0, 2.0 * l * (1.0 + 2.0 * z2 * omega / n), 1.0)
        }
        (Algorithm::Diana, _) => {
            let alpha = require_alpha(q)?;
            let f = if sc { (alpha / 2.0).min(1.0) } else { 1.0 };
            k(
                mu,
                0.5,
                5.0 * (1.0 + omega) * s2 / n,
                0.0,
                2.0 * l * (1.0 + 8.0 * omega / n),
                f,
            )
        }
        (Algorithm::DefsgdBias, ObjectiveClass::SmoothNonconvex) => {
            if (q.beta - delta).abs() > 1e-12 {
                return Err(Error::Parameter(
                    "the nonconvex bias-corrected bound needs beta = delta".into(),
                ));
            }
            let d = 8.0 * l * l * (1.0 - delta) * (delta * s2 + zeta2) / (delta * delta);
            k(
                0.0,
                0.125,
                l * s2 / (2.0 * n),
                d,
                2.0 * l * (1.0 + 4.0 * z2.sqrt()),
                1.0,
            )
        }
        (Algorithm::DefsgdBias, _) => {
            let alpha = require_alpha(q)?;
            let d = 12.0 * l * (1.0 - delta) * s2 / delta + 96.0 * q.beta * l * (1.0 - delta) * s2 / (delta * delta);
            let f = if sc { (alpha / 2.0).min(delta / 4.0) } else { 1.0 };
            k(mu / 2.0, 0.25, s2 / n, d, 34.0 * l / delta, f)
        }
        (Algorithm::EcsgdDiana, _) => {
            return Err(Error::Unavailable(format!(
                "no convergence theorem covers {algorithm} for the {class} class"
            )))
        }
    };
    out.validate()?;
    Ok(out)
}

fn require_alpha(q: &CompressionParams) -> Result<f64> {
    if q.alpha > 0.0 {
        Ok(q.alpha)
    } else {
        Err(Error::Parameter("the shifted methods need alpha > 0".into()))
    }
}

/// Largest stepsize allowed by the convergence theorem of `algorithm`. For
/// classes without a stated theorem the lemma bound `1/E` is returned.
pub fn theorem_stepsize_cap(
    algorithm: Algorithm,
    p: &ProblemConstants,
    q: &CompressionParams,
    class: ObjectiveClass,
) -> Result<f64> {
    let k = theorem_constants(algorithm, p, q, class)?;
    if class != ObjectiveClass::StronglyConvex {
        return Ok(k.cap());
    }
    let l = p.l;
    let n = p.n as f64;
    Ok(match algorithm {
        Algorithm::Dsgd => 1.0 / (2.0 * l),
        Algorithm::Dqsgd => 1.0 / (2.0 * l * (1.0 + p.z_sq * q.omega / n)),
        Algorithm::Defsgd => 1.0 / (14.0 * l * (1.0 + p.z_sq.sqrt() / q.delta)),
        Algorithm::Diana => 1.0 / (2.0 * l * (1.0 + 2.0 * q.omega / n)),
        Algorithm::DefsgdBias => q.delta / (32.0 * l),
        _ => k.cap(),
    })
}

/// Tunes `γ` for `rounds` rounds from the lemma of `algorithm`, picking the
/// strongly convex or the sublinear tuner according to `class`.
pub fn tune_for(
    algorithm: Algorithm,
    p: &ProblemConstants,
    q: &CompressionParams,
    class: ObjectiveClass,
    rounds: usize,
) -> Result<(RecursionConstants, TunedStepsize)> {
    let k = theorem_constants(algorithm, p, q, class)?;
    let tuned = match class {
        ObjectiveClass::StronglyConvex => tune_strongly_convex(&k, rounds)?,
        _ => tune_sublinear(&k, rounds)?,
    };
    Ok((k, tuned))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rk(a: f64, c: f64, d: f64, e: f64, r0: f64) -> RecursionConstants {
        RecursionConstants {
            a,
            b: 1.0,
            c,
            d,
            e,
            f: 1.0,
            r0,
        }
    }

    fn problem() -> ProblemConstants {
        ProblemConstants {
            l: 10.0,
            mu: 1.0,
            sigma: 1.0,
            zeta_sq: 1.0,
            z_sq: 1.0,
            n: 4,
            r0: 1.0,
        }
    }

    #[test]
    fn log_tuned_example() {
        let t = tune_strongly_convex(&rk(1.0, 1.0, 0.0, 10.0, 1.0), 999).unwrap();
        assert!((t.tau - 1e6).abs() < 1e-6);
        assert!((t.gamma - 1e6f64.ln() / 1000.0).abs() < 1e-12);
        assert!((t.gamma - 0.013816).abs() < 1e-6);
        assert_eq!(t.branch, Branch::LogTuned);
    }

    #[test]
    fn sublinear_example() {
        let t = tune_sublinear(&rk(0.0, 1.0, 0.0, 1.0, 1.0), 99).unwrap();
        assert!((t.gamma - 0.1).abs() < 1e-12);
        assert_eq!(t.branch, Branch::NoiseBalanced);
    }

    #[test]
    fn noiseless_is_inverse_e() {
        let k = rk(1.0, 0.0, 0.0, 4.0, 1.0);
        assert_eq!(tune_strongly_convex(&k, 10).unwrap().gamma, 0.25);
        assert_eq!(tune_sublinear(&k, 10).unwrap().gamma, 0.25);
        assert!(tune_strongly_convex(&rk(1.0, 0.0, 0.0, 0.0, 1.0), 10).is_err());
    }

    #[test]
    fn a_zero_rejected() {
        assert!(matches!(
            tune_strongly_convex(&rk(0.0, 1.0, 0.0, 1.0, 1.0), 10),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn plain_qsgd_noiseless_gives_half_inverse_l() {
        let p = ProblemConstants {
            sigma: 0.0,
            zeta_sq: 0.0,
            ..problem()
        };
        let q = CompressionParams::default();
        let (k, t) = tune_for(Algorithm::Dqsgd, &p, &q, ObjectiveClass::StronglyConvex, 100).unwrap();
        assert_eq!((k.c, k.d, k.e), (0.0, 0.0, 20.0));
        assert_eq!(t.gamma, 1.0 / 20.0);
    }

    #[test]
    fn qsgd_constants() {
        let q = CompressionParams {
            omega: 3.0,
            ..Default::default()
        };
        let k = theorem_constants(Algorithm::Dqsgd, &problem(), &q, ObjectiveClass::StronglyConvex).unwrap();
        assert_eq!(k.a, 1.0);
        assert_eq!(k.b, 1.0);
        assert!((k.c - (4.0 + 3.0) / 4.0).abs() < 1e-15);
        assert!((k.e - 20.0 * 1.75).abs() < 1e-12);
    }

    #[test]
    fn ef_without_compression_has_no_cubic_term() {
        let q = CompressionParams::default();
        for class in [
            ObjectiveClass::StronglyConvex,
            ObjectiveClass::Convex,
            ObjectiveClass::SmoothNonconvex,
        ] {
            let k = theorem_constants(Algorithm::Defsgd, &problem(), &q, class).unwrap();
            assert_eq!(k.d, 0.0, "{class}");
            let k = theorem_constants(
                Algorithm::DefsgdBias,
                &problem(),
                &CompressionParams { alpha: 1.0, ..q },
                class,
            )
            .unwrap();
            assert_eq!(k.d, 0.0, "{class}");
        }
    }

    #[test]
    fn ef_strongly_convex_constants() {
        let q = CompressionParams {
            delta: 0.5,
            ..Default::default()
        };
        let k = theorem_constants(Algorithm::Defsgd, &problem(), &q, ObjectiveClass::StronglyConvex).unwrap();
        assert_eq!(k.c, 0.25);
        assert!((k.d - 0.5 * (24.0 * 10.0 / 0.25 + 12.0 * 10.0 / 0.5)).abs() < 1e-9);
        assert_eq!(k.f, 0.125);
        assert!((k.e - 14.0 * 10.0 * 3.0).abs() < 1e-9);
    }

    #[test]
    fn bias_corrected_uses_stricter_cap() {
        let q = CompressionParams {
            delta: 0.125,
            omega: 7.0,
            alpha: 0.125,
            beta: 1.0,
        };
        let p = problem();
        let k = theorem_constants(Algorithm::DefsgdBias, &p, &q, ObjectiveClass::StronglyConvex).unwrap();
        assert!((k.cap() - 0.125 / 340.0).abs() < 1e-15);
        let cap = theorem_stepsize_cap(Algorithm::DefsgdBias, &p, &q, ObjectiveClass::StronglyConvex).unwrap();
        assert!((cap - 0.125 / 320.0).abs() < 1e-15);
    }

    #[test]
    fn ecsgd_diana_unavailable() {
        let q = CompressionParams {
            alpha: 0.5,
            ..Default::default()
        };
        let r = theorem_constants(Algorithm::EcsgdDiana, &problem(), &q, ObjectiveClass::StronglyConvex);
        assert!(matches!(r, Err(Error::Unavailable(_))));
    }

    #[test]
    fn class_parse() {
        for c in [
            ObjectiveClass::StronglyConvex,
            ObjectiveClass::Convex,
            ObjectiveClass::SmoothNonconvex,
        ] {
            assert_eq!(c.name().parse::<ObjectiveClass>().unwrap(), c);
        }
    }

    #[test]
    fn bound_holds_on_tight_sequence() {
        for (c, d) in [(1.0, 0.0), (0.5, 2.0), (0.0, 3.0), (0.0, 0.0)] {
            let k = RecursionConstants {
                a: 0.5,
                b: 1.0,
                c,
                d,
                e: 4.0,
                f: 0.3,
                r0: 2.0,
            };
            let rounds = 200;
            let g = tune_strongly_convex(&k, rounds).unwrap().gamma;
            let rho = 1.0 - (g * k.a).min(k.f);
            let mut r = k.r0;
            let (mut ws, mut w_total) = (0.0, 0.0);
            for t in 0..=rounds {
                let s = 0.1 * r;
                let w = rho.powi(-(t as i32 + 1));
                ws += w * s;
                w_total += w;
                r = k.step(g, r, s);
                assert!(r > 0.0);
            }
            let lhs = k.b * ws / w_total + k.a.min(k.f / g) * r;
            assert!(
                lhs <= k.strongly_convex_bound(rounds).unwrap() * (1.0 + 1e-12),
                "{c} {d}"
            );
        }
    }

    proptest! {
        #[test]
        fn tuned_never_exceeds_inverse_e(
            a in 1e-3..10.0f64, c in 0.0..10.0f64, d in 0.0..10.0f64, e in 1e-3..100.0f64,
            r0 in 0.0..10.0f64, t in 1usize..100_000,
        ) {
            let k = rk(a, c, d, e, r0);
            prop_assume!(c > 0.0 || d > 0.0);
            prop_assert!(tune_strongly_convex(&k, t).unwrap().gamma <= 1.0 / e);
            prop_assert!(tune_sublinear(&k, t).unwrap().gamma <= 1.0 / e);
        }

        #[test]
        fn gamma_non_increasing_in_e(e1 in 1e-2..100.0f64, e2 in 1e-2..100.0f64, c in 0.0..5.0f64) {
            let (lo, hi) = if e1 < e2 { (e1, e2) } else { (e2, e1) };
            let g = |e| tune_strongly_convex(&rk(1.0, c, 0.5, e, 1.0), 500).unwrap().gamma;
            prop_assert!(g(hi) <= g(lo));
        }
    }
}
