use super::{AlgoConfig, Algorithm, RunState, Trajectory, WorkerState};
use crate::problems::stochastic_gradient;
use crate::{Error, ProblemSuite, Purpose, Result, RngStream, SuiteKind, Trace, TraceRow, Vector};

/// Tolerance of the virtual-sequence identity `x − x̃ = (γ/n) Σ e_i`,
/// relative to `1 + ‖x‖`.
const VIRTUAL_TOL: f64 = 1e-9;
/// Tolerance of `h = (1/n) Σ h_i`, relative to `1 + ‖h‖`.
const SHIFT_TOL: f64 = 1e-12;
/// Rounding slack allowed on `f(x) − f* ≥ 0`.
const GAP_SLACK: f64 = 1e-12;

/// A run in progress. Each [`step`](Simulation::step) executes one round.
pub struct Simulation<'a> {
    suite: &'a ProblemSuite,
    cfg: AlgoConfig,
    state: RunState,
    h_star: Vec<Vector>,
    msg_bits: f64,
    lyap: (f64, f64),
}

/// `x − s·v` componentwise, reusing `x`.
fn axpy_neg(x: &mut Vector, s: f64, v: &Vector) {
    for (xj, vj) in x.iter_mut().zip(v.iter()) {
        *xj -= s * vj;
    }
}

impl<'a> Simulation<'a> {
    pub fn new(suite: &'a ProblemSuite, cfg: &AlgoConfig) -> Result<Self> {
        let x0 = cfg.x0.clone().unwrap_or_else(|| Vector::zeros(suite.d()));
        Self::with_state(suite, cfg, RunState::initial(x0, suite.n()))
    }

    /// Resumes from an arbitrary state (e.g. to resample a single round).
    pub fn with_state(suite: &'a ProblemSuite, cfg: &AlgoConfig, state: RunState) -> Result<Self> {
        cfg.validate(suite.d())?;
        if state.workers.len() != suite.n() || state.server.x.len() != suite.d() {
            return Err(Error::Config("run state does not match the suite".into()));
        }
        let a = cfg.algorithm;
        let msg_bits = match a {
            Algorithm::Dsgd => 64.0 * suite.d() as f64,
            Algorithm::Dqsgd | Algorithm::Diana | Algorithm::DqsgdLinearSync => cfg.quantizer.message_bits_estimate(),
            Algorithm::Defsgd | Algorithm::DefsgdLinearSync => cfg.compressor.message_bits_estimate(),
            Algorithm::DefsgdBias | Algorithm::EcsgdDiana => {
                cfg.compressor.message_bits_estimate() + cfg.quantizer.message_bits_estimate()
            }
        };
        let lyap = lyapunov_coefficients(cfg, suite.l(), suite.n());
        Ok(Self {
            suite,
            cfg: cfg.clone(),
            state,
            h_star: suite.gradients_at_optimum(),
            msg_bits,
            lyap,
        })
    }

    pub fn state(&self) -> &RunState {
        &self.state
    }

    pub fn into_state(self) -> RunState {
        self.state
    }

    pub fn config(&self) -> &AlgoConfig {
        &self.cfg
    }

    fn noise_stream(&self, i: usize, t: u64) -> RngStream {
        RngStream::worker(self.cfg.seed, i, t, Purpose::Noise)
    }

    fn quantizer_stream(&self, i: usize, t: u64) -> RngStream {
        if self.cfg.algorithm == Algorithm::DqsgdLinearSync {
            RngStream::synchronized(self.cfg.seed, t, Purpose::Quantizer)
        } else {
            RngStream::worker(self.cfg.seed, i, t, Purpose::Quantizer)
        }
    }

    fn compressor_stream(&self, i: usize, t: u64) -> RngStream {
        if self.cfg.algorithm == Algorithm::DefsgdLinearSync {
            RngStream::synchronized(self.cfg.seed, t, Purpose::Compressor)
        } else {
            RngStream::worker(self.cfg.seed, i, t, Purpose::Compressor)
        }
    }

    fn gradient(&self, i: usize, t: u64) -> Vector {
        stochastic_gradient(self.suite, i, &self.state.server.x, &self.noise_stream(i, t))
    }

    /// Executes round `t` and checks the runtime invariants afterwards.
    pub fn step(&mut self) -> Result<()> {
        match self.cfg.algorithm {
            Algorithm::Dsgd => self.step_dsgd(),
            Algorithm::Dqsgd | Algorithm::DqsgdLinearSync => self.step_dqsgd(),
            Algorithm::Defsgd | Algorithm::DefsgdLinearSync => self.step_defsgd(),
            Algorithm::Diana => self.step_diana(),
            Algorithm::DefsgdBias => self.step_defsgd_bias(),
            Algorithm::EcsgdDiana => self.step_ecsgd_diana(),
        }
        self.state.server.t += 1;
        self.check_invariants()
    }

    fn step_dsgd(&mut self) {
        let t = self.state.server.t;
        let d = self.suite.d();
        let mut sum = Vector::zeros(d);
        for i in 0..self.suite.n() {
            sum += self.gradient(i, t);
        }
        let s = self.cfg.gamma / self.suite.n() as f64;
        axpy_neg(&mut self.state.server.x, s, &sum);
        self.state.server.x_tilde = self.state.server.x.clone();
    }

    fn step_dqsgd(&mut self) {
        let t = self.state.server.t;
        let mut sum = Vector::zeros(self.suite.d());
        for i in 0..self.suite.n() {
            let g = self.gradient(i, t);
            sum += self.cfg.quantizer.apply(&g, &self.quantizer_stream(i, t));
        }
        let s = self.cfg.gamma / self.suite.n() as f64;
        axpy_neg(&mut self.state.server.x, s, &sum);
        self.state.server.x_tilde = self.state.server.x.clone();
    }

    fn step_defsgd(&mut self) {
        let t = self.state.server.t;
        let d = self.suite.d();
        let mut sum = Vector::zeros(d);
        let mut gsum = Vector::zeros(d);
        for i in 0..self.suite.n() {
            let g = self.gradient(i, t);
            let u = &self.state.workers[i].e + &g;
            let msg = self.cfg.compressor.apply(&u, &self.compressor_stream(i, t));
            self.state.workers[i].e = u - &msg;
            sum += msg;
            gsum += g;
        }
        let s = self.cfg.gamma / self.suite.n() as f64;
        axpy_neg(&mut self.state.server.x, s, &sum);
        axpy_neg(&mut self.state.server.x_tilde, s, &gsum);
    }

    fn step_diana(&mut self) {
        let t = self.state.server.t;
        let d = self.suite.d();
        let alpha = self.cfg.alpha;
        let mut sum = Vector::zeros(d);
        for i in 0..self.suite.n() {
            let g = self.gradient(i, t);
            let diff = g - &self.state.workers[i].h;
            let msg = self.cfg.quantizer.apply(&diff, &self.quantizer_stream(i, t));
            let w = &mut self.state.workers[i];
            for j in 0..d {
                w.h[j] += alpha * msg[j];
            }
            sum += msg;
        }
        self.server_shifted_update(&sum, &sum);
        self.state.server.x_tilde = self.state.server.x.clone();
    }

    /// `x ← (x − γh) − (γ/n)·msg_sum`, `h ← h + (α/n)·shift_sum`.
    fn server_shifted_update(&mut self, msg_sum: &Vector, shift_sum: &Vector) {
        let n = self.suite.n() as f64;
        let gamma = self.cfg.gamma;
        let s = gamma / n;
        let a = self.cfg.alpha / n;
        let server = &mut self.state.server;
        for j in 0..server.x.len() {
            server.x[j] = (server.x[j] - gamma * server.h[j]) - s * msg_sum[j];
            server.h[j] += a * shift_sum[j];
        }
    }

    fn step_defsgd_bias(&mut self) {
        let t = self.state.server.t;
        let d = self.suite.d();
        let alpha = self.cfg.alpha;
        let mut msg_sum = Vector::zeros(d);
        let mut shift_sum = Vector::zeros(d);
        let mut gsum = Vector::zeros(d);
        for i in 0..self.suite.n() {
            let g = self.gradient(i, t);
            let h_i = &self.state.workers[i].h;
            let u = (&self.state.workers[i].e + &g) - h_i;
            let msg = self.cfg.compressor.apply(&u, &self.compressor_stream(i, t));
            let q = self.cfg.quantizer.apply(&(&g - h_i), &self.quantizer_stream(i, t));
            let w = &mut self.state.workers[i];
            w.e = u - &msg;
            for j in 0..d {
                w.h[j] += alpha * q[j];
            }
            msg_sum += msg;
            shift_sum += q;
            gsum += g;
        }
        self.server_shifted_update(&msg_sum, &shift_sum);
        let s = self.cfg.gamma / self.suite.n() as f64;
        axpy_neg(&mut self.state.server.x_tilde, s, &gsum);
    }

    fn step_ecsgd_diana(&mut self) {
        let t = self.state.server.t;
        let d = self.suite.d();
        let alpha = self.cfg.alpha;
        let mut msg_sum = Vector::zeros(d);
        let mut gsum = Vector::zeros(d);
        for i in 0..self.suite.n() {
            let g = self.gradient(i, t);
            let h_i = &self.state.workers[i].h;
            let u = ((&self.state.workers[i].e + &g) - h_i) + &self.state.server.h;
            let msg = self.cfg.compressor.apply(&u, &self.compressor_stream(i, t));
            let q = self.cfg.quantizer.apply(&(&g - h_i), &self.quantizer_stream(i, t));
            let w = &mut self.state.workers[i];
            w.e = u - &msg;
            for j in 0..d {
                w.h[j] += alpha * q[j];
            }
            msg_sum += msg;
            gsum += g;
        }
        let s = self.cfg.gamma / self.suite.n() as f64;
        axpy_neg(&mut self.state.server.x, s, &msg_sum);
        axpy_neg(&mut self.state.server.x_tilde, s, &gsum);
        self.state.server.h = self.state.mean_shift();
    }

    /// Virtual-sequence identity, shift averaging and finiteness.
    pub fn check_invariants(&self) -> Result<()> {
        let st = &self.state;
        let x = &st.server.x;
        let t = st.server.t;
        let finite = |v: &Vector| v.iter().all(|a| a.is_finite());
        if !finite(x)
            || !finite(&st.server.x_tilde)
            || !finite(&st.server.h)
            || st.workers.iter().any(|w| !finite(&w.e) || !finite(&w.h))
        {
            return Err(Error::Invariant(format!("non-finite state after round {t}")));
        }
        if self.cfg.algorithm.uses_error_feedback() {
            let r = self.virtual_residual();
            if r > VIRTUAL_TOL * (1.0 + x.norm()) {
                return Err(Error::Invariant(format!(
                    "x - x_tilde deviates from (gamma/n) sum e_i by {r:.3e} after round {t}"
                )));
            }
        }
        if self.cfg.algorithm.uses_shifts() {
            let r = (&st.server.h - st.mean_shift()).norm();
            if r > SHIFT_TOL * (1.0 + st.server.h.norm()) {
                return Err(Error::Invariant(format!(
                    "server shift deviates from the mean worker shift by {r:.3e} after round {t}"
                )));
            }
        }
        if self.suite.kind() == SuiteKind::Quadratic {
            let gap = self.suite.gap(x);
            if gap < -GAP_SLACK * (1.0 + self.suite.f_star().abs()) {
                return Err(Error::Invariant(format!("f(x) - f* = {gap:.3e} < 0 after round {t}")));
            }
        }
        Ok(())
    }

    /// `‖(x − x̃) − (γ/n) Σ e_i‖`.
    pub fn virtual_residual(&self) -> f64 {
        let st = &self.state;
        let n = self.suite.n() as f64;
        let esum = st
            .workers
            .iter()
            .fold(Vector::zeros(self.suite.d()), |acc, w| acc + &w.e);
        ((&st.server.x - &st.server.x_tilde) - esum * (self.cfg.gamma / n)).norm()
    }

    /// Metrics of the current state.
    pub fn row(&self) -> TraceRow {
        let st = &self.state;
        let n = self.suite.n() as f64;
        let x = &st.server.x;
        let x_dist_sq = (&st.server.x_tilde - self.suite.x_star()).norm_squared();
        let err_sq_mean = st.workers.iter().map(|w| w.e.norm_squared()).sum::<f64>() / n;
        let h_dist_sq_mean = st
            .workers
            .iter()
            .zip(&self.h_star)
            .map(|(w, hs)| (&w.h - hs).norm_squared())
            .sum::<f64>()
            / n;
        let (a, b) = self.lyap;
        TraceRow {
            t: st.server.t as usize,
            f_gap: self.suite.gap(x),
            grad_norm_sq: self.suite.gradient(x).norm_squared(),
            x_dist_sq,
            err_sq_mean,
            h_dist_sq_mean,
            lyapunov: x_dist_sq + a * err_sq_mean + b * h_dist_sq_mean,
            msg_size_estimate: self.msg_bits,
        }
    }
}

/// Coefficients `(a, b)` of `Ψ = X + aE + bH` for the method of `cfg`.
///
/// D-EF-SGD: `a = 12γ³L/δ`. DIANA: `b = 4γ²ω/(αn)`. Bias-corrected
/// D-EF-SGD and EC-SGD-DIANA: `a = 12γ³L/δ`, `b = 8a(1−δ)/(αδ)`. A vanishing
/// `α` switches the shift term off.
pub fn lyapunov_coefficients(cfg: &AlgoConfig, l: f64, n: usize) -> (f64, f64) {
    let g = cfg.gamma;
    let delta = cfg.delta();
    let omega = cfg.omega();
    let alpha = cfg.alpha;
    match cfg.algorithm {
        Algorithm::Dsgd | Algorithm::Dqsgd | Algorithm::DqsgdLinearSync => (0.0, 0.0),
        Algorithm::Defsgd | Algorithm::DefsgdLinearSync => (12.0 * g.powi(3) * l / delta, 0.0),
        Algorithm::Diana => {
            let b = if alpha > 0.0 {
                4.0 * g * g * omega / (alpha * n as f64)
            } else {
                0.0
            };
            (0.0, b)
        }
        Algorithm::DefsgdBias | Algorithm::EcsgdDiana => {
            let a = 12.0 * g.powi(3) * l / delta;
            let b = if alpha > 0.0 {
                8.0 * a * (1.0 - delta) / (alpha * delta)
            } else {
                0.0
            };
            (a, b)
        }
    }
}

/// Single-node error-feedback SGD driven by the averaged stochastic gradient
/// `ḡ_t = (1/n) Σ g_t^i` of the suite, with the per-round compressor of the
/// synchronized run (`cfg.algorithm` must be
/// [`Algorithm::DefsgdLinearSync`]). Linearity of the compressor makes this
/// the same process as the `n`-worker run.
pub fn run_averaged_reference(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    if cfg.algorithm != Algorithm::DefsgdLinearSync {
        return Err(Error::Config(
            "the averaged reference mirrors defsgd-linear-sync".into(),
        ));
    }
    cfg.validate(suite.d())?;
    let d = suite.d();
    let n = suite.n();
    let x0 = cfg.x0.clone().unwrap_or_else(|| Vector::zeros(d));
    let mut state = RunState::initial(x0, 1);
    let mut iterates = vec![state.server.x.clone()];
    let mut trace = Trace::default();
    let row = |st: &RunState| TraceRow {
        t: st.server.t as usize,
        f_gap: suite.gap(&st.server.x),
        grad_norm_sq: suite.gradient(&st.server.x).norm_squared(),
        x_dist_sq: (&st.server.x_tilde - suite.x_star()).norm_squared(),
        err_sq_mean: st.workers[0].e.norm_squared(),
        h_dist_sq_mean: 0.0,
        lyapunov: 0.0,
        msg_size_estimate: cfg.compressor.message_bits_estimate(),
    };
    trace.push(row(&state));
    for t in 0..cfg.rounds as u64 {
        let mut gsum = Vector::zeros(d);
        for i in 0..n {
            let noise = RngStream::worker(cfg.seed, i, t, Purpose::Noise);
            gsum += stochastic_gradient(suite, i, &state.server.x, &noise);
        }
        let gbar = gsum / n as f64;
        let stream = RngStream::synchronized(cfg.seed, t, Purpose::Compressor);
        let WorkerState { e, .. } = &mut state.workers[0];
        let u = &*e + &gbar;
        let msg = cfg.compressor.apply(&u, &stream);
        *e = u - &msg;
        axpy_neg(&mut state.server.x, cfg.gamma, &msg);
        axpy_neg(&mut state.server.x_tilde, cfg.gamma, &gbar);
        state.server.t += 1;
        iterates.push(state.server.x.clone());
        trace.push(row(&state));
    }
    Ok(Trajectory {
        iterates,
        trace,
        final_state: state,
    })
}
