//! The training schemes as deterministic worker/server state machines.
//!
//! Every method samples one stochastic gradient per worker and round from
//! the stream `(seed, worker, round, Noise)`; quantizers and compressors draw
//! from per-worker streams, or from a single per-round stream in the
//! synchronized variants. Workers are processed in index order and the server
//! sums their messages in that order, so a run is a pure function of the
//! suite and the config.

mod engine;
mod output;

use std::fmt;
use std::str::FromStr;

use crate::{CompressorOp, Error, ProblemSuite, Result, Trace, Vector};

pub use engine::{lyapunov_coefficients, run_averaged_reference, Simulation};
pub use output::{candidate_count, output_weights, select_output, OutputSelection, OutputTracker, Weighting};

/// Slack allowed on `α ≤ 1/(1+ω)` and `α ≤ β/(1+ω)` so that values computed
/// as `1.0 / (1.0 + ω)` are accepted.
const ALPHA_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    /// Plain distributed SGD, the uncompressed baseline.
    Dsgd,
    Dqsgd,
    Defsgd,
    Diana,
    /// D-EF-SGD with bias correction.
    DefsgdBias,
    EcsgdDiana,
    DqsgdLinearSync,
    DefsgdLinearSync,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Dsgd,
        Algorithm::Dqsgd,
        Algorithm::Defsgd,
        Algorithm::Diana,
        Algorithm::DefsgdBias,
        Algorithm::EcsgdDiana,
        Algorithm::DqsgdLinearSync,
        Algorithm::DefsgdLinearSync,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Dsgd => "dsgd",
            Algorithm::Dqsgd => "dqsgd",
            Algorithm::Defsgd => "defsgd",
            Algorithm::Diana => "diana",
            Algorithm::DefsgdBias => "defsgd-bias",
            Algorithm::EcsgdDiana => "ecsgd-diana",
            Algorithm::DqsgdLinearSync => "dqsgd-linear-sync",
            Algorithm::DefsgdLinearSync => "defsgd-linear-sync",
        }
    }

    /// Keeps error memories `e_i`.
    pub fn uses_error_feedback(self) -> bool {
        matches!(
            self,
            Algorithm::Defsgd | Algorithm::DefsgdBias | Algorithm::EcsgdDiana | Algorithm::DefsgdLinearSync
        )
    }

    /// Keeps shifts `h_i`.
    pub fn uses_shifts(self) -> bool {
        matches!(self, Algorithm::Diana | Algorithm::DefsgdBias | Algorithm::EcsgdDiana)
    }

    pub fn uses_quantizer(self) -> bool {
        matches!(
            self,
            Algorithm::Dqsgd
                | Algorithm::Diana
                | Algorithm::DefsgdBias
                | Algorithm::EcsgdDiana
                | Algorithm::DqsgdLinearSync
        )
    }

    pub fn uses_compressor(self) -> bool {
        self.uses_error_feedback()
    }

    pub fn is_synchronized(self) -> bool {
        matches!(self, Algorithm::DqsgdLinearSync | Algorithm::DefsgdLinearSync)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.trim())
            .ok_or_else(|| {
                let names: Vec<_> = Algorithm::ALL.iter().map(|a| a.name()).collect();
                Error::parse(
                    format!("algorithm `{s}`"),
                    format!("expected one of {}", names.join(", ")),
                )
            })
    }
}

/// Parameters of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoConfig {
    pub algorithm: Algorithm,
    /// Stepsize `γ ≥ 0`.
    pub gamma: f64,
    /// Shift stepsize `α ∈ [0, 1]`.
    pub alpha: f64,
    /// Bias-correction parameter `β ∈ (0, 1]`.
    pub beta: f64,
    pub quantizer: CompressorOp,
    pub compressor: CompressorOp,
    /// Number of rounds `T`.
    pub rounds: usize,
    pub seed: u64,
    /// Starting point; zeros when absent.
    pub x0: Option<Vector>,
}

impl AlgoConfig {
    /// Config with identity quantizer and compressor, `α = 0`, `β = 1`.
    pub fn new(algorithm: Algorithm, d: usize, gamma: f64, rounds: usize, seed: u64) -> Self {
        Self {
            algorithm,
            gamma,
            alpha: 0.0,
            beta: 1.0,
            quantizer: CompressorOp::identity(d),
            compressor: CompressorOp::identity(d),
            rounds,
            seed,
            x0: None,
        }
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }
    pub fn with_quantizer(mut self, q: CompressorOp) -> Self {
        self.quantizer = q;
        self
    }
    pub fn with_compressor(mut self, c: CompressorOp) -> Self {
        self.compressor = c;
        self
    }
    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
    pub fn with_rounds(mut self, rounds: usize) -> Self {
        self.rounds = rounds;
        self
    }
    pub fn with_x0(mut self, x0: Vector) -> Self {
        self.x0 = Some(x0);
        self
    }

    /// `ω` of the quantizer (0 when it is not a quantizer).
    pub fn omega(&self) -> f64 {
        self.quantizer.omega().unwrap_or(0.0)
    }

    /// `δ` of the compressor (1 when it is not a compressor).
    pub fn delta(&self) -> f64 {
        self.compressor.delta().unwrap_or(1.0)
    }

    /// Checks the config against a suite dimension.
    pub fn validate(&self, d: usize) -> Result<()> {
        let a = self.algorithm;
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Config(format!(
                "gamma must be finite and >= 0, got {}",
                self.gamma
            )));
        }
        if let Some(x0) = &self.x0 {
            if x0.len() != d {
                return Err(Error::Config(format!("x0 has length {}, suite has d = {d}", x0.len())));
            }
        }
        if a.uses_quantizer() {
            if self.quantizer.dim() != d {
                return Err(Error::Config(format!(
                    "quantizer acts on R^{}, suite has d = {d}",
                    self.quantizer.dim()
                )));
            }
            if !self.quantizer.is_quantizer() {
                return Err(Error::Config(format!(
                    "{a} needs an omega-quantizer, got {:?}",
                    self.quantizer.kind()
                )));
            }
        }
        if a.uses_compressor() {
            if self.compressor.dim() != d {
                return Err(Error::Config(format!(
                    "compressor acts on R^{}, suite has d = {d}",
                    self.compressor.dim()
                )));
            }
            if !self.compressor.is_compressor() {
                return Err(Error::Config(format!(
                    "{a} needs a delta-compressor, got {:?}",
                    self.compressor.kind()
                )));
            }
        }
        let omega = self.omega();
        match a {
            Algorithm::Diana | Algorithm::EcsgdDiana => {
                let cap = 1.0 / (1.0 + omega);
                if !(self.alpha >= 0.0) || self.alpha > cap * (1.0 + ALPHA_SLACK) {
                    return Err(Error::Config(format!(
                        "{a} needs 0 <= alpha <= 1/(1+omega) = {cap}, got {}",
                        self.alpha
                    )));
                }
            }
            Algorithm::DefsgdBias => {
                if !(self.beta > 0.0 && self.beta <= 1.0) {
                    return Err(Error::Config(format!("beta must lie in (0, 1], got {}", self.beta)));
                }
                let cap = self.beta / (1.0 + omega);
                if !(self.alpha >= 0.0) || self.alpha > cap * (1.0 + ALPHA_SLACK) {
                    return Err(Error::Config(format!(
                        "{a} needs 0 <= alpha <= beta/(1+omega) = {cap}, got {}",
                        self.alpha
                    )));
                }
            }
            Algorithm::DqsgdLinearSync if !self.quantizer.is_linear() => {
                return Err(Error::Config(format!(
                    "{a} needs a linear quantizer, got {:?}",
                    self.quantizer.kind()
                )));
            }
            Algorithm::DefsgdLinearSync if !self.compressor.is_linear() => {
                return Err(Error::Config(format!(
                    "{a} needs a linear compressor, got {:?}",
                    self.compressor.kind()
                )));
            }
            _ => {}
        }
        Ok(())
    }
}

/// Error memory and shift held by worker `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct WorkerState {
    pub e: Vector,
    pub h: Vector,
}

/// Iterate, server shift and virtual sequence after `t` rounds.
#[derive(Clone, Debug, PartialEq)]
pub struct ServerState {
    pub x: Vector,
    pub h: Vector,
    pub x_tilde: Vector,
    pub t: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunState {
    pub workers: Vec<WorkerState>,
    pub server: ServerState,
}

impl RunState {
    /// All memories and shifts zero, `x = x̃ = x0`.
    pub fn initial(x0: Vector, n: usize) -> Self {
        let d = x0.len();
        Self {
            workers: vec![
                WorkerState {
                    e: Vector::zeros(d),
                    h: Vector::zeros(d)
                };
                n
            ],
            server: ServerState {
                x: x0.clone(),
                h: Vector::zeros(d),
                x_tilde: x0,
                t: 0,
            },
        }
    }

    /// `(1/n) Σ e_i`.
    pub fn mean_error(&self) -> Vector {
        let d = self.server.x.len();
        let s = self.workers.iter().fold(Vector::zeros(d), |acc, w| acc + &w.e);
        s / self.workers.len() as f64
    }

    /// `(1/n) Σ h_i`.
    pub fn mean_shift(&self) -> Vector {
        let d = self.server.x.len();
        let s = self.workers.iter().fold(Vector::zeros(d), |acc, w| acc + &w.h);
        s / self.workers.len() as f64
    }
}

/// Result of a run: `x_0 … x_T`, one trace row per iterate and the final
/// state.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub iterates: Vec<Vector>,
    pub trace: Trace,
    pub final_state: RunState,
}

/// Runs `cfg.algorithm` for `cfg.rounds` rounds.
pub fn run(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    let mut sim = Simulation::new(suite, cfg)?;
    let mut iterates = Vec::with_capacity(cfg.rounds + 1);
    let mut trace = Trace::default();
    iterates.push(sim.state().server.x.clone());
    trace.push(sim.row());
    for _ in 0..cfg.rounds {
        sim.step()?;
        iterates.push(sim.state().server.x.clone());
        trace.push(sim.row());
    }
    Ok(Trajectory {
        iterates,
        trace,
        final_state: sim.into_state(),
    })
}

/// Like [`run`] but keeps only the trace and the final state.
pub fn run_trace(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<(Trace, RunState)> {
    let mut sim = Simulation::new(suite, cfg)?;
    let mut trace = Trace::default();
    trace.push(sim.row());
    for _ in 0..cfg.rounds {
        sim.step()?;
        trace.push(sim.row());
    }
    Ok((trace, sim.into_state()))
}

/// Like [`run_trace`], also drawing the output iterate (with seed
/// `cfg.seed`) on the fly.
pub fn run_trace_with_output(
    suite: &ProblemSuite,
    cfg: &AlgoConfig,
    weighting: Weighting,
) -> Result<(Trace, RunState, OutputSelection)> {
    let mut tracker = OutputTracker::new(candidate_count(cfg.rounds), weighting, cfg.seed)?;
    let mut sim = Simulation::new(suite, cfg)?;
    let mut trace = Trace::default();
    trace.push(sim.row());
    tracker.observe(&sim.state().server.x);
    for _ in 0..cfg.rounds {
        sim.step()?;
        trace.push(sim.row());
        tracker.observe(&sim.state().server.x);
    }
    Ok((trace, sim.into_state(), tracker.finish()?))
}

fn run_as(suite: &ProblemSuite, cfg: &AlgoConfig, algorithm: Algorithm) -> Result<Trajectory> {
    run(suite, &cfg.clone().with_algorithm(algorithm))
}

/// Plain distributed SGD.
pub fn run_dsgd(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    run_as(suite, cfg, Algorithm::Dsgd)
}

pub fn run_dqsgd(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    run_as(suite, cfg, Algorithm::Dqsgd)
}

pub fn run_defsgd(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    run_as(suite, cfg, Algorithm::Defsgd)
}

pub fn run_diana(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    run_as(suite, cfg, Algorithm::Diana)
}

pub fn run_defsgd_bias(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    run_as(suite, cfg, Algorithm::DefsgdBias)
}

pub fn run_ecsgd_diana(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    run_as(suite, cfg, Algorithm::EcsgdDiana)
}

/// Runs one of the synchronized linear variants.
pub fn run_linear_sync(suite: &ProblemSuite, cfg: &AlgoConfig) -> Result<Trajectory> {
    if !cfg.algorithm.is_synchronized() {
        return Err(Error::Config(format!(
            "{} is not a synchronized linear variant",
            cfg.algorithm
        )));
    }
    run(suite, cfg)
}
