//! Experiment orchestration: configs, multi-seed runs, CSV export and the
//! rate/plateau estimators used to compare methods.
//!
//! CSV schema: `t` followed by the selected metric columns (default all of
//! `f_gap, grad_norm_sq, x_dist_sq, err_sq_mean, h_dist_sq_mean, lyapunov,
//! msg_size_estimate`), one row per round `0..=T`, values with 17 significant
//! digits. The merged file prepends a `seed` column.

mod analysis;
mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::algorithms::{run_trace_with_output, Weighting};
use crate::problems::{measure_dissimilarity, sample_points};
use crate::trace::fmt17;
use crate::tuning::{
    theorem_constants, tune_strongly_convex, tune_sublinear, CompressionParams, ObjectiveClass, ProblemConstants,
    RecursionConstants, TunedStepsize,
};
use crate::{AlgoConfig, Algorithm, CompressorOp, Error, ProblemSuite, Result, Trace, TraceRow, Vector};

pub use analysis::{
    check_monotone, compare_scaling, default_tail, default_window, detect_plateau, fit_linear_rate, fit_rate_series,
    plateau_series, seed_plateau, Plateau, RateReport, ScalingReport, ScalingRow, CONVERGED, FIT_START,
};
pub use config::{AlgoSpec, AlphaRule, ExperimentConfig, Metric, StepsizeRule, SuiteParams, SuiteSource};

/// Points used to certify `(ζ², Z²)` for stepsize rules.
const DISSIMILARITY_POINTS: usize = 64;

/// Problem constants of `suite` for a run started at `x0`: dissimilarity
/// certified on points around `x*` at the scale of `‖x0 − x*‖`, and `r0`
/// equal to `‖x0 − x*‖²` (convex classes) or `f(x0) − f*` (nonconvex).
pub fn problem_constants_for(suite: &ProblemSuite, x0: &Vector, class: ObjectiveClass) -> Result<ProblemConstants> {
    let dist = (x0 - suite.x_star()).norm();
    let pts = sample_points(suite, DISSIMILARITY_POINTS, dist.max(1.0), 0);
    let mut all = pts;
    all.push(x0.clone());
    let rep = measure_dissimilarity(suite, &all)?;
    let r0 = match class {
        ObjectiveClass::SmoothNonconvex => suite.gap(x0).max(0.0),
        _ => dist * dist,
    };
    Ok(ProblemConstants {
        l: suite.l(),
        mu: suite.mu(),
        sigma: suite.sigma(),
        zeta_sq: rep.zeta_sq,
        z_sq: rep.z_sq,
        n: suite.n(),
        r0,
    })
}

/// Compression parameters of a config, as the tuning module expects them.
pub fn compression_params(cfg: &AlgoConfig) -> CompressionParams {
    CompressionParams {
        delta: cfg.delta(),
        omega: cfg.omega(),
        alpha: cfg.alpha,
        beta: cfg.beta,
    }
}

/// Recursion constants for the method of `cfg`. EC-SGD-DIANA has no theorem
/// of its own and borrows the bias-corrected constants.
fn constants_for(cfg: &AlgoConfig, p: &ProblemConstants, class: ObjectiveClass) -> Result<RecursionConstants> {
    let q = compression_params(cfg);
    match theorem_constants(cfg.algorithm, p, &q, class) {
        Err(Error::Unavailable(_)) if cfg.algorithm == Algorithm::EcsgdDiana => {
            theorem_constants(Algorithm::DefsgdBias, p, &q, class)
        }
        other => other,
    }
}

/// A config with every rule resolved against the suite.
#[derive(Clone, Debug)]
pub struct Resolved {
    /// Seed-free algorithm config (seed 0); see [`Resolved::for_seed`].
    pub algo: AlgoConfig,
    pub class: ObjectiveClass,
    /// Constants behind `tuned`/`cap`, when either was used.
    pub constants: Option<RecursionConstants>,
    pub tuned: Option<TunedStepsize>,
    /// Output-iterate weights: `(1 − c)^{−t}` with `c = min{γA, F}` for the
    /// strongly convex class when constants exist, uniform otherwise.
    pub weighting: Weighting,
}

impl Resolved {
    pub fn for_seed(&self, seed: u64) -> AlgoConfig {
        self.algo.clone().with_seed(seed)
    }
}

/// Resolves the `algo.*` keys of `cfg` against `suite`.
pub fn resolve(cfg: &ExperimentConfig, suite: &ProblemSuite) -> Result<Resolved> {
    let d = suite.d();
    let a = &cfg.algo;
    let quantizer = CompressorOp::from_spec(&a.quantizer, d)?;
    let compressor = CompressorOp::from_spec(&a.compressor, d)?;
    let mut algo = AlgoConfig::new(a.algorithm, d, 0.0, a.rounds, 0)
        .with_quantizer(quantizer)
        .with_compressor(compressor)
        .with_beta(a.beta);
    if let Some(x0) = &a.x0 {
        if x0.len() != d {
            return Err(Error::Config(format!(
                "algo.x0 has {} entries, suite dimension is {d}",
                x0.len()
            )));
        }
        algo = algo.with_x0(Vector::from_column_slice(x0));
    }
    let alpha = match a.alpha {
        AlphaRule::Fixed(v) => v,
        AlphaRule::Auto => {
            let base = if a.algorithm == Algorithm::DefsgdBias {
                a.beta
            } else {
                1.0
            };
            base / (1.0 + algo.omega())
        }
    };
    algo = algo.with_alpha(alpha);
    let class = cfg.objective_class(suite);
    let (gamma, constants, tuned) = match a.gamma {
        StepsizeRule::Fixed(g) => (g, None, None),
        rule => {
            let x0 = algo.x0.clone().unwrap_or_else(|| Vector::zeros(d));
            let p = problem_constants_for(suite, &x0, class)?;
            let k = constants_for(&algo, &p, class)?;
            if rule == StepsizeRule::Cap {
                (k.cap(), Some(k), None)
            } else {
                let t = match class {
                    ObjectiveClass::StronglyConvex => tune_strongly_convex(&k, a.rounds)?,
                    _ => tune_sublinear(&k, a.rounds)?,
                };
                (t.gamma, Some(k), Some(t))
            }
        }
    };
    algo = algo.with_gamma(gamma);
    algo.validate(d)?;
    let weighting = match class {
        ObjectiveClass::StronglyConvex => {
            let k = match &constants {
                Some(k) => Some(*k),
                None => {
                    let x0 = algo.x0.clone().unwrap_or_else(|| Vector::zeros(d));
                    problem_constants_for(suite, &x0, class)
                        .and_then(|p| constants_for(&algo, &p, class))
                        .ok()
                }
            };
            k.map(|k| (gamma * k.a).min(k.f))
                .filter(|c| *c > 0.0 && *c < 1.0)
                .map_or(Weighting::Uniform, Weighting::StronglyConvex)
        }
        _ => Weighting::Uniform,
    };
    Ok(Resolved {
        algo,
        class,
        constants,
        tuned,
        weighting,
    })
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub resolved: Resolved,
    /// `(seed, trace)` in seed-list order.
    pub traces: Vec<(u64, Trace)>,
    /// Drawn output iterate per seed, in seed-list order.
    pub outputs: Vec<OutputReport>,
    /// Per-seed CSVs, then `trace.csv` and `outputs.csv`, when an output
    /// directory was set.
    pub files: Vec<PathBuf>,
}

/// Gaps of the sampled output iterate and of the weighted average of the
/// candidates for one seed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutputReport {
    pub seed: u64,
    pub index: usize,
    pub sampled_gap: f64,
    pub average_gap: f64,
}

/// Loads the suite and runs [`run_experiment_with`].
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    run_experiment_with(cfg, &cfg.load_suite()?)
}

/// Runs every seed (in parallel) and, with `run.output` set, writes
/// `seed-<s>.csv` per seed and the merged `trace.csv` into that directory.
pub fn run_experiment_with(cfg: &ExperimentConfig, suite: &ProblemSuite) -> Result<ExperimentResult> {
    let resolved = resolve(cfg, suite)?;
    let runs: Vec<(u64, Trace, OutputReport)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let (trace, _, out) = run_trace_with_output(suite, &resolved.for_seed(seed), resolved.weighting)?;
            let report = OutputReport {
                seed,
                index: out.index,
                sampled_gap: suite.gap(&out.x),
                average_gap: suite.gap(&out.average),
            };
            Ok((seed, trace, report))
        })
        .collect::<Result<_>>()?;
    let outputs: Vec<OutputReport> = runs.iter().map(|r| r.2).collect();
    let traces: Vec<(u64, Trace)> = runs.into_iter().map(|(s, t, _)| (s, t)).collect();
    let mut files = Vec::new();
    if let Some(dir) = &cfg.output {
        fs::create_dir_all(dir)?;
        let written: Vec<PathBuf> = traces
            .par_iter()
            .map(|(seed, trace)| {
                let path = dir.join(format!("seed-{seed}.csv"));
                let mut buf = Vec::new();
                write_csv(&mut buf, trace, &cfg.metrics, None)?;
                write_atomic(&path, &buf)?;
                Ok(path)
            })
            .collect::<Result<_>>()?;
        files.extend(written);
        let mut merged = Vec::new();
        for (k, (seed, trace)) in traces.iter().enumerate() {
            write_csv_rows(&mut merged, trace, &cfg.metrics, Some(*seed), k == 0)?;
        }
        let path = dir.join("trace.csv");
        write_atomic(&path, &merged)?;
        files.push(path);
        let mut out = String::from("seed,index,sampled_gap,average_gap\n");
        for o in &outputs {
            out.push_str(&format!(
                "{},{},{},{}\n",
                o.seed,
                o.index,
                fmt17(o.sampled_gap),
                fmt17(o.average_gap)
            ));
        }
        let path = dir.join("outputs.csv");
        write_atomic(&path, out.as_bytes())?;
        files.push(path);
    }
    Ok(ExperimentResult {
        resolved,
        traces,
        outputs,
        files,
    })
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("csv.tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Header line for the selected metrics.
pub fn csv_header(metrics: &[Metric], with_seed: bool) -> String {
    let mut h = String::new();
    if with_seed {
        h.push_str("seed,");
    }
    h.push('t');
    for m in metrics {
        h.push(',');
        h.push_str(m.name());
    }
    h
}

/// Writes `trace` restricted to `metrics`, with a header.
pub fn write_csv<W: Write>(out: &mut W, trace: &Trace, metrics: &[Metric], seed: Option<u64>) -> Result<()> {
    write_csv_rows(out, trace, metrics, seed, true)
}

fn write_csv_rows<W: Write>(
    out: &mut W,
    trace: &Trace,
    metrics: &[Metric],
    seed: Option<u64>,
    header: bool,
) -> Result<()> {
    if header {
        writeln!(out, "{}", csv_header(metrics, seed.is_some()))?;
    }
    for r in &trace.rows {
        if let Some(s) = seed {
            write!(out, "{s},")?;
        }
        write!(out, "{}", r.t)?;
        for m in metrics {
            write!(out, ",{}", fmt17(m.get(r)))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Per-round mean and standard error of a metric across traces of equal
/// length.
pub fn seed_average(traces: &[&Trace], metric: impl Fn(&TraceRow) -> f64) -> (Vec<f64>, Vec<f64>) {
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let k = traces.len() as f64;
    let mut mean = Vec::with_capacity(len);
    let mut se = Vec::with_capacity(len);
    for t in 0..len {
        let xs: Vec<f64> = traces.iter().map(|tr| metric(&tr.rows[t])).collect();
        let m = xs.iter().sum::<f64>() / k;
        let var = if traces.len() > 1 {
            xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (k - 1.0)
        } else {
            0.0
        };
        mean.push(m);
        se.push((var / k).sqrt());
    }
    (mean, se)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CFG: &str =
        "suite.d = 4\nsuite.n = 2\nsuite.mu = 1\nsuite.L = 4\nsuite.zeta_star_sq = 1\nsuite.sigma = 0.5\n\
                       algo.name = defsgd\nalgo.compressor = topk:1\nalgo.gamma = 0.05\nalgo.rounds = 10\n";

    #[test]
    fn minimal_run_writes_eleven_rows() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!("{CFG}run.output = {}\n", dir.path().display());
        let cfg = ExperimentConfig::from_text(&text, "t").unwrap();
        let res = run_experiment(&cfg).unwrap();
        assert_eq!(res.files.len(), 3);
        assert_eq!(res.outputs.len(), 1);
        let outs = fs::read_to_string(&res.files[2]).unwrap();
        assert_eq!(outs.lines().count(), 2);
        let csv = fs::read_to_string(&res.files[0]).unwrap();
        assert_eq!(csv.lines().count(), 12);
        assert_eq!(csv.lines().next().unwrap(), TraceRow::HEADER);
        let again = run_experiment(&cfg).unwrap();
        assert_eq!(fs::read(&again.files[1]).unwrap(), fs::read(&res.files[1]).unwrap());
        assert_eq!(fs::read(&again.files[0]).unwrap(), csv.as_bytes());
    }

    #[test]
    fn zero_stepsize_keeps_initial_gap() {
        let cfg = ExperimentConfig::from_text(&CFG.replace("0.05", "0"), "t").unwrap();
        let res = run_experiment(&cfg).unwrap();
        let f = res.traces[0].1.f_gaps();
        assert!(f.iter().all(|v| *v == f[0]));
    }

    #[test]
    fn merged_csv_in_seed_order() {
        let dir = tempfile::tempdir().unwrap();
        let text = format!(
            "{CFG}run.seeds = 5,2,9\nrun.metrics = f_gap\nrun.output = {}\n",
            dir.path().display()
        );
        let res = run_experiment(&ExperimentConfig::from_text(&text, "t").unwrap()).unwrap();
        assert_eq!(res.outputs.iter().map(|o| o.seed).collect::<Vec<_>>(), vec![5, 2, 9]);
        let merged = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        let lines: Vec<&str> = merged.lines().collect();
        assert_eq!(lines[0], "seed,t,f_gap");
        assert_eq!(lines.len(), 1 + 3 * 11);
        assert!(lines[1].starts_with("5,0,") && lines[12].starts_with("2,0,") && lines[23].starts_with("9,0,"));
    }

    #[test]
    fn stepsize_rules_respect_caps() {
        let base = ExperimentConfig::from_text(CFG, "t").unwrap();
        let suite = base.load_suite().unwrap();
        let cap = resolve(&base.set("algo.gamma", "cap").unwrap(), &suite).unwrap();
        let tuned = resolve(&base.set("algo.gamma", "tuned").unwrap(), &suite).unwrap();
        assert!(tuned.algo.gamma <= cap.algo.gamma);
        assert_eq!(cap.algo.gamma, cap.constants.unwrap().cap());
    }

    #[test]
    fn auto_alpha() {
        let text = CFG
            .replace("defsgd", "diana")
            .replace("algo.compressor = topk:1", "algo.quantizer = randk-unbiased:1");
        let cfg = ExperimentConfig::from_text(&format!("{text}algo.alpha = auto\n"), "t").unwrap();
        let suite = cfg.load_suite().unwrap();
        assert_eq!(resolve(&cfg, &suite).unwrap().algo.alpha, 0.25);
    }

    #[test]
    fn output_weighting_follows_class() {
        let cfg = ExperimentConfig::from_text(CFG, "t").unwrap();
        let suite = cfg.load_suite().unwrap();
        let r = resolve(&cfg, &suite).unwrap();
        match r.weighting {
            Weighting::StronglyConvex(c) => assert!(c > 0.0 && c < 1.0),
            w => panic!("{w:?}"),
        }
        let res = run_experiment(&cfg.set("algo.rounds", "400").unwrap()).unwrap();
        let o = res.outputs[0];
        assert!(o.index < 400);
        assert!(o.sampled_gap >= 0.0 && o.average_gap >= 0.0);
        let convex = cfg.set("run.class", "convex").unwrap();
        assert_eq!(resolve(&convex, &suite).unwrap().weighting, Weighting::Uniform);
    }

    #[test]
    fn scaling_rejects_off_axis_changes() {
        let a = ExperimentConfig::from_text(CFG, "t").unwrap();
        let b = a.set("algo.gamma", "0.025").unwrap().set("suite.n", "3").unwrap();
        assert!(matches!(compare_scaling(&[a, b], "algo.gamma"), Err(Error::Config(_))));
    }

    #[test]
    fn scaling_table() {
        let a = ExperimentConfig::from_text(&CFG.replace("algo.rounds = 10", "algo.rounds = 50"), "t").unwrap();
        let grid = vec![a.clone(), a.set("algo.gamma", "0.025").unwrap()];
        let rep = compare_scaling(&grid, "algo.gamma").unwrap();
        assert_eq!(rep.rows.len(), 2);
        assert_eq!(rep.ratios.len(), 1);
        assert_eq!(rep.to_csv().lines().count(), 3);
    }
}
