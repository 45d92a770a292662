use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hetsgd::compressors::estimate_moments;
use hetsgd::harness::{
    compare_scaling, compression_params, default_tail, problem_constants_for, resolve, run_experiment, seed_plateau,
    ExperimentConfig,
};
use hetsgd::tuning::theorem_stepsize_cap;
use hetsgd::{CompressorOp, CompressorSpec, Error, Purpose, RngStream, Trace, Vector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Standard errors of slack allowed when checking estimated moments.
const Z_TOL: f64 = 4.0;

#[derive(Parser)]
#[command(
    name = "hetsgd",
    version,
    about = "Distributed compressed SGD simulator for heterogeneous data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config and write CSV traces.
    Run {
        config: PathBuf,
        /// Overrides `run.output`.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run the config once per value of one key and report plateau scaling.
    Sweep {
        config: PathBuf,
        /// Config key to vary, e.g. `algo.gamma`.
        #[arg(long)]
        axis: String,
        /// Values for the axis.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Write the scaling table here instead of stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Estimate the moments of a compressor or quantizer by Monte Carlo.
    VerifyCompressor {
        /// e.g. `topk:4`, `randk-unbiased:2`, `sketch:coord:8`.
        spec: String,
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        /// Number of random test vectors.
        #[arg(long, default_value_t = 20)]
        vectors: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the tuned stepsize and the theorem cap for a config.
    Tune { config: PathBuf },
}

fn load(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()))
}

fn cmd_run(config: PathBuf, output: Option<PathBuf>) -> Result<()> {
    let mut cfg = load(&config)?;
    if output.is_some() {
        cfg.output = output;
    }
    let res = run_experiment(&cfg)?;
    println!(
        "{} gamma={:e} alpha={:e} rounds={}",
        res.resolved.algo.algorithm, res.resolved.algo.gamma, res.resolved.algo.alpha, res.resolved.algo.rounds
    );
    for ((seed, trace), out) in res.traces.iter().zip(&res.outputs) {
        let last = trace.last().expect("trace has the initial row");
        println!(
            "seed {seed}: F_T={:e} |x_T-x*|^2={:e} output t={} F_out={:e} F_avg={:e}",
            last.f_gap, last.x_dist_sq, out.index, out.sampled_gap, out.average_gap
        );
    }
    let traces: Vec<&Trace> = res.traces.iter().map(|(_, t)| t).collect();
    let p = seed_plateau(&traces, default_tail(traces[0].len()))?;
    println!("plateau {:e} +- {:e}", p.level, p.stderr);
    for f in &res.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}

fn cmd_sweep(config: PathBuf, axis: String, values: Vec<String>, output: Option<PathBuf>) -> Result<()> {
    let base = load(&config)?;
    let grid = values
        .iter()
        .map(|v| base.set(&axis, v))
        .collect::<hetsgd::Result<Vec<_>>>()?;
    let report = compare_scaling(&grid, &axis)?;
    match output {
        Some(path) => {
            std::fs::write(&path, report.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

fn cmd_verify(spec: String, dim: usize, samples: usize, vectors: usize, seed: u64) -> Result<()> {
    let spec: CompressorSpec = spec.parse()?;
    let op = CompressorOp::from_spec(&spec, dim)?;
    if vectors == 0 {
        return Err(Error::Parameter("--vectors must be positive".into()).into());
    }
    println!("{spec} on d={dim}: omega={:?} delta={:?}", op.omega(), op.delta());
    let mut failures = 0;
    for v in 0..vectors {
        let mut rng = RngStream::synchronized(seed, v as u64, Purpose::Generator).rng();
        let x = Vector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let m = estimate_moments(&op, &x, samples, RngStream::worker(seed, v, 0, Purpose::Sampling))?;
        let mut ok = true;
        if let Some(omega) = op.omega() {
            ok &= m.bias_norm <= Z_TOL * m.mean_stderr.norm();
            ok &= m.second_moment_ratio <= 1.0 + omega + Z_TOL * m.second_moment_stderr;
        }
        if let Some(delta) = op.delta() {
            ok &= m.contraction_ratio <= 1.0 - delta + Z_TOL * m.contraction_stderr + 1e-12;
        }
        println!(
            "vector {v}: bias={:.3e} (se {:.3e}) E|C|^2/|x|^2={:.6} (se {:.1e}) E|C-x|^2/|x|^2={:.6} (se {:.1e}) {}",
            m.bias_norm,
            m.mean_stderr.norm(),
            m.second_moment_ratio,
            m.second_moment_stderr,
            m.contraction_ratio,
            m.contraction_stderr,
            if ok { "ok" } else { "VIOLATED" }
        );
        failures += usize::from(!ok);
    }
    if failures > 0 {
        return Err(Error::Invariant(format!("{failures} of {vectors} vectors violate the {spec} bounds")).into());
    }
    println!("all {vectors} vectors within bounds");
    Ok(())
}

fn cmd_tune(config: PathBuf) -> Result<()> {
    let cfg = load(&config)?.set("algo.gamma", "tuned")?;
    let suite = cfg.load_suite()?;
    let res = resolve(&cfg, &suite)?;
    let k = res.constants.as_ref().expect("tuned rule yields constants");
    let t = res.tuned.as_ref().expect("tuned rule yields a stepsize");
    let x0 = res.algo.x0.clone().unwrap_or_else(|| Vector::zeros(suite.d()));
    let p = problem_constants_for(&suite, &x0, res.class)?;
    let cap = theorem_stepsize_cap(res.algo.algorithm, &p, &compression_params(&res.algo), res.class);
    println!(
        "algorithm {} class {} rounds {}",
        res.algo.algorithm, res.class, res.algo.rounds
    );
    println!(
        "A={:e} B={:e} C={:e} D={:e} E={:e} F={:e} r0={:e}",
        k.a, k.b, k.c, k.d, k.e, k.f, k.r0
    );
    println!("gamma {:e}", t.gamma);
    println!("tau {:e}", t.tau);
    println!("branch {}", t.branch);
    match cap {
        Ok(c) => println!("theorem cap {c:e}"),
        Err(Error::Unavailable(why)) => println!("theorem cap n/a ({why})"),
        Err(e) => return Err(e.into()),
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(e) if e.is_validation() => 2,
        Some(Error::Invariant(_)) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, output } => cmd_run(config, output),
        Command::Sweep {
            config,
            axis,
            values,
            output,
        } => cmd_sweep(config, axis, values, output),
        Command::VerifyCompressor {
            spec,
            dim,
            samples,
            vectors,
            seed,
        } => cmd_verify(spec, dim, samples, vectors, seed),
        Command::Tune { config } => cmd_tune(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
