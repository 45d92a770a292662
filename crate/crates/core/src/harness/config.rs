use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::problems::{gen_nonconvex_suite, gen_quadratic_suite, read_suite};
use crate::tuning::ObjectiveClass;
use crate::{Algorithm, CompressorSpec, Error, ProblemSuite, Result, SuiteKind, TraceRow};

/// Parameters of a generated suite (`suite.*` keys).
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteParams {
    pub kind: SuiteKind,
    pub d: usize,
    pub n: usize,
    pub mu: f64,
    pub l: f64,
    pub zeta_star_sq: f64,
    /// Regularizer weight of the nonconvex kind.
    pub reg_c: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SuiteSource {
    Generated(SuiteParams),
    File(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepsizeRule {
    Fixed(f64),
    /// Tuned for the budget by the summation lemma of the method.
    Tuned,
    /// The largest stepsize admitted by the method's descent lemma.
    Cap,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlphaRule {
    Fixed(f64),
    /// `1/(1+ω)`, or `β/(1+ω)` for the bias-corrected method.
    Auto,
}

/// The `algo.*` keys; resolved against a suite into an
/// [`AlgoConfig`](crate::AlgoConfig).
#[derive(Clone, Debug, PartialEq)]
pub struct AlgoSpec {
    pub algorithm: Algorithm,
    pub gamma: StepsizeRule,
    pub alpha: AlphaRule,
    pub beta: f64,
    pub quantizer: CompressorSpec,
    pub compressor: CompressorSpec,
    pub rounds: usize,
    pub x0: Option<Vec<f64>>,
}

/// A CSV column of the trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    FGap,
    GradNormSq,
    XDistSq,
    ErrSqMean,
    HDistSqMean,
    Lyapunov,
    MsgSizeEstimate,
}

impl Metric {
    pub const ALL: [Metric; 7] = [
        Metric::FGap,
        Metric::GradNormSq,
        Metric::XDistSq,
        Metric::ErrSqMean,
        Metric::HDistSqMean,
        Metric::Lyapunov,
        Metric::MsgSizeEstimate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::FGap => "f_gap",
            Metric::GradNormSq => "grad_norm_sq",
            Metric::XDistSq => "x_dist_sq",
            Metric::ErrSqMean => "err_sq_mean",
            Metric::HDistSqMean => "h_dist_sq_mean",
            Metric::Lyapunov => "lyapunov",
            Metric::MsgSizeEstimate => "msg_size_estimate",
        }
    }

    pub fn get(self, r: &TraceRow) -> f64 {
        match self {
            Metric::FGap => r.f_gap,
            Metric::GradNormSq => r.grad_norm_sq,
            Metric::XDistSq => r.x_dist_sq,
            Metric::ErrSqMean => r.err_sq_mean,
            Metric::HDistSqMean => r.h_dist_sq_mean,
            Metric::Lyapunov => r.lyapunov,
            Metric::MsgSizeEstimate => r.msg_size_estimate,
        }
    }

    fn parse(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// One experiment: a suite, a method, a seed list and where to write CSVs.
///
/// Text form, one `key = value` per line, `#` starts a comment:
///
/// ```text
/// suite.d = 8
/// suite.n = 4
/// suite.mu = 1
/// suite.L = 10
/// suite.zeta_star_sq = 1
/// algo.name = diana
/// algo.quantizer = randk-unbiased:1
/// algo.alpha = auto
/// algo.gamma = cap
/// algo.rounds = 1000
/// run.seeds = 0..20
/// ```
///
/// `suite.file` loads a saved suite instead of generating one (relative paths
/// are resolved against the config's directory); `suite.sigma` overrides its
/// noise level.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub suite: SuiteSource,
    pub sigma: Option<f64>,
    pub algo: AlgoSpec,
    /// Objective class used by `tuned`/`cap` stepsizes; inferred when absent.
    pub class: Option<ObjectiveClass>,
    pub seeds: Vec<u64>,
    pub output: Option<PathBuf>,
    pub metrics: Vec<Metric>,
}

/// Key → value as read, with the line each key came from.
#[derive(Default)]
struct Entries {
    name: String,
    items: Vec<(String, String, usize)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        let pos = self.items.iter().position(|(k, _, _)| k == key)?;
        let (_, v, line) = self.items.remove(pos);
        Some((v, line))
    }

    fn loc(&self, line: usize) -> String {
        format!("{}:{}", self.name, line)
    }
}

fn field<T>(entries: &Entries, key: &str, raw: &str, line: usize, f: impl FnOnce(&str) -> Option<T>) -> Result<T> {
    f(raw.trim()).ok_or_else(|| Error::parse(entries.loc(line), format!("{key}: cannot parse `{raw}`")))
}

fn wrap(entries: &Entries, key: &str, line: usize, e: Error) -> Error {
    let msg = match e {
        Error::Parse { message, .. } => message,
        other => other.to_string(),
    };
    Error::parse(entries.loc(line), format!("{key}: {msg}"))
}

fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (a.trim().parse::<u64>().ok()?, b.trim().parse::<u64>().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    s.split(',').map(|p| p.trim().parse().ok()).collect()
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

impl ExperimentConfig {
    pub fn from_text(text: &str, name: &str) -> Result<Self> {
        let mut entries = Entries {
            name: name.to_string(),
            items: Vec::new(),
        };
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content
                .split_once('=')
                .ok_or_else(|| Error::parse(entries.loc(line), format!("expected `key = value`, got `{content}`")))?;
            let k = k.trim().to_string();
            if entries.items.iter().any(|(e, _, _)| *e == k) {
                return Err(Error::parse(entries.loc(line), format!("duplicate key `{k}`")));
            }
            entries.items.push((k, v.trim().to_string(), line));
        }
        Self::from_entries(entries)
    }

    /// Reads a config file; `suite.file` is resolved against its directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_text(&text, &path.display().to_string())?;
        if let SuiteSource::File(p) = &mut cfg.suite {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        if let SuiteSource::File(p) = &cfg.suite {
            if !p.exists() {
                return Err(Error::parse(
                    path.display().to_string(),
                    format!("suite.file: {} does not exist", p.display()),
                ));
            }
        }
        Ok(cfg)
    }

    fn from_entries(mut e: Entries) -> Result<Self> {
        macro_rules! get {
            ($key:expr, $parse:expr) => {
                match e.take($key) {
                    Some((v, line)) => Some(field(&e, $key, &v, line, $parse)?),
                    None => None,
                }
            };
        }
        macro_rules! need {
            ($key:expr, $parse:expr) => {
                get!($key, $parse)
                    .ok_or_else(|| Error::parse(e.name.clone(), format!("missing required key `{}`", $key)))?
            };
        }
        let file = get!("suite.file", |s| Some(PathBuf::from(s)));
        let kind = get!("suite.kind", |s| match s {
            "quadratic" => Some(SuiteKind::Quadratic),
            "nonconvex-regularized" => Some(SuiteKind::NonconvexRegularized),
            _ => None,
        });
        let d = get!("suite.d", |s| s.parse::<usize>().ok());
        let n = get!("suite.n", |s| s.parse::<usize>().ok());
        let mu = get!("suite.mu", parse_f64);
        let mut l = get!("suite.L", parse_f64);
        if l.is_none() {
            l = get!("suite.l", parse_f64);
        }
        let zeta = get!("suite.zeta_star_sq", parse_f64);
        let reg_c = get!("suite.c", parse_f64);
        let suite_seed = get!("suite.seed", |s| s.parse::<u64>().ok());
        let sigma = get!("suite.sigma", parse_f64);
        let suite = match file {
            Some(p) => {
                if d.is_some() || n.is_some() || mu.is_some() || l.is_some() || zeta.is_some() || kind.is_some() {
                    return Err(Error::parse(e.name.clone(), "suite.file excludes the generator keys"));
                }
                SuiteSource::File(p)
            }
            None => {
                let kind = kind.unwrap_or(SuiteKind::Quadratic);
                let missing = |k: &str| Error::parse(e.name.clone(), format!("missing required key `{k}`"));
                let mu = match kind {
                    SuiteKind::Quadratic => mu.ok_or_else(|| missing("suite.mu"))?,
                    SuiteKind::NonconvexRegularized => mu.unwrap_or(0.0),
                };
                SuiteSource::Generated(SuiteParams {
                    kind,
                    d: d.ok_or_else(|| missing("suite.d"))?,
                    n: n.ok_or_else(|| missing("suite.n"))?,
                    mu,
                    l: l.ok_or_else(|| missing("suite.L"))?,
                    zeta_star_sq: zeta.unwrap_or(0.0),
                    reg_c: reg_c.unwrap_or(0.0),
                    seed: suite_seed.unwrap_or(0),
                })
            }
        };

        let algorithm = match e.take("algo.name") {
            Some((v, line)) => v.parse::<Algorithm>().map_err(|err| wrap(&e, "algo.name", line, err))?,
            None => return Err(Error::parse(e.name.clone(), "missing required key `algo.name`")),
        };
        let gamma = need!("algo.gamma", |s| match s {
            "tuned" => Some(StepsizeRule::Tuned),
            "cap" => Some(StepsizeRule::Cap),
            _ => parse_f64(s).filter(|g| *g >= 0.0).map(StepsizeRule::Fixed),
        });
        let alpha = get!("algo.alpha", |s| match s {
            "auto" => Some(AlphaRule::Auto),
            _ => parse_f64(s).map(AlphaRule::Fixed),
        })
        .unwrap_or(AlphaRule::Fixed(0.0));
        let beta = get!("algo.beta", parse_f64).unwrap_or(1.0);
        let mut spec = |key: &str| -> Result<CompressorSpec> {
            match e.take(key) {
                Some((v, line)) => v.parse::<CompressorSpec>().map_err(|err| wrap(&e, key, line, err)),
                None => Ok(CompressorSpec::Identity),
            }
        };
        let quantizer = spec("algo.quantizer")?;
        let compressor = spec("algo.compressor")?;
        let rounds = need!("algo.rounds", |s| s.parse::<usize>().ok());
        let x0 = get!("algo.x0", |s| s
            .split(',')
            .map(|p| parse_f64(p.trim()))
            .collect::<Option<Vec<f64>>>());

        let class = match e.take("run.class") {
            Some((v, line)) => Some(
                v.parse::<ObjectiveClass>()
                    .map_err(|err| wrap(&e, "run.class", line, err))?,
            ),
            None => None,
        };
        let seeds = get!("run.seeds", parse_seeds).unwrap_or_else(|| vec![0]);
        if seeds.is_empty() {
            return Err(Error::parse(e.name.clone(), "run.seeds: empty seed list"));
        }
        let output = get!("run.output", |s| Some(PathBuf::from(s)));
        let metrics = get!("run.metrics", |s| s
            .split(',')
            .map(|m| Metric::parse(m.trim()))
            .collect::<Option<Vec<_>>>())
        .unwrap_or_else(|| Metric::ALL.to_vec());

        if let Some((k, _, line)) = e.items.first() {
            return Err(Error::parse(e.loc(*line), format!("unknown key `{k}`")));
        }
        Ok(Self {
            suite,
            sigma,
            algo: AlgoSpec {
                algorithm,
                gamma,
                alpha,
                beta,
                quantizer,
                compressor,
                rounds,
                x0,
            },
            class,
            seeds,
            output,
            metrics,
        })
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        match &self.suite {
            SuiteSource::File(p) => {
                let _ = writeln!(s, "suite.file = {}", p.display());
            }
            SuiteSource::Generated(g) => {
                let _ = writeln!(s, "suite.kind = {}", g.kind.name());
                let _ = writeln!(s, "suite.d = {}", g.d);
                let _ = writeln!(s, "suite.n = {}", g.n);
                let _ = writeln!(s, "suite.mu = {:?}", g.mu);
                let _ = writeln!(s, "suite.L = {:?}", g.l);
                let _ = writeln!(s, "suite.zeta_star_sq = {:?}", g.zeta_star_sq);
                let _ = writeln!(s, "suite.c = {:?}", g.reg_c);
                let _ = writeln!(s, "suite.seed = {}", g.seed);
            }
        }
        if let Some(sigma) = self.sigma {
            let _ = writeln!(s, "suite.sigma = {sigma:?}");
        }
        let a = &self.algo;
        let _ = writeln!(s, "algo.name = {}", a.algorithm);
        let gamma = match a.gamma {
            StepsizeRule::Fixed(g) => format!("{g:?}"),
            StepsizeRule::Tuned => "tuned".into(),
            StepsizeRule::Cap => "cap".into(),
        };
        let _ = writeln!(s, "algo.gamma = {gamma}");
        let alpha = match a.alpha {
            AlphaRule::Fixed(v) => format!("{v:?}"),
            AlphaRule::Auto => "auto".into(),
        };
        let _ = writeln!(s, "algo.alpha = {alpha}");
        let _ = writeln!(s, "algo.beta = {:?}", a.beta);
        let _ = writeln!(s, "algo.quantizer = {}", a.quantizer);
        let _ = writeln!(s, "algo.compressor = {}", a.compressor);
        let _ = writeln!(s, "algo.rounds = {}", a.rounds);
        if let Some(x0) = &a.x0 {
            let parts: Vec<String> = x0.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "algo.x0 = {}", parts.join(","));
        }
        if let Some(c) = self.class {
            let _ = writeln!(s, "run.class = {c}");
        }
        let seeds: Vec<String> = self.seeds.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "run.seeds = {}", seeds.join(","));
        if let Some(o) = &self.output {
            let _ = writeln!(s, "run.output = {}", o.display());
        }
        let metrics: Vec<&str> = self.metrics.iter().map(|m| m.name()).collect();
        let _ = writeln!(s, "run.metrics = {}", metrics.join(","));
        s
    }

    /// Replaces one key, as if it had been written in the config text.
    pub fn set(&self, key: &str, value: &str) -> Result<Self> {
        let mut lines: Vec<String> = self
            .to_text()
            .lines()
            .filter(|l| l.split_once('=').map(|(k, _)| k.trim()) != Some(key))
            .map(String::from)
            .collect();
        lines.push(format!("{key} = {value}"));
        Self::from_text(&lines.join("\n"), &format!("--axis {key}"))
    }

    /// Canonical value of `key`, if set.
    pub fn get(&self, key: &str) -> Option<String> {
        self.to_text().lines().find_map(|l| {
            let (k, v) = l.split_once('=')?;
            (k.trim() == key).then(|| v.trim().to_string())
        })
    }

    /// Builds or loads the problem suite.
    pub fn load_suite(&self) -> Result<ProblemSuite> {
        let suite = match &self.suite {
            SuiteSource::File(p) => read_suite(p)?,
            SuiteSource::Generated(g) => match g.kind {
                SuiteKind::Quadratic => {
                    gen_quadratic_suite(g.d, g.n, g.mu, g.l, g.zeta_star_sq, self.sigma.unwrap_or(0.0), g.seed)?
                }
                SuiteKind::NonconvexRegularized => gen_nonconvex_suite(g.d, g.n, g.l, g.reg_c, g.zeta_star_sq, g.seed)?,
            },
        };
        match self.sigma {
            Some(s) if s != suite.sigma() => suite.with_sigma(s),
            _ => Ok(suite),
        }
    }

    /// The class used for `tuned`/`cap` stepsizes: as configured, otherwise
    /// strongly convex when `μ > 0`, convex for other quadratic suites.
    pub fn objective_class(&self, suite: &ProblemSuite) -> ObjectiveClass {
        self.class.unwrap_or(match suite.kind() {
            SuiteKind::NonconvexRegularized => ObjectiveClass::SmoothNonconvex,
            SuiteKind::Quadratic if suite.mu() > 0.0 => ObjectiveClass::StronglyConvex,
            SuiteKind::Quadratic => ObjectiveClass::Convex,
        })
    }
}
