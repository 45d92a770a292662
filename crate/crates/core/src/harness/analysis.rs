use std::ops::Range;

use super::{run_experiment_with, seed_average, ExperimentConfig};
use crate::{Error, Result, Trace};

/// Gaps below this count as converged; rate fits stop at the first one.
pub const CONVERGED: f64 = 1e-12;
/// First round of the default rate-fit window.
pub const FIT_START: usize = 10;

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Per-round contraction `exp(slope)` of `log F_t`.
    pub rho: f64,
    /// Mean of `F_t` over the default tail.
    pub plateau: f64,
    pub plateau_stderr: f64,
    pub window: Range<usize>,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plateau {
    pub level: f64,
    pub stderr: f64,
}

/// `[10, first t with F_t < 1e-12)`, clipped to the series.
pub fn default_window(values: &[f64]) -> Range<usize> {
    let end = values.iter().position(|v| *v < CONVERGED).unwrap_or(values.len());
    FIT_START.min(end)..end
}

/// Final 10% of the series (at least one value).
pub fn default_tail(len: usize) -> usize {
    (len / 10).max(1)
}

/// Least-squares fit of `log F_t` against `t` on `window`.
pub fn fit_rate_series(values: &[f64], window: Option<Range<usize>>) -> Result<RateReport> {
    let window = window.unwrap_or_else(|| default_window(values));
    if window.end > values.len() || window.len() < 2 {
        return Err(Error::NotLinearRegime(format!(
            "fit window {window:?} needs at least two of the {} values",
            values.len()
        )));
    }
    if let Some(t) = window.clone().find(|&t| !(values[t] > 0.0)) {
        return Err(Error::NotLinearRegime(format!("F_{t} = {} is not positive", values[t])));
    }
    let pts: Vec<(f64, f64)> = window.clone().map(|t| (t as f64, values[t].ln())).collect();
    let m = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let ym = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|(t, y)| (t - tm) * (y - ym)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - tm) * (t - tm)).sum();
    let slope = sxy / sxx;
    let residual = (pts
        .iter()
        .map(|(t, y)| (y - ym - slope * (t - tm)).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    let p = plateau_series(values, default_tail(values.len()))?;
    Ok(RateReport {
        rho: slope.exp(),
        plateau: p.level,
        plateau_stderr: p.stderr,
        window,
        residual,
    })
}

/// [`fit_rate_series`] on the `f_gap` column.
pub fn fit_linear_rate(trace: &Trace, window: Option<Range<usize>>) -> Result<RateReport> {
    fit_rate_series(&trace.f_gaps(), window)
}

/// Mean and standard error of the last `tail` values.
pub fn plateau_series(values: &[f64], tail: usize) -> Result<Plateau> {
    if tail == 0 || tail > values.len() {
        return Err(Error::Parameter(format!("tail {tail} not in 1..={}", values.len())));
    }
    let xs = &values[values.len() - tail..];
    let m = xs.len() as f64;
    let level = xs.iter().sum::<f64>() / m;
    let stderr = if xs.len() > 1 {
        (xs.iter().map(|v| (v - level).powi(2)).sum::<f64>() / (m - 1.0) / m).sqrt()
    } else {
        0.0
    };
    Ok(Plateau { level, stderr })
}

/// Plateau of `F_t` across seeds: each trace contributes the mean of its
/// last `tail` gaps and the error is the standard error across traces. A
/// single trace falls back to [`plateau_series`].
pub fn seed_plateau(traces: &[&Trace], tail: usize) -> Result<Plateau> {
    match traces {
        [] => Err(Error::Parameter("no traces".into())),
        [one] => detect_plateau(one, tail),
        _ => {
            let levels = traces
                .iter()
                .map(|t| detect_plateau(t, tail).map(|p| p.level))
                .collect::<Result<Vec<f64>>>()?;
            let k = levels.len() as f64;
            let level = levels.iter().sum::<f64>() / k;
            let var = levels.iter().map(|v| (v - level).powi(2)).sum::<f64>() / (k - 1.0);
            Ok(Plateau {
                level,
                stderr: (var / k).sqrt(),
            })
        }
    }
}

/// [`plateau_series`] on the `f_gap` column.
pub fn detect_plateau(trace: &Trace, tail: usize) -> Result<Plateau> {
    plateau_series(&trace.f_gaps(), tail)
}

/// Indices `t ≥ burn_in` where `mean[t+1]` exceeds `mean[t]` by more than
/// two combined standard errors.
pub fn check_monotone(mean: &[f64], stderr: &[f64], burn_in: usize) -> Vec<usize> {
    (burn_in..mean.len().saturating_sub(1))
        .filter(|&t| {
            let slack = 2.0 * (stderr[t].powi(2) + stderr[t + 1].powi(2)).sqrt();
            mean[t + 1] > mean[t] + slack
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingRow {
    pub value: String,
    pub plateau: f64,
    /// Standard error across seeds.
    pub plateau_stderr: f64,
    /// `None` when the seed-averaged gap is not in a linear regime.
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingReport {
    pub axis: String,
    pub rows: Vec<ScalingRow>,
    /// `rows[k+1].plateau / rows[k].plateau`.
    pub ratios: Vec<f64>,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},plateau,plateau_stderr,rho,ratio\n", self.axis);
        for (k, r) in self.rows.iter().enumerate() {
            let rho = r.rho.map(|v| format!("{v:.16e}")).unwrap_or_default();
            let ratio = k
                .checked_sub(1)
                .map(|j| format!("{:.16e}", self.ratios[j]))
                .unwrap_or_default();
            s.push_str(&format!(
                "{},{:.16e},{:.16e},{rho},{ratio}\n",
                r.value, r.plateau, r.plateau_stderr
            ));
        }
        s
    }
}

/// Runs each config (seeds in parallel), averages `F_t` over seeds and
/// tabulates plateau, fitted rate and consecutive plateau ratios along
/// `axis`. All other keys must agree.
pub fn compare_scaling(grid: &[ExperimentConfig], axis: &str) -> Result<ScalingReport> {
    if grid.is_empty() {
        return Err(Error::Config("empty scaling grid".into()));
    }
    let strip = |c: &ExperimentConfig| -> Vec<String> {
        c.to_text()
            .lines()
            .filter(|l| {
                let k = l.split_once('=').map(|(k, _)| k.trim()).unwrap_or("");
                k != axis && k != "run.output"
            })
            .map(String::from)
            .collect()
    };
    let base = strip(&grid[0]);
    for c in &grid[1..] {
        let other = strip(c);
        if other != base {
            let diff = other
                .iter()
                .find(|l| !base.contains(l))
                .or_else(|| base.iter().find(|l| !other.contains(l)));
            return Err(Error::Config(format!(
                "grid configs differ off the `{axis}` axis ({})",
                diff.map(String::as_str).unwrap_or("?")
            )));
        }
    }
    let mut rows = Vec::with_capacity(grid.len());
    for c in grid {
        let mut c = c.clone();
        c.output = None;
        let res = run_experiment_with(&c, &c.load_suite()?)?;
        let traces: Vec<&Trace> = res.traces.iter().map(|(_, t)| t).collect();
        let (mean, _) = seed_average(&traces, |r| r.f_gap);
        let p = seed_plateau(&traces, default_tail(mean.len()))?;
        let rho = fit_rate_series(&mean, None).ok().map(|r| r.rho);
        rows.push(ScalingRow {
            value: c.get(axis).unwrap_or_default(),
            plateau: p.level,
            plateau_stderr: p.stderr,
            rho,
        });
    }
    let ratios = rows.windows(2).map(|w| w[1].plateau / w[0].plateau).collect();
    Ok(ScalingReport {
        axis: axis.to_string(),
        rows,
        ratios,
    })
}
