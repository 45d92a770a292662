use rand::Rng;

use super::Trajectory;
use crate::{Error, Purpose, Result, RngStream, Vector};

/// Sampling law of the output iterate among `x_0 … x_{T−1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weighting {
    /// `w_t ∝ (1 − c)^{−t}`, `c ∈ (0, 1)`.
    StronglyConvex(f64),
    Uniform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSelection {
    /// Index of the sampled iterate.
    pub index: usize,
    pub x: Vector,
    /// Normalised weights of `x_0 … x_{T−1}`.
    pub weights: Vec<f64>,
    /// `Σ w_t x_t`.
    pub average: Vector,
}

/// Normalised output weights over `count` candidates.
pub fn output_weights(count: usize, weighting: Weighting) -> Result<Vec<f64>> {
    if count == 0 {
        return Err(Error::Parameter("no candidate iterates".into()));
    }
    let logs: Vec<f64> = match weighting {
        Weighting::Uniform => vec![0.0; count],
        Weighting::StronglyConvex(c) => {
            if !(c > 0.0 && c < 1.0) {
                return Err(Error::Parameter(format!("contraction c must lie in (0, 1), got {c}")));
            }
            let step = -(-c).ln_1p();
            (0..count).map(|t| step * t as f64).collect()
        }
    };
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let raw: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Streaming form of [`select_output`]: feed `x_0, x_1, …` through
/// [`observe`](Self::observe) and collect the selection with
/// [`finish`](Self::finish), without keeping the whole trajectory.
#[derive(Clone, Debug)]
pub struct OutputTracker {
    weights: Vec<f64>,
    index: usize,
    seen: usize,
    x: Option<Vector>,
    average: Option<Vector>,
}

impl OutputTracker {
    /// Draws the output index among `count` candidates using `(seed, Selection)`.
    pub fn new(count: usize, weighting: Weighting, seed: u64) -> Result<Self> {
        let weights = output_weights(count, weighting)?;
        let u: f64 = RngStream::synchronized(seed, 0, Purpose::Selection).rng().random();
        let mut acc = 0.0;
        let mut index = count - 1;
        for (t, w) in weights.iter().enumerate() {
            acc += w;
            if u < acc {
                index = t;
                break;
            }
        }
        Ok(Self {
            weights,
            index,
            seen: 0,
            x: None,
            average: None,
        })
    }

    /// Index of the drawn output.
    pub fn index(&self) -> usize {
        self.index
    }

    /// Offers the next iterate; iterates past the last candidate are ignored.
    pub fn observe(&mut self, x: &Vector) {
        let t = self.seen;
        if t >= self.weights.len() {
            return;
        }
        let avg = self.average.get_or_insert_with(|| Vector::zeros(x.len()));
        *avg += x * self.weights[t];
        if t == self.index {
            self.x = Some(x.clone());
        }
        self.seen += 1;
    }

    pub fn finish(self) -> Result<OutputSelection> {
        if self.seen < self.weights.len() {
            return Err(Error::Parameter(format!(
                "saw {} of {} candidate iterates",
                self.seen,
                self.weights.len()
            )));
        }
        Ok(OutputSelection {
            index: self.index,
            x: self.x.expect("index < count"),
            weights: self.weights,
            average: self.average.expect("count > 0"),
        })
    }
}

/// Number of output candidates for a `rounds`-round run: `x_0 … x_{T−1}`,
/// or just `x_0` when `T = 0`.
pub fn candidate_count(rounds: usize) -> usize {
    rounds.max(1)
}

/// Draws `x_out` from `x_0 … x_{T−1}` (just `x_0` when `T ≤ 1`) using
/// `(seed, Selection)` and also returns the weighted average.
pub fn select_output(traj: &Trajectory, weighting: Weighting, seed: u64) -> Result<OutputSelection> {
    if traj.iterates.is_empty() {
        return Err(Error::Parameter("no candidate iterates".into()));
    }
    let mut tracker = OutputTracker::new(candidate_count(traj.iterates.len() - 1), weighting, seed)?;
    for x in &traj.iterates {
        tracker.observe(x);
    }
    tracker.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{RunState, Trace};

    fn traj(t: usize) -> Trajectory {
        Trajectory {
            iterates: (0..=t).map(|k| Vector::from_element(2, k as f64)).collect(),
            trace: Trace::default(),
            final_state: RunState::initial(Vector::zeros(2), 1),
        }
    }

    #[test]
    fn single_candidate() {
        for seed in 0..10 {
            let out = select_output(&traj(1), Weighting::StronglyConvex(0.5), seed).unwrap();
            assert_eq!(out.index, 0);
            assert_eq!(out.weights, vec![1.0]);
        }
    }

    #[test]
    fn half_contraction_weights() {
        let w = output_weights(3, Weighting::StronglyConvex(0.5)).unwrap();
        for (a, b) in w.iter().zip([1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0]) {
            assert!((a - b).abs() < 1e-15);
        }
        let out = select_output(&traj(3), Weighting::StronglyConvex(0.5), 1).unwrap();
        let expect = (0.0 * 1.0 + 1.0 * 2.0 + 2.0 * 4.0) / 7.0;
        assert!((out.average[0] - expect).abs() < 1e-14);
    }

    #[test]
    fn small_c_is_nearly_uniform() {
        let w = output_weights(50, Weighting::StronglyConvex(1e-12)).unwrap();
        assert!(w.iter().all(|v| (v - 0.02).abs() < 1e-12));
        assert_eq!(output_weights(4, Weighting::Uniform).unwrap(), vec![0.25; 4]);
    }

    #[test]
    fn c_out_of_range() {
        for c in [0.0, 1.0, -0.1, 2.0, f64::NAN] {
            assert!(output_weights(3, Weighting::StronglyConvex(c)).is_err());
        }
    }

    #[test]
    fn tracker_matches_batch() {
        let tr = traj(40);
        for seed in 0..20 {
            let batch = select_output(&tr, Weighting::StronglyConvex(0.05), seed).unwrap();
            let mut tracker = OutputTracker::new(40, Weighting::StronglyConvex(0.05), seed).unwrap();
            for x in &tr.iterates[..30] {
                tracker.observe(x);
            }
            let early = tracker.clone().finish();
            assert!(early.is_err());
            for x in &tr.iterates[30..] {
                tracker.observe(x);
            }
            assert_eq!(tracker.finish().unwrap(), batch);
        }
    }

    #[test]
    fn sampling_frequencies_follow_weights() {
        let tr = traj(3);
        let mut counts = [0usize; 3];
        let n = 20_000;
        for seed in 0..n {
            counts[select_output(&tr, Weighting::StronglyConvex(0.5), seed).unwrap().index] += 1;
        }
        for (k, p) in [1.0 / 7.0, 2.0 / 7.0, 4.0 / 7.0].iter().enumerate() {
            let f = counts[k] as f64 / n as f64;
            assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt(), "{k}: {f}");
        }
    }
}
