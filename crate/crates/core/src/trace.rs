use std::io::Write;

/// Metrics recorded after round `t` (row `t` describes `x_t`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub t: usize,
    /// `f(x_t) − f*`.
    pub f_gap: f64,
    /// `‖∇f(x_t)‖²`.
    pub grad_norm_sq: f64,
    /// `‖x̃_t − x*‖²`.
    pub x_dist_sq: f64,
    /// `(1/n) Σ ‖e_t^i‖²`.
    pub err_sq_mean: f64,
    /// `(1/n) Σ ‖h_t^i − ∇f_i(x*)‖²`.
    pub h_dist_sq_mean: f64,
    /// Method-specific Lyapunov value `Ψ_t`.
    pub lyapunov: f64,
    /// Estimated bits per worker message (heuristic, not an encoding).
    pub msg_size_estimate: f64,
}

impl TraceRow {
    pub const HEADER: &'static str =
        "t,f_gap,grad_norm_sq,x_dist_sq,err_sq_mean,h_dist_sq_mean,lyapunov,msg_size_estimate";

    fn fields(&self) -> [f64; 7] {
        [
            self.f_gap,
            self.grad_norm_sq,
            self.x_dist_sq,
            self.err_sq_mean,
            self.h_dist_sq_mean,
            self.lyapunov,
            self.msg_size_estimate,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.fields().iter().all(|v| v.is_finite())
    }
}

/// Formats with 17 significant digits, which round-trips every `f64`.
pub(crate) fn fmt17(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{v}");
    }
    format!("{v:.16e}")
}

/// Per-round metric record of one run, rows `0..=T`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn push(&mut self, row: TraceRow) {
        self.rows.push(row);
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn f_gaps(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.f_gap).collect()
    }

    pub fn column(&self, f: impl Fn(&TraceRow) -> f64) -> Vec<f64> {
        self.rows.iter().map(f).collect()
    }

    /// Writes the CSV header and one line per row. With `seed` set, a leading
    /// `seed` column is added.
    pub fn write_csv<W: Write>(&self, out: &mut W, seed: Option<u64>, header: bool) -> std::io::Result<()> {
        if header {
            match seed {
                Some(_) => writeln!(out, "seed,{}", TraceRow::HEADER)?,
                None => writeln!(out, "{}", TraceRow::HEADER)?,
            }
        }
        for r in &self.rows {
            if let Some(s) = seed {
                write!(out, "{s},")?;
            }
            write!(out, "{}", r.t)?;
            for v in r.fields() {
                write!(out, ",{}", fmt17(v))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, None, true)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: usize, f: f64) -> TraceRow {
        TraceRow {
            t,
            f_gap: f,
            grad_norm_sq: 0.0,
            x_dist_sq: 1.0 / 3.0,
            err_sq_mean: 0.0,
            h_dist_sq_mean: 0.0,
            lyapunov: 0.1,
            msg_size_estimate: 128.0,
        }
    }

    #[test]
    fn csv_round_trips_values() {
        let mut tr = Trace::default();
        tr.push(row(0, 0.1 + 0.2));
        tr.push(row(1, 1e-300));
        let s = tr.to_csv_string();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], TraceRow::HEADER);
        let f: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(f.to_bits(), (0.1f64 + 0.2).to_bits());
        let x: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
        assert_eq!(x.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn seed_column() {
        let mut tr = Trace::default();
        tr.push(row(0, 1.0));
        let mut buf = Vec::new();
        tr.write_csv(&mut buf, Some(7), true).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("seed,t,f_gap"));
        assert!(s.lines().nth(1).unwrap().starts_with("7,0,"));
    }
}
