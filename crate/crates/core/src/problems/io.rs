//! Plain-text suite files.
//!
//! ```text
//! hetsgd-suite 1
//! kind quadratic
//! d 2
//! n 1
//! L 1.0000000000000000e0
//! mu ...
//! sigma ...
//! reg_c ...
//! f_star ...
//! zeta_star_sq ...
//! x_star 2
//! <d values>
//! center 2
//! <d values>
//! node 0
//! c <value>
//! A 2 2
//! <row 0>
//! <row 1>
//! b 2
//! <d values>
//! ```
//!
//! Numbers are written with 17 significant digits so that reading a file back
//! reproduces the suite bit for bit.

use std::fs;
use std::path::Path;

use super::{ProblemSuite, QuadraticNode, SuiteKind};
use crate::error::Error;
use crate::trace::fmt17;
use crate::{Matrix, Result, Vector};

const MAGIC: &str = "hetsgd-suite 1";

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(fmt17).collect::<Vec<_>>().join(" ")
}

pub fn suite_to_text(s: &ProblemSuite) -> String {
    let mut out = String::new();
    let mut line = |l: String| {
        out.push_str(&l);
        out.push('\n');
    };
    line(MAGIC.to_string());
    line(format!("kind {}", s.kind().name()));
    line(format!("d {}", s.d()));
    line(format!("n {}", s.n()));
    for (k, v) in [
        ("L", s.l()),
        ("mu", s.mu()),
        ("sigma", s.sigma()),
        ("reg_c", s.reg_c()),
        ("f_star", s.f_star()),
        ("zeta_star_sq", s.zeta_star_sq()),
    ] {
        line(format!("{k} {}", fmt17(v)));
    }
    line(format!("x_star {}", s.d()));
    line(join(s.x_star().iter().copied()));
    line(format!("center {}", s.d()));
    line(join(s.center().iter().copied()));
    for (i, node) in s.nodes().iter().enumerate() {
        line(format!("node {i}"));
        line(format!("c {}", fmt17(node.c)));
        line(format!("A {} {}", s.d(), s.d()));
        for r in 0..s.d() {
            line(join(node.a.row(r).iter().copied()));
        }
        line(format!("b {}", s.d()));
        line(join(node.b.iter().copied()));
    }
    out
}

pub fn write_suite(s: &ProblemSuite, path: &Path) -> Result<()> {
    fs::write(path, suite_to_text(s))?;
    Ok(())
}

pub fn read_suite(path: &Path) -> Result<ProblemSuite> {
    let text = fs::read_to_string(path)?;
    suite_from_text(&text, &path.display().to_string())
}

struct Lines<'a> {
    name: &'a str,
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(format!("{}:{}", self.name, self.last), msg)
    }

    fn next(&mut self) -> Result<&'a str> {
        loop {
            match self.inner.next() {
                Some((i, l)) => {
                    self.last = i + 1;
                    let l = l.trim();
                    if !l.is_empty() && !l.starts_with('#') {
                        return Ok(l);
                    }
                }
                None => return Err(self.err("unexpected end of file")),
            }
        }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        match l.split_once(' ') {
            Some((k, rest)) if k == key => Ok(rest.trim()),
            _ if l == key => Ok(""),
            _ => Err(self.err(format!("expected `{key}`, found `{l}`"))),
        }
    }

    fn number<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("`{s}` is not a valid number")))
    }

    fn scalar(&mut self, key: &str) -> Result<f64> {
        let v = self.keyed(key)?;
        self.number(v)
    }

    fn row(&mut self, len: usize) -> Result<Vec<f64>> {
        let l = self.next()?;
        let vals = l
            .split_whitespace()
            .map(|t| self.number::<f64>(t))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() != len {
            return Err(self.err(format!("expected {len} values, found {}", vals.len())));
        }
        Ok(vals)
    }

    fn vector(&mut self, key: &str, d: usize) -> Result<Vector> {
        let len: usize = {
            let v = self.keyed(key)?;
            self.number(v)?
        };
        if len != d {
            return Err(self.err(format!("`{key}` has length {len}, expected {d}")));
        }
        Ok(Vector::from_vec(self.row(d)?))
    }
}

pub fn suite_from_text(text: &str, name: &str) -> Result<ProblemSuite> {
    let mut p = Lines {
        name,
        inner: text.lines().enumerate(),
        last: 0,
    };
    if p.next()? != MAGIC {
        return Err(p.err(format!("missing header `{MAGIC}`")));
    }
    let kind = match p.keyed("kind")? {
        "quadratic" => SuiteKind::Quadratic,
        "nonconvex-regularized" => SuiteKind::NonconvexRegularized,
        other => return Err(p.err(format!("unknown suite kind `{other}`"))),
    };
    let d: usize = {
        let v = p.keyed("d")?;
        p.number(v)?
    };
    let n: usize = {
        let v = p.keyed("n")?;
        p.number(v)?
    };
    if d == 0 || n == 0 {
        return Err(p.err("d and n must be positive"));
    }
    let l = p.scalar("L")?;
    let mu = p.scalar("mu")?;
    let sigma = p.scalar("sigma")?;
    let reg_c = p.scalar("reg_c")?;
    let f_star = p.scalar("f_star")?;
    let zeta_star_sq = p.scalar("zeta_star_sq")?;
    let x_star = p.vector("x_star", d)?;
    let center = p.vector("center", d)?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let idx: usize = {
            let v = p.keyed("node")?;
            p.number(v)?
        };
        if idx != i {
            return Err(p.err(format!("expected node {i}, found node {idx}")));
        }
        let c = p.scalar("c")?;
        let shape = p.keyed("A")?;
        if shape.split_whitespace().collect::<Vec<_>>() != [d.to_string(), d.to_string()] {
            return Err(p.err(format!("matrix shape `{shape}` is not {d} {d}")));
        }
        let mut a = Matrix::zeros(d, d);
        for r in 0..d {
            for (col, v) in p.row(d)?.into_iter().enumerate() {
                a[(r, col)] = v;
            }
        }
        let b = p.vector("b", d)?;
        nodes.push(QuadraticNode { a, b, c });
    }
    if !(sigma >= 0.0) || !(l > 0.0) || !(mu >= 0.0) {
        return Err(p.err("constants must satisfy L > 0, mu >= 0, sigma >= 0"));
    }
    let mut suite = ProblemSuite::assemble(nodes, l, mu, sigma, kind, reg_c, center)?;
    suite.restore(x_star, f_star, zeta_star_sq);
    Ok(suite)
}
