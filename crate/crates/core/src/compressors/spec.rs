use std::fmt;
use std::str::FromStr;

use super::SketchMode;
use crate::Error;

/// Dimension-free description of a compressor, as written in configs and on
/// the command line: `identity`, `topk:8`, `randk:4`, `randk-unbiased:4`,
/// `sketch:coord:16`, `sketch:gauss:16`, `rescaled(randk-unbiased:4)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompressorSpec {
    Identity,
    TopK(usize),
    RandK(usize),
    RandKUnbiased(usize),
    Sketch(SketchMode, usize),
    Rescaled(Box<CompressorSpec>),
}

fn count(s: &str, whole: &str) -> Result<usize, Error> {
    s.trim()
        .parse::<usize>()
        .map_err(|_| Error::parse(format!("compressor `{whole}`"), format!("`{s}` is not a count")))
}

impl FromStr for CompressorSpec {
    type Err = Error;

    fn from_str(raw: &str) -> Result<Self, Error> {
        let s = raw.trim();
        if let Some(inner) = s.strip_prefix("rescaled(").and_then(|r| r.strip_suffix(')')) {
            return Ok(CompressorSpec::Rescaled(Box::new(inner.parse()?)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["identity"] | ["id"] => Ok(CompressorSpec::Identity),
            ["topk", k] => Ok(CompressorSpec::TopK(count(k, s)?)),
            ["randk", k] | ["randk-biased", k] => Ok(CompressorSpec::RandK(count(k, s)?)),
            ["randk-unbiased", k] => Ok(CompressorSpec::RandKUnbiased(count(k, s)?)),
            ["sketch", mode, p] => {
                let mode = match *mode {
                    "coord" => SketchMode::Coordinate,
                    "gauss" => SketchMode::Gaussian,
                    other => {
                        return Err(Error::parse(
                            format!("compressor `{s}`"),
                            format!("unknown sketch mode `{other}` (expected coord or gauss)"),
                        ))
                    }
                };
                Ok(CompressorSpec::Sketch(mode, count(p, s)?))
            }
            _ => Err(Error::parse(
                format!("compressor `{s}`"),
                "expected identity, topk:K, randk:K, randk-unbiased:K, sketch:coord|gauss:P or rescaled(...)",
            )),
        }
    }
}

impl fmt::Display for CompressorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CompressorSpec::Identity => write!(f, "identity"),
            CompressorSpec::TopK(k) => write!(f, "topk:{k}"),
            CompressorSpec::RandK(k) => write!(f, "randk:{k}"),
            CompressorSpec::RandKUnbiased(k) => write!(f, "randk-unbiased:{k}"),
            CompressorSpec::Sketch(SketchMode::Coordinate, p) => write!(f, "sketch:coord:{p}"),
            CompressorSpec::Sketch(SketchMode::Gaussian, p) => write!(f, "sketch:gauss:{p}"),
            CompressorSpec::Rescaled(inner) => write!(f, "rescaled({inner})"),
        }
    }
}
