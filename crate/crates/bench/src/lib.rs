//! Fixtures shared by the benchmarks.

use hetsgd::problems::gen_quadratic_suite;
use hetsgd::{AlgoConfig, Algorithm, CompressorOp, ProblemSuite, SketchMode, Vector};

/// Heterogeneous quadratic suite of the given size with unit noise.
pub fn suite(d: usize, n: usize) -> ProblemSuite {
    gen_quadratic_suite(d, n, 1.0, 10.0, 1.0, 1.0, 42).expect("valid generator parameters")
}

/// A config for `a` on dimension `d` with `k`-sparse operators and a small
/// stable stepsize.
pub fn config(a: Algorithm, d: usize, k: usize, rounds: usize) -> AlgoConfig {
    let compressor = if a.is_synchronized() {
        CompressorOp::random_sketch(d, SketchMode::Coordinate, k)
    } else {
        CompressorOp::top_k(d, k)
    }
    .expect("k <= d");
    let quantizer = CompressorOp::rand_k_unbiased(d, k).expect("k <= d");
    let alpha = if a.uses_shifts() {
        1.0 / (1.0 + quantizer.omega().unwrap_or(0.0))
    } else {
        0.0
    };
    AlgoConfig::new(a, d, 1e-3, rounds, 7)
        .with_compressor(compressor)
        .with_quantizer(quantizer)
        .with_alpha(alpha)
        .with_x0(Vector::from_element(d, 1.0))
}

/// Every operator family at sparsity `k` on dimension `d`.
pub fn operators(d: usize, k: usize) -> Vec<(&'static str, CompressorOp)> {
    vec![
        ("identity", CompressorOp::identity(d)),
        ("topk", CompressorOp::top_k(d, k).expect("k <= d")),
        ("randk", CompressorOp::rand_k_biased(d, k).expect("k <= d")),
        ("randk-unbiased", CompressorOp::rand_k_unbiased(d, k).expect("k <= d")),
        (
            "sketch-coord",
            CompressorOp::random_sketch(d, SketchMode::Coordinate, k).expect("k <= d"),
        ),
        (
            "sketch-gauss",
            CompressorOp::random_sketch(d, SketchMode::Gaussian, k).expect("k <= d"),
        ),
    ]
}
