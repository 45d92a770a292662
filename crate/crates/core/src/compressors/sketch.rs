use rand::seq::index;
use rand_distr::{Distribution, StandardNormal};

use crate::{Error, Matrix, Result, RngStream, Vector};

/// Columns whose pivoted-QR diagonal falls below this fraction of the
/// leading one are treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-8;

/// How random sketch bases are drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SketchMode {
    /// `p` distinct unit vectors, sampled without replacement.
    Coordinate,
    /// A Gaussian `d × p` matrix, orthonormalised.
    Gaussian,
}

/// A sketching matrix `V ∈ R^{d×p}` of full column rank together with its
/// orthogonal projector `V(VᵀV)⁻¹Vᵀ`.
#[derive(Clone, Debug, PartialEq)]
pub struct SketchBasis {
    v: Matrix,
    projector: Matrix,
}

impl SketchBasis {
    /// Validates `v` and precomputes its projector.
    pub fn new(v: Matrix) -> Result<Self> {
        let (d, p) = v.shape();
        if p == 0 || p > d {
            return Err(Error::Parameter(format!(
                "sketch basis must be d x p with 1 <= p <= d, got {d} x {p}"
            )));
        }
        let r = v.clone().col_piv_qr().r();
        let lead = r[(0, 0)].abs();
        let deficient = !(lead > 0.0) || (1..p).any(|i| !(r[(i, i)].abs() > RANK_TOLERANCE * lead));
        if deficient {
            return Err(Error::Parameter(format!(
                "sketch basis of shape {d} x {p} is rank deficient"
            )));
        }
        let q = v.clone().qr().q();
        let projector = &q * q.transpose();
        let basis = Self { v, projector };
        let err = basis.projector_defect();
        if err > 1e-10 {
            return Err(Error::Parameter(format!(
                "projector is not symmetric idempotent (defect {err:.3e})"
            )));
        }
        Ok(basis)
    }

    /// Basis made of the unit vectors `e_j`, `j ∈ indices`. The projector is
    /// the exact 0/1 diagonal mask.
    pub fn coordinate(d: usize, indices: &[usize]) -> Result<Self> {
        let p = indices.len();
        if p == 0 || p > d || indices.iter().any(|&j| j >= d) {
            return Err(Error::Parameter(format!(
                "invalid coordinate indices {indices:?} for d = {d}"
            )));
        }
        let mut v = Matrix::zeros(d, p);
        let mut projector = Matrix::zeros(d, d);
        for (c, &j) in indices.iter().enumerate() {
            if projector[(j, j)] != 0.0 {
                return Err(Error::Parameter(format!(
                    "repeated coordinate {j}: basis is rank deficient"
                )));
            }
            v[(j, c)] = 1.0;
            projector[(j, j)] = 1.0;
        }
        Ok(Self { v, projector })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            v: Matrix::identity(d, d),
            projector: Matrix::identity(d, d),
        }
    }

    /// Draws a random basis from `stream`.
    pub fn random(d: usize, p: usize, mode: SketchMode, stream: &RngStream) -> Self {
        let mut rng = stream.rng();
        match mode {
            SketchMode::Coordinate => {
                let mut idx = index::sample(&mut rng, d, p.min(d)).into_vec();
                idx.sort_unstable();
                Self::coordinate(d, &idx).expect("sampled indices are distinct")
            }
            SketchMode::Gaussian => {
                let g = Matrix::from_fn(d, p, |_, _| StandardNormal.sample(&mut rng));
                let q = g.qr().q();
                let projector = &q * q.transpose();
                Self { v: q, projector }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    pub fn basis(&self) -> &Matrix {
        &self.v
    }

    pub fn projector(&self) -> &Matrix {
        &self.projector
    }

    pub fn project(&self, x: &Vector) -> Vector {
        &self.projector * x
    }

    /// max(‖P − Pᵀ‖, ‖P² − P‖) relative to ‖P‖ (Frobenius).
    pub fn projector_defect(&self) -> f64 {
        let p = &self.projector;
        let scale = p.norm().max(f64::MIN_POSITIVE);
        let asym = (p - p.transpose()).norm();
        let idem = (p * p - p).norm();
        asym.max(idem) / scale
    }
}

/// Orthogonal projection of `x` onto the span of the basis.
pub fn sketch(x: &Vector, basis: &SketchBasis) -> Result<Vector> {
    if x.len() != basis.dim() {
        return Err(Error::Parameter(format!(
            "vector of length {} does not match sketch dimension {}",
            x.len(),
            basis.dim()
        )));
    }
    Ok(basis.project(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Purpose;
    use proptest::prelude::*;

    #[test]
    fn unit_vector_sketch() {
        let v = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        let b = SketchBasis::new(v).unwrap();
        let x = Vector::from_column_slice(&[5.0, 2.0, -1.0]);
        let y = sketch(&x, &b).unwrap();
        assert!((y - Vector::from_column_slice(&[5.0, 0.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn full_basis_is_identity() {
        let x = Vector::from_column_slice(&[1.5, -2.0, 0.25, 9.0]);
        assert_eq!(sketch(&x, &SketchBasis::identity(4)).unwrap(), x);
        assert_eq!(
            sketch(&x, &SketchBasis::coordinate(4, &[0, 1, 2, 3]).unwrap()).unwrap(),
            x
        );
        // A non-orthogonal full-rank basis spans everything too.
        let v = Matrix::from_row_slice(
            4,
            4,
            &[
                1.0, 2.0, 0.0, 0.0, //
                0.0, 1.0, 3.0, 0.0, //
                0.0, 0.0, 1.0, 4.0, //
                1.0, 0.0, 0.0, 1.0,
            ],
        );
        let y = sketch(&x, &SketchBasis::new(v).unwrap()).unwrap();
        assert!((y - &x).norm() < 1e-12 * x.norm());
    }

    #[test]
    fn rank_deficient_rejected() {
        let v = Matrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        assert!(matches!(SketchBasis::new(v), Err(Error::Parameter(_))));
        assert!(SketchBasis::new(Matrix::zeros(3, 1)).is_err());
        assert!(SketchBasis::new(Matrix::identity(2, 3)).is_err());
        assert!(SketchBasis::coordinate(3, &[1, 1]).is_err());
    }

    #[test]
    fn random_bases_are_projectors() {
        for round in 0..20 {
            let s = RngStream::synchronized(5, round, Purpose::Compressor);
            for mode in [SketchMode::Coordinate, SketchMode::Gaussian] {
                let b = SketchBasis::random(10, 3, mode, &s);
                assert_eq!(b.rank(), 3);
                assert!(b.projector_defect() < 1e-10);
                assert!((b.projector().trace() - 3.0).abs() < 1e-12);
            }
        }
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_linear(
            vs in prop::collection::vec(-1.0f64..1.0, 12),
            xs in prop::collection::vec(-5.0f64..5.0, 6),
            ys in prop::collection::vec(-5.0f64..5.0, 6),
            a in -2.0f64..2.0, b in -2.0f64..2.0,
        ) {
            let v = Matrix::from_column_slice(6, 2, &vs);
            prop_assume!(SketchBasis::new(v.clone()).is_ok());
            let basis = SketchBasis::new(v).unwrap();
            let (x, y) = (Vector::from_vec(xs), Vector::from_vec(ys));
            let px = sketch(&x, &basis).unwrap();
            let ppx = sketch(&px, &basis).unwrap();
            prop_assert!((&ppx - &px).norm() <= 1e-10 * (1.0 + px.norm()));
            let lhs = sketch(&(&x * a + &y * b), &basis).unwrap();
            let rhs = &px * a + sketch(&y, &basis).unwrap() * b;
            prop_assert!((lhs - &rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        }
    }
}
