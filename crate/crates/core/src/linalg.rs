//! Dense complex linear algebra shared by the finite-dimensional engines.
//!
//! Matrices live on the qubit ⊗ bath space with the qubit as the outer (block)
//! index: row `q * d + b` for qubit state `q` and bath state `b`.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::Pauli;

pub type CMatrix = DMatrix<Complex64>;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenphases closer than this to +/-pi are rejected by [`unitary_generator`].
pub const BRANCH_CUT_MARGIN: f64 = 1e-6;

/// Eigendecomposition of a Hermitian matrix, cached so that `exp(-iHt)` can be
/// evaluated for many `t` at the cost of two matrix products each.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: DVector<f64>,
    pub vectors: CMatrix,
}

impl HermitianEigen {
    pub fn new(h: &CMatrix) -> Result<Self> {
        if !h.is_square() {
            return Err(Error::InvalidArgument(format!(
                "expected a square matrix, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        let herm = hermitian_part(h);
        let eig = SymmetricEigen::try_new(herm, EIGEN_EPS, EIGEN_MAX_ITER)
            .ok_or_else(|| Error::Numeric("Hermitian eigendecomposition did not converge".into()))?;
        Ok(Self {
            values: eig.eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    /// `exp(-i H t)`.
    pub fn propagator(&self, t: f64) -> CMatrix {
        let phases = self.values.map(|l| Complex64::from_polar(1.0, -l * t));
        self.apply_diagonal(&phases)
    }

    /// `V diag(f) V^dagger`.
    pub fn apply_diagonal(&self, diag: &DVector<Complex64>) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= diag[j];
        }
        scaled * self.vectors.adjoint()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, l| acc.max(l.abs()))
    }
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn hermiticity_residual(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
pub fn hermitian_norm(m: &CMatrix) -> Result<f64> {
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    Ok(HermitianEigen::new(m)?.spectral_norm())
}

/// `‖U^dagger U - I‖_F`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    (u.adjoint() * u - CMatrix::identity(u.nrows(), u.ncols())).norm()
}

pub fn kron(a: &Matrix2<Complex64>, b: &CMatrix) -> CMatrix {
    let d = b.nrows();
    let mut out = CMatrix::zeros(2 * d, 2 * b.ncols());
    for i in 0..2 {
        for j in 0..2 {
            out.view_mut((i * d, j * b.ncols()), (d, b.ncols()))
                .copy_from(&(b * a[(i, j)]));
        }
    }
    out
}

/// `(σ ⊗ I) · U` for a qubit ⊗ bath matrix, without forming the Kronecker product.
pub fn pauli_left(p: Pauli, u: &CMatrix) -> CMatrix {
    let d = u.nrows() / 2;
    let top = u.rows(0, d).into_owned();
    let bottom = u.rows(d, d).into_owned();
    let mut out = u.clone();
    let i = Complex64::new(0.0, 1.0);
    match p {
        Pauli::I => {}
        Pauli::X => {
            out.rows_mut(0, d).copy_from(&bottom);
            out.rows_mut(d, d).copy_from(&top);
        }
        Pauli::Y => {
            out.rows_mut(0, d).copy_from(&(bottom * -i));
            out.rows_mut(d, d).copy_from(&(top * i));
        }
        Pauli::Z => {
            out.rows_mut(d, d).copy_from(&(-bottom));
        }
    }
    out
}

/// `(A ⊗ I) · U` for a general qubit operator `A`.
pub fn qubit_left(a: &Matrix2<Complex64>, u: &CMatrix) -> CMatrix {
    let d = u.nrows() / 2;
    let top = u.rows(0, d);
    let bottom = u.rows(d, d);
    let mut out = CMatrix::zeros(u.nrows(), u.ncols());
    out.rows_mut(0, d)
        .copy_from(&(top * a[(0, 0)] + bottom * a[(0, 1)]));
    out.rows_mut(d, d)
        .copy_from(&(top * a[(1, 0)] + bottom * a[(1, 1)]));
    out
}

/// Hermitian generator `Φ` with `U = exp(-iΦ)` and spectrum in `(-π, π)`.
///
/// Uses the Cayley transform `K = i (I - U)(I + U)^{-1}`, which is Hermitian
/// with eigenvalues `-tan(φ/2)`, so only a Hermitian eigensolver is needed.
pub fn unitary_generator(u: &CMatrix) -> Result<CMatrix> {
    let n = u.nrows();
    let eye = CMatrix::identity(n, n);
    let i = Complex64::new(0.0, 1.0);
    // (I - U) and (I + U)^{-1} commute, so the product order is immaterial.
    let k = (&eye + u)
        .try_inverse()
        .map(|inv| (&eye - u) * i * inv)
        .ok_or(Error::BranchCut {
            phase: std::f64::consts::PI,
            margin: BRANCH_CUT_MARGIN,
        })?;
    let eig = HermitianEigen::new(&k)?;
    let mut phases = DVector::<Complex64>::zeros(n);
    for (j, &k) in eig.values.iter().enumerate() {
        let phi = -2.0 * k.atan();
        if std::f64::consts::PI - phi.abs() < BRANCH_CUT_MARGIN {
            return Err(Error::BranchCut {
                phase: phi,
                margin: BRANCH_CUT_MARGIN,
            });
        }
        phases[j] = Complex64::new(phi, 0.0);
    }
    Ok(eig.apply_diagonal(&phases))
}
