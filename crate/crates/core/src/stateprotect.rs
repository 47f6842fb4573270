//! Protection of an arbitrary state `|ψ⟩` by `P_ψ = 2|ψ⟩⟨ψ| − I` pulses at UDD times.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::format::sig17;
use crate::linalg::{hermitian_norm, hermitian_part, hermiticity_residual, CMatrix, HermitianEigen};
use crate::sequences::udd_fraction;

const TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ProtectedSystem {
    h: CMatrix,
    psi: DVector<Complex64>,
    eig: HermitianEigen,
}

fn check_unit(psi: &DVector<Complex64>) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > TOLERANCE {
        return Err(invalid(format!("state must be normalized, ‖ψ‖ = {norm}")));
    }
    Ok(())
}

impl ProtectedSystem {
    pub fn new(h: CMatrix, psi: DVector<Complex64>) -> Result<Self> {
        if !h.is_square() || h.nrows() != psi.len() || psi.is_empty() {
            return Err(invalid(format!(
                "H is {}x{} but ψ has {} components",
                h.nrows(),
                h.ncols(),
                psi.len()
            )));
        }
        check_unit(&psi)?;
        let res = hermiticity_residual(&h);
        if res > TOLERANCE * h.norm().max(1.0) {
            return Err(invalid(format!("H is not Hermitian (residual {res:e})")));
        }
        let eig = HermitianEigen::new(&h)?;
        Ok(Self { h, psi, eig })
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.h
    }

    pub fn psi(&self) -> &DVector<Complex64> {
        &self.psi
    }

    pub fn free_propagator(&self, t: f64) -> CMatrix {
        self.eig.propagator(t)
    }
}

/// GUE-style `H` with spectral norm `norm` and a Gaussian random `ψ`.
pub fn random_protected_system(dim: usize, norm: f64, seed: u64) -> Result<ProtectedSystem> {
    if dim < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {dim}")));
    }
    if !(norm.is_finite() && norm > 0.0) {
        return Err(invalid(format!("norm must be positive, got {norm}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut normal =
        || -> Complex64 { Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)) };
    let g = CMatrix::from_fn(dim, dim, |_, _| normal());
    let h = hermitian_part(&g);
    let h = hermitian_part(&(&h * Complex64::new(norm / hermitian_norm(&h)?, 0.0)));
    let psi = DVector::from_fn(dim, |_, _| normal());
    let psi = psi.normalize();
    ProtectedSystem::new(h, psi)
}

/// `P_ψ = 2|ψ⟩⟨ψ| − I`.
pub fn projector_pulse(psi: &DVector<Complex64>) -> Result<CMatrix> {
    check_unit(psi)?;
    let n = psi.len();
    Ok(psi * psi.adjoint() * Complex64::new(2.0, 0.0) - CMatrix::identity(n, n))
}

/// `U_0(T − T_N) P U_0(T_N − T_{N−1}) ⋯ P U_0(T_1)` at UDD-N times, preceded on the left by
/// one more `P` when N is odd. `N = 0` is free evolution.
pub fn protected_propagator(sys: &ProtectedSystem, n: usize, t: f64) -> Result<CMatrix> {
    protected_propagator_with(sys, n, t, n % 2 == 1)
}

/// As [`protected_propagator`] with explicit control over the trailing `P`.
pub fn protected_propagator_with(
    sys: &ProtectedSystem,
    n: usize,
    t: f64,
    final_pulse: bool,
) -> Result<CMatrix> {
    if !t.is_finite() || t < 0.0 {
        return Err(invalid(format!(
            "total time must be finite and non-negative, got {t}"
        )));
    }
    let p = projector_pulse(&sys.psi)?;
    let mut times = vec![0.0];
    times.extend((1..=n).map(|j| t * udd_fraction(j, n)));
    times.push(t);
    let mut u = sys.free_propagator(times[1] - times[0]);
    for w in times[1..].windows(2) {
        u = sys.free_propagator(w[1] - w[0]) * &p * u;
    }
    if final_pulse {
        u = &p * u;
    }
    Ok(u)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtectionError {
    /// `‖P_ψ U − U P_ψ‖_F`.
    pub commutator: f64,
    /// `1 − |⟨ψ|U|ψ⟩|²`, evaluated as `‖(I − |ψ⟩⟨ψ|) U ψ‖²`.
    pub leakage: f64,
}

impl ProtectionError {
    /// `|⟨ψ|U† P_ψ U|ψ⟩ − 1|`, which equals twice the leakage.
    pub fn expectation_deficit(&self) -> f64 {
        2.0 * self.leakage
    }

    pub fn csv_header() -> &'static str {
        "T,commutator_error,leakage"
    }

    pub fn csv_row(&self, t: f64) -> String {
        format!("{},{},{}", sig17(t), sig17(self.commutator), sig17(self.leakage))
    }
}

pub fn protection_error(sys: &ProtectedSystem, u: &CMatrix) -> Result<ProtectionError> {
    if u.nrows() != sys.dim() || u.ncols() != sys.dim() {
        return Err(invalid("propagator dimension does not match the system"));
    }
    let p = projector_pulse(&sys.psi)?;
    let commutator = (&p * u - u * &p).norm();
    let u_psi = u * &sys.psi;
    let overlap = sys.psi.dotc(&u_psi);
    let leakage = (u_psi - &sys.psi * overlap).norm_squared();
    Ok(ProtectionError { commutator, leakage })
}
