//! Exact propagation of a qubit coupled to a finite-dimensional bath,
//! `H = I⊗C + σx⊗X + σy⊗Y + σz⊗Z`, under instantaneous pulse sequences.

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::format::sig17;
use crate::linalg::{
    hermitian_norm, hermitian_part, hermiticity_residual, kron, pauli_left, qubit_left, unitary_generator,
    CMatrix, HermitianEigen,
};
use crate::pauli::Pauli;
use crate::sequences::PulseSequence;

const HERMITICITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QubitBathHamiltonian {
    c: CMatrix,
    x: CMatrix,
    y: CMatrix,
    z: CMatrix,
}

impl QubitBathHamiltonian {
    /// Validates shapes and Hermiticity (relative to `max(1, ‖M‖_F)`).
    pub fn new(c: CMatrix, x: CMatrix, y: CMatrix, z: CMatrix) -> Result<Self> {
        let d = c.nrows();
        if d == 0 {
            return Err(invalid("bath dimension must be at least 1"));
        }
        for (name, m) in [("C", &c), ("X", &x), ("Y", &y), ("Z", &z)] {
            if m.nrows() != d || m.ncols() != d {
                return Err(invalid(format!(
                    "{name} is {}x{}, expected {d}x{d}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
                return Err(invalid(format!("{name} has non-finite entries")));
            }
            let res = hermiticity_residual(m);
            if res > HERMITICITY_TOLERANCE * m.norm().max(1.0) {
                return Err(invalid(format!("{name} is not Hermitian (residual {res:e})")));
            }
        }
        Ok(Self { c, x, y, z })
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn c(&self) -> &CMatrix {
        &self.c
    }

    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    pub fn y(&self) -> &CMatrix {
        &self.y
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn is_pure_dephasing(&self) -> bool {
        self.x.iter().all(|v| *v == Complex64::new(0.0, 0.0))
            && self.y.iter().all(|v| *v == Complex64::new(0.0, 0.0))
    }

    /// Copy with the transverse couplings `X`, `Y` removed.
    pub fn pure_dephasing(&self) -> Self {
        let d = self.dim();
        Self {
            c: self.c.clone(),
            x: CMatrix::zeros(d, d),
            y: CMatrix::zeros(d, d),
            z: self.z.clone(),
        }
    }

    /// The full `2d × 2d` Hamiltonian.
    pub fn total(&self) -> CMatrix {
        kron(&Pauli::I.matrix(), &self.c)
            + kron(&Pauli::X.matrix(), &self.x)
            + kron(&Pauli::Y.matrix(), &self.y)
            + kron(&Pauli::Z.matrix(), &self.z)
    }
}

fn gue(d: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    hermitian_part(&g)
}

fn rescaled(m: CMatrix, target: f64) -> Result<CMatrix> {
    if target == 0.0 {
        return Ok(CMatrix::zeros(m.nrows(), m.ncols()));
    }
    let norm = hermitian_norm(&m)?;
    Ok(hermitian_part(&(m * Complex64::new(target / norm, 0.0))))
}

/// GUE-style instance with `‖C‖₂ = α` and `‖X‖₂ = ‖Y‖₂ = ‖Z‖₂ = β`, deterministic in `seed`.
pub fn random_hamiltonian(dim: usize, alpha: f64, beta: f64, seed: u64) -> Result<QubitBathHamiltonian> {
    if dim < 2 {
        return Err(invalid(format!("bath dimension must be at least 2, got {dim}")));
    }
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(invalid(format!(
                "{name} must be finite and non-negative, got {v}"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = gue(dim, &mut rng);
    let x = gue(dim, &mut rng);
    let y = gue(dim, &mut rng);
    let z = gue(dim, &mut rng);
    QubitBathHamiltonian::new(
        rescaled(c, alpha)?,
        rescaled(x, beta)?,
        rescaled(y, beta)?,
        rescaled(z, beta)?,
    )
}

/// `(α, β) = (‖C‖₂, max(‖X‖₂, ‖Y‖₂, ‖Z‖₂))`.
pub fn hamiltonian_norms(h: &QubitBathHamiltonian) -> Result<(f64, f64)> {
    let alpha = hermitian_norm(&h.c)?;
    let beta = [&h.x, &h.y, &h.z]
        .into_iter()
        .map(hermitian_norm)
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok((alpha, beta))
}

/// Cached eigendecomposition of the total Hamiltonian.
#[derive(Debug, Clone)]
pub struct FreeEvolution {
    eig: HermitianEigen,
}

impl FreeEvolution {
    pub fn new(h: &QubitBathHamiltonian) -> Result<Self> {
        Ok(Self {
            eig: HermitianEigen::new(&h.total())?,
        })
    }

    pub fn propagator(&self, t: f64) -> CMatrix {
        self.eig.propagator(t)
    }

    /// Toggling-frame propagator of `seq`, see [`sequence_propagator`].
    pub fn sequence(&self, seq: &PulseSequence) -> SequencePropagator {
        let st = seq.switch_times();
        let mut u = self.propagator(st[1] - st[0]);
        let mut frame = Matrix2::<Complex64>::identity();
        for (k, pulse) in seq.pulses().iter().enumerate() {
            u = pauli_left(pulse.axis, &u);
            frame = pulse.axis.matrix() * frame;
            u = self.propagator(st[k + 2] - st[k + 1]) * u;
        }
        SequencePropagator {
            unitary: qubit_left(&frame.adjoint(), &u),
            frame: seq.frame(),
            parity: seq.parity(),
        }
    }
}

/// `exp(-iHt)` on the full qubit ⊗ bath space.
pub fn free_propagator(h: &QubitBathHamiltonian, t: f64) -> Result<CMatrix> {
    if !t.is_finite() {
        return Err(invalid(format!("evolution time must be finite, got {t}")));
    }
    Ok(FreeEvolution::new(h)?.propagator(t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequencePropagator {
    /// `(P_N ⋯ P_1)^† · U0(T - T_N) P_N ⋯ P_1 U0(T_1)`, pulse phases included.
    pub unitary: CMatrix,
    /// Product of the interior pulses, modulo phase.
    pub frame: Pauli,
    /// Boundary operators folded out of the sequence.
    pub parity: Pauli,
}

/// Propagates `seq` with ideal `σ ⊗ I` pulses and returns it in the toggling frame,
/// so that perfect decoupling gives `I ⊗ U_bath`. Frame and parity are reported separately.
pub fn sequence_propagator(h: &QubitBathHamiltonian, seq: &PulseSequence) -> Result<SequencePropagator> {
    Ok(FreeEvolution::new(h)?.sequence(seq))
}

/// `U = I⊗A_I + σx⊗A_X + σy⊗A_Y + σz⊗A_Z`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliDecomposition {
    pub identity: CMatrix,
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

impl PauliDecomposition {
    pub fn component(&self, p: Pauli) -> &CMatrix {
        match p {
            Pauli::I => &self.identity,
            Pauli::X => &self.x,
            Pauli::Y => &self.y,
            Pauli::Z => &self.z,
        }
    }

    pub fn reconstruct(&self) -> CMatrix {
        Pauli::ALL
            .iter()
            .map(|&p| kron(&p.matrix(), self.component(p)))
            .fold(
                CMatrix::zeros(2 * self.identity.nrows(), 2 * self.identity.ncols()),
                |a, b| a + b,
            )
    }

    /// `‖A_X‖_F + ‖A_Y‖_F`.
    pub fn transverse_norm(&self) -> f64 {
        self.x.norm() + self.y.norm()
    }
}

/// `A_α = ½ Tr_qubit[(σ_α ⊗ I) U]`.
pub fn pauli_decompose(u: &CMatrix) -> Result<PauliDecomposition> {
    let n = u.nrows();
    if n == 0 || !n.is_multiple_of(2) || u.ncols() != n {
        return Err(invalid(format!(
            "expected a square even-dimensional matrix, got {}x{}",
            n,
            u.ncols()
        )));
    }
    let d = n / 2;
    let b00 = u.view((0, 0), (d, d));
    let b01 = u.view((0, d), (d, d));
    let b10 = u.view((d, 0), (d, d));
    let b11 = u.view((d, d), (d, d));
    let half = Complex64::new(0.5, 0.0);
    let i_half = Complex64::new(0.0, 0.5);
    Ok(PauliDecomposition {
        identity: (b00 + b11) * half,
        x: (b01 + b10) * half,
        y: (b01 - b10) * i_half,
        z: (b00 - b11) * half,
    })
}

/// `‖U⁽⁺⁾ − U⁽⁻⁾‖_F` for a pure-dephasing Hamiltonian, with `U⁽±⁾` the bath propagators
/// conditioned on the toggling-frame sign of `σz`.
pub fn dephasing_error(h: &QubitBathHamiltonian, seq: &PulseSequence) -> Result<f64> {
    if !h.is_pure_dephasing() {
        return Err(invalid("dephasing_error requires X = Y = 0"));
    }
    let plus = HermitianEigen::new(&(&h.c + &h.z))?;
    let minus = HermitianEigen::new(&(&h.c - &h.z))?;
    let st = seq.switch_times();
    let d = h.dim();
    let mut u_plus = CMatrix::identity(d, d);
    let mut u_minus = CMatrix::identity(d, d);
    let mut flipped = false;
    for (k, w) in st.windows(2).enumerate() {
        if k > 0 {
            flipped ^= !seq.pulses()[k - 1].axis.commutes_with(Pauli::Z);
        }
        let dt = w[1] - w[0];
        let (a, b) = if flipped { (&minus, &plus) } else { (&plus, &minus) };
        u_plus = a.propagator(dt) * u_plus;
        u_minus = b.propagator(dt) * u_minus;
    }
    Ok((u_plus - u_minus).norm())
}

/// `H_eff = (i/T) log U` (principal branch), Pauli-decomposed.
pub fn effective_generator(u: &CMatrix, t: f64) -> Result<PauliDecomposition> {
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("T must be positive, got {t}")));
    }
    let phi = unitary_generator(u)?;
    pauli_decompose(&(phi / Complex64::new(t, 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    /// `2‖A_Z(Ũ)‖_F`, which is `‖U⁽⁺⁾ − U⁽⁻⁾‖_F` for pure dephasing.
    pub dephasing_error: f64,
    /// `‖A_X(Ũ)‖_F + ‖A_Y(Ũ)‖_F`.
    pub relaxation_error: f64,
    /// `‖A_Z(Φ)‖_F` of the dimensionless generator `Φ = H_eff T`.
    pub generator_dephasing: f64,
    /// `‖A_X(Φ)‖_F + ‖A_Y(Φ)‖_F`.
    pub generator_relaxation: f64,
}

impl ErrorMetrics {
    pub fn csv_header() -> &'static str {
        "T,dephasing_error,relaxation_error,generator_dephasing,generator_relaxation"
    }

    pub fn csv_row(&self, t: f64) -> String {
        format!(
            "{},{},{},{},{}",
            sig17(t),
            sig17(self.dephasing_error),
            sig17(self.relaxation_error),
            sig17(self.generator_dephasing),
            sig17(self.generator_relaxation)
        )
    }
}

/// All four error channels of `seq` on `h`, from the toggling-frame propagator.
pub fn error_metrics_with(free: &FreeEvolution, seq: &PulseSequence) -> Result<ErrorMetrics> {
    let u = free.sequence(seq).unitary;
    let parts = pauli_decompose(&u)?;
    let phi = pauli_decompose(&unitary_generator(&u)?)?;
    Ok(ErrorMetrics {
        dephasing_error: 2.0 * parts.z.norm(),
        relaxation_error: parts.transverse_norm(),
        generator_dephasing: phi.z.norm(),
        generator_relaxation: phi.transverse_norm(),
    })
}

pub fn error_metrics(h: &QubitBathHamiltonian, seq: &PulseSequence) -> Result<ErrorMetrics> {
    error_metrics_with(&FreeEvolution::new(h)?, seq)
}
