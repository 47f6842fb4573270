//! Single-qubit Pauli operators modulo global phase.

use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::error::{invalid, Error};

/// A Pauli operator with its global phase discarded.
///
/// Modulo phase the single-qubit Pauli group is the Klein four-group, so the
/// product is an XOR of the (x, z) bit pair and is commutative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum Pauli {
    #[default]
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> u8 {
        match self {
            Pauli::I => 0b00,
            Pauli::X => 0b10,
            Pauli::Z => 0b01,
            Pauli::Y => 0b11,
        }
    }

    fn from_bits(bits: u8) -> Self {
        match bits & 0b11 {
            0b00 => Pauli::I,
            0b10 => Pauli::X,
            0b01 => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    pub fn is_identity(self) -> bool {
        self == Pauli::I
    }

    /// Whether the two operators commute (as matrices).
    pub fn commutes_with(self, other: Pauli) -> bool {
        let (a, b) = (self.bits(), other.bits());
        let symplectic = ((a >> 1) & b & 1) ^ (a & (b >> 1) & 1);
        symplectic == 0
    }

    pub fn matrix(self) -> Matrix2<Complex64> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => Matrix2::new(l, o, o, l),
            Pauli::X => Matrix2::new(o, l, l, o),
            Pauli::Y => Matrix2::new(o, -i, i, o),
            Pauli::Z => Matrix2::new(l, o, o, -l),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Group product with the phase dropped.
impl std::ops::Mul for Pauli {
    type Output = Pauli;

    // the Pauli group modulo phase is Z2 × Z2, so the product is XOR of the bit pairs
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, other: Pauli) -> Pauli {
        Pauli::from_bits(self.bits() ^ other.bits())
    }
}

impl FromStr for Pauli {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "i" => Ok(Pauli::I),
            "X" | "x" => Ok(Pauli::X),
            "Y" | "y" => Ok(Pauli::Y),
            "Z" | "z" => Ok(Pauli::Z),
            other => Err(invalid(format!("unknown Pauli axis '{other}'"))),
        }
    }
}

/// Product of a list of Paulis, modulo phase.
pub fn product<I: IntoIterator<Item = Pauli>>(ops: I) -> Pauli {
    ops.into_iter().fold(Pauli::I, |a, b| a * b)
}
