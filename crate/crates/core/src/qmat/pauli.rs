use std::fmt;
use std::ops::Mul;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::operator::Operator;
use crate::error::{Error, Result};
use crate::scalar::{i_pow, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Product `self * rhs` as `(i^k, letter)`.
    pub fn mul_phase(self, rhs: Pauli) -> (u8, Pauli) {
        use Pauli::*;
        match (self, rhs) {
            (I, p) | (p, I) => (0, p),
            (X, X) | (Y, Y) | (Z, Z) => (0, I),
            (X, Y) => (1, Z),
            (Y, Z) => (1, X),
            (Z, X) => (1, Y),
            (Y, X) => (3, Z),
            (Z, Y) => (3, X),
            (X, Z) => (3, Y),
        }
    }

    pub fn matrix<T: Real>(self) -> DMatrix<Complex<T>> {
        let o = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        let i = Complex::new(T::zero(), T::one());
        let entries = match self {
            Pauli::I => [one, o, o, one],
            Pauli::X => [o, one, one, o],
            Pauli::Y => [o, -i, i, o],
            Pauli::Z => [one, o, o, -one],
        };
        DMatrix::from_row_slice(2, 2, &entries)
    }

    fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis with a phase `i^phase`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    letters: Vec<Pauli>,
    phase: u8,
}

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self { letters, phase: 0 }
    }

    pub fn with_phase(letters: Vec<Pauli>, phase: u8) -> Self {
        Self { letters, phase: phase % 4 }
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self::new(vec![Pauli::I; n_qubits])
    }

    /// The `index`-th string of the basis enumeration, with the first qubit
    /// as the most significant base-4 digit and digits ordered I, X, Y, Z.
    pub fn from_index(n_qubits: usize, mut index: usize) -> Self {
        let mut letters = vec![Pauli::I; n_qubits];
        for q in (0..n_qubits).rev() {
            letters[q] = Pauli::ALL[index % 4];
            index /= 4;
        }
        Self::new(letters)
    }

    pub fn index(&self) -> usize {
        self.letters.iter().fold(0, |acc, p| acc * 4 + p.index())
    }

    pub fn n_qubits(&self) -> usize {
        self.letters.len()
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.letters
    }

    /// Phase exponent `k` of `i^k`.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    pub fn negated(&self) -> Self {
        Self::with_phase(self.letters.clone(), self.phase + 2)
    }

    pub fn weight(&self) -> usize {
        self.letters.iter().filter(|p| **p != Pauli::I).count()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.weight() == 0
    }

    pub fn to_operator<T: Real>(&self) -> Operator<T> {
        let mut mat = DMatrix::from_element(1, 1, i_pow::<T>(self.phase as i32));
        for p in &self.letters {
            mat = mat.kronecker(&p.matrix::<T>());
        }
        Operator::from_matrix_unchecked(mat).with_label(self.to_string())
    }
}

impl Mul for &PauliString {
    type Output = PauliString;

    /// Panics if the registers differ in size.
    fn mul(self, rhs: Self) -> PauliString {
        assert_eq!(self.letters.len(), rhs.letters.len(), "Pauli string length mismatch");
        let mut phase = self.phase + rhs.phase;
        let letters = self
            .letters
            .iter()
            .zip(&rhs.letters)
            .map(|(a, b)| {
                let (k, p) = a.mul_phase(*b);
                phase += k;
                p
            })
            .collect();
        PauliString::with_phase(letters, phase)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = ["", "i", "-", "-i"][self.phase as usize];
        f.write_str(prefix)?;
        for p in &self.letters {
            write!(f, "{}", p.letter())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional `+`, `-`, `i`, `+i` or `-i` prefix followed by
    /// letters from `IXYZ`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, body) = if let Some(rest) = s.strip_prefix("-i") {
            (3, rest)
        } else if let Some(rest) = s.strip_prefix("+i") {
            (1, rest)
        } else if let Some(rest) = s.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = s.strip_prefix('+') {
            (0, rest)
        } else if let Some(rest) = s.strip_prefix('i') {
            (1, rest)
        } else {
            (0, s)
        };
        if body.is_empty() {
            return Err(Error::PauliParse(s.to_string()));
        }
        let letters = body
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                _ => Err(Error::PauliParse(s.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::with_phase(letters, phase))
    }
}
