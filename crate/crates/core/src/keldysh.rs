//! Symbolic expansion of nested (anti)commutators over free operator
//! symbols, and which operator orderings the protocol can reach.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::Bracket;
use crate::scalar::{Real, C};

/// `[O_1, [O_2, ..., [O_{n-1}, O_n]_±]_±]_±`, outermost bracket first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NestedBracket {
    brackets: Vec<Bracket>,
}

impl NestedBracket {
    pub fn new(brackets: Vec<Bracket>) -> Result<Self> {
        if brackets.is_empty() {
            return Err(Error::InvalidArgument("a nested bracket needs at least two operators".into()));
        }
        Ok(Self { brackets })
    }

    /// The choice encoded by the low `n - 1` bits of `bits`, first bracket
    /// in the most significant position; a set bit selects a commutator.
    pub fn from_bits(n: usize, bits: usize) -> Result<Self> {
        let k = n.checked_sub(1).filter(|&k| k > 0).ok_or_else(|| Error::InvalidArgument(format!("n = {n} < 2")))?;
        Self::new((0..k).map(|j| if (bits >> (k - 1 - j)) & 1 == 1 { Bracket::Commutator } else { Bracket::Anticommutator }).collect())
    }

    /// All `2^(n-1)` bracket choices for `n` operators.
    pub fn all(n: usize) -> Result<Vec<Self>> {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("n = {n} < 2")));
        }
        (0..1usize << (n - 1)).map(|bits| Self::from_bits(n, bits)).collect()
    }

    pub fn n(&self) -> usize {
        self.brackets.len() + 1
    }

    pub fn brackets(&self) -> &[Bracket] {
        &self.brackets
    }
}

/// A product `O_{p_1} O_{p_2} ... O_{p_n}` with an integer coefficient.
/// Permutation entries are zero-based.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorWord {
    pub permutation: Vec<usize>,
    pub coefficient: i64,
}

impl fmt::Display for OperatorWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.coefficient < 0 { "-" } else { "+" };
        let mag = self.coefficient.abs();
        if mag != 1 {
            write!(f, "{sign}{mag} ")?;
        } else {
            write!(f, "{sign}")?;
        }
        write!(f, "{}", word_label(&self.permutation))
    }
}

/// `O2O3O1` style label of a zero-based permutation.
pub fn word_label(perm: &[usize]) -> String {
    perm.iter().map(|p| format!("O{}", p + 1)).collect()
}

type Poly = BTreeMap<Vec<usize>, i64>;

/// Expands the bracket into words over non-commuting symbols, combining
/// like terms and dropping those that cancel. Words come out in
/// lexicographic order of their permutations.
pub fn expand(b: &NestedBracket) -> Vec<OperatorWord> {
    let n = b.n();
    let mut poly: Poly = BTreeMap::from([(vec![n - 1], 1)]);
    for (k, bracket) in b.brackets().iter().enumerate().rev() {
        let mut next = Poly::new();
        for (word, coef) in &poly {
            let mut left = vec![k];
            left.extend(word);
            *next.entry(left).or_default() += coef;
            let mut right = word.clone();
            right.push(k);
            *next.entry(right).or_default() += bracket.sign() as i64 * coef;
        }
        next.retain(|_, c| *c != 0);
        poly = next;
    }
    poly.into_iter().map(|(permutation, coefficient)| OperatorWord { permutation, coefficient }).collect()
}

/// Every ordering appearing in the expansion of some bracket choice.
pub fn accessible_permutations(n: usize) -> Result<BTreeSet<Vec<usize>>> {
    Ok(NestedBracket::all(n)?.iter().flat_map(|b| expand(b).into_iter().map(|w| w.permutation)).collect())
}

/// All `n!` orderings of `0..n` in lexicographic order.
pub fn all_permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let x = left.remove(i);
            prefix.push(x);
            rec(prefix, left, out);
            prefix.pop();
            left.insert(i, x);
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

/// Orderings that no bracket choice reaches.
pub fn missing_permutations(n: usize) -> Result<Vec<Vec<usize>>> {
    let acc = accessible_permutations(n)?;
    Ok(all_permutations(n).into_iter().filter(|p| !acc.contains(p)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourClass {
    /// Fits on a single forward/backward contour.
    TwoBranch,
    /// Needs a contour with several forward/backward branches.
    MultiBranch,
}

/// Two-branch exactly when the ordering is reachable by some bracket choice.
pub fn contour_classify(perm: &[usize]) -> Result<ContourClass> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidArgument(format!("{perm:?} is not a permutation of 0..{n}")));
        }
    }
    if n < 2 {
        return Ok(ContourClass::TwoBranch);
    }
    Ok(if accessible_permutations(n)?.contains(perm) { ContourClass::TwoBranch } else { ContourClass::MultiBranch })
}

/// Sums the words with `ops[k]` substituted for the `k`-th symbol.
pub fn evaluate_words<T: Real>(words: &[OperatorWord], ops: &[DMatrix<C<T>>]) -> DMatrix<C<T>> {
    let d = ops[0].nrows();
    let mut acc = DMatrix::zeros(d, d);
    for w in words {
        let prod = w.permutation.iter().fold(DMatrix::identity(d, d), |m, &p| m * &ops[p]);
        acc += prod * C::new(T::from_i64(w.coefficient).unwrap(), T::zero());
    }
    acc
}

/// The nested bracket evaluated directly on matrices.
pub fn nested_bracket_matrix<T: Real>(b: &NestedBracket, ops: &[DMatrix<C<T>>]) -> DMatrix<C<T>> {
    let n = b.n();
    let mut inner = ops[n - 1].clone();
    for k in (0..n - 1).rev() {
        let s = C::new(T::from_i8(b.brackets()[k].sign()).unwrap(), T::zero());
        inner = &ops[k] * &inner + &inner * &ops[k] * s;
    }
    inner
}
