//! Quaternion algebras over `Q` and over imaginary quadratic fields, described
//! by their finite ramification sets.
//!
//! Prime ideals are never written down by generators. An ideal of an
//! imaginary quadratic `k` is a rational prime plus a tag: `Unique` for the
//! single prime above an inert or ramified `p`, `First`/`Second` for the two
//! conjugates above a split `p`. Every quantity computed here depends only on
//! norms and on that pairing.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, kronecker, valuation};
use crate::quadfield::{QuadField, SplitType};

pub mod grammar;

pub use grammar::{parse_algebra, Algebra, ParseError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuatAlgError {
    #[error("algebra {0} is not admissible")]
    NotAdmissible(String),
    #[error("quaternion algebras over {0} are not supported here (need an imaginary quadratic field)")]
    NotImaginary(QuadField),
    #[error("{x} is a square in {field}, so k(sqrt {x}) is not a quadratic extension")]
    NotQuadratic { x: i64, field: QuadField },
    #[error("torsion certificate is inconclusive over {0}")]
    FieldExcluded(QuadField),
    #[error("{0} is not prime")]
    NotPrime(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IdealTag {
    Unique,
    First,
    Second,
}

/// A prime ideal of an imaginary quadratic field, named symbolically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PrimeIdeal {
    pub p: u64,
    pub tag: IdealTag,
}

impl PrimeIdeal {
    pub fn unique(p: u64) -> Self {
        Self { p, tag: IdealTag::Unique }
    }

    pub fn first(p: u64) -> Self {
        Self { p, tag: IdealTag::First }
    }

    pub fn second(p: u64) -> Self {
        Self { p, tag: IdealTag::Second }
    }

    /// Whether the tag is consistent with how `p` decomposes in `field`.
    pub fn is_valid_in(&self, field: &QuadField) -> bool {
        arith::is_prime(self.p)
            && matches!(
                (field.splitting_type(self.p), self.tag),
                (SplitType::Split, IdealTag::First | IdealTag::Second)
                    | (SplitType::Inert | SplitType::Ramified, IdealTag::Unique)
            )
    }

    /// Absolute norm: `p` above split or ramified `p`, `p^2` above inert `p`.
    pub fn norm(&self, field: &QuadField) -> u64 {
        match field.splitting_type(self.p) {
            SplitType::Inert => self.p * self.p,
            _ => self.p,
        }
    }

    /// Text label: `13+`, `13-`, `3i`, `2r`.
    pub fn label(&self, field: &QuadField) -> String {
        let suffix = match self.tag {
            IdealTag::First => "+",
            IdealTag::Second => "-",
            IdealTag::Unique => match field.splitting_type(self.p) {
                SplitType::Ramified => "r",
                _ => "i",
            },
        };
        format!("{}{}", self.p, suffix)
    }
}

/// A quaternion algebra over `Q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QAlgQ {
    ram_f: BTreeSet<u64>,
    ram_inf: bool,
}

impl QAlgQ {
    pub fn new(ram_f: impl IntoIterator<Item = u64>, ram_inf: bool) -> Self {
        Self { ram_f: ram_f.into_iter().collect(), ram_inf }
    }

    /// An algebra split at the real place.
    pub fn indefinite(ram_f: impl IntoIterator<Item = u64>) -> Self {
        Self::new(ram_f, false)
    }

    pub fn matrix() -> Self {
        Self::indefinite([])
    }

    pub fn ram_f(&self) -> &BTreeSet<u64> {
        &self.ram_f
    }

    pub fn is_indefinite(&self) -> bool {
        !self.ram_inf
    }

    /// Hilbert reciprocity: the full ramification set has even size.
    pub fn is_admissible(&self) -> bool {
        let total = self.ram_f.len() + usize::from(self.ram_inf);
        total.is_multiple_of(2) && self.ram_f.iter().all(|&p| arith::is_prime(p))
    }

    /// Type number. The narrow class field of `Q` is `Q`, so every
    /// admissible algebra over `Q` has a single type of maximal order.
    pub fn type_number(&self) -> Result<u64, QuatAlgError> {
        if !self.is_admissible() {
            return Err(QuatAlgError::NotAdmissible(self.to_string()));
        }
        Ok(1)
    }

    pub fn discriminant(&self) -> BigUint {
        self.ram_f.iter().map(|&p| BigUint::from(p)).product()
    }
}

impl fmt::Display for QAlgQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut items: Vec<String> = self.ram_f.iter().map(|p| p.to_string()).collect();
        if self.ram_inf {
            items.push("inf".into());
        }
        write!(f, "Q{{{}}}", items.join(","))
    }
}

/// A quaternion algebra over an imaginary quadratic field. Such a field has
/// no real places, so the ramification is entirely finite.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QAlgK {
    field: QuadField,
    ram_f: BTreeSet<PrimeIdeal>,
}

impl QAlgK {
    pub fn new(field: QuadField, ram_f: impl IntoIterator<Item = PrimeIdeal>) -> Result<Self, QuatAlgError> {
        if !field.is_imaginary() {
            return Err(QuatAlgError::NotImaginary(field));
        }
        Ok(Self { field, ram_f: ram_f.into_iter().collect() })
    }

    pub fn matrix(field: QuadField) -> Result<Self, QuatAlgError> {
        Self::new(field, [])
    }

    /// The algebra ramified at every prime of `field` above each listed
    /// rational prime.
    pub fn above(field: QuadField, primes: &[u64]) -> Result<Self, QuatAlgError> {
        let mut ideals = Vec::new();
        for &p in primes {
            if !arith::is_prime(p) {
                return Err(QuatAlgError::NotPrime(p));
            }
            match field.splitting_type(p) {
                SplitType::Split => {
                    ideals.push(PrimeIdeal::first(p));
                    ideals.push(PrimeIdeal::second(p));
                }
                _ => ideals.push(PrimeIdeal::unique(p)),
            }
        }
        Self::new(field, ideals)
    }

    pub fn field(&self) -> &QuadField {
        &self.field
    }

    pub fn ram_f(&self) -> &BTreeSet<PrimeIdeal> {
        &self.ram_f
    }

    pub fn is_admissible(&self) -> bool {
        self.ram_f.len().is_multiple_of(2) && self.ram_f.iter().all(|i| i.is_valid_in(&self.field))
    }

    pub(crate) fn require_admissible(&self) -> Result<(), QuatAlgError> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(QuatAlgError::NotAdmissible(self.to_string()))
        }
    }

    pub fn ideal_norm(&self, ideal: &PrimeIdeal) -> u64 {
        ideal.norm(&self.field)
    }

    pub fn labels(&self) -> Vec<String> {
        self.ram_f.iter().map(|i| i.label(&self.field)).collect()
    }

    /// `prod_{P in Ram_f} (|P| - 1)`.
    pub fn norm_product(&self) -> BigUint {
        self.ram_f.iter().map(|i| BigUint::from(self.ideal_norm(i) - 1)).fold(BigUint::one(), |a, b| a * b)
    }

    /// When the ramification is a disjoint union of conjugate pairs above
    /// split rational primes, those primes (ascending).
    pub fn split_pairs(&self) -> Option<Vec<u64>> {
        let mut base = Vec::new();
        for ideal in &self.ram_f {
            match ideal.tag {
                IdealTag::Unique => return None,
                IdealTag::First => {
                    if !self.ram_f.contains(&PrimeIdeal::second(ideal.p)) {
                        return None;
                    }
                    base.push(ideal.p);
                }
                IdealTag::Second => {
                    if !self.ram_f.contains(&PrimeIdeal::first(ideal.p)) {
                        return None;
                    }
                }
            }
        }
        Some(base)
    }

    /// Type number `|Cl_k / <Cl_k^2, [P] : P in Ram_f>|`, computed in the
    /// genus group `Cl_k / Cl_k^2`. Primes above inert `p` are principal and
    /// contribute nothing.
    pub fn type_number(&self) -> Result<u64, QuatAlgError> {
        self.require_admissible()?;
        let rank = genus_span_rank(
            self.ram_f
                .iter()
                .filter(|i| self.field.splitting_type(i.p) != SplitType::Inert)
                .map(|i| self.field.ideal_genus_vector(i.p)),
        );
        Ok(1u64 << (self.field.two_rank() - rank))
    }

    /// Whether `k(sqrt x)` embeds in the algebra: no ramified prime may split
    /// in the extension, i.e. `x` must be a non-square in every completion
    /// `k_P` with `P` ramified.
    pub fn embeds_quadratic(&self, x: i64) -> Result<bool, QuatAlgError> {
        let d = self.field.d();
        if x == 0 || is_rational_square(x as i128) || is_rational_square(x as i128 * d as i128) {
            return Err(QuatAlgError::NotQuadratic { x, field: self.field });
        }
        Ok(self.ram_f.iter().all(|i| !is_square_in_completion(x, &self.field, i.p)))
    }

    /// Certifies that no element of order 2 or 3 exists in the norm-one
    /// group, via the non-embedding of `k(i)` and `k(sqrt -3)`. Inconclusive
    /// when `k` is itself `Q(i)` or `Q(sqrt -3)`.
    pub fn torsion_free_certificate(&self) -> Result<bool, QuatAlgError> {
        self.require_admissible()?;
        if matches!(self.field.discriminant(), -3 | -4) {
            return Err(QuatAlgError::FieldExcluded(self.field));
        }
        Ok(!self.embeds_quadratic(-1)? && !self.embeds_quadratic(-3)?)
    }
}

impl fmt::Display for QAlgK {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K[{}]{{{}}}", self.field.discriminant(), self.labels().join(","))
    }
}

/// Whether `A = B (x)_Q k`: the ramification of `A` is `r` conjugate pairs
/// above split primes `p_1..p_r`, all of which ramify in `B`, and every other
/// prime ramified in `B` is inert or ramified in `k`.
pub fn compatible(b: &QAlgQ, a: &QAlgK) -> bool {
    if !b.is_admissible() || !b.is_indefinite() || !a.is_admissible() {
        return false;
    }
    let Some(base) = a.split_pairs() else {
        return false;
    };
    if !base.iter().all(|p| b.ram_f().contains(p)) {
        return false;
    }
    b.ram_f().iter().filter(|p| !base.contains(p)).all(|&p| a.field().splitting_type(p) != SplitType::Split)
}

/// Rank over `F_2` of genus vectors written multiplicatively in `{+1, -1}`.
fn genus_span_rank(vectors: impl Iterator<Item = Vec<i8>>) -> u32 {
    let mut basis: Vec<u64> = Vec::new();
    for v in vectors {
        let mut bits = v.iter().enumerate().fold(0u64, |acc, (i, &s)| if s == -1 { acc | 1 << i } else { acc });
        for &b in &basis {
            bits = bits.min(bits ^ b);
        }
        if bits != 0 {
            basis.push(bits);
            basis.sort_unstable_by(|a, b| b.cmp(a));
        }
    }
    basis.len() as u32
}

fn is_rational_square(n: i128) -> bool {
    if n < 0 {
        return false;
    }
    let r = (n as f64).sqrt() as i128;
    (r.saturating_sub(1)..=r + 1).any(|s| s >= 0 && s * s == n)
}

/// Whether the nonzero integer `x` is a square in `Q_p`.
pub fn is_square_in_qp(x: i128, p: u64) -> bool {
    assert!(x != 0);
    let v = valuation(x, p);
    if v % 2 == 1 {
        return false;
    }
    let u = x / (p as i128).pow(v);
    if p == 2 {
        u.rem_euclid(8) == 1
    } else {
        kronecker(u.rem_euclid(p as i128) as i64, p as i64) == 1
    }
}

/// Whether the rational `x` is a square in the completion of `field` at a
/// prime above `p`. Over a split `p` that completion is `Q_p`; otherwise it
/// is the quadratic extension `Q_p(sqrt d)`, where the rational squares are
/// exactly `Q_p^2 + d Q_p^2`.
pub fn is_square_in_completion(x: i64, field: &QuadField, p: u64) -> bool {
    let x = x as i128;
    match field.splitting_type(p) {
        SplitType::Split => is_square_in_qp(x, p),
        SplitType::Inert | SplitType::Ramified => is_square_in_qp(x, p) || is_square_in_qp(x * field.d() as i128, p),
    }
}
