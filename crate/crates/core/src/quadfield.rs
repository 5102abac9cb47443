//! Quadratic fields `Q(sqrt d)`: discriminants, prime splitting, class groups
//! of imaginary fields by reduced-form enumeration, genus characters and the
//! values `L(2, chi_D)` and `zeta_k(2)`.
//!
//! The rational field is carried as the degenerate field with `d = D = 1` so
//! that the totally real base field flows through the same interfaces.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{self, kronecker};
use crate::validated::{CompensatedSum, Validated};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum QuadFieldError {
    #[error("{0} is not squarefree")]
    NotSquarefree(i64),
    #[error("d = {0} does not define a quadratic field")]
    Degenerate(i64),
    #[error("{0} is not a fundamental discriminant")]
    NotFundamental(i64),
    #[error("operation requires an imaginary quadratic field, got discriminant {0}")]
    NotImaginary(i64),
    #[error("prime {p} divides the discriminant {disc}")]
    PrimeDividesDiscriminant { p: u64, disc: i64 },
    #[error("{0} is not prime")]
    NotPrime(u64),
}

/// `Q(sqrt d)` with `d` squarefree, identified by its fundamental discriminant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadField {
    d: i64,
    disc: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SplitType {
    Split,
    Inert,
    Ramified,
}

impl QuadField {
    pub fn new(d: i64) -> Result<Self, QuadFieldError> {
        if d == 0 || d == 1 {
            return Err(QuadFieldError::Degenerate(d));
        }
        if !arith::is_squarefree(d) {
            return Err(QuadFieldError::NotSquarefree(d));
        }
        let disc = if d.rem_euclid(4) == 1 { d } else { 4 * d };
        Ok(Self { d, disc })
    }

    /// The rational field, `d = D = 1`.
    pub const fn rational() -> Self {
        Self { d: 1, disc: 1 }
    }

    pub fn gaussian() -> Self {
        Self { d: -1, disc: -4 }
    }

    pub fn from_discriminant(disc: i64) -> Result<Self, QuadFieldError> {
        if disc == 1 {
            return Ok(Self::rational());
        }
        let d = match disc.rem_euclid(4) {
            1 => disc,
            0 if matches!((disc / 4).rem_euclid(4), 2 | 3) => disc / 4,
            _ => return Err(QuadFieldError::NotFundamental(disc)),
        };
        let field = Self::new(d).map_err(|_| QuadFieldError::NotFundamental(disc))?;
        debug_assert_eq!(field.disc, disc);
        Ok(field)
    }

    /// Accepts either a squarefree `d` or a fundamental discriminant. The two
    /// readings never conflict: a multiple of 4 is not squarefree, and a
    /// squarefree fundamental discriminant is its own `d`.
    pub fn from_d_or_discriminant(n: i64) -> Result<Self, QuadFieldError> {
        if n.rem_euclid(4) == 0 {
            Self::from_discriminant(n)
        } else {
            Self::new(n)
        }
    }

    pub fn d(&self) -> i64 {
        self.d
    }

    pub fn discriminant(&self) -> i64 {
        self.disc
    }

    pub fn is_rational(&self) -> bool {
        self.disc == 1
    }

    pub fn is_imaginary(&self) -> bool {
        self.disc < 0
    }

    pub fn degree(&self) -> u32 {
        if self.is_rational() {
            1
        } else {
            2
        }
    }

    /// Decomposition of the rational prime `p` in this field.
    pub fn splitting_type(&self, p: u64) -> SplitType {
        let disc = self.disc;
        if self.is_rational() {
            return SplitType::Split;
        }
        if (disc as i128) % (p as i128) == 0 {
            SplitType::Ramified
        } else if kronecker(disc, p as i64) == 1 {
            SplitType::Split
        } else {
            SplitType::Inert
        }
    }

    /// The prime discriminants `D_1 ... D_mu` with product `D`, the 2-part
    /// (if any) first, then odd primes ascending.
    pub fn prime_discriminant_factors(&self) -> Vec<i64> {
        if self.is_rational() {
            return Vec::new();
        }
        let odd = arith::factor(self.disc.unsigned_abs()).expect("discriminant within factor range");
        let mut odd_parts = Vec::new();
        let mut prod: i64 = 1;
        for (p, _) in odd.into_iter().filter(|&(p, _)| p != 2) {
            let star = if p % 4 == 1 { p as i64 } else { -(p as i64) };
            prod *= star;
            odd_parts.push(star);
        }
        let mut out = Vec::with_capacity(odd_parts.len() + 1);
        let even = self.disc / prod;
        if even != 1 {
            debug_assert!(matches!(even, -4 | 8 | -8));
            out.push(even);
        }
        out.extend(odd_parts);
        out
    }

    /// Values of the genus characters `(D_i | p)` at an unramified prime.
    pub fn genus_character_vector(&self, p: u64) -> Result<Vec<i8>, QuadFieldError> {
        if !arith::is_prime(p) {
            return Err(QuadFieldError::NotPrime(p));
        }
        if self.disc % p as i64 == 0 {
            return Err(QuadFieldError::PrimeDividesDiscriminant { p, disc: self.disc });
        }
        Ok(self.prime_discriminant_factors().into_iter().map(|di| kronecker(di, p as i64)).collect())
    }

    /// Genus characters of a prime ideal of norm `p`, where `p` is split or
    /// ramified. At a ramified prime the character whose discriminant `p`
    /// divides is recovered from the product relation `prod chi_i = 1`.
    pub fn ideal_genus_vector(&self, p: u64) -> Vec<i8> {
        let factors = self.prime_discriminant_factors();
        let mut vals: Vec<Option<i8>> =
            factors.iter().map(|&di| if di % p as i64 == 0 { None } else { Some(kronecker(di, p as i64)) }).collect();
        let known: i8 = vals.iter().flatten().product();
        let missing = vals.iter().filter(|v| v.is_none()).count();
        debug_assert!(missing <= 1);
        for v in vals.iter_mut() {
            if v.is_none() {
                *v = Some(known);
            }
        }
        vals.into_iter().map(|v| v.unwrap()).collect()
    }

    /// 2-rank of the class group, `mu - 1` by genus theory.
    pub fn two_rank(&self) -> u32 {
        (self.prime_discriminant_factors().len() as u32).saturating_sub(1)
    }

    /// Number of roots of unity.
    pub fn roots_of_unity(&self) -> u32 {
        match self.disc {
            -3 => 6,
            -4 => 4,
            _ => 2,
        }
    }

    /// The class group by exhaustive enumeration of reduced forms. Memoized.
    pub fn class_group(&self) -> Result<Arc<ClassGroup>, QuadFieldError> {
        if !self.is_imaginary() {
            return Err(QuadFieldError::NotImaginary(self.disc));
        }
        let memo = class_group_memo();
        if let Some(cg) = memo.read().unwrap().get(&self.disc) {
            return Ok(cg.clone());
        }
        let cg = Arc::new(ClassGroup::enumerate(self));
        memo.write().unwrap().entry(self.disc).or_insert_with(|| cg.clone());
        Ok(cg)
    }

    /// Class number from the finite form of Dirichlet's formula,
    /// `h = -(w / 2|D|) * sum_{a=1}^{|D|} chi_D(a) a`.
    pub fn class_number_analytic(&self) -> Result<u64, QuadFieldError> {
        if !self.is_imaginary() {
            return Err(QuadFieldError::NotImaginary(self.disc));
        }
        let q = self.disc.unsigned_abs() as i64;
        let s: i128 = (1..q).map(|a| kronecker(self.disc, a) as i128 * a as i128).sum();
        let num = -(self.roots_of_unity() as i128) * s;
        let den = 2 * q as i128;
        debug_assert_eq!(num % den, 0);
        Ok((num / den) as u64)
    }

    /// `L(2, chi_D)` with a certified absolute error. Memoized per discriminant.
    pub fn l_value_at_2(&self) -> Validated {
        if let Some(v) = memo::l_value(self.disc) {
            return v;
        }
        let v = l_value_hurwitz(self.disc);
        memo::seed_l_value(self.disc, v);
        v
    }

    /// `zeta_k(2) = zeta(2) L(2, chi_D)`; for the rational field, `zeta(2)`.
    pub fn zeta_at_2(&self) -> Validated {
        let zeta2 = zeta2();
        if self.is_rational() {
            zeta2
        } else {
            zeta2 * self.l_value_at_2()
        }
    }
}

impl fmt::Display for QuadField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_rational() {
            write!(f, "Q")
        } else {
            write!(f, "Q(sqrt({}))", self.d)
        }
    }
}

/// `pi^2 / 6` as an enclosure.
pub fn zeta2() -> Validated {
    let pi = Validated::pi();
    pi * pi * (1.0 / 2.0) / Validated::exact(3.0)
}

const BERNOULLI_EVEN: [f64; 9] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
];
const HURWITZ_SHIFT: u32 = 8;
const HURWITZ_TERMS: usize = 8;

/// `zeta(2, x)` for `x in (0, 1]` by Euler-Maclaurin after shifting by
/// `HURWITZ_SHIFT`; returns the value and the truncation bound.
fn hurwitz_zeta2(x: f64) -> (f64, f64) {
    let mut s = 0.0;
    for k in (0..HURWITZ_SHIFT).rev() {
        let t = k as f64 + x;
        s += 1.0 / (t * t);
    }
    let n = HURWITZ_SHIFT as f64 + x;
    let inv = 1.0 / n;
    let inv2 = inv * inv;
    let mut tail = 0.0;
    // B_{2j} n^{-2j-1}, summed from the smallest term
    let mut powers = [0.0f64; HURWITZ_TERMS];
    let mut p = inv * inv2;
    for slot in powers.iter_mut() {
        *slot = p;
        p *= inv2;
    }
    for j in (0..HURWITZ_TERMS).rev() {
        tail += BERNOULLI_EVEN[j] * powers[j];
    }
    let value = s + inv + 0.5 * inv2 + tail;
    // completely monotone summand: remainder bounded by the first omitted term
    let trunc = 2.0 * BERNOULLI_EVEN[HURWITZ_TERMS].abs() * p;
    (value, trunc)
}

/// `L(2, chi_D) = |D|^-2 sum_{a=1}^{|D|} chi_D(a) zeta(2, a/|D|)`.
pub fn l_value_hurwitz(disc: i64) -> Validated {
    let q = disc.unsigned_abs();
    let qf = q as f64;
    let inv_q2 = 1.0 / (qf * qf);
    let mut sum = CompensatedSum::default();
    let mut trunc = 0.0;
    for a in 1..=q {
        let chi = kronecker(disc, a as i64);
        if chi == 0 {
            continue;
        }
        let (h, t) = hurwitz_zeta2(a as f64 / qf);
        sum.add(chi as f64 * h * inv_q2);
        trunc += t * inv_q2;
    }
    // per-term relative rounding of the Hurwitz evaluation and scaling
    let per_term = (HURWITZ_SHIFT as f64 + HURWITZ_TERMS as f64 + 8.0) * f64::EPSILON;
    let error = trunc + per_term * sum.abs_sum() + sum.rounding_bound();
    Validated::new(sum.value(), error)
}

/// `L(2, chi_D)` by the partial sum over `n <= terms` plus the tail bound
/// `|D| / (2 terms^2)` for nontrivial characters (Abel summation with
/// `|sum chi| <= |D|/2` over any interval) and `1/terms` for the trivial one.
pub fn l_value_direct(disc: i64, terms: u64) -> Validated {
    let q = disc.unsigned_abs();
    let table: Vec<i8> = (0..q).map(|a| kronecker(disc, a as i64)).collect();
    let mut sum = CompensatedSum::default();
    for n in (1..=terms).rev() {
        let chi = table[(n % q) as usize];
        if chi != 0 {
            let nf = n as f64;
            sum.add(chi as f64 / (nf * nf));
        }
    }
    let tail = if q == 1 { 1.0 / terms as f64 } else { q as f64 / (2.0 * (terms as f64) * (terms as f64)) };
    let error = tail + 2.0 * f64::EPSILON * sum.abs_sum() + sum.rounding_bound();
    Validated::new(sum.value(), error)
}

/// A binary quadratic form `a x^2 + b x y + c y^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BinaryForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl BinaryForm {
    pub fn new(a: i64, b: i64, c: i64) -> Self {
        Self { a, b, c }
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    pub fn is_reduced(&self) -> bool {
        let (a, b, c) = (self.a, self.b, self.c);
        b.abs() <= a && a <= c && !((b.abs() == a || a == c) && b < 0)
    }

    /// Forms of order dividing 2 in the class group.
    pub fn is_ambiguous(&self) -> bool {
        self.b == 0 || self.b == self.a || self.a == self.c
    }

    /// Reduction of a positive definite form.
    pub fn reduce(self) -> Self {
        let disc = self.discriminant();
        assert!(disc < 0 && self.a > 0, "only positive definite forms reduce");
        let (mut a, mut b, mut c) = (self.a, self.b, self.c);
        loop {
            if b > a || b <= -a {
                let k = Integer::div_floor(&(a - b), &(2 * a));
                b += 2 * a * k;
                c = (b * b - disc) / (4 * a);
            }
            if a > c {
                std::mem::swap(&mut a, &mut c);
                b = -b;
                continue;
            }
            if a == c && b < 0 {
                b = -b;
            }
            return Self { a, b, c };
        }
    }

    /// Evaluates the form at `(x, y)`.
    pub fn eval(&self, x: i64, y: i64) -> i64 {
        self.a * x * x + self.b * x * y + self.c * y * y
    }
}

impl fmt::Display for BinaryForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.a, self.b, self.c)
    }
}

/// Class group of an imaginary quadratic field as its set of reduced forms.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGroup {
    pub discriminant: i64,
    pub h: u64,
    pub forms: Vec<BinaryForm>,
    pub two_rank: u32,
    pub prime_discriminant_factors: Vec<i64>,
}

impl ClassGroup {
    fn enumerate(field: &QuadField) -> Self {
        let disc = field.discriminant();
        let n = disc.unsigned_abs() as i64;
        let mut forms = Vec::new();
        let mut a = 1i64;
        while 3 * a * a <= n {
            let mut b = -a + 1;
            while b <= a {
                if (b - disc).rem_euclid(2) == 0 {
                    let num = b * b - disc;
                    if num % (4 * a) == 0 {
                        let c = num / (4 * a);
                        let f = BinaryForm::new(a, b, c);
                        if f.is_reduced() && a.gcd(&b).gcd(&c) == 1 {
                            forms.push(f);
                        }
                    }
                }
                b += 1;
            }
            a += 1;
        }
        let factors = field.prime_discriminant_factors();
        Self {
            discriminant: disc,
            h: forms.len() as u64,
            forms,
            two_rank: (factors.len() as u32).saturating_sub(1),
            prime_discriminant_factors: factors,
        }
    }

    pub fn ambiguous_count(&self) -> usize {
        self.forms.iter().filter(|f| f.is_ambiguous()).count()
    }
}

fn class_group_memo() -> &'static RwLock<HashMap<i64, Arc<ClassGroup>>> {
    static MEMO: OnceLock<RwLock<HashMap<i64, Arc<ClassGroup>>>> = OnceLock::new();
    MEMO.get_or_init(Default::default)
}

/// Process-wide memo of `L(2, chi_D)` values. Readers run concurrently;
/// writers are serialized by the lock. Front ends may seed it from a
/// persistent cache.
pub mod memo {
    use super::*;

    fn table() -> &'static RwLock<HashMap<i64, Validated>> {
        static MEMO: OnceLock<RwLock<HashMap<i64, Validated>>> = OnceLock::new();
        MEMO.get_or_init(Default::default)
    }

    pub fn l_value(disc: i64) -> Option<Validated> {
        table().read().unwrap().get(&disc).copied()
    }

    pub fn seed_l_value(disc: i64, value: Validated) {
        table().write().unwrap().entry(disc).or_insert(value);
    }

    pub fn seed_class_group(group: ClassGroup) {
        class_group_memo().write().unwrap().entry(group.discriminant).or_insert_with(|| Arc::new(group));
    }

    pub fn cached_class_group(disc: i64) -> Option<Arc<ClassGroup>> {
        class_group_memo().read().unwrap().get(&disc).cloned()
    }
}

/// Negative fundamental discriminants in `[lo, hi]`, ascending.
pub fn imaginary_fundamental_discriminants(lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi.min(-3)).filter(|&d| QuadField::from_discriminant(d).is_ok()).collect()
}
