//! Coareas of arithmetic Fuchsian groups and covolumes of arithmetic Kleinian
//! groups from maximal orders, the generalized index between the norm-one
//! group and the normalizer, and the inequality utilities relating systole,
//! area and genus.
//!
//! Over the base field `Q` both Fuchsian coareas are rational multiples of
//! `pi` and are kept exact as [`PiArea`]. Kleinian covolumes involve
//! `zeta_k(2)` and are [`Validated`] floats.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::quadfield::QuadField;
use crate::quatalg::{QAlgK, QAlgQ, QuatAlgError};
use crate::validated::Validated;

pub type ValidatedVolume = Validated;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CovolumeError {
    #[error(transparent)]
    Algebra(#[from] QuatAlgError),
    #[error("{0} is not an admissible indefinite algebra over Q")]
    NotFuchsian(QAlgQ),
    #[error("the normalizer coarea formula degenerates for the matrix algebra")]
    EmptyRamification,
    #[error("domain error: {0}")]
    Domain(String),
}

/// An exact hyperbolic area `coefficient * pi` with positive rational coefficient.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PiArea(BigRational);

impl PiArea {
    pub fn new(coefficient: BigRational) -> Self {
        assert!(coefficient.is_positive(), "areas are positive");
        Self(coefficient)
    }

    pub fn from_ratio(num: i64, den: i64) -> Self {
        Self::new(BigRational::new(num.into(), den.into()))
    }

    pub fn coefficient(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().expect("finite") * std::f64::consts::PI
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        Self::new(&self.0 * factor)
    }

    /// Compares against a real number. Exact whenever the two sides differ
    /// by more than floating-point resolution.
    pub fn cmp_real(&self, x: f64) -> Ordering {
        let v = self.to_f64();
        let tol = 8.0 * f64::EPSILON * v.abs().max(x.abs());
        if (v - x).abs() <= tol {
            // resolve with a 40-digit rational bracket for pi
            let pi_lo = BigRational::new(
                BigInt::parse_bytes(b"3141592653589793238462643383279502884197", 10).unwrap(),
                BigInt::from(10u32).pow(39),
            );
            let pi_hi = &pi_lo + BigRational::new(BigInt::one(), BigInt::from(10u32).pow(39));
            let xr = BigRational::from_float(x).expect("finite");
            let lo = &self.0 * pi_lo;
            let hi = &self.0 * pi_hi;
            if hi < xr {
                Ordering::Less
            } else if lo > xr {
                Ordering::Greater
            } else {
                Ordering::Equal
            }
        } else {
            v.partial_cmp(&x).expect("finite")
        }
    }

    /// Genera `g >= 2` allowed by `2 pi (g-1) <= area <= 4 pi (g-1)`,
    /// computed exactly.
    pub fn genus_range(&self) -> GenusRange {
        let one = BigRational::one();
        let lo = (&self.0 / BigRational::from_integer(4.into()) + &one).ceil();
        let hi = (&self.0 / BigRational::from_integer(2.into()) + &one).floor();
        let lo = lo.to_integer().to_u64().unwrap_or(u64::MAX).max(2);
        let hi = hi.to_integer().to_u64().unwrap_or(u64::MAX);
        GenusRange::from_bounds(lo, hi)
    }
}

impl fmt::Display for PiArea {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.denom().is_one() {
            write!(f, "{}*pi", self.0.numer())
        } else {
            write!(f, "{}/{}*pi", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse '{0}' as a rational multiple of pi")]
pub struct PiAreaParseError(String);

impl FromStr for PiArea {
    type Err = PiAreaParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || PiAreaParseError(s.to_string());
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let coeff = if t == "pi" {
            BigRational::one()
        } else {
            let body = t.strip_suffix("*pi").ok_or_else(err)?;
            match body.split_once('/') {
                Some((n, d)) => {
                    let n: BigInt = n.parse().map_err(|_| err())?;
                    let d: BigInt = d.parse().map_err(|_| err())?;
                    if d.is_zero() {
                        return Err(err());
                    }
                    BigRational::new(n, d)
                }
                None => BigRational::from_integer(body.parse().map_err(|_| err())?),
            }
        };
        if !coeff.is_positive() {
            return Err(err());
        }
        Ok(Self(coeff))
    }
}

impl Serialize for PiArea {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for PiArea {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum GenusRange {
    Empty,
    Range { min: u64, max: u64 },
}

impl GenusRange {
    fn from_bounds(lo: u64, hi: u64) -> Self {
        if lo > hi {
            GenusRange::Empty
        } else {
            GenusRange::Range { min: lo, max: hi }
        }
    }

    pub fn contains(&self, g: u64) -> bool {
        matches!(*self, GenusRange::Range { min, max } if min <= g && g <= max)
    }
}

/// Genera compatible with a real area under `2 pi (g-1) <= area <= 4 pi (g-1)`.
/// Boundary values within `1e-12` relative are treated as attained.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
pub fn genus_range_from_area(area: f64) -> Result<GenusRange, CovolumeError> {
    if !(area > 0.0) || !area.is_finite() {
        return Err(CovolumeError::Domain(format!("area must be positive, got {area}")));
    }
    let pi = std::f64::consts::PI;
    let lo_real = area / (4.0 * pi) + 1.0;
    let hi_real = area / (2.0 * pi) + 1.0;
    let lo = (lo_real - 1e-12 * lo_real).ceil().max(2.0) as u64;
    let hi = (hi_real + 1e-12 * hi_real).floor() as u64;
    Ok(GenusRange::from_bounds(lo, hi))
}

fn rational_product(primes: impl Iterator<Item = u64>, f: impl Fn(u64) -> BigRational) -> BigRational {
    primes.map(f).fold(BigRational::one(), |a, b| a * b)
}

fn require_fuchsian(b: &QAlgQ) -> Result<(), CovolumeError> {
    if b.is_admissible() && b.is_indefinite() {
        Ok(())
    } else {
        Err(CovolumeError::NotFuchsian(b.clone()))
    }
}

/// Coarea of the norm-one group of a maximal order of an indefinite algebra
/// over `Q`: `(pi / 3) prod (p - 1)`.
pub fn fuchsian_coarea_norm1(b: &QAlgQ) -> Result<PiArea, CovolumeError> {
    require_fuchsian(b)?;
    // 8 pi zeta(2) / (4 pi^2) with zeta(2) = pi^2/6
    let base = BigRational::new(1.into(), 3.into());
    let prod = rational_product(b.ram_f().iter().copied(), |p| BigRational::from_integer(BigInt::from(p - 1)));
    Ok(PiArea::new(base * prod))
}

/// Coarea of the normalizer of a maximal order:
/// `(pi / 6) / t(B) * prod (p - 1)/2`, with `t(B) = 1` over `Q`.
pub fn fuchsian_coarea_maximal(b: &QAlgQ) -> Result<PiArea, CovolumeError> {
    require_fuchsian(b)?;
    if b.ram_f().is_empty() {
        return Err(CovolumeError::EmptyRamification);
    }
    let t = b.type_number()?;
    let base = BigRational::new(1.into(), BigInt::from(6 * t));
    let prod = rational_product(b.ram_f().iter().copied(), |p| BigRational::new(BigInt::from(p - 1), 2.into()));
    Ok(PiArea::new(base * prod))
}

fn biguint_to_validated(n: &BigUint) -> Validated {
    let v = n.to_f64().expect("finite");
    if n.bits() <= 53 {
        Validated::exact(v)
    } else {
        Validated::rounded(v)
    }
}

/// `|D|^{3/2} zeta_k(2)`, the factor common to both Kleinian formulas.
fn field_factor(field: &QuadField) -> Validated {
    let d = Validated::exact(field.discriminant().unsigned_abs() as f64);
    d * d.sqrt() * field.zeta_at_2()
}

fn four_pi_squared() -> Validated {
    let pi = Validated::pi();
    pi * pi * 4.0
}

/// Covolume of the norm-one group of a maximal order:
/// `|D|^{3/2} zeta_k(2) / (4 pi^2) * prod (|P| - 1)`.
pub fn kleinian_covol_norm1(a: &QAlgK) -> Result<ValidatedVolume, CovolumeError> {
    a.require_admissible()?;
    Ok(field_factor(a.field()) / four_pi_squared() * biguint_to_validated(&a.norm_product()))
}

/// Covolume of the normalizer of a maximal order:
/// `2 pi^2 |D|^{3/2} zeta_k(2) / ((4 pi^2)^2 t(A)) * prod (|P| - 1)/2`.
pub fn kleinian_covol_maximal(a: &QAlgK) -> Result<ValidatedVolume, CovolumeError> {
    a.require_admissible()?;
    let t = a.type_number()?;
    let pi = Validated::pi();
    let fpp = four_pi_squared();
    let num = pi * pi * 2.0 * field_factor(a.field());
    let den = fpp * fpp * Validated::exact(t as f64);
    let halves = 0.5f64.powi(a.ram_f().len() as i32);
    Ok(num / den * biguint_to_validated(&a.norm_product()) * halves)
}

/// A monomial `coefficient * pi^power` times an unspecified common factor.
#[derive(Debug, Clone, PartialEq)]
struct PiMonomial {
    coefficient: BigRational,
    power: i32,
}

impl PiMonomial {
    fn div(&self, other: &PiMonomial) -> PiMonomial {
        PiMonomial { coefficient: &self.coefficient / &other.coefficient, power: self.power - other.power }
    }
}

/// `[Gamma_O : Gamma_O^1]` as the exact ratio of the two Kleinian covolume
/// formulas. The transcendental factor `|D|^{3/2} zeta_k(2)` is common to both
/// and cancels; the powers of `pi` cancel symbolically.
pub fn generalized_index(a: &QAlgK) -> Result<BigRational, CovolumeError> {
    a.require_admissible()?;
    let t = a.type_number()?;
    let prod = BigRational::from_integer(BigInt::from(a.norm_product()));
    let n = a.ram_f().len() as u32;
    // norm-one: prod / (4 pi^2)
    let norm1 = PiMonomial { coefficient: &prod / BigRational::from_integer(4.into()), power: -2 };
    // normalizer: 2 pi^2 / (16 pi^4 t) * prod / 2^n
    let maximal = PiMonomial {
        coefficient: BigRational::new(2.into(), BigInt::from(16 * t) * BigInt::from(2u32).pow(n)) * &prod,
        power: -2,
    };
    let ratio = norm1.div(&maximal);
    debug_assert_eq!(ratio.power, 0);
    Ok(ratio.coefficient)
}

/// Closed-form value `2^{|Ram_f|+1} t(A)` of the generalized index.
pub fn generalized_index_closed_form(a: &QAlgK) -> Result<BigRational, CovolumeError> {
    let t = a.type_number()?;
    Ok(BigRational::from_integer(BigInt::from(2u32).pow(a.ram_f().len() as u32 + 1) * BigInt::from(t)))
}

/// Upper bound `log Vol` for the length of the shortest closed geodesic of a
/// closed hyperbolic 3-manifold.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
pub fn sys1_upper(vol: f64) -> Result<f64, CovolumeError> {
    if !(vol > 1.0) {
        return Err(CovolumeError::Domain(format!("log-volume bound needs volume > 1, got {vol}")));
    }
    Ok(vol.ln())
}

/// Marker that the caller is in the large-systole regime in which the genus
/// bound below is valid.
#[derive(Debug, Clone, Copy)]
pub struct LargeSystole;

/// Lower bound `exp((1/2 - eps) sys1)` for the systolic genus.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
pub fn genus_lower_from_sys1(sys1: f64, eps: f64, _regime: LargeSystole) -> Result<f64, CovolumeError> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(CovolumeError::Domain(format!("eps must lie in (0, 1/2), got {eps}")));
    }
    if !(sys1 > 0.0) {
        return Err(CovolumeError::Domain(format!("systole must be positive, got {sys1}")));
    }
    Ok(((0.5 - eps) * sys1).exp())
}

/// A commensurability class, determined by the pair (field, algebra), with
/// its volume `V_C`: the covolume of the norm-one group of a maximal order.
#[derive(Debug, Clone, PartialEq)]
pub struct CommClass {
    pub algebra: QAlgK,
    pub volume: ValidatedVolume,
}

impl CommClass {
    pub fn new(algebra: QAlgK) -> Result<Self, CovolumeError> {
        let volume = kleinian_covol_norm1(&algebra)?;
        Ok(Self { algebra, volume })
    }

    pub fn field(&self) -> &QuadField {
        self.algebra.field()
    }

    /// Canonical key, e.g. `K[-43]{13+,13-}`.
    pub fn key(&self) -> String {
        self.algebra.to_string()
    }
}
