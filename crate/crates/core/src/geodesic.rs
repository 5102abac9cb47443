//! Totally geodesic surfaces: the existence test, the area spectrum of
//! compatible Fuchsian algebras, and the lower/upper area bounds.
//!
//! A class `(k, A)` carries a totally geodesic surface exactly when
//! `Ram_f(A)` consists of conjugate pairs above split rational primes
//! `p_1..p_r`. The compatible algebras over `Q` are then the `B` ramified at
//! all `p_i` together with an arbitrary set `S` of primes non-split in `k`,
//! subject to `|S| = r (mod 2)`. Their coareas form the spectrum.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, ArithError};
use crate::covolume::{self, CommClass, CovolumeError, PiArea};
use crate::quadfield::{QuadField, SplitType};
use crate::quatalg::{compatible, QAlgK, QAlgQ, QuatAlgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeodesicError {
    #[error(transparent)]
    Algebra(#[from] QuatAlgError),
    #[error(transparent)]
    Covolume(#[from] CovolumeError),
    #[error("{0} contains no totally geodesic surfaces")]
    NoTotallyGeodesic(String),
    #[error("enumeration needs primes up to {requested}, beyond the ceiling {ceiling}")]
    BoundTooLarge { requested: u64, ceiling: u64 },
    #[error("the spectrum depth must be positive")]
    ZeroDepth,
    #[error("threshold must be positive and finite, got {0}")]
    BadThreshold(f64),
}

impl From<ArithError> for GeodesicError {
    fn from(e: ArithError) -> Self {
        match e {
            ArithError::ResourceExhausted { requested, ceiling } => GeodesicError::BoundTooLarge { requested, ceiling },
            other => panic!("unexpected arithmetic error: {other}"),
        }
    }
}

/// Which Fuchsian group attached to `B` measures the area.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum AreaKind {
    /// The norm-one group of a maximal order.
    #[default]
    NormOne,
    /// The normalizer of a maximal order. Undefined for the matrix algebra,
    /// which is therefore skipped.
    Maximal,
}

impl AreaKind {
    fn coarea(self, b: &QAlgQ) -> Result<PiArea, CovolumeError> {
        match self {
            AreaKind::NormOne => covolume::fuchsian_coarea_norm1(b),
            AreaKind::Maximal => covolume::fuchsian_coarea_maximal(b),
        }
    }

    /// Multiplicative contribution of one ramified prime to the coefficient.
    fn weight(self, p: u64) -> BigRational {
        let w = BigRational::from_integer(BigInt::from(p - 1));
        match self {
            AreaKind::NormOne => w,
            AreaKind::Maximal => w / BigRational::from_integer(2.into()),
        }
    }

    fn constant(self) -> BigRational {
        match self {
            AreaKind::NormOne => BigRational::new(1.into(), 3.into()),
            AreaKind::Maximal => BigRational::new(1.into(), 6.into()),
        }
    }
}

/// The rational primes below the ramification of `A` when `A` contains
/// totally geodesic surfaces; `Some(vec![])` for the matrix algebra.
pub fn has_tgs(a: &QAlgK) -> Result<Option<Vec<u64>>, GeodesicError> {
    if !a.is_admissible() {
        return Err(QuatAlgError::NotAdmissible(a.to_string()).into());
    }
    Ok(a.split_pairs())
}

fn base_primes(a: &QAlgK) -> Result<Vec<u64>, GeodesicError> {
    has_tgs(a)?.ok_or_else(|| GeodesicError::NoTotallyGeodesic(a.to_string()))
}

/// Every admissible indefinite `B` over `Q` compatible with `A` and with
/// coarea at most `max_area`, sorted by area and then by ramification.
pub fn enumerate_compatible(
    a: &QAlgK,
    max_area: &PiArea,
    kind: AreaKind,
) -> Result<Vec<(QAlgQ, PiArea)>, GeodesicError> {
    enumerate_with_sieve(a, max_area, kind, arith::default_sieve())
}

pub fn enumerate_with_sieve(
    a: &QAlgK,
    max_area: &PiArea,
    kind: AreaKind,
    sieve: &arith::PrimeSieve,
) -> Result<Vec<(QAlgQ, PiArea)>, GeodesicError> {
    let base = base_primes(a)?;
    let field = a.field();
    let c0 = base.iter().fold(kind.constant(), |acc, &p| acc * kind.weight(p));
    // bound on prod_{p in S} weight(p)
    let bound = max_area.coefficient() / &c0;

    // Only 2 can have weight below one; it is the smallest prime, so the
    // product of every other prime in S is at least min(1, weight(2)).
    let w2 = kind.weight(2);
    let min_other =
        if field.splitting_type(2) != SplitType::Split && w2 < BigRational::one() { w2 } else { BigRational::one() };
    let wmax = &bound / min_other;
    let limit = match kind {
        AreaKind::NormOne => wmax.floor().to_integer() + BigInt::one(),
        AreaKind::Maximal => (wmax * BigRational::from_integer(2.into())).floor().to_integer() + BigInt::one(),
    };
    let limit = limit.to_u64().unwrap_or(u64::MAX).max(2);
    let primes: Vec<u64> =
        sieve.primes_up_to(limit)?.into_iter().filter(|&p| field.splitting_type(p) != SplitType::Split).collect();
    let weights: Vec<BigRational> = primes.iter().map(|&p| kind.weight(p)).collect();

    let parity = base.len() % 2;
    let mut found = Vec::new();
    let mut chosen = Vec::new();
    dfs(&primes, &weights, 0, &BigRational::one(), &bound, parity, &mut chosen, &mut |s| found.push(s.to_vec()));

    let mut out = Vec::with_capacity(found.len());
    for s in found {
        let b = QAlgQ::indefinite(base.iter().copied().chain(s));
        if kind == AreaKind::Maximal && b.ram_f().is_empty() {
            continue;
        }
        debug_assert!(compatible(&b, a));
        let area = kind.coarea(&b)?;
        debug_assert!(&area <= max_area);
        out.push((b, area));
    }
    out.sort_by(|(b1, a1), (b2, a2)| a1.cmp(a2).then_with(|| b1.ram_f().iter().cmp(b2.ram_f().iter())));
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn dfs(
    primes: &[u64],
    weights: &[BigRational],
    start: usize,
    product: &BigRational,
    bound: &BigRational,
    parity: usize,
    chosen: &mut Vec<u64>,
    emit: &mut dyn FnMut(&[u64]),
) {
    if chosen.len() % 2 == parity && product <= bound {
        emit(chosen);
    }
    for i in start..primes.len() {
        let next = product * &weights[i];
        if &next > bound {
            // weights are nondecreasing and every later factor is >= 1
            break;
        }
        chosen.push(primes[i]);
        dfs(primes, weights, i + 1, &next, bound, parity, chosen, emit);
        chosen.pop();
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumEntry {
    pub area: PiArea,
    pub witnesses: Vec<QAlgQ>,
}

/// The first `requested_n` distinct areas of compatible Fuchsian algebras.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TgSpectrum {
    pub entries: Vec<SpectrumEntry>,
    pub requested_n: usize,
    /// Set when the prime ceiling stopped the search before `requested_n`
    /// areas were found.
    pub truncated: bool,
}

impl TgSpectrum {
    pub fn areas(&self) -> Vec<PiArea> {
        self.entries.iter().map(|e| e.area.clone()).collect()
    }

    pub fn min_area(&self) -> Option<&PiArea> {
        self.entries.first().map(|e| &e.area)
    }
}

pub fn tg_spectrum(a: &QAlgK, n: usize) -> Result<TgSpectrum, GeodesicError> {
    tg_spectrum_with(a, n, AreaKind::NormOne, arith::default_sieve())
}

pub fn tg_spectrum_with(
    a: &QAlgK,
    n: usize,
    kind: AreaKind,
    sieve: &arith::PrimeSieve,
) -> Result<TgSpectrum, GeodesicError> {
    if n == 0 {
        return Err(GeodesicError::ZeroDepth);
    }
    let mut bound = match kind {
        AreaKind::NormOne => tg_area_upper_witness(a)?.1,
        AreaKind::Maximal => PiArea::from_ratio(1, 1),
    };
    let mut last: Vec<SpectrumEntry> = Vec::new();
    loop {
        let list = match enumerate_with_sieve(a, &bound, kind, sieve) {
            Ok(list) => list,
            Err(GeodesicError::BoundTooLarge { .. }) => {
                return Ok(TgSpectrum { entries: last, requested_n: n, truncated: true })
            }
            Err(e) => return Err(e),
        };
        let mut grouped: BTreeMap<PiArea, Vec<QAlgQ>> = BTreeMap::new();
        for (b, area) in list {
            grouped.entry(area).or_default().push(b);
        }
        let entries: Vec<SpectrumEntry> =
            grouped.into_iter().take(n).map(|(area, witnesses)| SpectrumEntry { area, witnesses }).collect();
        if entries.len() == n {
            return Ok(TgSpectrum { entries, requested_n: n, truncated: false });
        }
        last = entries;
        bound = bound.scale(&BigRational::from_integer(2.into()));
    }
}

/// Lower bound `(pi / 24) prod (p_i - 1)/2` for the area of a totally
/// geodesic surface, from the base primes of `A`.
pub fn tg_area_lower(a: &QAlgK) -> Result<PiArea, GeodesicError> {
    Ok(lower_from_base(&base_primes(a)?))
}

fn lower_from_base(base: &[u64]) -> PiArea {
    let c = base.iter().fold(c_ell(), |acc, &p| acc * BigRational::new(BigInt::from(p - 1), 2.into()));
    PiArea::new(c)
}

/// `c_ell` for `ell = Q`.
pub fn c_ell() -> BigRational {
    BigRational::new(1.into(), 24.into())
}

/// Smallest rational prime inert or ramified in `field`.
pub fn smallest_nonsplit_prime(field: &QuadField) -> u64 {
    arith::default_sieve()
        .iter_from(2)
        .find(|&p| field.splitting_type(p) != SplitType::Split)
        .expect("a non-split prime exists below any reasonable ceiling")
}

/// The explicit compatible algebra bounding the least area from above:
/// ramified at the base primes, plus the smallest non-split prime when the
/// number of base primes is odd.
pub fn tg_area_upper_witness(a: &QAlgK) -> Result<(QAlgQ, PiArea), GeodesicError> {
    let mut primes = base_primes(a)?;
    if primes.len() % 2 == 1 {
        primes.push(smallest_nonsplit_prime(a.field()));
    }
    let b = QAlgQ::indefinite(primes);
    let area = covolume::fuchsian_coarea_norm1(&b)?;
    Ok((b, area))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremABounds {
    pub lower: PiArea,
    pub upper_witness: Option<(QAlgQ, PiArea)>,
    pub c_ell: BigRational,
}

pub fn theorem_a_bounds(a: &QAlgK) -> Result<TheoremABounds, GeodesicError> {
    Ok(TheoremABounds { lower: tg_area_lower(a)?, upper_witness: Some(tg_area_upper_witness(a)?), c_ell: c_ell() })
}

/// A class whose totally geodesic surfaces all have large area.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeClass {
    pub class: CommClass,
    pub prime: u64,
    pub lower: PiArea,
    /// The threshold on `p` stated with the `8 pi^2` normalization,
    /// `24 X / pi + 1`, reported for comparison.
    pub printed_threshold: f64,
    /// The threshold actually enforced, `48 X / pi + 1`.
    pub enforced_threshold: f64,
}

/// The class ramified at both primes above the smallest split `p` with
/// `(pi / 24)(p - 1)/2 > x`.
pub fn corollary_large_class(field: &QuadField, x: f64) -> Result<LargeClass, GeodesicError> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(GeodesicError::BadThreshold(x));
    }
    if !field.is_imaginary() {
        return Err(QuatAlgError::NotImaginary(*field).into());
    }
    let pi = std::f64::consts::PI;
    let enforced = 48.0 * x / pi + 1.0;
    let start = (enforced.floor() as u64).saturating_sub(1);
    let sieve = arith::default_sieve();
    sieve.ensure(start)?;
    for p in sieve.iter_from(start) {
        if field.splitting_type(p) != SplitType::Split {
            continue;
        }
        let lower = lower_from_base(&[p]);
        if lower.cmp_real(x) == std::cmp::Ordering::Greater {
            let a = QAlgK::above(*field, &[p])?;
            return Ok(LargeClass {
                class: CommClass::new(a)?,
                prime: p,
                lower,
                printed_threshold: 24.0 * x / pi + 1.0,
                enforced_threshold: enforced,
            });
        }
    }
    Err(GeodesicError::BoundTooLarge { requested: enforced as u64, ceiling: sieve.ceiling() })
}
