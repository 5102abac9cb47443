//! Commensurability classes over a fixed imaginary quadratic field, ordered
//! by volume, and the proportion of them carrying a totally geodesic surface
//! of small area.
//!
//! A class is an admissible `A` over `k`; its volume is
//! `V_C = V_0 prod_{P in Ram_f} (|P| - 1)` with `V_0` the Bianchi covolume.
//! Since every factor is at least one, a volume cutoff bounds the norms of
//! the ramified primes, and the search is finite.

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::arith::{self, ArithError};
use crate::covolume::{self, CommClass, CovolumeError, PiArea};
use crate::geodesic::{self, GeodesicError};
use crate::quadfield::{QuadField, SplitType};
use crate::quatalg::{PrimeIdeal, QAlgK, QuatAlgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CensusError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Covolume(#[from] CovolumeError),
    #[error(transparent)]
    Algebra(#[from] QuatAlgError),
}

/// Relative slack on the norm-product bound so that classes whose volume
/// is within rounding of the cutoff are enumerated and then decided by the
/// computed volume.
const SLACK: f64 = 1e-9;

/// Prime ideals of `field` with `|P| - 1 <= bound`, ordered by norm.
fn ideals_up_to(field: &QuadField, bound: f64) -> Result<Vec<(PrimeIdeal, u64)>, CensusError> {
    let limit = bound.floor() as u64 + 1;
    let mut out = Vec::new();
    for p in arith::default_sieve().primes_up_to(limit)? {
        match field.splitting_type(p) {
            SplitType::Split => {
                out.push((PrimeIdeal::first(p), p));
                out.push((PrimeIdeal::second(p), p));
            }
            SplitType::Ramified => out.push((PrimeIdeal::unique(p), p)),
            SplitType::Inert => {
                if let Some(n) = p.checked_mul(p).filter(|&n| (n - 1) as f64 <= bound) {
                    out.push((PrimeIdeal::unique(p), n));
                }
            }
        }
    }
    out.sort_by_key(|&(i, n)| (n, i));
    Ok(out)
}

/// Every commensurability class over `field` with `V_C < vmax`, sorted by
/// volume and then by the canonical ramification encoding.
#[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
pub fn enumerate_classes(field: &QuadField, vmax: f64) -> Result<Vec<CommClass>, CensusError> {
    if !field.is_imaginary() {
        return Err(QuatAlgError::NotImaginary(*field).into());
    }
    let base = covolume::kleinian_covol_norm1(&QAlgK::matrix(*field)?)?;
    if !(vmax > base.value) {
        return Err(CensusError::Precondition(format!("volume cutoff {vmax} does not exceed the base volume {base}")));
    }
    let bound = vmax / base.lower() * (1.0 + SLACK);
    let ideals = ideals_up_to(field, bound)?;
    let weights: Vec<f64> = ideals.iter().map(|&(_, n)| (n - 1) as f64).collect();

    // partition by the smallest ideal in the set
    let mut sets: Vec<Vec<PrimeIdeal>> = (0..ideals.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut found = Vec::new();
            if weights[i] < bound {
                let mut chosen = vec![ideals[i].0];
                extend(&ideals, &weights, i + 1, weights[i], bound, &mut chosen, &mut found);
            }
            found
        })
        .collect();
    sets.push(Vec::new());

    let mut classes: Vec<CommClass> = sets
        .into_par_iter()
        .map(|s| CommClass::new(QAlgK::new(*field, s)?))
        .filter(|c| c.as_ref().map_or(true, |c| c.volume.value < vmax))
        .collect::<Result<_, CovolumeError>>()
        .map_err(CensusError::from)?;
    // V_C is V_0 times the norm product, so this is the volume order
    classes.sort_by_cached_key(|c| (c.algebra.norm_product(), c.algebra.clone()));
    Ok(classes)
}

fn extend(
    ideals: &[(PrimeIdeal, u64)],
    weights: &[f64],
    start: usize,
    product: f64,
    bound: f64,
    chosen: &mut Vec<PrimeIdeal>,
    found: &mut Vec<Vec<PrimeIdeal>>,
) {
    if chosen.len().is_multiple_of(2) {
        found.push(chosen.clone());
    }
    for i in start..ideals.len() {
        let next = product * weights[i];
        if next >= bound {
            break;
        }
        chosen.push(ideals[i].0);
        extend(ideals, weights, i + 1, next, bound, chosen, found);
        chosen.pop();
    }
}

fn ser_ratio<S: Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CensusRow {
    #[serde(rename = "V")]
    pub v: f64,
    pub n_total: u64,
    pub n_tg: u64,
    pub x: PiArea,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: BigRational,
}

/// Whether the class carries a totally geodesic surface of area below `x`.
pub fn has_small_tgs(class: &CommClass, x: &PiArea) -> Result<bool, CensusError> {
    if geodesic::has_tgs(&class.algebra)?.is_none() {
        return Ok(false);
    }
    // the lower bound alone often decides
    if &geodesic::tg_area_lower(&class.algebra)? >= x {
        return Ok(false);
    }
    let sp = geodesic::tg_spectrum(&class.algebra, 1)?;
    Ok(sp.min_area().is_some_and(|m| m < x))
}

pub fn ratio_table(field: &QuadField, grid: &[f64], x: &PiArea) -> Result<Vec<CensusRow>, CensusError> {
    ratio_table_with(field, grid, x, false)
}

/// As [`ratio_table`]; `cocompact_only` drops the non-cocompact (matrix
/// algebra) class from both counts.
pub fn ratio_table_with(
    field: &QuadField,
    grid: &[f64],
    x: &PiArea,
    cocompact_only: bool,
) -> Result<Vec<CensusRow>, CensusError> {
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CensusError::Precondition("volume grid must be nonempty and increasing".into()));
    }
    let top = *grid.last().unwrap();
    let mut classes = enumerate_classes(field, top)?;
    if cocompact_only {
        classes.retain(|c| !c.algebra.ram_f().is_empty());
    }
    let small: Vec<bool> = classes.par_iter().map(|c| has_small_tgs(c, x)).collect::<Result<_, _>>()?;
    let base = classes.first().map(|c| c.volume.value);
    let mut rows = Vec::with_capacity(grid.len());
    for &v in grid {
        if base.is_some_and(|b| v <= b) && !cocompact_only {
            return Err(CensusError::Precondition(format!("grid point {v} does not exceed the base volume")));
        }
        let below: Vec<usize> = (0..classes.len()).filter(|&i| classes[i].volume.value < v).collect();
        let n_total = below.len() as u64;
        let n_tg = below.iter().filter(|&&i| small[i]).count() as u64;
        let ratio = if n_total == 0 {
            BigRational::from_integer(0.into())
        } else {
            BigRational::new(BigInt::from(n_tg), BigInt::from(n_total))
        };
        rows.push(CensusRow { v, n_total, n_tg, x: x.clone(), ratio });
    }
    Ok(rows)
}

/// The area `4 pi (g - 1)` below which a surface of genus less than `g`
/// must lie.
pub fn genus_threshold_translate(x_genus: f64) -> Result<PiArea, CensusError> {
    if !(x_genus >= 2.0 && x_genus.is_finite()) {
        return Err(CensusError::Precondition(format!("genus threshold must be at least 2, got {x_genus}")));
    }
    let c = BigRational::from_float(4.0 * (x_genus - 1.0)).expect("finite");
    Ok(PiArea::new(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;
    use std::f64::consts::PI;

    fn field(d: i64) -> QuadField {
        QuadField::new(d).unwrap()
    }

    /// Breadth-first scan over all ideal subsets with small norm product,
    /// with ideals listed by brute-force factoring of `x^2 - D` style tests.
    fn oracle(k: &QuadField, vmax: f64) -> Vec<(String, f64)> {
        let d = k.discriminant();
        let zk = k.zeta_at_2().value;
        let v0 = (d.unsigned_abs() as f64).powf(1.5) * zk / (4.0 * PI * PI);
        let bound = vmax / v0;
        let mut pool: Vec<(PrimeIdeal, u64)> = Vec::new();
        for p in (2..=bound as u64 + 1).filter(|&p| arith::is_prime(p)) {
            // count roots of x^2 - d x + (d^2 - d)/4, the minimal polynomial of the ring generator
            let (b, c) = (-(d as i128), ((d as i128) * (d as i128) - d as i128) / 4);
            let roots = (0..p as i128).filter(|&x| (x * x + b * x + c).rem_euclid(p as i128) == 0).count();
            match roots {
                2 => {
                    pool.push((PrimeIdeal::first(p), p));
                    pool.push((PrimeIdeal::second(p), p));
                }
                1 => pool.push((PrimeIdeal::unique(p), p)),
                _ => pool.push((PrimeIdeal::unique(p), p * p)),
            }
        }
        let mut seen: BTreeSet<Vec<PrimeIdeal>> = BTreeSet::new();
        let mut frontier: Vec<(Vec<PrimeIdeal>, f64)> = vec![(vec![], 1.0)];
        seen.insert(vec![]);
        while let Some((set, prod)) = frontier.pop() {
            for &(i, n) in &pool {
                if set.contains(&i) || prod * (n - 1) as f64 >= bound * 1.000001 {
                    continue;
                }
                let mut s = set.clone();
                s.push(i);
                s.sort();
                if seen.insert(s.clone()) {
                    frontier.push((s, prod * (n - 1) as f64));
                }
            }
        }
        let mut out: Vec<(u64, QAlgK)> = seen
            .into_iter()
            .filter(|s| s.len() % 2 == 0)
            .map(|s| {
                let prod: u64 = s.iter().map(|i| pool.iter().find(|(j, _)| j == i).unwrap().1 - 1).product();
                (prod, QAlgK::new(*k, s).unwrap())
            })
            .filter(|(p, _)| v0 * (*p as f64) < vmax)
            .collect();
        out.sort();
        out.into_iter().map(|(p, a)| (a.to_string(), v0 * p as f64)).collect()
    }

    fn keys(classes: &[CommClass]) -> Vec<String> {
        classes.iter().map(|c| c.key()).collect()
    }

    #[test]
    fn bianchi_only_below_031() {
        let c = enumerate_classes(&QuadField::gaussian(), 0.31).unwrap();
        assert_eq!(keys(&c), vec!["K[-4]{}"]);
        assert!((c[0].volume.value - 0.305_322).abs() < 1e-6);
    }

    #[test]
    fn matches_oracle() {
        for (d, vmax) in [(-1, 10.0), (-1, 200.0), (-3, 100.0), (-43, 4000.0), (-15, 500.0)] {
            let k = field(d);
            let fast = enumerate_classes(&k, vmax).unwrap();
            let slow = oracle(&k, vmax);
            assert_eq!(keys(&fast), slow.iter().map(|s| s.0.clone()).collect::<Vec<_>>(), "D={d}");
            for (c, (_, v)) in fast.iter().zip(&slow) {
                assert!((c.volume.value - v).abs() < 1e-9 * v);
            }
        }
    }

    #[test]
    fn precondition() {
        let k = field(-43);
        assert!(matches!(enumerate_classes(&k, 5.0), Err(CensusError::Precondition(_))));
        assert!(enumerate_classes(&k, 10.0).is_ok());
    }

    #[test]
    fn ratio_rows() {
        let x = PiArea::from_ratio(1, 2);
        let rows = ratio_table(&QuadField::gaussian(), &[1.0, 10.0, 100.0], &x).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[0].n_tg >= 1);
        for w in rows.windows(2) {
            assert!(w[0].n_total <= w[1].n_total && w[0].n_tg <= w[1].n_tg);
        }
        for r in &rows {
            assert!(r.n_tg <= r.n_total);
            assert_eq!(r.ratio, BigRational::new(BigInt::from(r.n_tg), BigInt::from(r.n_total)));
        }
        // nothing lies below the universal floor pi/24
        let rows = ratio_table(&QuadField::gaussian(), &[1.0, 10.0, 100.0], &PiArea::from_ratio(1, 100)).unwrap();
        assert!(rows.iter().all(|r| r.n_tg == 0));
        let cc = ratio_table_with(&QuadField::gaussian(), &[1.0, 10.0], &x, true).unwrap();
        assert_eq!(cc[0].n_total, rows[0].n_total - 1);
        assert!(ratio_table(&QuadField::gaussian(), &[10.0, 1.0], &x).is_err());
    }

    #[test]
    fn genus_translation() {
        assert_eq!(genus_threshold_translate(2.0).unwrap(), PiArea::from_ratio(4, 1));
        assert_eq!(genus_threshold_translate(3.0).unwrap(), PiArea::from_ratio(8, 1));
        assert!(genus_threshold_translate(1.5).is_err());
        for g in 2..40u64 {
            let a = genus_threshold_translate(g as f64).unwrap();
            assert!(a.genus_range().contains(g));
            assert!(covolume::genus_range_from_area(a.to_f64()).unwrap().contains(g));
        }
    }
}
