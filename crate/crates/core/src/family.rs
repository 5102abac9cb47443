//! Families of incommensurable manifolds sharing their first `N` totally
//! geodesic areas.
//!
//! Fields `Q(sqrt -q)`, `q` prime, are chosen so that one fixed prime splits
//! (default 13) and every other small prime is inert. Each member's algebra is
//! ramified at the two primes above the split prime, which makes the
//! compatible Fuchsian algebras — and hence the small part of the area
//! spectrum — the same for every member. The spectra are then compared
//! exactly rather than relying on a sufficient condition on the inert set.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigUint;
use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::arith::{self, ArithError, ResidueClass};
use crate::covolume::{self, CommClass, CovolumeError, ValidatedVolume};
use crate::geodesic::{self, GeodesicError, TgSpectrum};
use crate::quadfield::{QuadField, SplitType};
use crate::quatalg::QAlgK;

/// Upper limit on the number of residue classes materialized.
pub const CLASS_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FamilyError {
    #[error("prime {0} is prescribed both split and inert")]
    Inconsistent(u64),
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("{count} residue classes exceed the cap of {cap}")]
    TooManyClasses { count: u128, cap: usize },
    #[error("spectra of D = {first} and D = {other} differ at entry {index}: {left} vs {right}")]
    VerificationFailed { first: i64, other: i64, index: usize, left: String, right: String },
    #[error("member over D = {discriminant} rejected: {reason}")]
    TorsionNotCertified { discriminant: i64, reason: String },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Covolume(#[from] CovolumeError),
}

/// Splitting conditions on `Q(sqrt -q)` for a prime `q = 3 (mod 4)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitPrescription {
    split: BTreeSet<u64>,
    inert: BTreeSet<u64>,
}

impl SplitPrescription {
    pub fn new(
        split: impl IntoIterator<Item = u64>,
        inert: impl IntoIterator<Item = u64>,
    ) -> Result<Self, FamilyError> {
        let split: BTreeSet<u64> = split.into_iter().collect();
        let inert: BTreeSet<u64> = inert.into_iter().collect();
        if let Some(&p) = split.iter().chain(&inert).find(|&&p| !arith::is_prime(p)) {
            return Err(FamilyError::NotPrime(p));
        }
        if let Some(&p) = split.intersection(&inert).next() {
            return Err(FamilyError::Inconsistent(p));
        }
        Ok(Self { split, inert })
    }

    /// One prime split, every other prime below `ceiling` inert.
    pub fn split_one(split_prime: u64, ceiling: u64) -> Result<Self, FamilyError> {
        let inert = (2..ceiling).filter(|&p| p != split_prime && arith::is_prime(p));
        Self::new([split_prime], inert)
    }

    pub fn split(&self) -> &BTreeSet<u64> {
        &self.split
    }

    pub fn inert(&self) -> &BTreeSet<u64> {
        &self.inert
    }

    fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.split.iter().chain(&self.inert).copied()
    }

    fn wants(&self, p: u64) -> SplitType {
        if self.split.contains(&p) {
            SplitType::Split
        } else {
            SplitType::Inert
        }
    }

    /// Whether `field` realizes the prescription, checked prime by prime.
    pub fn is_realized_by(&self, field: &QuadField) -> bool {
        self.primes().all(|p| field.splitting_type(p) == self.wants(p))
    }

    /// The modulus `C`: `8` times the odd primes when 2 is prescribed,
    /// otherwise `4` times them.
    pub fn modulus(&self) -> u64 {
        let two = if self.split.contains(&2) || self.inert.contains(&2) { 8 } else { 4 };
        self.primes().filter(|&p| p != 2).fold(two, |m, p| m * p)
    }
}

/// Residues `a mod C` such that every prime `q = a` has `Q(sqrt -q)`
/// realizing the prescription.
pub fn residue_classes(presc: &SplitPrescription) -> Result<Vec<ResidueClass>, FamilyError> {
    let mut local: Vec<Vec<ResidueClass>> = Vec::new();
    // the 2-adic condition on -q: 1 mod 8 splits 2, 5 mod 8 keeps it inert
    local.push(match presc.split.contains(&2) {
        true => vec![ResidueClass::of(7, 8)?],
        false if presc.inert.contains(&2) => vec![ResidueClass::of(3, 8)?],
        false => vec![ResidueClass::of(3, 4)?],
    });
    for p in presc.primes().filter(|&p| p != 2) {
        let want: i8 = if presc.wants(p) == SplitType::Split { 1 } else { -1 };
        let rs: Vec<ResidueClass> = (1..p)
            .filter(|&r| arith::kronecker(-(r as i64), p as i64) == want)
            .map(|r| ResidueClass::of(r as i64, p))
            .collect::<Result<_, _>>()?;
        local.push(rs);
    }
    let count: u128 = local.iter().map(|v| v.len() as u128).product();
    if count > CLASS_CAP as u128 {
        return Err(FamilyError::TooManyClasses { count, cap: CLASS_CAP });
    }
    let mut acc: Vec<ResidueClass> = vec![ResidueClass::of(0, 1)?];
    for choices in &local {
        let mut next = Vec::with_capacity(acc.len() * choices.len());
        for a in &acc {
            for c in choices {
                next.push(arith::crt(&[a.clone(), c.clone()])?);
            }
        }
        acc = next;
    }
    acc.sort_by(|a, b| a.residue().cmp(b.residue()));
    Ok(acc)
}

/// Ascending search for prime discriminants `-q` realizing a prescription.
/// Residue classes only pre-filter candidates; every hit is re-verified
/// with [`QuadField::splitting_type`].
pub struct FieldSearch<'a> {
    presc: &'a SplitPrescription,
    filter: Option<(u64, HashSet<u64>)>,
    next_start: u64,
    pending: std::collections::VecDeque<QuadField>,
}

const BLOCK: u64 = 1 << 16;

impl<'a> FieldSearch<'a> {
    pub fn new(presc: &'a SplitPrescription) -> Self {
        let filter = residue_classes(presc).ok().and_then(|classes| {
            let m = classes.first()?.modulus().to_u64()?;
            let set = classes.iter().map(|c| c.residue().to_u64().unwrap()).collect();
            Some((m, set))
        });
        Self { presc, filter, next_start: 4, pending: Default::default() }
    }

    fn candidate(&self, q: u64) -> bool {
        if q % 4 != 3 || q == 3 || self.presc.primes().any(|p| p == q) {
            return false;
        }
        if let Some((m, set)) = &self.filter {
            if !set.contains(&(q % m)) {
                return false;
            }
        }
        let field = QuadField::from_discriminant(-(q as i64)).expect("prime discriminant");
        self.presc.is_realized_by(&field)
    }

    fn fill(&mut self) -> Result<(), ArithError> {
        let sieve = arith::default_sieve();
        while self.pending.is_empty() {
            let lo = self.next_start;
            let hi = lo + BLOCK;
            sieve.ensure(hi)?;
            let primes: Vec<u64> = sieve.iter_from(lo).take_while(|&p| p < hi).collect();
            let mut hits: Vec<u64> = primes.into_par_iter().filter(|&q| self.candidate(q)).collect();
            hits.sort_unstable();
            self.pending.extend(
                hits.into_iter().map(|q| QuadField::from_discriminant(-(q as i64)).expect("prime discriminant")),
            );
            self.next_start = hi;
        }
        Ok(())
    }
}

impl Iterator for FieldSearch<'_> {
    type Item = Result<QuadField, ArithError>;

    fn next(&mut self) -> Option<Self::Item> {
        if let Err(e) = self.fill() {
            return Some(Err(e));
        }
        self.pending.pop_front().map(Ok)
    }
}

/// The `count` smallest fields `Q(sqrt -q)`, `q = 3 (mod 4)` prime and
/// `q != 3`, realizing the prescription.
pub fn find_fields(presc: &SplitPrescription, count: usize) -> Result<Vec<QuadField>, FamilyError> {
    if count == 0 {
        return Err(FamilyError::Precondition("count must be positive".into()));
    }
    let fields = FieldSearch::new(presc).take(count).collect::<Result<Vec<_>, _>>()?;
    debug_assert!(fields.iter().all(|f| presc.is_realized_by(f)));
    Ok(fields)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinnikRow {
    pub n: usize,
    pub q: u64,
    pub ratio: f64,
}

/// `q_n / (n log 2n)` for the `n`-th field (1-based) of the list.
pub fn linnik_report(fields: &[QuadField]) -> Vec<LinnikRow> {
    fields
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let n = i + 1;
            let q = f.discriminant().unsigned_abs();
            LinnikRow { n, q, ratio: q as f64 / (n as f64 * (2.0 * n as f64).ln()) }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyReport {
    pub members: Vec<CommClass>,
    pub n: usize,
    pub split_prime: u64,
    pub inert_ceiling: u64,
    pub shared_spectrum: TgSpectrum,
    pub volumes: Vec<ValidatedVolume>,
    pub sys1_bounds: Vec<f64>,
    pub linnik: Vec<LinnikRow>,
    /// The inert threshold `2^10 3^2 p_{N+1}` sufficient in general, for
    /// comparison with the ceiling actually used.
    pub safe_inert_threshold: u64,
    pub volumes_increasing: bool,
}

/// Build `count` members with split prime 13 and every other prime below
/// `inert_ceiling` inert, and verify that their first `n` areas agree.
pub fn build_family(n: usize, inert_ceiling: u64, count: usize) -> Result<FamilyReport, FamilyError> {
    build_family_with(n, inert_ceiling, count, 13)
}

pub fn build_family_with(
    n: usize,
    inert_ceiling: u64,
    count: usize,
    split_prime: u64,
) -> Result<FamilyReport, FamilyError> {
    if n == 0 {
        return Err(FamilyError::Precondition("N must be positive".into()));
    }
    if inert_ceiling < 3 {
        return Err(FamilyError::Precondition("inert ceiling must be at least 3".into()));
    }
    if count < 2 {
        return Err(FamilyError::Precondition("a family needs at least two members".into()));
    }
    let presc = SplitPrescription::split_one(split_prime, inert_ceiling)?;

    let mut members = Vec::with_capacity(count);
    let mut fields = Vec::with_capacity(count);
    for field in FieldSearch::new(&presc) {
        let field = field?;
        if !presc.is_realized_by(&field) {
            unreachable!("search returned an unverified field");
        }
        let a = QAlgK::above(field, &[split_prime]).map_err(GeodesicError::from)?;
        // The ramified primes split, so the relevant completions are Q_p for
        // every member: one rejection means every member is rejected.
        let reason = match a.torsion_free_certificate() {
            Ok(true) => None,
            Ok(false) => Some("order-2 or order-3 elements are not excluded".to_string()),
            Err(e) => Some(e.to_string()),
        };
        if let Some(reason) = reason {
            return Err(FamilyError::TorsionNotCertified { discriminant: field.discriminant(), reason });
        }
        fields.push(field);
        members.push(a);
        if members.len() == count {
            break;
        }
    }

    let spectra: Vec<TgSpectrum> = members.par_iter().map(|a| geodesic::tg_spectrum(a, n)).collect::<Result<_, _>>()?;
    let reference = &spectra[0];
    for (a, sp) in members.iter().zip(&spectra).skip(1) {
        let len = reference.entries.len().max(sp.entries.len());
        for i in 0..len {
            let l = reference.entries.get(i);
            let r = sp.entries.get(i);
            if l != r {
                let show = |e: Option<&geodesic::SpectrumEntry>| match e {
                    Some(e) => format!(
                        "{} [{}]",
                        e.area,
                        e.witnesses.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ")
                    ),
                    None => "nothing".into(),
                };
                return Err(FamilyError::VerificationFailed {
                    first: members[0].field().discriminant(),
                    other: a.field().discriminant(),
                    index: i,
                    left: show(l),
                    right: show(r),
                });
            }
        }
    }

    let classes: Vec<CommClass> = members.into_iter().map(CommClass::new).collect::<Result<_, _>>()?;
    let volumes: Vec<ValidatedVolume> = classes.iter().map(|c| c.volume).collect();
    let sys1_bounds = volumes.iter().map(|v| covolume::sys1_upper(v.value)).collect::<Result<Vec<_>, _>>()?;
    let volumes_increasing = volumes.windows(2).all(|w| w[0].upper() < w[1].lower());
    let safe = 1024 * 9 * arith::default_sieve().nth_prime(n as u64 + 1)?;

    Ok(FamilyReport {
        members: classes,
        n,
        split_prime,
        inert_ceiling,
        shared_spectrum: spectra.into_iter().next().unwrap(),
        volumes,
        sys1_bounds,
        linnik: linnik_report(&fields),
        safe_inert_threshold: safe,
        volumes_increasing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeBoundReport {
    /// `max_n Vol(M_n) / (n log 2n)^{3/2}`.
    pub c1_fit: f64,
    pub all_within: bool,
    pub zeta_values: Vec<f64>,
    /// Whether `zeta_k(2) < 3` held (rigorously) for every member.
    pub zeta_below_3: bool,
}

pub fn volume_bound_report(report: &FamilyReport) -> Result<VolumeBoundReport, FamilyError> {
    if report.members.is_empty() {
        return Err(FamilyError::Precondition("empty family".into()));
    }
    let scale = |n: usize| {
        let n = n as f64;
        (n * (2.0 * n).ln()).powf(1.5)
    };
    let c1_fit = report.volumes.iter().enumerate().map(|(i, v)| v.value / scale(i + 1)).fold(0.0, f64::max);
    let all_within = report.volumes.iter().enumerate().all(|(i, v)| v.value <= c1_fit * scale(i + 1) * (1.0 + 1e-12));
    let zetas: Vec<_> = report.members.iter().map(|c| c.field().zeta_at_2()).collect();
    Ok(VolumeBoundReport {
        c1_fit,
        all_within,
        zeta_below_3: zetas.iter().all(|z| z.upper() < 3.0),
        zeta_values: zetas.iter().map(|z| z.value).collect(),
    })
}

/// The modulus of [`residue_classes`] as a big integer, for callers that
/// combine prescriptions beyond 64 bits.
pub fn modulus_big(presc: &SplitPrescription) -> BigUint {
    let two: u32 = if presc.split.contains(&2) || presc.inert.contains(&2) { 8 } else { 4 };
    presc.primes().filter(|&p| p != 2).fold(BigUint::from(two), |m, p| m * p)
}
