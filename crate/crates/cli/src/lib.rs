//! Command-line front end: argument parsing, report formatting and the
//! persistent cache.

pub mod cache;

use std::io::Write;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use systole::census::{self, CensusRow};
use systole::covolume::{self, PiArea};
use systole::family;
use systole::geodesic::{self, AreaKind, TgSpectrum};
use systole::quadfield::{memo, ClassGroup, QuadField, SplitType};
use systole::quatalg::{grammar, QAlgK};
use systole::validated::Validated;

use cache::{Cache, CacheEntry};

#[derive(Debug, Parser)]
#[command(name = "systole", version, about = "Totally geodesic surfaces in arithmetic hyperbolic 3-manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Neither read nor write the on-disk cache.
    #[arg(long, global = true)]
    no_cache: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, clap::Args)]
struct ClassArgs {
    /// Imaginary quadratic field: squarefree d < 0, or a fundamental
    /// discriminant when divisible by 4 (so -4 and -1 both mean Q(i)).
    #[arg(long, allow_hyphen_values = true)]
    field: Option<String>,
    /// Ramification: comma list of `p` (all primes above p), `p+`, `p-`,
    /// `pi`, `pr`, or a full algebra `K[D]{...}`. Empty for the matrix algebra.
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    ram: String,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Covolumes and generalized index of a commensurability class.
    Covolume {
        #[command(flatten)]
        class: ClassArgs,
    },
    /// Whether a class contains totally geodesic surfaces, with area bounds.
    Tgs {
        #[command(flatten)]
        class: ClassArgs,
    },
    /// The first N totally geodesic areas with their Fuchsian witnesses.
    Spectrum {
        #[command(flatten)]
        class: ClassArgs,
        #[arg(long = "N", default_value_t = 3)]
        n: usize,
        /// Measure areas with the normalizer of a maximal order.
        #[arg(long)]
        maximal: bool,
        /// Refuse the non-cocompact matrix algebra.
        #[arg(long)]
        cocompact_only: bool,
    },
    /// A family of incommensurable classes with equal first N areas.
    Family {
        #[arg(long = "N", default_value_t = 4)]
        n: usize,
        #[arg(long, default_value_t = 13)]
        inert_ceiling: u64,
        #[arg(long, default_value_t = 5)]
        count: usize,
        #[arg(long, default_value_t = 13)]
        split_prime: u64,
    },
    /// Counts of classes by volume and of those with a small totally geodesic surface.
    Census {
        #[arg(long, allow_hyphen_values = true)]
        field: String,
        /// Comma-separated increasing volume cutoffs.
        #[arg(long, default_value = "1,100,10000")]
        vmax: String,
        /// Area threshold as a rational multiple of pi, e.g. `1/2*pi`.
        #[arg(long, conflicts_with = "x_genus")]
        x: Option<String>,
        /// Genus threshold g, translated to the area 4 pi (g - 1).
        #[arg(long)]
        x_genus: Option<f64>,
        #[arg(long)]
        cocompact_only: bool,
    },
    /// A class all of whose totally geodesic surfaces have area above X.
    Large {
        #[arg(long, allow_hyphen_values = true)]
        field: String,
        #[arg(long)]
        x: f64,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Domain(String),
}

fn domain(e: impl std::fmt::Display) -> CliError {
    CliError::Domain(e.to_string())
}

struct Report {
    json: Value,
    csv: String,
    text: String,
}

/// Runs the command line `argv` (including the program name). Returns the
/// process exit code: 0 on success, 1 on domain errors, 2 on usage errors.
pub fn run_with(argv: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    2
                }
            };
        }
    };
    let cache = if cli.no_cache { None } else { cache::default_dir().map(Cache::at) };
    let mut warnings = Vec::new();
    let result = match cli.jobs {
        Some(0) => Err(CliError::Usage("--jobs: must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.command, cache.as_ref(), &mut warnings)),
            Err(e) => Err(domain(e)),
        },
        None => dispatch(&cli.command, cache.as_ref(), &mut warnings),
    };
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    match result {
        Ok(report) => {
            let body = match cli.format {
                Format::Json => serde_json::to_string_pretty(&report.json).expect("serializable") + "\n",
                Format::Csv => report.csv,
                Format::Text => report.text,
            };
            let _ = out.write_all(body.as_bytes());
            0
        }
        Err(CliError::Usage(m)) => {
            let _ = writeln!(err, "error: {m}");
            2
        }
        Err(CliError::Domain(m)) => {
            let _ = writeln!(err, "error: {m}");
            1
        }
    }
}

fn parse_field(text: &str) -> Result<QuadField, CliError> {
    let n: i64 = text.trim().parse().map_err(|_| CliError::Usage(format!("--field: '{text}' is not an integer")))?;
    let k = QuadField::from_d_or_discriminant(n).map_err(|e| CliError::Usage(format!("--field: {e}")))?;
    if !k.is_imaginary() {
        return Err(CliError::Usage(format!("--field: {n} does not define an imaginary quadratic field")));
    }
    Ok(k)
}

fn parse_class(args: &ClassArgs) -> Result<QAlgK, CliError> {
    let ram = args.ram.trim();
    if ram.starts_with('K') {
        let a = grammar::parse_quadratic(ram).map_err(|e| CliError::Usage(format!("--ram: {e}")))?;
        if let Some(f) = &args.field {
            if parse_field(f)? != *a.field() {
                return Err(CliError::Usage("--field disagrees with the field in --ram".into()));
            }
        }
        return Ok(a);
    }
    let field = parse_field(
        args.field
            .as_deref()
            .ok_or_else(|| CliError::Usage("--field is required unless --ram names the field".into()))?,
    )?;
    let mut items = Vec::new();
    for item in ram.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if item.ends_with(['+', '-', 'i', 'r']) {
            items.push(item.to_string());
            continue;
        }
        let p: u64 = item.parse().map_err(|_| CliError::Usage(format!("--ram: cannot read '{item}'")))?;
        if !systole::arith::is_prime(p) {
            return Err(CliError::Usage(format!("--ram: {p} is not prime")));
        }
        match field.splitting_type(p) {
            SplitType::Split => items.extend([format!("{p}+"), format!("{p}-")]),
            SplitType::Inert => items.push(format!("{p}i")),
            SplitType::Ramified => items.push(format!("{p}r")),
        }
    }
    let text = format!("K[{}]{{{}}}", field.discriminant(), items.join(","));
    grammar::parse_quadratic(&text).map_err(|e| CliError::Usage(format!("--ram: {}", e.message)))
}

fn class_json(a: &QAlgK) -> Value {
    json!({ "D": a.field().discriminant(), "ram": a.labels() })
}

fn seed_from_cache(cache: Option<&Cache>, field: &QuadField) {
    let Some(cache) = cache else { return };
    let d = field.discriminant();
    if let Some(v) = cache.get(&format!("L2:{d}")).and_then(|e| serde_json::from_value::<Validated>(e.payload).ok()) {
        memo::seed_l_value(d, v);
    }
    if let Some(g) = cache
        .get(&format!("clsgrp:{d}"))
        .and_then(|e| serde_json::from_value::<ClassGroup>(e.payload).ok())
        .filter(|g| g.discriminant == d)
    {
        memo::seed_class_group(g);
    }
}

fn store_to_cache(cache: Option<&Cache>, field: &QuadField, warnings: &mut Vec<String>) {
    let Some(cache) = cache else { return };
    let d = field.discriminant();
    let mut entries = Vec::new();
    if let Some(v) = memo::l_value(d) {
        entries.push(CacheEntry::new(format!("L2:{d}"), serde_json::to_value(v).expect("serializable")));
    }
    if let Some(g) = memo::cached_class_group(d) {
        entries.push(CacheEntry::new(format!("clsgrp:{d}"), serde_json::to_value(&*g).expect("serializable")));
    }
    for e in entries {
        if cache.get(&e.key).as_ref() == Some(&e) {
            continue;
        }
        if let Err(io) = cache.put(&e) {
            warnings.push(format!("cache write for {} failed: {io}", e.key));
        }
    }
}

fn dispatch(cmd: &Command, cache: Option<&Cache>, warnings: &mut Vec<String>) -> Result<Report, CliError> {
    match cmd {
        Command::Covolume { class } => {
            let a = parse_class(class)?;
            seed_from_cache(cache, a.field());
            let r = covolume_report(&a);
            store_to_cache(cache, a.field(), warnings);
            r
        }
        Command::Tgs { class } => {
            let a = parse_class(class)?;
            seed_from_cache(cache, a.field());
            tgs_report(&a)
        }
        Command::Spectrum { class, n, maximal, cocompact_only } => {
            let a = parse_class(class)?;
            if *n == 0 {
                return Err(CliError::Usage("--N: must be positive".into()));
            }
            if *cocompact_only && a.ram_f().is_empty() {
                return Err(CliError::Domain(format!("{a} is the non-cocompact matrix algebra")));
            }
            let kind = if *maximal { AreaKind::Maximal } else { AreaKind::NormOne };
            spectrum_report(&a, *n, kind)
        }
        Command::Family { n, inert_ceiling, count, split_prime } => {
            let r = family_report(*n, *inert_ceiling, *count, *split_prime)?;
            for d in r.1 {
                store_to_cache(cache, &QuadField::from_discriminant(d).expect("member field"), warnings);
            }
            Ok(r.0)
        }
        Command::Census { field, vmax, x, x_genus, cocompact_only } => {
            let k = parse_field(field)?;
            let grid = vmax
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| CliError::Usage(format!("--vmax: cannot read '{vmax}'")))?;
            let x = match (x, x_genus) {
                (Some(x), None) => x.parse::<PiArea>().map_err(|e| CliError::Usage(format!("--x: {e}")))?,
                (None, Some(g)) => {
                    census::genus_threshold_translate(*g).map_err(|e| CliError::Usage(format!("--x-genus: {e}")))?
                }
                (None, None) => PiArea::from_ratio(1, 2),
                (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
            };
            seed_from_cache(cache, &k);
            let rows = census::ratio_table_with(&k, &grid, &x, *cocompact_only).map_err(domain)?;
            store_to_cache(cache, &k, warnings);
            Ok(census_report(&k, &rows))
        }
        Command::Large { field, x } => {
            let k = parse_field(field)?;
            seed_from_cache(cache, &k);
            let r = large_report(&k, *x);
            store_to_cache(cache, &k, warnings);
            r
        }
    }
}

fn covolume_report(a: &QAlgK) -> Result<Report, CliError> {
    let v = covolume::kleinian_covol_norm1(a).map_err(domain)?;
    let m = covolume::kleinian_covol_maximal(a).map_err(domain)?;
    let gi = covolume::generalized_index(a).map_err(domain)?;
    let t = a.type_number().map_err(domain)?;
    let h = a.field().class_group().map_err(domain)?.h;
    let json = json!({
        "class": class_json(a),
        "V": v.value,
        "V_err": v.error,
        "V_max": m.value,
        "V_max_err": m.error,
        "gen_index": gi.to_string(),
        "type_number": t,
        "class_number": h,
    });
    let csv = format!(
        "D,ram,V,V_err,V_max,V_max_err,gen_index,type_number,class_number\n{},{},{},{},{},{},{},{},{}\n",
        a.field().discriminant(),
        a.labels().join(";"),
        v.value,
        v.error,
        m.value,
        m.error,
        gi,
        t,
        h
    );
    let text = format!(
        "class       {a}\nV           {v}\nV_max       {m}\ngen_index   {gi}\ntype number {t}\nclass number {h}\n"
    );
    Ok(Report { json, csv, text })
}

fn tgs_report(a: &QAlgK) -> Result<Report, CliError> {
    let base = geodesic::has_tgs(a).map_err(domain)?;
    let (json, csv, text) = match &base {
        Some(primes) => {
            let lower = geodesic::tg_area_lower(a).map_err(domain)?;
            let (b, upper) = geodesic::tg_area_upper_witness(a).map_err(domain)?;
            (
                json!({
                    "class": class_json(a),
                    "has_tgs": true,
                    "base_primes": primes,
                    "lower": lower.to_string(),
                    "c_ell": geodesic::c_ell().to_string(),
                    "upper_witness": { "algebra": b.to_string(), "area": upper.to_string() },
                }),
                format!(
                    "D,ram,has_tgs,base_primes,lower,upper_witness,upper\n{},{},true,{},{},{},{}\n",
                    a.field().discriminant(),
                    a.labels().join(";"),
                    primes.iter().map(u64::to_string).collect::<Vec<_>>().join(";"),
                    lower,
                    b,
                    upper
                ),
                format!("class   {a}\nhas_tgs true\nbase    {primes:?}\nlower   {lower}\nupper   {upper} via {b}\n"),
            )
        }
        None => (
            json!({ "class": class_json(a), "has_tgs": false, "base_primes": null }),
            format!(
                "D,ram,has_tgs,base_primes,lower,upper_witness,upper\n{},{},false,,,,\n",
                a.field().discriminant(),
                a.labels().join(";")
            ),
            format!("class   {a}\nhas_tgs false\n"),
        ),
    };
    Ok(Report { json, csv, text })
}

fn spectrum_json(sp: &TgSpectrum) -> Value {
    Value::Array(
        sp.entries
            .iter()
            .map(|e| {
                json!({
                    "area": e.area.to_string(),
                    "witnesses": e.witnesses.iter().map(|b| b.to_string()).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn spectrum_report(a: &QAlgK, n: usize, kind: AreaKind) -> Result<Report, CliError> {
    let sp = geodesic::tg_spectrum_with(a, n, kind, systole::arith::default_sieve()).map_err(domain)?;
    let json = json!({
        "D": a.field().discriminant(),
        "ram": a.labels(),
        "spectrum": spectrum_json(&sp),
        "truncated": sp.truncated,
    });
    let mut csv = String::from("area,area_value,witnesses\n");
    let mut text = format!("{a}\n");
    for e in &sp.entries {
        let w: Vec<String> = e.witnesses.iter().map(|b| b.to_string()).collect();
        csv += &format!("{},{},{}\n", e.area, e.area.to_f64(), w.join(";"));
        text += &format!("{:>14}  {}\n", e.area.to_string(), w.join(" "));
    }
    if sp.truncated {
        text += "(truncated at the prime ceiling)\n";
    }
    Ok(Report { json, csv, text })
}

fn family_report(n: usize, ceiling: u64, count: usize, split: u64) -> Result<(Report, Vec<i64>), CliError> {
    let r = family::build_family_with(n, ceiling, count, split).map_err(|e| match e {
        family::FamilyError::Precondition(m) => CliError::Usage(m),
        other => domain(other),
    })?;
    let vb = family::volume_bound_report(&r).map_err(domain)?;
    let members: Vec<Value> = r
        .members
        .iter()
        .zip(&r.volumes)
        .zip(&r.sys1_bounds)
        .zip(&vb.zeta_values)
        .map(|(((c, v), s), z)| {
            json!({
                "D": c.field().discriminant(),
                "ram": c.algebra.labels(),
                "V": v.value,
                "V_err": v.error,
                "sys1_upper": s,
                "zeta_k2": z,
            })
        })
        .collect();
    let json = json!({
        "N": r.n,
        "split_prime": r.split_prime,
        "inert_ceiling": r.inert_ceiling,
        "safe_inert_threshold": r.safe_inert_threshold,
        "members": members,
        "shared_spectrum": spectrum_json(&r.shared_spectrum),
        "linnik": r.linnik,
        "c1_fit": vb.c1_fit,
        "all_within": vb.all_within,
        "zeta_below_3": vb.zeta_below_3,
        "volumes_increasing": r.volumes_increasing,
    });
    let mut csv = String::from("n,D,ram,V,V_err,sys1_upper,zeta_k2,linnik_ratio\n");
    let mut text = format!(
        "shared areas: {}\nsplit prime {}; inert below {} (sufficient in general: {})\n",
        r.shared_spectrum.areas().iter().map(|a| a.to_string()).collect::<Vec<_>>().join(", "),
        r.split_prime,
        r.inert_ceiling,
        r.safe_inert_threshold
    );
    for (i, c) in r.members.iter().enumerate() {
        csv += &format!(
            "{},{},{},{},{},{},{},{}\n",
            i + 1,
            c.field().discriminant(),
            c.algebra.labels().join(";"),
            r.volumes[i].value,
            r.volumes[i].error,
            r.sys1_bounds[i],
            vb.zeta_values[i],
            r.linnik[i].ratio
        );
        text += &format!(
            "{:>3}  {:<22} V = {:<24} sys1 < {:.4}\n",
            i + 1,
            c.key(),
            r.volumes[i].to_string(),
            r.sys1_bounds[i]
        );
    }
    text += &format!("c1_fit = {}\n", vb.c1_fit);
    let ds = r.members.iter().map(|c| c.field().discriminant()).collect();
    Ok((Report { json, csv, text }, ds))
}

fn census_report(k: &QuadField, rows: &[CensusRow]) -> Report {
    let json = json!({
        "D": k.discriminant(),
        "rows": serde_json::to_value(rows).expect("serializable"),
    });
    let mut csv = String::from("V,n_total,n_tg,ratio\n");
    let mut text = format!("D = {}\n", k.discriminant());
    for r in rows {
        csv += &format!("{},{},{},{}\n", r.v, r.n_total, r.n_tg, r.ratio);
        text += &format!(
            "V < {:<10} {:>8} classes, {:>6} with area < {}  ratio {}\n",
            r.v, r.n_total, r.n_tg, r.x, r.ratio
        );
    }
    Report { json, csv, text }
}

fn large_report(k: &QuadField, x: f64) -> Result<Report, CliError> {
    let c = geodesic::corollary_large_class(k, x).map_err(|e| match e {
        geodesic::GeodesicError::BadThreshold(_) => CliError::Usage(format!("--x: {e}")),
        other => domain(other),
    })?;
    let json = json!({
        "D": k.discriminant(),
        "X": x,
        "prime": c.prime,
        "class": class_json(&c.class.algebra),
        "lower": c.lower.to_string(),
        "enforced_threshold": c.enforced_threshold,
        "printed_threshold": c.printed_threshold,
        "V": c.class.volume.value,
        "V_err": c.class.volume.error,
    });
    let csv = format!(
        "D,X,prime,ram,lower,V,V_err\n{},{},{},{},{},{},{}\n",
        k.discriminant(),
        x,
        c.prime,
        c.class.algebra.labels().join(";"),
        c.lower,
        c.class.volume.value,
        c.class.volume.error
    );
    let text = format!(
        "class {} (p = {})\nevery totally geodesic surface has area >= {} > {x}\nV = {}\n",
        c.class.key(),
        c.prime,
        c.lower,
        c.class.volume
    );
    Ok(Report { json, csv, text })
}
