//! Exhaustive point counts over `F_p` and `F_{p^2}`.
//!
//! Projective space is enumerated chart by chart (`P^n = A^n ⊔ A^{n-1} ⊔ ... ⊔ A^0`),
//! so every point is visited once, in normalized form. Each chart is cut into
//! contiguous ranges of its outermost free coordinate; the ranges are counted
//! independently and the results added, so the answer does not depend on the
//! number of workers or on the chunk size.

mod engine;
mod twist;

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::catalog::{hulek_verrill, Ambient, InvolutionSpec, VarietySpec};
use crate::error::{domain, refused, Error, Result};
use crate::ffield::{FiniteField, PrimeField, QuadraticExtension};
use crate::poly::ModPoly;
use engine::{Dom, Mode, RootTable, System, Tally};

pub use twist::{TwistColumn, TwistedForm};

/// Exhaustive counting is limited to primes below this bound.
pub const COUNT_PRIME_LIMIT: u64 = 1 << 20;

/// Default enumeration budget in points.
pub const DEFAULT_MAX_POINTS: u64 = 100_000_000_000;

pub const THREADS_ENV: &str = "FROBTRACE_THREADS";

/// Largest prime for which a hypersurface count may use a `p x p` root table.
pub const TABLE_PRIME_LIMIT: u64 = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CountOptions {
    /// Worker count; `None` reads `FROBTRACE_THREADS`, then falls back to the pool default.
    pub threads: Option<usize>,
    /// Values of the split coordinate per work item; `None` uses a fixed number of chunks.
    pub chunk_len: Option<u32>,
    pub max_points: u64,
    /// Allow the root-table shortcut for single hypersurfaces (off forces full enumeration).
    pub root_table: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            threads: None,
            chunk_len: None,
            max_points: DEFAULT_MAX_POINTS,
            root_table: true,
        }
    }
}

impl CountOptions {
    pub fn sequential() -> Self {
        Self::with_threads(1)
    }

    pub fn with_threads(n: usize) -> Self {
        CountOptions {
            threads: Some(n.max(1)),
            ..Self::default()
        }
    }

    pub fn without_root_table(mut self) -> Self {
        self.root_table = false;
        self
    }

    pub fn resolved_threads(&self) -> usize {
        if !cfg!(feature = "parallel") {
            return 1;
        }
        if let Some(n) = self.threads {
            return n.max(1);
        }
        if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
            return n.max(1);
        }
        default_threads()
    }
}

#[cfg(feature = "parallel")]
fn default_threads() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
fn default_threads() -> usize {
    1
}

/// Run independent work items and add their results.
fn run_tasks<T, R, F>(items: &[T], threads: usize, work: F) -> Result<R>
where
    T: Sync,
    R: Send + Default + MergeResult,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threads > 1 {
        use rayon::prelude::*;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| domain!("cannot start worker pool: {e}"))?;
        return Ok(pool.install(|| {
            items
                .par_iter()
                .map(&work)
                .reduce(R::default, |a, b| a.merge_with(b))
        }));
    }
    let _ = threads;
    Ok(items.iter().map(work).fold(R::default(), |a, b| a.merge_with(b)))
}

trait MergeResult {
    fn merge_with(self, other: Self) -> Self;
}

impl MergeResult for Tally {
    fn merge_with(self, other: Self) -> Self {
        self.merge(other)
    }
}

impl MergeResult for u64 {
    fn merge_with(self, other: Self) -> Self {
        self + other
    }
}

/// One point-count result; one JSON object per line in results files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub variety_id: String,
    pub p: u64,
    pub field_degree: u32,
    pub twist_id: Option<String>,
    pub count: u64,
    pub chunk_count: u64,
    pub wall_time: f64,
}

impl CountRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}

pub fn write_records<W: Write>(mut out: W, records: &[CountRecord]) -> std::io::Result<()> {
    for r in records {
        writeln!(out, "{}", r.to_json_line())?;
    }
    Ok(())
}

pub fn read_records(text: &str) -> Result<Vec<CountRecord>> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Error::from))
        .collect()
}

/// Count plus the rational singular points met along the way.
#[derive(Clone, Debug, PartialEq)]
pub struct Scan {
    pub count: u64,
    /// Sorted, normalized (first nonzero coordinate 1).
    pub singular: Vec<Vec<u32>>,
    pub chunk_count: u64,
    pub wall_time: f64,
}

fn check_prime(p: u64) -> Result<PrimeField> {
    let field = PrimeField::new(p)?;
    if p >= COUNT_PRIME_LIMIT {
        return Err(refused!("exhaustive counting is limited to p < 2^20, got {p}"));
    }
    Ok(field)
}

fn check_budget(points: u128, opts: &CountOptions, what: &str) -> Result<()> {
    if points > opts.max_points as u128 {
        return Err(refused!(
            "{what} needs about {points} point evaluations, above the budget of {}",
            opts.max_points
        ));
    }
    Ok(())
}

/// Affine charts of `P^{nvars-1}`: leading zeros, a one, then free coordinates.
fn projective_charts(nvars: usize) -> Vec<Vec<Dom>> {
    (0..nvars)
        .map(|k| {
            (0..nvars)
                .map(|i| match i.cmp(&k) {
                    std::cmp::Ordering::Less => Dom::Fixed(0),
                    std::cmp::Ordering::Equal => Dom::Fixed(1),
                    std::cmp::Ordering::Greater => Dom::Full,
                })
                .collect()
        })
        .collect()
}

struct Task {
    chart: usize,
    split: Option<usize>,
    lo: u32,
    hi: u32,
}

/// Chunks per split range when no chunk length is given. Fixed, so that the
/// plan (and `chunk_count`) is the same for every worker count.
const DEFAULT_CHUNKS: u32 = 32;

fn plan(system: &System, charts: &[Vec<Dom>], chunk_len: Option<u32>) -> Vec<Task> {
    let mut tasks = Vec::new();
    for (ci, chart) in charts.iter().enumerate() {
        match system.split_var(chart) {
            None => tasks.push(Task {
                chart: ci,
                split: None,
                lo: 0,
                hi: 0,
            }),
            Some(v) => {
                let (a, b) = system.dom_range(chart[v]);
                let len = b - a;
                let step = chunk_len
                    .unwrap_or_else(|| len.div_ceil(DEFAULT_CHUNKS))
                    .max(1);
                let mut lo = a;
                while lo < b {
                    let hi = (lo + step).min(b);
                    tasks.push(Task {
                        chart: ci,
                        split: Some(v),
                        lo,
                        hi,
                    });
                    lo = hi;
                }
            }
        }
    }
    tasks
}

fn run_system(
    field: PrimeField,
    nvars: usize,
    polys: Vec<ModPoly>,
    charts: &[Vec<Dom>],
    mode: Mode,
    opts: &CountOptions,
) -> Result<(Tally, u64)> {
    let system = System::new(field, nvars, polys, mode);
    let threads = opts.resolved_threads();
    let tasks = plan(&system, charts, opts.chunk_len);
    let mut tally = run_tasks(&tasks, threads, |t| {
        system.run(&charts[t.chart], t.split, t.lo, t.hi, mode)
    })?;
    tally.singular.sort();
    Ok((tally, tasks.len() as u64))
}

/// A single equation written as `u(t) + B t^e + C` in one coordinate `t`,
/// with `u` constant in the other coordinates.
struct Solved {
    var: usize,
    exp: u32,
    fixed: Vec<(u32, u32)>,
    b: ModPoly,
    c: ModPoly,
}

fn solve_for_coordinate(field: &PrimeField, f: &ModPoly) -> Option<Solved> {
    let n = f.nvars();
    for var in (0..n).rev() {
        let mut groups: std::collections::BTreeMap<u32, Vec<(u64, Vec<u32>)>> = Default::default();
        for (c, e) in f.terms() {
            let mut rest = e.clone();
            let k = rest.remove(var);
            groups.entry(k).or_default().push((*c as u64, rest));
        }
        if groups.keys().all(|&k| k == 0) {
            continue;
        }
        let varying: Vec<u32> = groups
            .iter()
            .filter(|(&k, terms)| k > 0 && terms.iter().any(|(_, r)| r.iter().any(|&x| x > 0)))
            .map(|(&k, _)| k)
            .collect();
        if varying.len() > 1 {
            continue;
        }
        let exp = varying.first().copied().unwrap_or(1);
        let fixed = groups
            .iter()
            .filter(|(&k, _)| k > 0 && k != exp)
            .map(|(&k, terms)| (terms[0].0 as u32, k))
            .collect();
        let take = |k: u32| ModPoly::from_terms(field, n - 1, groups.get(&k).cloned().unwrap_or_default());
        return Some(Solved {
            var,
            exp,
            fixed,
            b: take(exp),
            c: take(0),
        });
    }
    None
}

/// Projective count (and optionally singular points) of explicit equations,
/// through a root table when there is one equation of a suitable shape.
fn run_projective(field: PrimeField, nvars: usize, polys: Vec<ModPoly>, singular: bool, opts: &CountOptions) -> Result<(Tally, u64)> {
    let solved = match polys.as_slice() {
        [f] if opts.root_table && nvars >= 3 && (field.p() as u64) <= TABLE_PRIME_LIMIT => solve_for_coordinate(&field, f),
        _ => None,
    };
    let Some(solved) = solved else {
        return run_system(field, nvars, polys, &projective_charts(nvars), Mode::Zeros { singular }, opts);
    };
    let f = &polys[0];
    let var = solved.var;
    // Coordinates reordered as (others..., solved).
    let reorder = |x: &[u32]| {
        let mut y = x.to_vec();
        let t = y.remove(var);
        y.push(t);
        y
    };
    let permuted = ModPoly::from_terms(&field, nvars, f.terms().iter().map(|(c, e)| (*c as u64, reorder(e))));
    let gradient: Vec<ModPoly> = (0..nvars).map(|i| permuted.derivative(&field, i)).collect();
    let table = RootTable::new(&field, solved.fixed, solved.exp);
    let system = System::with_table(field, nvars - 1, solved.b, solved.c, table, gradient.clone());
    let charts = projective_charts(nvars - 1);
    let threads = opts.resolved_threads();
    let tasks = plan(&system, &charts, opts.chunk_len);
    let mode = Mode::Table { singular };
    let mut tally = run_tasks(&tasks, threads, |t| system.run(&charts[t.chart], t.split, t.lo, t.hi, mode))?;
    // The one point with every other coordinate zero.
    let mut unit = vec![0u32; nvars];
    unit[nvars - 1] = 1;
    if permuted.eval(&field, &unit) == 0 {
        tally.count += 1;
        if singular && gradient.iter().all(|g| g.eval(&field, &unit) == 0) {
            tally.singular.push(unit);
        }
    }
    for point in &mut tally.singular {
        let t = point.pop().expect("point has the solved coordinate");
        point.insert(var, t);
        let lead = *point.iter().find(|&&v| v != 0).expect("projective point");
        let scale = field.inv_raw(lead).expect("nonzero");
        for v in point.iter_mut() {
            *v = field.mul_raw(*v, scale);
        }
    }
    tally.singular.sort();
    Ok((tally, tasks.len() as u64 + 1))
}

fn require_projective(spec: &VarietySpec) -> Result<()> {
    match spec.ambient {
        Ambient::Projective { .. } => Ok(()),
        _ => Err(domain!(
            "{} lives in a {} ambient, not projective space",
            spec.id,
            spec.ambient.kind()
        )),
    }
}

/// Projective `F_{p^degree}`-points of a projective variety.
pub fn count_projective(spec: &VarietySpec, p: u64, degree: u32, opts: &CountOptions) -> Result<CountRecord> {
    require_projective(spec)?;
    let start = Instant::now();
    let (count, chunks) = match degree {
        1 => {
            let field = check_prime(p)?;
            check_budget(spec.ambient.point_count(p), opts, "this count")?;
            let polys = spec.reduce(&field)?;
            let (tally, chunks) = run_projective(field, spec.nvars(), polys, false, opts)?;
            (tally.count, chunks)
        }
        2 => {
            let ext = QuadraticExtension::new(p)?;
            check_budget(spec.ambient.point_count(p * p), opts, "this count")?;
            spec.reduce(ext.base())?;
            count_projective_over(spec, &ext, opts)?
        }
        d => return Err(domain!("field degree {d} is not supported (1 or 2 only)")),
    };
    Ok(CountRecord {
        variety_id: spec.id.clone(),
        p,
        field_degree: degree,
        twist_id: None,
        count,
        chunk_count: chunks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Count over `F_p` and collect the rational singular points.
pub fn scan_projective(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<Scan> {
    require_projective(spec)?;
    let field = check_prime(p)?;
    check_budget(spec.ambient.point_count(p), opts, "this scan")?;
    let start = Instant::now();
    let polys = spec.reduce(&field)?;
    let (tally, chunks) = run_projective(field, spec.nvars(), polys, true, opts)?;
    Ok(Scan {
        count: tally.count,
        singular: tally.singular,
        chunk_count: chunks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Projective count for explicit polynomials over `F_p`.
pub fn scan_polys(field: PrimeField, nvars: usize, polys: Vec<ModPoly>, singular: bool, opts: &CountOptions) -> Result<Scan> {
    if field.p() as u64 >= COUNT_PRIME_LIMIT {
        return Err(refused!("exhaustive counting is limited to p < 2^20"));
    }
    let ambient = Ambient::Projective { n: nvars - 1 };
    check_budget(ambient.point_count(field.p() as u64), opts, "this scan")?;
    let start = Instant::now();
    let (tally, chunks) = run_projective(field, nvars, polys, singular, opts)?;
    Ok(Scan {
        count: tally.count,
        singular: tally.singular,
        chunk_count: chunks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Points of a weighted projective variety over `F_p`.
///
/// Every Frobenius-stable orbit of the scaling action contains exactly `p - 1`
/// rational affine representatives, so the count is
/// `(#nonzero affine solutions) / (p - 1)`.
pub fn count_weighted(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<CountRecord> {
    let Ambient::WeightedProjective { ref weights, .. } = spec.ambient else {
        return Err(domain!("{} is not in a weighted projective space", spec.id));
    };
    if p == 2 {
        return Err(domain!("weighted counts need an odd prime"));
    }
    let field = check_prime(p)?;
    if weights.iter().any(|&w| w as u64 % p == 0) {
        return Err(refused!("p = {p} divides a weight of {}", spec.id));
    }
    let nvars = spec.nvars();
    check_budget((p as u128).pow(nvars as u32), opts, "this weighted count")?;
    let start = Instant::now();
    let polys = spec.reduce(&field)?;
    let chart = vec![vec![Dom::Full; nvars]];
    let (tally, chunks) = run_system(field, nvars, polys, &chart, Mode::Zeros { singular: false }, opts)?;
    // The origin satisfies every weighted-homogeneous equation.
    let nonzero = tally.count - 1;
    debug_assert_eq!(nonzero % (p - 1), 0);
    Ok(CountRecord {
        variety_id: spec.id.clone(),
        p,
        field_degree: 1,
        twist_id: None,
        count: nonzero / (p - 1),
        chunk_count: chunks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Whether the torus equation vanishes identically mod p (then every torus point counts).
pub fn torus_is_degenerate(a: [i64; 5], t: i64, p: u64) -> Result<bool> {
    let field = PrimeField::new(p)?;
    let spec = hulek_verrill(a, t);
    Ok(ModPoly::from_monomials(&field, 5, &spec.equations[0]).is_zero())
}

/// Points of the cleared torus equation with all coordinates nonzero, one per projective point.
pub fn count_torus(a: [i64; 5], t: i64, p: u64, opts: &CountOptions) -> Result<CountRecord> {
    count_torus_spec(&hulek_verrill(a, t), p, opts)
}

pub fn count_torus_spec(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<CountRecord> {
    let Ambient::Torus { n } = spec.ambient else {
        return Err(domain!("{} is not a torus hypersurface", spec.id));
    };
    let field = check_prime(p)?;
    check_budget(spec.ambient.point_count(p), opts, "this torus count")?;
    let start = Instant::now();
    let polys: Vec<ModPoly> = spec
        .equations
        .iter()
        .map(|eq| ModPoly::from_monomials(&field, n + 1, eq))
        .filter(|f| !f.is_zero())
        .collect();
    // Scale the first coordinate to 1; the rest range over F_p^*.
    let mut chart = vec![Dom::NonZero; n + 1];
    chart[0] = Dom::Fixed(1);
    let (tally, chunks) = run_system(field, n + 1, polys, &[chart], Mode::Zeros { singular: false }, opts)?;
    Ok(CountRecord {
        variety_id: spec.id.clone(),
        p,
        field_degree: 1,
        twist_id: None,
        count: tally.count,
        chunk_count: chunks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `sum_{x in P^3(F_p)} (1 + chi(f(x)))` with `f` the product of eight planes.
pub fn count_double_cover(planes: &[[i64; 4]], p: u64, opts: &CountOptions) -> Result<CountRecord> {
    if planes.len() != 8 {
        return Err(domain!("a double octic needs exactly 8 planes, got {}", planes.len()));
    }
    let field = check_prime(p)?;
    if p == 2 {
        return Err(domain!("double cover counts need an odd prime"));
    }
    let start = Instant::now();
    let mut f = ModPoly::constant(&field, 4, 1);
    for plane in planes {
        let linear = ModPoly::from_terms(
            &field,
            4,
            plane.iter().enumerate().map(|(i, &c)| {
                let mut e = vec![0u32; 4];
                e[i] = 1;
                (field.element(c).value() as u64, e)
            }),
        );
        if linear.is_zero() {
            return Err(domain!("plane {plane:?} vanishes identically mod {p}"));
        }
        f = f.mul(&field, &linear);
    }
    check_budget(Ambient::Projective { n: 3 }.point_count(p), opts, "this double cover count")?;
    let (tally, chunks) = run_system(field, 4, vec![f], &projective_charts(4), Mode::CharacterSum, opts)?;
    Ok(CountRecord {
        variety_id: "double_octic".into(),
        p,
        field_degree: 1,
        twist_id: None,
        count: tally.count,
        chunk_count: chunks,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

pub fn count_double_cover_spec(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<CountRecord> {
    if !matches!(spec.ambient, Ambient::DoubleCoverOfP3 { .. }) {
        return Err(domain!("{} is not a double cover of P^3", spec.id));
    }
    let planes: Vec<[i64; 4]> = spec
        .equations
        .iter()
        .map(|eq| {
            let mut plane = [0i64; 4];
            for m in eq {
                let i = m.exponents.iter().position(|&e| e == 1).expect("linear monomial");
                plane[i] += m.coefficient;
            }
            plane
        })
        .collect();
    let mut record = count_double_cover(&planes, p, opts)?;
    record.variety_id = spec.id.clone();
    Ok(record)
}

/// Points `x` over `F_{p^2}` on the variety with `Phi(x) = x^(p)` as projective points.
pub fn count_twisted(spec: &VarietySpec, phi: &InvolutionSpec, p: u64, opts: &CountOptions) -> Result<CountRecord> {
    let start = Instant::now();
    let scan = scan_twisted_inner(spec, phi, p, opts, false)?;
    Ok(CountRecord {
        variety_id: spec.id.clone(),
        p,
        field_degree: 1,
        twist_id: Some(phi.id.clone()),
        count: scan.0.count,
        chunk_count: scan.0.chunk_count,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// Twisted count plus the twisted-rational singular points (in twisted coordinates).
pub fn scan_twisted(spec: &VarietySpec, phi: &InvolutionSpec, p: u64, opts: &CountOptions) -> Result<(Scan, TwistedForm)> {
    scan_twisted_inner(spec, phi, p, opts, true)
}

fn scan_twisted_inner(
    spec: &VarietySpec,
    phi: &InvolutionSpec,
    p: u64,
    opts: &CountOptions,
    singular: bool,
) -> Result<(Scan, TwistedForm)> {
    require_projective(spec)?;
    let field = check_prime(p)?;
    let form = TwistedForm::new(spec, phi, p)?;
    let scan = scan_polys(field, spec.nvars(), form.equations.clone(), singular, opts)?;
    Ok((scan, form))
}

/// Call `visit` on every normalized point of `P^{nvars-1}` over `field`.
pub fn for_each_projective_point<F: FiniteField>(field: &F, nvars: usize, mut visit: impl FnMut(&[F::Elem])) {
    let q = field.order();
    let mut x = vec![field.zero(); nvars];
    for lead in 0..nvars {
        x.fill(field.zero());
        x[lead] = field.one();
        let mut idx = vec![0u64; nvars - lead - 1];
        loop {
            for (k, &i) in idx.iter().enumerate() {
                x[lead + 1 + k] = field.nth(i);
            }
            visit(&x);
            if !advance(&mut idx, q) {
                break;
            }
        }
    }
}

/// Odometer step over `[0, q)^k`; false after the last tuple.
fn advance(idx: &mut [u64], q: u64) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < q {
            return true;
        }
        *slot = 0;
    }
    false
}

/// Generic projective count over any finite field, split over the first free coordinate.
fn count_projective_over<F: FiniteField>(spec: &VarietySpec, field: &F, opts: &CountOptions) -> Result<(u64, u64)> {
    let nvars = spec.nvars();
    let q = field.order();
    let threads = opts.resolved_threads();
    // Work items: (leading position, value of the next coordinate or none).
    let mut items: Vec<(usize, Option<u64>)> = Vec::new();
    for lead in 0..nvars {
        if lead + 1 < nvars {
            items.extend((0..q).map(|v| (lead, Some(v))));
        } else {
            items.push((lead, None));
        }
    }
    let count = run_tasks(&items, threads, |&(lead, first)| {
        let mut x = vec![field.zero(); nvars];
        x[lead] = field.one();
        let mut found = 0u64;
        let fixed = match first {
            Some(v) => {
                x[lead + 1] = field.nth(v);
                lead + 2
            }
            None => nvars,
        };
        let free = nvars - fixed;
        let mut idx = vec![0u64; free];
        loop {
            for (k, &i) in idx.iter().enumerate() {
                x[fixed + k] = field.nth(i);
            }
            if spec
                .equations
                .iter()
                .all(|eq| field.is_zero(crate::catalog::evaluate_polynomial(field, eq, &x)))
            {
                found += 1;
            }
            if !advance(&mut idx, q) {
                break;
            }
        }
        found
    })?;
    Ok((count, items.len() as u64))
}

/// Dispatch on the ambient kind (projective, weighted, torus, double cover).
pub fn count_any(spec: &VarietySpec, p: u64, degree: u32, opts: &CountOptions) -> Result<CountRecord> {
    match spec.ambient {
        Ambient::Projective { .. } => count_projective(spec, p, degree, opts),
        _ if degree != 1 => Err(domain!("degree-{degree} counts are only available on projective ambients")),
        Ambient::WeightedProjective { .. } => count_weighted(spec, p, opts),
        Ambient::Torus { .. } => count_torus_spec(spec, p, opts),
        Ambient::DoubleCoverOfP3 { .. } => count_double_cover_spec(spec, p, opts),
    }
}
