//! Resolution models, one-prime calibration, and matching traces against newforms.
//!
//! A resolution model turns one prime into a counted number of points on a
//! singular model, a correction for the exceptional loci, and the part of
//! `b2` that is visible from rational nodes and fixed curves. The remaining
//! classes (the defect) are assumed to be rational exactly at primes in a
//! congruence class, and their number is fitted at a single prime.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{Catalog, VarietySpec};
use crate::counting::{scan_polys, scan_projective, scan_twisted, CountOptions, CountRecord, Scan};
use crate::error::{domain, falsified, invalid, refused, Error, Result};
use crate::ffield::PrimeField;
use crate::lefschetz::{
    classify_node, elliptic_ap, node_contribution, solve_betti, trace_h3, weil_ok, BettiCandidate, Resolution,
    TraceRow, TraceTable,
};
use crate::poly::{determinant, restrict_form, ModPoly};
use crate::qexp::{f25, f25_as_printed, QSeries};

/// Primes `p` with `p ≡ residue (mod modulus)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Congruence {
    pub modulus: u64,
    pub residue: u64,
}

impl Congruence {
    pub fn new(modulus: u64, residue: u64) -> Self {
        Congruence { modulus, residue }
    }

    pub fn holds(&self, p: u64) -> bool {
        self.modulus > 0 && p % self.modulus == self.residue % self.modulus
    }
}

/// `MOD:RES`, for example `20:1`.
impl FromStr for Congruence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (m, r) = s.split_once(':').ok_or_else(|| invalid!("congruence must look like MOD:RES, got {s:?}"))?;
        let m: u64 = m.trim().parse().map_err(|_| invalid!("bad modulus {m:?}"))?;
        let r: u64 = r.trim().parse().map_err(|_| invalid!("bad residue {r:?}"))?;
        if m == 0 {
            return Err(invalid!("the modulus must be positive"));
        }
        Ok(Congruence::new(m, r % m))
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p ≡ {} mod {}", self.residue, self.modulus)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ResolutionRecipe {
    /// A hypersurface with ordinary double points, every node resolved the same way.
    NodalHypersurface {
        resolution: Resolution,
        defect_class: Option<Congruence>,
    },
    /// The quotient of a nodal hypersurface `cover` by an involution, counted
    /// through the plain and twisted counts of the cover. Fixed curves are
    /// blown up and all nodes of the quotient get quadric surfaces.
    InvolutionQuotient {
        cover: String,
        involution: String,
        defect_class: Option<Congruence>,
    },
}

impl ResolutionRecipe {
    pub fn defect_class(&self) -> Option<Congruence> {
        match self {
            ResolutionRecipe::NodalHypersurface { defect_class, .. } => *defect_class,
            ResolutionRecipe::InvolutionQuotient { defect_class, .. } => *defect_class,
        }
    }

    /// Big resolution of the nodes, defect classes rational for `p ≡ 1 mod 5`.
    pub fn schoen() -> Self {
        ResolutionRecipe::NodalHypersurface {
            resolution: Resolution::Big,
            defect_class: Some(Congruence::new(5, 1)),
        }
    }

    pub fn schoen_quotient() -> Self {
        ResolutionRecipe::InvolutionQuotient {
            cover: "schoen_y".into(),
            involution: "iota".into(),
            defect_class: Some(Congruence::new(5, 1)),
        }
    }

    /// The recipe used for `variety_id` when none is given.
    pub fn for_variety(variety_id: &str) -> Self {
        match variety_id {
            "schoen_x" => Self::schoen(),
            "schoen_quotient" => Self::schoen_quotient(),
            _ => ResolutionRecipe::NodalHypersurface {
                resolution: Resolution::Big,
                defect_class: None,
            },
        }
    }

    fn convention(&self) -> String {
        match self {
            ResolutionRecipe::NodalHypersurface { resolution: Resolution::Big, .. } => {
                "big resolution: a split node adds p^2 + 2p points, a non-split node p^2".into()
            }
            ResolutionRecipe::NodalHypersurface { resolution: Resolution::Small, .. } => {
                "small resolution: a split node adds p points, a non-split node none".into()
            }
            ResolutionRecipe::InvolutionQuotient { .. } => {
                "quotient: fixed curves blown up (p points over each rational point), nodes resolved big".into()
            }
        }
    }
}

/// `big`, `small`, `schoen`, `schoen_quotient`, or a JSON object.
impl FromStr for ResolutionRecipe {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let nodal = |resolution| ResolutionRecipe::NodalHypersurface {
            resolution,
            defect_class: None,
        };
        match s.trim() {
            "big" => Ok(nodal(Resolution::Big)),
            "small" => Ok(nodal(Resolution::Small)),
            "schoen" => Ok(Self::schoen()),
            "schoen_quotient" => Ok(Self::schoen_quotient()),
            t if t.starts_with('{') => serde_json::from_str(t).map_err(|e| invalid!("bad recipe: {e}")),
            other => Err(invalid!("unknown recipe {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixedCurve {
    /// Eigenvalue of the involution on the span of the curve.
    pub eigenvalue: i8,
    pub points: u64,
}

/// Everything a resolution model says about one prime, before the defect is fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPoint {
    pub p: u64,
    /// Points of the counted (singular) model.
    pub counted: u64,
    pub correction: i64,
    /// `b2` without the defect classes.
    pub base_b2: i64,
    pub in_defect_class: bool,
    /// Rational nodes of the counted model.
    pub rational_nodes: u64,
    pub fixed_curves: Vec<FixedCurve>,
    pub records: Vec<CountRecord>,
}

impl ModelPoint {
    /// Points of the resolved model.
    pub fn resolved_count(&self) -> u64 {
        (self.counted as i64 + self.correction) as u64
    }

    pub fn b2(&self, defect: i64) -> i64 {
        self.base_b2 + if self.in_defect_class { defect } else { 0 }
    }

    pub fn t3(&self, defect: i64) -> i64 {
        trace_h3(self.counted, self.p, self.b2(defect), self.correction)
    }

    pub fn trace_row(&self, defect: i64) -> TraceRow {
        TraceRow::new(self.p, self.counted, self.b2(defect), self.correction)
    }
}

fn record_from_scan(id: &str, p: u64, twist: Option<&str>, scan: &Scan) -> CountRecord {
    CountRecord {
        variety_id: id.to_string(),
        p,
        field_degree: 1,
        twist_id: twist.map(str::to_string),
        count: scan.count,
        chunk_count: scan.chunk_count,
        wall_time: scan.wall_time,
    }
}

fn hypersurface_poly(spec: &VarietySpec, field: &PrimeField) -> Result<ModPoly> {
    let mut polys = spec.reduce(field)?;
    if polys.len() != 1 {
        return Err(domain!("{} is not a hypersurface", spec.id));
    }
    Ok(polys.remove(0))
}

/// Evaluate a resolution model of `variety` at `p`.
pub fn evaluate_model(catalog: &Catalog, variety: &VarietySpec, recipe: &ResolutionRecipe, p: u64, opts: &CountOptions) -> Result<ModelPoint> {
    variety.require_good_prime(p)?;
    let in_defect_class = recipe.defect_class().is_some_and(|c| c.holds(p));
    match recipe {
        ResolutionRecipe::NodalHypersurface { resolution, .. } => {
            let field = PrimeField::new(p)?;
            let f = hypersurface_poly(variety, &field)?;
            let scan = scan_projective(variety, p, opts)?;
            let nodes = scan
                .singular
                .iter()
                .map(|pt| classify_node(&field, &f, pt))
                .collect::<Result<Vec<_>>>()?;
            let correction = nodes.iter().map(|n| node_contribution(p, *resolution, n.split)).sum();
            let r = nodes.len() as i64;
            Ok(ModelPoint {
                p,
                counted: scan.count,
                correction,
                base_b2: 1 + if *resolution == Resolution::Big { r } else { 0 },
                in_defect_class,
                rational_nodes: r as u64,
                fixed_curves: Vec::new(),
                records: vec![record_from_scan(&variety.id, p, None, &scan)],
            })
        }
        ResolutionRecipe::InvolutionQuotient { cover, involution, .. } => {
            let cover = catalog.get(cover)?;
            cover.require_good_prime(p)?;
            let phi = cover.involution(involution)?;
            quotient_point(cover, phi, p, in_defect_class, opts)
        }
    }
}

fn quotient_point(
    cover: &VarietySpec,
    phi: &crate::catalog::InvolutionSpec,
    p: u64,
    in_defect_class: bool,
    opts: &CountOptions,
) -> Result<ModelPoint> {
    let field = PrimeField::new(p)?;
    let f = hypersurface_poly(cover, &field)?;
    let n = cover.nvars();
    let plain = scan_projective(cover, p, opts)?;
    let (twisted, form) = scan_twisted(cover, phi, p, opts)?;
    if (plain.count + twisted.count) % 2 != 0 {
        return Err(domain!("plain and twisted counts of {} at {p} have odd sum", cover.id));
    }
    let burnside = (plain.count + twisted.count) / 2;
    let g = &form.equations[0];

    // Eigenspaces as lists of column vectors reduced mod p.
    let space = |anti: bool| -> Vec<Vec<u32>> {
        form.columns
            .iter()
            .filter(|c| c.anti == anti)
            .map(|c| c.vector.iter().map(|&v| field.element(v).value()).collect())
            .collect()
    };
    let (plus, minus) = (space(false), space(true));

    let mut fixed_curves = Vec::new();
    for (basis, eigenvalue) in [(&plus, 1i8), (&minus, -1i8)] {
        let d = basis.len();
        if d == 0 {
            continue;
        }
        let forms: Vec<Vec<u32>> = (0..n).map(|i| basis.iter().map(|v| v[i]).collect()).collect();
        let restricted = f.substitute_linear(&field, d, &forms);
        let points = match (restricted.is_zero(), d) {
            (true, 2) => p + 1,
            (false, 3) => scan_polys(field, 3, vec![restricted], false, opts)?.count,
            (false, 1) => continue,
            _ => {
                return Err(domain!(
                    "the fixed locus of {} in the {eigenvalue:+} eigenspace is not a curve",
                    phi.id
                ))
            }
        };
        fixed_curves.push(FixedCurve { eigenvalue, points });
    }

    let perm = phi.signed_permutation()?;
    let image = |x: &[u32]| -> Vec<u32> {
        perm.iter()
            .map(|&(c, s)| if s < 0 { field.sub_raw(0, x[c]) } else { x[c] })
            .collect()
    };
    let fixed_sign = |x: &[u32]| -> Option<i8> {
        let y = image(x);
        if y == x {
            Some(1)
        } else if y.iter().zip(x).all(|(&a, &b)| field.add_raw(a, b) == 0) {
            Some(-1)
        } else {
            None
        }
    };

    let mut correction: i64 = fixed_curves.iter().map(|c| (p * c.points) as i64).sum();
    let mut rational_nodes = 0u64;

    // Nodes swapped in pairs by the involution, rational over F_p or twisted.
    let mut fixed_nodes = Vec::new();
    let mut pair_sum = [0i64; 2];
    let mut pair_count = [0u64; 2];
    for pt in &plain.singular {
        match fixed_sign(pt) {
            Some(s) => fixed_nodes.push((pt.clone(), s)),
            None => {
                pair_sum[0] += node_contribution(p, Resolution::Big, classify_node(&field, &f, pt)?.split);
                pair_count[0] += 1;
            }
        }
    }
    let mut twisted_fixed = 0;
    for u in &twisted.singular {
        if form.is_fixed(u) {
            twisted_fixed += 1;
        } else {
            pair_sum[1] += node_contribution(p, Resolution::Big, classify_node(&field, g, u)?.split);
            pair_count[1] += 1;
        }
    }
    if twisted_fixed != fixed_nodes.len() {
        return Err(domain!(
            "{} fixed nodes in the plain scan but {twisted_fixed} in the twisted scan at {p}",
            fixed_nodes.len()
        ));
    }
    for k in 0..2 {
        if pair_count[k] % 2 != 0 || pair_sum[k] % 2 != 0 {
            return Err(domain!("nodes of {} at {p} do not pair up under {}", cover.id, phi.id));
        }
        rational_nodes += pair_count[k] / 2;
        correction += pair_sum[k] / 2;
    }

    // Over a fixed node x in P(V), the quotient acquires nodes governed by the
    // Hessian on the other eigenspace W and on V / <x>.
    for (x, sign) in &fixed_nodes {
        let (own, other) = if *sign > 0 { (&plus, &minus) } else { (&minus, &plus) };
        let lead = own
            .iter()
            .position(|v| {
                let first = v.iter().position(|&c| c != 0).expect("nonzero column");
                x[first] != 0
            })
            .expect("fixed node lies in its eigenspace");
        let rest: Vec<Vec<u32>> = own
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != lead)
            .map(|(_, v)| v.clone())
            .collect();
        if other.len() != 2 || rest.len() != 2 {
            return Err(domain!("fixed node {x:?} does not have a 2 + 2 tangent cone"));
        }
        let h = f.hessian(&field, x);
        let d_other = determinant(&field, &restrict_form(&field, &h, other));
        let d_own = determinant(&field, &restrict_form(&field, &h, &rest));
        if d_other == 0 || d_own == 0 {
            return Err(refused!("fixed node {x:?} mod {p} has a degenerate tangent cone"));
        }
        if field.legendre(field.sub_raw(0, d_other)) == 1 {
            let split = field.legendre(field.sub_raw(0, d_own)) == 1;
            rational_nodes += 2;
            correction += 2 * node_contribution(p, Resolution::Big, split);
        }
    }

    Ok(ModelPoint {
        p,
        counted: burnside,
        correction,
        base_b2: 1 + fixed_curves.len() as i64 + rational_nodes as i64,
        in_defect_class,
        rational_nodes,
        fixed_curves,
        records: vec![
            record_from_scan(&cover.id, p, None, &plain),
            record_from_scan(&cover.id, p, Some(&phi.id), &twisted),
        ],
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calibration {
    pub prime: u64,
    /// Number of defect classes.
    pub defect: i64,
    /// `b2` at the calibration prime.
    pub b2: i64,
}

/// Fit the defect so that the trace at `point.p` equals `target`.
pub fn calibrate(point: &ModelPoint, target: i64, defect_class: Option<Congruence>) -> Result<Calibration> {
    let p = point.p;
    let t0 = point.t3(0);
    let done = |defect| Calibration {
        prime: p,
        defect,
        b2: point.b2(defect),
    };
    match defect_class {
        None if t0 == target => Ok(done(0)),
        None => Err(falsified!(
            "calibration at {p} fails: trace {t0} differs from {target} and there is no defect to fit"
        )),
        Some(c) if !c.holds(p) => Err(domain!(
            "calibration prime {p} is outside the defect class {c}, so it cannot fix the defect"
        )),
        Some(_) => {
            let step = (p + p * p) as i64;
            let diff = target - t0;
            if diff % step != 0 {
                return Err(falsified!(
                    "calibration at {p} admits no integer defect: trace {t0}, target {target}"
                ));
            }
            let defect = diff / step;
            if defect < 0 {
                return Err(falsified!(
                    "calibration at {p} needs a negative defect ({defect}); the convention is falsified"
                ));
            }
            Ok(done(defect))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormId {
    F25,
    /// The eta sum with the coefficients as printed; not an eigenform.
    F25AsPrinted,
}

impl FormId {
    pub fn series(&self, n: i64) -> Result<QSeries> {
        match self {
            FormId::F25 => f25(n),
            FormId::F25AsPrinted => f25_as_printed(n),
        }
    }
}

impl fmt::Display for FormId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FormId::F25 => "f25",
            FormId::F25AsPrinted => "f25_as_printed",
        })
    }
}

impl FromStr for FormId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f25" => Ok(FormId::F25),
            "f25_as_printed" => Ok(FormId::F25AsPrinted),
            other => Err(invalid!("unknown form {other:?} (f25 or f25_as_printed)")),
        }
    }
}

/// Weight 2 companion: the curve-count `a_p` of a nodal plane curve, or nothing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Companion {
    None,
    /// All coefficients zero (a deliberately wrong companion).
    Zero,
    Curve(String),
}

impl FromStr for Companion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "" => return Err(invalid!("empty companion id")),
            "none" => Companion::None,
            "zero" => Companion::Zero,
            id => Companion::Curve(id.to_string()),
        })
    }
}

impl TryFrom<String> for Companion {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Companion> for String {
    fn from(c: Companion) -> String {
        match c {
            Companion::None => "none".into(),
            Companion::Zero => "zero".into(),
            Companion::Curve(id) => id,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRequest {
    pub variety: String,
    pub recipe: ResolutionRecipe,
    pub form: FormId,
    pub companion: Companion,
    pub primes: Vec<u64>,
    pub calibration_prime: u64,
}

impl MatchRequest {
    pub fn schoen(primes: Vec<u64>) -> Self {
        MatchRequest {
            variety: "schoen_x".into(),
            recipe: ResolutionRecipe::schoen(),
            form: FormId::F25,
            companion: Companion::None,
            primes,
            calibration_prime: 11,
        }
    }

    pub fn schoen_quotient(primes: Vec<u64>) -> Self {
        MatchRequest {
            variety: "schoen_quotient".into(),
            recipe: ResolutionRecipe::schoen_quotient(),
            form: FormId::F25,
            companion: Companion::Curve("e_plane".into()),
            primes,
            calibration_prime: 11,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRow {
    pub p: u64,
    pub t3: i64,
    pub a_p: i64,
    pub equal: bool,
    /// Weil bound for `t3`, when `b3` is catalogued.
    pub weil_ok: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CalibratedParameters {
    pub b2: i64,
    pub defect: i64,
    pub defect_class: Option<Congruence>,
    pub convention: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchReport {
    pub variety_id: String,
    pub form: FormId,
    pub companion: Companion,
    pub calibration_prime: u64,
    pub calibrated: CalibratedParameters,
    /// Every requested prime except the calibration prime.
    pub rows: Vec<MatchRow>,
    pub overall: bool,
    pub provenance: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchOutcome {
    pub report: MatchReport,
    pub table: TraceTable,
    pub records: Vec<CountRecord>,
}

/// `a_p(form) + p a_p(companion)` for each prime.
pub fn target_traces(catalog: &Catalog, form: FormId, companion: &Companion, primes: &[u64], opts: &CountOptions) -> Result<Vec<i64>> {
    let top = primes.iter().copied().max().unwrap_or(2).max(2) as i64;
    let series = form.series(top)?;
    primes
        .iter()
        .map(|&p| {
            let a = series.coefficient_i64(p as i64)?;
            let c = match companion {
                Companion::None | Companion::Zero => 0,
                Companion::Curve(id) => elliptic_ap(catalog.get(id)?, p, opts)?,
            };
            Ok(a + p as i64 * c)
        })
        .collect()
}

fn provenance_of(catalog: &Catalog, ids: &[&str]) -> Vec<String> {
    ids.iter()
        .filter_map(|id| catalog.get(id).ok())
        .map(|s| format!("{}: {}", s.id, s.provenance))
        .collect()
}

fn recipe_ids<'a>(variety: &'a str, recipe: &'a ResolutionRecipe, companion: &'a Companion) -> Vec<&'a str> {
    let mut ids = vec![variety];
    if let ResolutionRecipe::InvolutionQuotient { cover, .. } = recipe {
        ids.push(cover);
    }
    if let Companion::Curve(id) = companion {
        ids.push(id);
    }
    ids
}

/// Calibrate at `calibration_prime`, then compare `t3` with the target at every other prime.
pub fn match_pipeline(catalog: &Catalog, req: &MatchRequest, opts: &CountOptions) -> Result<MatchOutcome> {
    let variety = catalog.get(&req.variety)?;
    let mut primes: Vec<u64> = req.primes.clone();
    if !primes.contains(&req.calibration_prime) {
        primes.push(req.calibration_prime);
    }
    let unique: BTreeSet<u64> = primes.iter().copied().collect();
    if unique.len() != primes.len() {
        return Err(invalid!("the prime list has duplicates"));
    }
    for &p in &primes {
        if variety.is_bad_prime(p) {
            return Err(refused!("p = {p} is a bad prime of {}", variety.id));
        }
    }
    let targets = target_traces(catalog, req.form, &req.companion, &primes, opts)?;
    let points = primes
        .iter()
        .map(|&p| evaluate_model(catalog, variety, &req.recipe, p, opts))
        .collect::<Result<Vec<_>>>()?;
    let ci = primes.iter().position(|&p| p == req.calibration_prime).expect("calibration prime added");
    let cal = calibrate(&points[ci], targets[ci], req.recipe.defect_class())?;
    let b3 = variety.known.as_ref().and_then(|k| k.b3).map(|b| b as u64);

    let mut table = TraceTable::new(&variety.id);
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for ((&p, point), &target) in primes.iter().zip(&points).zip(&targets) {
        let row = point.trace_row(cal.defect).with_candidate(target);
        if p != req.calibration_prime && req.primes.contains(&p) {
            rows.push(MatchRow {
                p,
                t3: row.t3,
                a_p: target,
                equal: row.t3 == target,
                weil_ok: b3.map(|b| weil_ok(row.t3, p, b)),
            });
        }
        table.rows.push(row);
        records.extend(point.records.iter().cloned());
    }
    table.rows.sort_by_key(|r| r.p);
    rows.sort_by_key(|r| r.p);
    let overall = rows.iter().all(|r| r.equal);
    let report = MatchReport {
        variety_id: variety.id.clone(),
        form: req.form,
        companion: req.companion.clone(),
        calibration_prime: req.calibration_prime,
        calibrated: CalibratedParameters {
            b2: cal.b2,
            defect: cal.defect,
            defect_class: req.recipe.defect_class(),
            convention: req.recipe.convention(),
        },
        rows,
        overall,
        provenance: provenance_of(catalog, &recipe_ids(&req.variety, &req.recipe, &req.companion)),
    };
    Ok(MatchOutcome { report, table, records })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiReport {
    pub variety_id: String,
    pub p: u64,
    pub chi: i64,
    /// Points of the resolved model.
    pub resolved_count: u64,
    pub candidates: Vec<BettiCandidate>,
    pub unique: bool,
    pub congruence: Option<Congruence>,
    pub congruence_met: Option<bool>,
    pub note: Option<String>,
    pub provenance: Vec<String>,
}

/// Count the resolved model at `p` and list the Betti pairs consistent with it.
pub fn betti_pipeline(
    catalog: &Catalog,
    variety_id: &str,
    recipe: &ResolutionRecipe,
    p: u64,
    chi: i64,
    congruence: Option<Congruence>,
    opts: &CountOptions,
) -> Result<(BettiReport, Vec<CountRecord>)> {
    let variety = catalog.get(variety_id)?;
    let point = evaluate_model(catalog, variety, recipe, p, opts)?;
    let n = point.resolved_count();
    let candidates = solve_betti(n, p, chi);
    let met = congruence.map(|c| c.holds(p));
    let note = match (candidates.len(), congruence) {
        (0, Some(c)) if !c.holds(p) => Some(format!("no consistent candidate; congruence {c} unmet")),
        (0, _) => Some("no consistent candidate; the inputs are inconsistent".into()),
        (1, _) => None,
        (k, _) => Some(format!("ambiguous: {k} candidates")),
    };
    let report = BettiReport {
        variety_id: variety.id.clone(),
        p,
        chi,
        resolved_count: n,
        unique: candidates.len() == 1,
        candidates,
        congruence,
        congruence_met: met,
        note,
        provenance: provenance_of(catalog, &recipe_ids(variety_id, recipe, &Companion::None)),
    };
    Ok((report, point.records))
}
