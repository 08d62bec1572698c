//! From point counts to Frobenius traces.
//!
//! For a smooth projective threefold with `h^1 = h^5 = 0` and `H^2` spanned by
//! algebraic classes, the Lefschetz formula reads
//! `#X(F_p) = 1 + p b2 + p^2 b2 + p^3 - tr(Frob | H^3)`.
//! Counts are usually taken on a singular model, so a correction for the
//! exceptional loci of the resolution is added first.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::catalog::{derivative, evaluate_polynomial, singular_points_over, Monomial, VarietySpec};
use crate::counting::{count_projective, scan_projective, CountOptions};
use crate::error::{domain, refused, Error, Result};
use crate::ffield::{kronecker, FiniteField, PrimeField, QuadraticExtension};
use crate::poly::{determinant, ModPoly};

/// `(1 + p b2 + p^2 b2 + p^3) - (N_p + correction)`.
pub fn trace_h3(n_p: u64, p: u64, b2: i64, correction: i64) -> i64 {
    let p = p as i128;
    let expected = 1 + p * b2 as i128 + p * p * b2 as i128 + p * p * p;
    (expected - n_p as i128 - correction as i128) as i64
}

/// `|t3| <= b3 p^{3/2}`, compared exactly as `t3^2 <= b3^2 p^3`.
pub fn weil_ok(t3: i64, p: u64, b3: u64) -> bool {
    let t = t3 as i128;
    let (b, p) = (b3 as i128, p as i128);
    t * t <= b * b * p * p * p
}

/// `|a| <= 2 p^{(k-1)/2}` for a weight `k` coefficient, compared as `a^2 <= 4 p^{k-1}`.
pub fn ramanujan_ok(a: i64, p: u64, weight: u32) -> bool {
    let a = a as i128;
    a * a <= 4 * (p as i128).pow(weight.saturating_sub(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Each node replaced by a line.
    Small,
    /// Each node blown up to a quadric surface.
    Big,
}

impl fmt::Display for Resolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Resolution::Small => "small",
            Resolution::Big => "big",
        })
    }
}

impl FromStr for Resolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Resolution::Small),
            "big" => Ok(Resolution::Big),
            other => Err(domain!("unknown resolution {other:?} (small or big)")),
        }
    }
}

/// Extra `F_p`-points when one rational node is replaced by its exceptional locus.
///
/// Big: `P^1 x P^1` has `p^2 + 2p + 1` points, its non-split form `p^2 + 1`.
/// Small: a line adds `p`; a non-split node contributes nothing (convention).
pub fn node_contribution(p: u64, resolution: Resolution, split: bool) -> i64 {
    let p = p as i64;
    match (resolution, split) {
        (Resolution::Big, true) => p * p + 2 * p,
        (Resolution::Big, false) => p * p,
        (Resolution::Small, true) => p,
        (Resolution::Small, false) => 0,
    }
}

/// A rational singular point and its tangent cone.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeInfo {
    /// Normalized projective coordinates.
    pub point: Vec<u32>,
    /// Determinant of the tangent-cone quadratic form, reduced mod p.
    pub cone_det: u32,
    /// Whether the tangent cone splits over `F_p` (rational rulings or branches).
    pub split: bool,
}

/// Hessian of `poly` at `point`, with the row and column of the first nonzero
/// coordinate removed: the quadratic part of the local equation in that chart.
pub fn tangent_cone<F: FiniteField>(field: &F, poly: &[Monomial], point: &[F::Elem]) -> Vec<Vec<F::Elem>> {
    let n = point.len();
    let lead = point.iter().position(|&v| !field.is_zero(v)).unwrap_or(0);
    let keep: Vec<usize> = (0..n).filter(|&i| i != lead).collect();
    keep.iter()
        .map(|&i| {
            let di = derivative(poly, i);
            keep.iter()
                .map(|&j| evaluate_polynomial(field, &derivative(&di, j), point))
                .collect()
        })
        .collect()
}

/// Determinant by Gaussian elimination over any finite field.
pub fn determinant_over<F: FiniteField>(field: &F, matrix: &[Vec<F::Elem>]) -> F::Elem {
    let n = matrix.len();
    let mut m = matrix.to_vec();
    let mut det = field.one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !field.is_zero(m[r][col])) else {
            return field.zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = field.neg(det);
        }
        det = field.mul(det, m[col][col]);
        let inv = field.inv(m[col][col]).expect("pivot is nonzero");
        for r in col + 1..n {
            let factor = field.mul(m[r][col], inv);
            if field.is_zero(factor) {
                continue;
            }
            for c in col..n {
                let t = field.mul(factor, m[col][c]);
                m[r][c] = field.sub(m[r][c], t);
            }
        }
    }
    det
}

/// Whether a nondegenerate quadratic form of even rank `m` is split
/// (hyperbolic): `(-1)^{m/2} det` must be a square.
pub(crate) fn split_by_det<F: FiniteField>(field: &F, det: F::Elem, rank: usize) -> Result<bool> {
    if rank % 2 == 1 {
        return Err(domain!("splitting of an odd-rank tangent cone is not defined"));
    }
    let d = if (rank / 2) % 2 == 1 { field.neg(det) } else { det };
    Ok(field.quadratic_character(d) == 1)
}

fn single_equation(spec: &VarietySpec) -> Result<&[Monomial]> {
    match spec.equations.as_slice() {
        [eq] => Ok(eq),
        _ => Err(domain!("{} is not a hypersurface", spec.id)),
    }
}

/// Tangent cone of the reduced polynomial `f` at the rational singular point `point`.
/// A degenerate cone (not an ordinary double point) is refused.
pub fn classify_node(field: &PrimeField, f: &ModPoly, point: &[u32]) -> Result<NodeInfo> {
    let h = f.hessian(field, point);
    let lead = point.iter().position(|&v| v != 0).unwrap_or(0);
    let cone: Vec<Vec<u32>> = h
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != lead)
        .map(|(_, row)| row.iter().enumerate().filter(|&(j, _)| j != lead).map(|(_, &v)| v).collect())
        .collect();
    let det = determinant(field, &cone);
    if det == 0 {
        return Err(refused!("singular point {point:?} mod {} is not an ordinary double point", field.p()));
    }
    Ok(NodeInfo {
        point: point.to_vec(),
        cone_det: det,
        split: split_by_det(field, field.from_int(det as i64), cone.len())?,
    })
}

/// Rational singular points of a hypersurface with their tangent cones.
pub fn analyze_nodes(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<Vec<NodeInfo>> {
    spec.require_good_prime(p)?;
    single_equation(spec)?;
    let field = PrimeField::new(p)?;
    let f = &spec.reduce(&field)?[0];
    let scan = scan_projective(spec, p, opts)?;
    scan.singular.iter().map(|pt| classify_node(&field, f, pt)).collect()
}

/// Total correction for resolving all rational nodes, every node split or not
/// according to `kronecker(splitting_discriminant, p)`.
pub fn node_correction(spec: &VarietySpec, p: u64, resolution: Resolution, splitting_discriminant: i64, opts: &CountOptions) -> Result<i64> {
    if splitting_discriminant.rem_euclid(p as i64) == 0 {
        return Err(refused!("p = {p} divides the splitting discriminant {splitting_discriminant}"));
    }
    spec.require_good_prime(p)?;
    let nodes = scan_projective(spec, p, opts)?.singular.len() as i64;
    let split = kronecker(splitting_discriminant, p as i64) == 1;
    Ok(nodes * node_contribution(p, resolution, split))
}

/// Correction from analyzed nodes, each with its own splitting.
pub fn correction_from_nodes(nodes: &[NodeInfo], p: u64, resolution: Resolution) -> i64 {
    nodes.iter().map(|n| node_contribution(p, resolution, n.split)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiCandidate {
    pub b2: i64,
    pub b3: i64,
}

/// All `(b2, b3)` with `b2 >= 1`, `b3 = 2 + 2 b2 - chi >= 0` and
/// `|1 + p b2 + p^2 b2 + p^3 - N_p| <= b3 p^{3/2}`.
pub fn solve_betti(n_p: u64, p: u64, chi: i64) -> Vec<BettiCandidate> {
    let pi = p as i128;
    let n = n_p as i128;
    let mut out = Vec::new();
    let start = 1i64.max((chi - 1).div_euclid(2));
    for b2 in start.. {
        let b3 = 2 + 2 * b2 - chi;
        if b3 < 0 {
            continue;
        }
        let diff = 1 + pi * b2 as i128 + pi * pi * b2 as i128 + pi * pi * pi - n;
        let bound = (b3 as i128) * (b3 as i128) * pi * pi * pi;
        if diff * diff <= bound {
            out.push(BettiCandidate { b2, b3 });
        } else if diff > 0 {
            // The left side grows by p + p^2 per step, faster than 2 p^{3/2}.
            break;
        }
    }
    out
}

/// One step of an Euler characteristic computation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LedgerMove {
    BaseChi { chi: i64 },
    /// Collapse `k` vanishing 3-spheres to points.
    ContractNodes { k: i64 },
    /// Quotient by an involution whose fixed locus has Euler number `chi_fixed`.
    RiemannHurwitz { chi_fixed: i64 },
    /// Replace a subvariety of Euler number `old_chi` by one of `new_chi`.
    Replace { old_chi: i64, new_chi: i64 },
    ResolveNodesSmall { k: i64 },
    ResolveNodesBig { k: i64 },
}

/// Euler characteristic after each move.
pub fn euler_steps(moves: &[LedgerMove]) -> Result<Vec<i64>> {
    let mut chi: Option<i64> = None;
    let mut steps = Vec::with_capacity(moves.len());
    for (i, mv) in moves.iter().enumerate() {
        let next = match (mv, chi) {
            (LedgerMove::BaseChi { chi }, _) => *chi,
            (_, None) => return Err(domain!("move {i} comes before any base_chi")),
            (LedgerMove::ContractNodes { k }, Some(c)) => c + k,
            (LedgerMove::RiemannHurwitz { chi_fixed }, Some(c)) => {
                let total = c + chi_fixed;
                if total % 2 != 0 {
                    return Err(domain!("riemann_hurwitz at move {i}: ({c} + {chi_fixed}) / 2 is not an integer"));
                }
                total / 2
            }
            (LedgerMove::Replace { old_chi, new_chi }, Some(c)) => c + new_chi - old_chi,
            (LedgerMove::ResolveNodesSmall { k }, Some(c)) => c + k,
            (LedgerMove::ResolveNodesBig { k }, Some(c)) => c + 3 * k,
        };
        chi = Some(next);
        steps.push(next);
    }
    Ok(steps)
}

pub fn euler_ledger(moves: &[LedgerMove]) -> Result<i64> {
    euler_steps(moves)?
        .last()
        .copied()
        .ok_or_else(|| domain!("empty ledger"))
}

/// Quintic threefold, 125 nodes contracted, quotient by the involution with
/// fixed locus `P^1 ⊔ E` (Euler numbers 2 and -5), both curves blown up, and
/// the 70 nodes of the quotient resolved by quadric surfaces.
pub fn quotient_ledger() -> Vec<LedgerMove> {
    vec![
        LedgerMove::BaseChi { chi: -200 },
        LedgerMove::ContractNodes { k: 125 },
        LedgerMove::RiemannHurwitz { chi_fixed: 2 - 5 },
        LedgerMove::Replace { old_chi: 2, new_chi: 4 },
        LedgerMove::Replace { old_chi: -5, new_chi: -10 },
        LedgerMove::ResolveNodesBig { k: 70 },
    ]
}

fn plane_curve(spec: &VarietySpec, p: u64) -> Result<&[Monomial]> {
    spec.require_good_prime(p)?;
    if spec.nvars() != 3 {
        return Err(domain!("{} is not a plane curve", spec.id));
    }
    single_equation(spec)
}

/// Points of the normalization: smooth points, plus two per node whose
/// branches are rational (the tangent cone `q` splits iff `-det q` is a square).
fn normalization_count<F: FiniteField>(spec: &VarietySpec, field: &F, plane_count: u64) -> Result<u64> {
    let eq = single_equation(spec)?;
    let mut total = plane_count as i64;
    for pt in singular_points_over(spec, field)? {
        let cone = tangent_cone(field, eq, &pt);
        let det = determinant_over(field, &cone);
        if field.is_zero(det) {
            return Err(refused!("{} has a singular point that is not a node", spec.id));
        }
        total += if split_by_det(field, det, 2)? { 1 } else { -1 };
    }
    Ok(total as u64)
}

/// `a_p = p + 1 - #E(F_p)` for the normalization `E` of a nodal plane curve.
pub fn elliptic_ap(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<i64> {
    plane_curve(spec, p)?;
    let count = count_projective(spec, p, 1, opts)?.count;
    let n = normalization_count(spec, &PrimeField::new(p)?, count)?;
    Ok(p as i64 + 1 - n as i64)
}

/// `a_{p^2} = p^2 + 1 - #E(F_{p^2})`.
pub fn elliptic_ap_square(spec: &VarietySpec, p: u64, opts: &CountOptions) -> Result<i64> {
    plane_curve(spec, p)?;
    let count = count_projective(spec, p, 2, opts)?.count;
    let n = normalization_count(spec, &QuadraticExtension::new(p)?, count)?;
    Ok((p * p) as i64 + 1 - n as i64)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub p: u64,
    #[serde(rename = "N_p")]
    pub n_p: u64,
    pub b2: i64,
    pub correction: i64,
    pub t3: i64,
    pub candidate_ap: Option<i64>,
    #[serde(rename = "match")]
    pub matches: Option<bool>,
}

impl TraceRow {
    pub fn new(p: u64, n_p: u64, b2: i64, correction: i64) -> Self {
        TraceRow {
            p,
            n_p,
            b2,
            correction,
            t3: trace_h3(n_p, p, b2, correction),
            candidate_ap: None,
            matches: None,
        }
    }

    pub fn with_candidate(mut self, ap: i64) -> Self {
        self.candidate_ap = Some(ap);
        self.matches = Some(ap == self.t3);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceTable {
    pub variety_id: String,
    pub rows: Vec<TraceRow>,
}

impl TraceTable {
    pub fn new(variety_id: impl Into<String>) -> Self {
        TraceTable {
            variety_id: variety_id.into(),
            rows: Vec::new(),
        }
    }

    /// Primes whose trace breaks the Weil bound for the given `b3`.
    pub fn weil_violations(&self, b3: u64) -> Vec<u64> {
        self.rows
            .iter()
            .filter(|r| !weil_ok(r.t3, r.p, b3))
            .map(|r| r.p)
            .collect()
    }

    /// CSV with columns `p,N_p,b2,correction,t3,candidate_ap,match`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| domain!("csv writer: {e}"))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(variety_id: &str, text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<TraceRow>, _>>()?;
        Ok(TraceTable {
            variety_id: variety_id.into(),
            rows,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace table serializes")
    }
}
