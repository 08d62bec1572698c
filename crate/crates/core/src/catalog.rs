//! Registry of catalogued varieties, stored as JSON data.
//!
//! Each entry carries integer-coefficient equations over an ambient space,
//! the primes of bad reduction, optional known invariants, and optional
//! coordinate involutions. The shipped file lives in `catalog/varieties.json`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{domain, invalid, refused, Error, Result};
use crate::ffield::{is_prime, FiniteField, PrimeField};
use crate::poly::ModPoly;

const SHIPPED: &str = include_str!("../catalog/varieties.json");

/// `coefficient * prod x_i^exponents[i]`, serialized as `[coefficient, [exponents...]]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "(i64, Vec<u32>)", into = "(i64, Vec<u32>)")]
pub struct Monomial {
    pub coefficient: i64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn new(coefficient: i64, exponents: Vec<u32>) -> Self {
        Monomial {
            coefficient,
            exponents,
        }
    }

    pub fn weighted_degree(&self, weights: &[u32]) -> u64 {
        self.exponents
            .iter()
            .zip(weights)
            .map(|(&e, &w)| e as u64 * w as u64)
            .sum()
    }
}

impl From<(i64, Vec<u32>)> for Monomial {
    fn from((coefficient, exponents): (i64, Vec<u32>)) -> Self {
        Monomial {
            coefficient,
            exponents,
        }
    }
}

impl From<Monomial> for (i64, Vec<u32>) {
    fn from(m: Monomial) -> Self {
        (m.coefficient, m.exponents)
    }
}

pub type Polynomial = Vec<Monomial>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Ambient {
    /// `P^n`, coordinates `x_0..x_n`.
    Projective { n: usize },
    /// `P(w_0, ..., w_n)`.
    WeightedProjective { n: usize, weights: Vec<u32> },
    /// Open torus of `P^n`: all coordinates nonzero.
    Torus { n: usize },
    /// Double cover of `P^3`; the equations are the branch planes, whose product is the branch octic.
    DoubleCoverOfP3 { n: usize },
}

impl Ambient {
    pub fn dimension(&self) -> usize {
        match self {
            Ambient::Projective { n }
            | Ambient::WeightedProjective { n, .. }
            | Ambient::Torus { n }
            | Ambient::DoubleCoverOfP3 { n } => *n,
        }
    }

    pub fn coordinate_count(&self) -> usize {
        self.dimension() + 1
    }

    pub fn weights(&self) -> Vec<u32> {
        match self {
            Ambient::WeightedProjective { weights, .. } => weights.clone(),
            _ => vec![1; self.coordinate_count()],
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Ambient::Projective { .. } => "projective",
            Ambient::WeightedProjective { .. } => "weighted_projective",
            Ambient::Torus { .. } => "torus",
            Ambient::DoubleCoverOfP3 { .. } => "double_cover_of_p3",
        }
    }

    /// Number of points of the ambient space over `F_q`.
    pub fn point_count(&self, q: u64) -> u128 {
        let q = q as u128;
        let projective = |n: usize| (0..=n as u32).map(|k| q.pow(k)).sum::<u128>();
        match self {
            Ambient::Projective { n } | Ambient::WeightedProjective { n, .. } => projective(*n),
            Ambient::Torus { n } => (q - 1).pow(*n as u32),
            Ambient::DoubleCoverOfP3 { .. } => 2 * projective(3),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Known {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b2: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b3: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub node_count: Option<u64>,
    pub provenance: String,
}

/// Coordinate involution given by a signed permutation matrix, `(Phi x)_r = sum_c M[r][c] x_c`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InvolutionSpec {
    pub id: String,
    pub matrix: Vec<Vec<i64>>,
}

impl InvolutionSpec {
    pub fn identity(n: usize) -> Self {
        InvolutionSpec {
            id: "identity".into(),
            matrix: (0..n)
                .map(|r| (0..n).map(|c| i64::from(r == c)).collect())
                .collect(),
        }
    }

    pub fn diagonal(id: &str, signs: &[i64]) -> Self {
        let n = signs.len();
        InvolutionSpec {
            id: id.into(),
            matrix: (0..n)
                .map(|r| (0..n).map(|c| if r == c { signs[r] } else { 0 }).collect())
                .collect(),
        }
    }

    /// For each row `r`, the column `c` and sign `s` with `(Phi x)_r = s x_c`.
    pub fn signed_permutation(&self) -> Result<Vec<(usize, i64)>> {
        let n = self.matrix.len();
        let mut cols = vec![0usize; n];
        let mut seen = vec![false; n];
        let mut out = Vec::with_capacity(n);
        for (r, row) in self.matrix.iter().enumerate() {
            if row.len() != n {
                return Err(domain!("involution {}: matrix is not square", self.id));
            }
            let nz: Vec<(usize, i64)> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v != 0)
                .map(|(c, &v)| (c, v))
                .collect();
            match nz.as_slice() {
                [(c, s)] if s.abs() == 1 && !seen[*c] => {
                    seen[*c] = true;
                    cols[r] = *c;
                    out.push((*c, *s));
                }
                _ => {
                    return Err(domain!(
                        "involution {}: row {r} is not a signed permutation row",
                        self.id
                    ))
                }
            }
        }
        // Phi^2 = I: row r maps to column c = cols[r]; row c must map back with the same sign.
        for (r, &(c, s)) in out.iter().enumerate() {
            let (c2, s2) = out[c];
            if c2 != r || s * s2 != 1 {
                return Err(domain!("involution {}: matrix does not square to the identity", self.id));
            }
        }
        Ok(out)
    }

    /// `F(Phi x)` as an integer polynomial.
    pub fn transform(&self, poly: &[Monomial]) -> Result<Polynomial> {
        let perm = self.signed_permutation()?;
        Ok(poly
            .iter()
            .map(|m| {
                let mut e = vec![0u32; m.exponents.len()];
                let mut c = m.coefficient;
                for (r, &k) in m.exponents.iter().enumerate() {
                    let (col, s) = perm[r];
                    e[col] += k;
                    if s < 0 && k % 2 == 1 {
                        c = -c;
                    }
                }
                Monomial::new(c, e)
            })
            .collect())
    }

    /// Sign `eps` with `F(Phi x) = eps F(x)`, or an error if there is none.
    pub fn equation_sign(&self, poly: &[Monomial]) -> Result<i64> {
        let original = merge(poly);
        let image = merge(&self.transform(poly)?);
        if image == original {
            return Ok(1);
        }
        let negated: BTreeMap<Vec<u32>, i64> = original.iter().map(|(e, c)| (e.clone(), -c)).collect();
        if image == negated {
            return Ok(-1);
        }
        Err(domain!("involution {} does not preserve the equations", self.id))
    }
}

fn merge(poly: &[Monomial]) -> BTreeMap<Vec<u32>, i64> {
    let mut map = BTreeMap::new();
    for m in poly {
        *map.entry(m.exponents.clone()).or_insert(0) += m.coefficient;
    }
    map.retain(|_, c| *c != 0);
    map
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarietySpec {
    pub id: String,
    pub ambient: Ambient,
    pub dimension: i64,
    pub equations: Vec<Polynomial>,
    pub bad_primes: BTreeSet<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known: Option<Known>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub involutions: Vec<InvolutionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<String>,
    pub provenance: String,
}

impl VarietySpec {
    pub fn nvars(&self) -> usize {
        self.ambient.coordinate_count()
    }

    pub fn is_bad_prime(&self, p: u64) -> bool {
        self.bad_primes.contains(&p)
    }

    pub fn require_good_prime(&self, p: u64) -> Result<()> {
        if self.is_bad_prime(p) {
            return Err(refused!(
                "{p} is a bad prime of {} (bad primes {:?}); reduction mod {p} is not smooth",
                self.id,
                self.bad_primes
            ));
        }
        Ok(())
    }

    pub fn involution(&self, id: &str) -> Result<&InvolutionSpec> {
        self.involutions
            .iter()
            .find(|i| i.id == id)
            .ok_or_else(|| invalid!("variety {} has no involution {id}", self.id))
    }

    /// Equations reduced mod p; an equation that vanishes identically mod p is an error.
    pub fn reduce(&self, field: &PrimeField) -> Result<Vec<ModPoly>> {
        self.equations
            .iter()
            .enumerate()
            .map(|(i, eq)| {
                let poly = ModPoly::from_monomials(field, self.nvars(), eq);
                if poly.is_zero() {
                    Err(domain!(
                        "equation {i} of {} vanishes identically mod {}",
                        self.id,
                        field.p()
                    ))
                } else {
                    Ok(poly)
                }
            })
            .collect()
    }

    /// Structural checks: shapes, homogeneity, bad primes, provenance, involutions.
    pub fn validate(&self) -> Result<()> {
        let id = &self.id;
        if id.is_empty() {
            return Err(invalid!("variety with empty id"));
        }
        let n = self.nvars();
        let weights = self.ambient.weights();
        if weights.len() != n || weights.contains(&0) {
            return Err(invalid!("{id}: weights must be positive, one per coordinate"));
        }
        for (i, eq) in self.equations.iter().enumerate() {
            if eq.is_empty() {
                return Err(invalid!("{id}: equation {i} has no monomials"));
            }
            if let Some(m) = eq.iter().find(|m| m.exponents.len() != n) {
                return Err(invalid!(
                    "{id}: equation {i} has a monomial with {} exponents, expected {n}",
                    m.exponents.len()
                ));
            }
            let degrees: BTreeSet<u64> = eq.iter().map(|m| m.weighted_degree(&weights)).collect();
            if degrees.len() != 1 {
                return Err(invalid!("{id}: equation {i} is not homogeneous (degrees {degrees:?})"));
            }
        }
        if let Ambient::DoubleCoverOfP3 { n: dim } = self.ambient {
            let linear = self
                .equations
                .iter()
                .all(|eq| eq.iter().all(|m| m.exponents.iter().sum::<u32>() == 1));
            if dim != 3 || self.equations.len() != 8 || !linear {
                return Err(invalid!("{id}: a double octic needs 8 linear forms on P^3"));
            }
        }
        if self.bad_primes.is_empty() {
            return Err(invalid!("{id}: bad_primes must be nonempty"));
        }
        if let Some(p) = self.bad_primes.iter().find(|&&p| !is_prime(p)) {
            return Err(invalid!("{id}: bad prime {p} is not prime"));
        }
        if let Some(k) = &self.known {
            if k.provenance.trim().is_empty() {
                return Err(invalid!("{id}: known invariants need a provenance note"));
            }
        }
        let mut ids = BTreeSet::new();
        for inv in &self.involutions {
            if !ids.insert(&inv.id) {
                return Err(invalid!("{id}: duplicate involution {}", inv.id));
            }
            if inv.matrix.len() != n {
                return Err(invalid!("{id}: involution {} has the wrong size", inv.id));
            }
            for eq in &self.equations {
                inv.equation_sign(eq)
                    .map_err(|e| invalid!("{id}: {e}"))?;
            }
        }
        Ok(())
    }
}

/// Exact evaluation of every defining polynomial at `point`.
pub fn evaluate<F: FiniteField>(spec: &VarietySpec, field: &F, point: &[F::Elem]) -> Result<Vec<F::Elem>> {
    if point.len() != spec.nvars() {
        return Err(domain!(
            "{}: point has {} coordinates, expected {}",
            spec.id,
            point.len(),
            spec.nvars()
        ));
    }
    Ok(spec
        .equations
        .iter()
        .map(|eq| evaluate_polynomial(field, eq, point))
        .collect())
}

pub fn evaluate_polynomial<F: FiniteField>(field: &F, poly: &[Monomial], point: &[F::Elem]) -> F::Elem {
    poly.iter().fold(field.zero(), |acc, m| {
        let term = m
            .exponents
            .iter()
            .zip(point)
            .fold(field.from_int(m.coefficient), |t, (&e, &x)| {
                if e == 0 {
                    t
                } else {
                    field.mul(t, field.pow(x, e as u64))
                }
            });
        field.add(acc, term)
    })
}

/// Partial derivative of an integer polynomial.
pub fn derivative(poly: &[Monomial], var: usize) -> Polynomial {
    poly.iter()
        .filter(|m| m.exponents[var] > 0)
        .map(|m| {
            let mut e = m.exponents.clone();
            e[var] -= 1;
            Monomial::new(m.coefficient * m.exponents[var] as i64, e)
        })
        .collect()
}

/// Rational singular points over `F_p`, normalized with first nonzero coordinate 1.
pub fn singular_points(spec: &VarietySpec, p: u64) -> Result<Vec<Vec<u32>>> {
    spec.require_good_prime(p)?;
    let scan = crate::counting::scan_projective(spec, p, &crate::counting::CountOptions::default())?;
    Ok(scan.singular)
}

/// Singular points over an arbitrary finite field, by exhaustive search.
pub fn singular_points_over<F: FiniteField>(spec: &VarietySpec, field: &F) -> Result<Vec<Vec<F::Elem>>> {
    spec.require_good_prime(field.characteristic() as u64)?;
    if !matches!(spec.ambient, Ambient::Projective { .. }) {
        return Err(refused!("singular points are computed for projective ambients only"));
    }
    let n = spec.nvars();
    let gradients: Vec<Vec<Polynomial>> = spec
        .equations
        .iter()
        .map(|eq| (0..n).map(|v| derivative(eq, v)).collect())
        .collect();
    let mut out = Vec::new();
    crate::counting::for_each_projective_point(field, n, |x| {
        let on = spec.equations.iter().all(|eq| field.is_zero(evaluate_polynomial(field, eq, x)));
        if on && gradients
            .iter()
            .flatten()
            .all(|d| field.is_zero(evaluate_polynomial(field, d, x)))
        {
            out.push(x.to_vec());
        }
    });
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Catalog {
    entries: Vec<VarietySpec>,
}

impl Catalog {
    pub fn new(entries: Vec<VarietySpec>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        for e in &entries {
            e.validate()?;
            if !ids.insert(e.id.clone()) {
                return Err(invalid!("duplicate variety id {}", e.id));
            }
        }
        Ok(Catalog { entries })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let entries: Vec<VarietySpec> = serde_json::from_str(text).map_err(|e| Error::parse(&e))?;
        Self::new(entries)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    /// Canonical text: values that fit on one line stay on one line.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(&self.entries).expect("catalog serializes");
        let mut out = String::new();
        write_canonical(&value, 0, &mut out);
        out.push('\n');
        out
    }

    pub fn entries(&self) -> &[VarietySpec] {
        &self.entries
    }

    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Result<&VarietySpec> {
        self.entries
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| invalid!("unknown variety id {id:?}"))
    }

    pub fn insert(&mut self, spec: VarietySpec) -> Result<()> {
        spec.validate()?;
        if self.entries.iter().any(|e| e.id == spec.id) {
            return Err(invalid!("duplicate variety id {}", spec.id));
        }
        self.entries.push(spec);
        Ok(())
    }
}

/// The shipped catalog.
pub fn load_catalog() -> Catalog {
    Catalog::from_json(SHIPPED).expect("shipped catalog is valid")
}

/// Text of the shipped catalog file.
pub fn shipped_catalog_text() -> &'static str {
    SHIPPED
}

const LINE_WIDTH: usize = 96;

fn write_canonical(value: &Value, indent: usize, out: &mut String) {
    let compact = serde_json::to_string(value).expect("json value serializes");
    if indent + compact.len() <= LINE_WIDTH || !matches!(value, Value::Array(_) | Value::Object(_)) {
        out.push_str(&compact);
        return;
    }
    let pad = " ".repeat(indent + 2);
    match value {
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_canonical(item, indent + 2, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&" ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_canonical(v, indent + 2, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&" ".repeat(indent));
            out.push('}');
        }
        _ => unreachable!(),
    }
}

/// Cleared-denominator torus equation
/// `(sum X_i)(sum a_i prod_{j != i} X_j) - t prod X_j` on the torus of `P^4`.
pub fn torus_polynomial(a: [i64; 5], t: i64) -> Polynomial {
    let mut terms: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
    for k in 0..5 {
        for (i, &ai) in a.iter().enumerate() {
            let mut e = vec![1u32; 5];
            e[i] -= 1;
            e[k] += 1;
            *terms.entry(e).or_insert(0) += ai;
        }
    }
    *terms.entry(vec![1; 5]).or_insert(0) -= t;
    terms
        .into_iter()
        .rev()
        .filter(|&(_, c)| c != 0)
        .map(|(e, c)| Monomial::new(c, e))
        .collect()
}

/// Torus hypersurface with parameters `(a_1 : ... : a_5 : t)`.
///
/// When every `a_i` is a perfect square the bad primes are the primes dividing
/// `t` or a nonzero `t - (sum ±sqrt a_i)^2`, together with 2. Otherwise the
/// primes dividing `30 t prod a_i` are used and the provenance says so.
pub fn hulek_verrill(a: [i64; 5], t: i64) -> VarietySpec {
    let roots: Option<Vec<i64>> = a.iter().map(|&x| exact_sqrt(x)).collect();
    let mut bad: BTreeSet<u64> = BTreeSet::from([2]);
    let provenance;
    match roots {
        Some(r) => {
            prime_factors_into(t, &mut bad);
            for signs in 0u32..32 {
                let s: i64 = r
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| if signs >> i & 1 == 1 { -x } else { x })
                    .sum();
                prime_factors_into(t - s * s, &mut bad);
            }
            provenance = "torus hypersurface family; bad primes from the singular parameter values".to_string();
        }
        None => {
            prime_factors_into(30 * t * a.iter().product::<i64>(), &mut bad);
            provenance = "torus hypersurface family; bad primes are a heuristic superset guess".to_string();
        }
    }
    let name = a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("_");
    VarietySpec {
        id: format!("hulek_verrill_{name}_{t}"),
        ambient: Ambient::Torus { n: 4 },
        dimension: 3,
        equations: vec![torus_polynomial(a, t)],
        bad_primes: bad,
        known: None,
        involutions: vec![],
        notes: Some(format!("a = {a:?}, t = {t}; all coordinates nonzero")),
        provenance,
    }
}

/// Double cover of `P^3` branched over the product of eight planes.
///
/// Bad primes: 2 and every prime dividing a nonzero minor of the 8 x 4
/// coefficient matrix, since those are the primes where the incidence
/// pattern of the arrangement can change.
pub fn double_octic(id: &str, planes: &[[i64; 4]]) -> Result<VarietySpec> {
    if planes.len() != 8 {
        return Err(domain!("a double octic needs exactly 8 planes, got {}", planes.len()));
    }
    if planes.iter().any(|p| p.iter().all(|&c| c == 0)) {
        return Err(domain!("zero linear form in the arrangement"));
    }
    let mut bad = BTreeSet::from([2u64]);
    for k in 1..=4usize {
        for rows in subsets(8, k) {
            for cols in subsets(4, k) {
                let m: Vec<Vec<i64>> = rows
                    .iter()
                    .map(|&r| cols.iter().map(|&c| planes[r][c]).collect())
                    .collect();
                prime_factors_into(integer_determinant(&m), &mut bad);
            }
        }
    }
    let equations = planes
        .iter()
        .map(|plane| {
            plane
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(i, &c)| {
                    let mut e = vec![0u32; 4];
                    e[i] = 1;
                    Monomial::new(c, e)
                })
                .collect()
        })
        .collect();
    let spec = VarietySpec {
        id: id.to_string(),
        ambient: Ambient::DoubleCoverOfP3 { n: 3 },
        dimension: 3,
        equations,
        bad_primes: bad,
        known: None,
        involutions: vec![],
        notes: Some("branch locus is the product of the eight listed planes".into()),
        provenance: "user-supplied plane arrangement".into(),
    };
    spec.validate()?;
    Ok(spec)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize == k {
            out.push((0..n).filter(|&i| mask >> i & 1 == 1).collect());
        }
    }
    out
}

fn integer_determinant(m: &[Vec<i64>]) -> i64 {
    match m.len() {
        0 => 1,
        1 => m[0][0],
        n => (0..n)
            .map(|c| {
                let minor: Vec<Vec<i64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &v)| v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * m[0][c] * integer_determinant(&minor)
            })
            .sum(),
    }
}

fn exact_sqrt(x: i64) -> Option<i64> {
    if x < 0 {
        return None;
    }
    let r = (x as f64).sqrt().round() as i64;
    (r - 1..=r + 1).find(|&s| s >= 0 && s * s == x)
}

fn prime_factors_into(n: i64, out: &mut BTreeSet<u64>) {
    let mut n = n.unsigned_abs();
    if n == 0 {
        return;
    }
    let mut d = 2u64;
    while d * d <= n {
        while n % d == 0 {
            out.insert(d);
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        out.insert(n);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ffield::QuadraticExtension;

    #[test]
    fn shipped_catalog_has_required_entries() {
        let cat = load_catalog();
        for id in [
            "schoen_x",
            "schoen_y",
            "schoen_quotient",
            "e_plane",
            "hm_quintic",
            "consani_scholten",
            "hulek_verrill_1_1_1_1_1_25",
            "hulek_verrill_1_1_1_9_9_9",
            "hulek_verrill_1_1_4_4_4_16",
            "double_octic_template",
        ] {
            assert!(cat.get(id).is_ok(), "{id}");
        }
        assert_eq!(cat.get("schoen_x").unwrap().bad_primes, BTreeSet::from([5]));
        assert_eq!(cat.get("schoen_quotient").unwrap().bad_primes, BTreeSet::from([2, 5]));
        assert_eq!(cat.get("e_plane").unwrap().bad_primes, BTreeSet::from([2, 5]));
    }

    #[test]
    fn shipped_catalog_is_canonical() {
        let cat = load_catalog();
        assert_eq!(cat.to_json(), shipped_catalog_text());
        let again = Catalog::from_json(&cat.to_json()).unwrap();
        assert_eq!(again, cat);
    }

    #[test]
    fn builders_match_shipped_entries() {
        let cat = load_catalog();
        for (a, t) in [([1, 1, 1, 1, 1], 25), ([1, 1, 1, 9, 9], 9), ([1, 1, 4, 4, 4], 16)] {
            let built = hulek_verrill(a, t);
            let shipped = cat.get(&built.id).unwrap();
            assert_eq!(built.equations, shipped.equations);
            assert_eq!(built.bad_primes, BTreeSet::from([2, 3, 5]));
            assert_eq!(shipped.bad_primes, built.bad_primes);
        }
    }

    #[test]
    fn parse_error_reports_line() {
        let text = "[\n  {\"id\": \"x\",\n   \"ambient\": 7\n  }\n]";
        match Catalog::from_json(text) {
            Err(Error::Parse { line, .. }) => assert!(line >= 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn validation_rejects_inhomogeneous() {
        let spec = VarietySpec {
            id: "bad".into(),
            ambient: Ambient::Projective { n: 2 },
            dimension: 1,
            equations: vec![vec![Monomial::new(1, vec![2, 0, 0]), Monomial::new(1, vec![1, 0, 0])]],
            bad_primes: BTreeSet::from([2]),
            known: None,
            involutions: vec![],
            notes: None,
            provenance: "test".into(),
        };
        assert!(matches!(spec.validate(), Err(Error::Validation(_))));
    }

    #[test]
    fn evaluate_examples() {
        let cat = load_catalog();
        let x = cat.get("schoen_x").unwrap();
        let f7 = PrimeField::new(7).unwrap();
        let ones: Vec<_> = (0..5).map(|_| f7.element(1)).collect();
        assert_eq!(evaluate(x, &f7, &ones).unwrap(), vec![f7.element(0)]);
        let f3 = PrimeField::new(3).unwrap();
        let e0: Vec<_> = [1, 0, 0, 0, 0].iter().map(|&v| f3.element(v)).collect();
        assert_eq!(evaluate(x, &f3, &e0).unwrap(), vec![f3.element(1)]);
        let e = cat.get("e_plane").unwrap();
        let f11 = PrimeField::new(11).unwrap();
        let pt: Vec<_> = (0..3).map(|_| f11.element(1)).collect();
        assert_eq!(evaluate(e, &f11, &pt).unwrap(), vec![f11.element(0)]);
        assert!(evaluate(e, &f11, &pt[..2]).is_err());
    }

    #[test]
    fn involutions_preserve_equations() {
        let cat = load_catalog();
        let y = cat.get("schoen_y").unwrap();
        let iota = y.involution("iota").unwrap();
        assert_eq!(iota.equation_sign(&y.equations[0]).unwrap(), 1);
        let x = cat.get("schoen_x").unwrap();
        let swap = x.involution("iota").unwrap();
        assert_eq!(swap.equation_sign(&x.equations[0]).unwrap(), 1);
        let bad = InvolutionSpec::diagonal("flip", &[1, -1, 1, 1, 1]);
        assert!(bad.equation_sign(&x.equations[0]).is_err());
    }

    #[test]
    fn quotient_equation_is_the_invariant_form_of_the_y_equation() {
        // Substitute Y3 = y3^2, Y4 = y4^2, Y5 = y3 y4 and compare with the y-form.
        let cat = load_catalog();
        let y = &cat.get("schoen_y").unwrap().equations[0];
        let q = &cat.get("schoen_quotient").unwrap().equations;
        let pulled: Polynomial = q[0]
            .iter()
            .map(|m| {
                let e = &m.exponents;
                Monomial::new(m.coefficient, vec![e[0], e[1], e[2], 2 * e[3] + e[5], 2 * e[4] + e[5]])
            })
            .collect();
        assert_eq!(merge(&pulled), merge(y));
        let pulled_relation: Polynomial = q[1]
            .iter()
            .map(|m| {
                let e = &m.exponents;
                Monomial::new(m.coefficient, vec![e[0], e[1], e[2], 2 * e[3] + e[5], 2 * e[4] + e[5]])
            })
            .collect();
        assert!(merge(&pulled_relation).is_empty());
    }

    #[test]
    fn y_form_is_the_x_form_after_the_linear_change() {
        // x = (y0, (y1+y4)/2, (y2+y3)/2, (y2-y3)/2, (y1-y4)/2); check 16 F(x(y)) = G(y)
        // by evaluation at random points mod a large prime.
        let cat = load_catalog();
        let fx = &cat.get("schoen_x").unwrap().equations[0];
        let gy = &cat.get("schoen_y").unwrap().equations[0];
        let field = PrimeField::new(1_000_003).unwrap();
        let half = field.inv(field.element(2)).unwrap();
        let mut seed = 12345u64;
        for _ in 0..50 {
            let y: Vec<_> = (0..5)
                .map(|_| {
                    seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    field.element((seed >> 33) as i64)
                })
                .collect();
            let x = vec![
                y[0],
                field.mul(field.add(y[1], y[4]), half),
                field.mul(field.add(y[2], y[3]), half),
                field.mul(field.sub(y[2], y[3]), half),
                field.mul(field.sub(y[1], y[4]), half),
            ];
            let lhs = field.mul(field.element(16), evaluate_polynomial(&field, fx, &x));
            let rhs = evaluate_polynomial(&field, gy, &y);
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn homogeneity_under_scaling() {
        let cat = load_catalog();
        let field = PrimeField::new(101).unwrap();
        for spec in cat.entries() {
            let w = spec.ambient.weights();
            for eq in &spec.equations {
                let deg = eq[0].weighted_degree(&w);
                let x: Vec<_> = (0..spec.nvars()).map(|i| field.element(3 * i as i64 + 2)).collect();
                let lam = field.element(7);
                let scaled: Vec<_> = x.iter().zip(&w).map(|(&v, &wi)| field.mul(v, field.pow(lam, wi as u64))).collect();
                let lhs = evaluate_polynomial(&field, eq, &scaled);
                let rhs = field.mul(field.pow(lam, deg), evaluate_polynomial(&field, eq, &x));
                assert_eq!(lhs, rhs, "{}", spec.id);
            }
        }
    }

    #[test]
    fn singular_points_examples() {
        let cat = load_catalog();
        let x = cat.get("schoen_x").unwrap();
        assert_eq!(singular_points(x, 11).unwrap().len(), 125);
        assert_eq!(singular_points(x, 7).unwrap(), vec![vec![1, 1, 1, 1, 1]]);
        assert!(matches!(singular_points(x, 5), Err(Error::Refused(_))));
        let e = cat.get("e_plane").unwrap();
        let nodes = singular_points(e, 11).unwrap();
        assert_eq!(nodes.len(), 5);
        for pt in &nodes {
            assert_eq!(pt[0], 1);
            assert_eq!(pt[1] * pt[2] % 11, 1);
        }
    }

    #[test]
    fn singular_points_over_extension_agree_on_rational_points() {
        let cat = load_catalog();
        let e = cat.get("e_plane").unwrap();
        let f9 = QuadraticExtension::new(3).unwrap();
        let over9 = singular_points_over(e, &f9).unwrap();
        // Over F_9, 5 does not divide 9 - 1, so only [1:1:1] is a node.
        assert_eq!(over9.len(), 1);
        let f = PrimeField::new(3).unwrap();
        assert_eq!(singular_points_over(e, &f).unwrap().len(), singular_points(e, 3).unwrap().len());
    }

    #[test]
    fn double_octic_bad_primes() {
        let planes = [
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [1, 1, 0, 0],
            [0, 1, 1, 0],
            [0, 0, 1, 1],
            [1, 0, 0, 1],
        ];
        let spec = double_octic("t", &planes).unwrap();
        assert_eq!(spec.bad_primes, BTreeSet::from([2]));
        let scaled = {
            let mut p = planes;
            p[4] = [1, 3, 0, 0];
            p
        };
        assert!(double_octic("t", &scaled).unwrap().bad_primes.contains(&3));
        assert!(double_octic("t", &planes[..7]).is_err());
    }
}
