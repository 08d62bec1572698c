//! Finite determination of 2-adic representations by traces at a few primes.
//!
//! Quadratic characters unramified outside a set `S` of primes (and infinity)
//! form an elementary abelian 2-group. A prime `p` outside `S` gives the vector
//! of its Kronecker symbols against a basis of that group; a set `T` of primes
//! determines the representation (given even traces and equal determinants mod 2)
//! once its vectors hit every non-identity element.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::ffield::{is_prime, kronecker};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureBasis {
    pub primes: Vec<u64>,
    /// With `2` in `S`: `-1, 2` and the odd primes of `S` in increasing order.
    /// Otherwise the signed primes `p* = (-1)^{(p-1)/2} p` in increasing order of `p`.
    pub discriminants: Vec<i64>,
}

impl SignatureBasis {
    pub fn len(&self) -> usize {
        self.discriminants.len()
    }

    pub fn is_empty(&self) -> bool {
        self.discriminants.is_empty()
    }

    /// Number of quadratic characters, the trivial one included.
    pub fn group_order(&self) -> u64 {
        1 << self.len()
    }

    /// Every vector except the identity, in lexicographic order with `-1 < +1`.
    pub fn non_identity_vectors(&self) -> Vec<SignatureVector> {
        let n = self.len();
        (0..(1u64 << n))
            .map(|mask| SignatureVector {
                signs: (0..n)
                    .map(|i| if mask >> (n - 1 - i) & 1 == 0 { -1 } else { 1 })
                    .collect(),
            })
            .filter(|v| !v.is_identity())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignatureVector {
    pub signs: Vec<i8>,
}

impl SignatureVector {
    pub fn is_identity(&self) -> bool {
        self.signs.iter().all(|&s| s == 1)
    }
}

pub fn build_basis(s: &BTreeSet<u64>) -> Result<SignatureBasis> {
    if let Some(&bad) = s.iter().find(|&&p| !is_prime(p)) {
        return Err(domain!("{bad} in the bad-prime set is not prime"));
    }
    let odd = s.iter().filter(|&&p| p != 2);
    let discriminants = if s.contains(&2) {
        [-1, 2].into_iter().chain(odd.map(|&p| p as i64)).collect()
    } else {
        odd.map(|&p| if p % 4 == 1 { p as i64 } else { -(p as i64) }).collect()
    };
    Ok(SignatureBasis {
        primes: s.iter().copied().collect(),
        discriminants,
    })
}

pub fn frobenius_signature(p: u64, basis: &SignatureBasis) -> Result<SignatureVector> {
    if !is_prime(p) {
        return Err(domain!("{p} is not prime"));
    }
    if basis.primes.contains(&p) {
        return Err(domain!("p = {p} ramifies (it lies in S)"));
    }
    Ok(SignatureVector {
        signs: basis.discriminants.iter().map(|&d| kronecker(d, p as i64)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Cover {
    Complete,
    Missing { vectors: Vec<SignatureVector> },
}

impl Cover {
    pub fn is_complete(&self) -> bool {
        matches!(self, Cover::Complete)
    }
}

pub fn check_cover(s: &BTreeSet<u64>, t: &[u64]) -> Result<Cover> {
    if let Some(p) = t.iter().find(|p| s.contains(p)) {
        return Err(domain!("{p} is both a bad prime and a check prime"));
    }
    let basis = build_basis(s)?;
    let hit: BTreeSet<SignatureVector> = t
        .iter()
        .map(|&p| frobenius_signature(p, &basis))
        .collect::<Result<_>>()?;
    let missing: Vec<SignatureVector> = basis
        .non_identity_vectors()
        .into_iter()
        .filter(|v| !hit.contains(v))
        .collect();
    Ok(if missing.is_empty() {
        Cover::Complete
    } else {
        Cover::Missing { vectors: missing }
    })
}

/// Primes up to `bound`, scanned in order, each kept if it hits a vector not yet hit.
pub fn find_cover_set(s: &BTreeSet<u64>, bound: u64) -> Result<Vec<u64>> {
    if bound < 2 {
        return Err(domain!("search bound must be at least 2"));
    }
    let basis = build_basis(s)?;
    let mut missing: BTreeSet<SignatureVector> = basis.non_identity_vectors().into_iter().collect();
    let mut chosen = Vec::new();
    for p in 2..=bound {
        if missing.is_empty() {
            break;
        }
        if !is_prime(p) || s.contains(&p) {
            continue;
        }
        if missing.remove(&frobenius_signature(p, &basis)?) {
            chosen.push(p);
        }
    }
    if !missing.is_empty() {
        let list: Vec<String> = missing.iter().map(|v| format!("{:?}", v.signs)).collect();
        return Err(domain!("no cover with primes up to {bound}; missing {}", list.join(", ")));
    }
    Ok(chosen)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    IsomorphicSemisimplifications,
    EvennessFailed,
    CoverIncomplete,
    TraceMismatch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonVerdict {
    pub status: VerdictStatus,
    /// Primes with odd or differing traces.
    pub primes: Vec<u64>,
    /// Signature vectors not hit by the check primes.
    pub missing: Vec<SignatureVector>,
    pub note: Option<String>,
}

impl ComparisonVerdict {
    fn new(status: VerdictStatus) -> Self {
        ComparisonVerdict {
            status,
            primes: Vec::new(),
            missing: Vec::new(),
            note: None,
        }
    }
}

/// Compare two trace sequences on the check set `t`.
///
/// The determinant condition is not computed here: `determinants_agree_mod_2`
/// is supplied by the caller, and `false` is reported as a failed evenness check.
pub fn livne_compare(
    traces1: &BTreeMap<u64, i64>,
    traces2: &BTreeMap<u64, i64>,
    s: &BTreeSet<u64>,
    t: &[u64],
    determinants_agree_mod_2: bool,
) -> Result<ComparisonVerdict> {
    for &p in t {
        for (name, map) in [("first", traces1), ("second", traces2)] {
            if !map.contains_key(&p) {
                return Err(domain!("the {name} trace map has no value at p = {p}"));
            }
        }
    }
    let odd: Vec<u64> = t
        .iter()
        .copied()
        .filter(|p| traces1[p] % 2 != 0 || traces2[p] % 2 != 0)
        .collect();
    if !odd.is_empty() {
        let mut v = ComparisonVerdict::new(VerdictStatus::EvennessFailed);
        v.primes = odd;
        v.note = Some("odd traces need the 2-adic method with cubic and quartic field tables, which is not implemented".into());
        return Ok(v);
    }
    if !determinants_agree_mod_2 {
        let mut v = ComparisonVerdict::new(VerdictStatus::EvennessFailed);
        v.note = Some("the caller reports determinants that differ mod 2".into());
        return Ok(v);
    }
    if let Cover::Missing { vectors } = check_cover(s, t)? {
        let mut v = ComparisonVerdict::new(VerdictStatus::CoverIncomplete);
        v.missing = vectors;
        return Ok(v);
    }
    let differing: Vec<u64> = t.iter().copied().filter(|p| traces1[p] != traces2[p]).collect();
    if !differing.is_empty() {
        let mut v = ComparisonVerdict::new(VerdictStatus::TraceMismatch);
        v.primes = differing;
        return Ok(v);
    }
    Ok(ComparisonVerdict::new(VerdictStatus::IsomorphicSemisimplifications))
}

/// Read a `p,trace` CSV file into a map.
pub fn read_traces_csv(text: &str) -> Result<BTreeMap<u64, i64>> {
    #[derive(Deserialize)]
    struct Row {
        p: u64,
        trace: i64,
    }
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for row in reader.deserialize::<Row>() {
        let row = row?;
        if out.insert(row.p, row.trace).is_some() {
            return Err(domain!("p = {} appears twice in the trace file", row.p));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(v: &[u64]) -> BTreeSet<u64> {
        v.iter().copied().collect()
    }

    #[test]
    fn bases() {
        assert_eq!(build_basis(&set(&[2, 5])).unwrap().discriminants, vec![-1, 2, 5]);
        assert_eq!(build_basis(&set(&[3])).unwrap().discriminants, vec![-3]);
        assert_eq!(build_basis(&set(&[3, 5, 7])).unwrap().discriminants, vec![-3, 5, -7]);
        assert!(build_basis(&set(&[])).unwrap().is_empty());
        assert!(build_basis(&set(&[4])).is_err());
        assert_eq!(build_basis(&set(&[2, 5])).unwrap().group_order(), 8);
    }

    #[test]
    fn signatures() {
        let b = build_basis(&set(&[2, 5])).unwrap();
        assert!(frobenius_signature(41, &b).unwrap().is_identity());
        assert_eq!(frobenius_signature(3, &b).unwrap().signs, vec![-1, -1, -1]);
        assert!(frobenius_signature(5, &b).is_err());
        let empty = build_basis(&set(&[])).unwrap();
        assert!(frobenius_signature(7, &empty).unwrap().signs.is_empty());
    }

    #[test]
    fn covers() {
        let s = set(&[2, 5]);
        let t = [3, 7, 11, 13, 17, 29, 31];
        assert!(check_cover(&s, &t).unwrap().is_complete());
        assert!(check_cover(&s, &[2, 3]).is_err());
        let missing = check_cover(&set(&[3]), &[]).unwrap();
        assert_eq!(missing, Cover::Missing { vectors: vec![SignatureVector { signs: vec![-1] }] });
        assert_eq!(find_cover_set(&s, 31).unwrap(), t.to_vec());
        assert_eq!(find_cover_set(&set(&[3]), 10).unwrap(), vec![2]);
        assert!(find_cover_set(&set(&[]), 10).unwrap().is_empty());
        assert!(find_cover_set(&s, 10).is_err());
        assert!(find_cover_set(&s, 1).is_err());
    }

    #[test]
    fn verdicts() {
        let s = set(&[2, 5]);
        let t = [3, 7, 11, 13, 17, 29, 31];
        let even: BTreeMap<u64, i64> = t.iter().map(|&p| (p, 2 * p as i64)).collect();
        let v = livne_compare(&even, &even, &s, &t, true).unwrap();
        assert_eq!(v.status, VerdictStatus::IsomorphicSemisimplifications);
        let mut other = even.clone();
        other.insert(13, 0);
        let v = livne_compare(&even, &other, &s, &t, true).unwrap();
        assert_eq!((v.status, v.primes), (VerdictStatus::TraceMismatch, vec![13]));
        other.insert(13, 1);
        assert_eq!(livne_compare(&even, &other, &s, &t, true).unwrap().status, VerdictStatus::EvennessFailed);
        let v = livne_compare(&even, &even, &s, &t, false).unwrap();
        assert_eq!(v.status, VerdictStatus::EvennessFailed);
        assert!(v.note.is_some());
        let v = livne_compare(&even, &even, &s, &t[..6], true).unwrap();
        assert_eq!(v.status, VerdictStatus::CoverIncomplete);
        let mut short = even.clone();
        short.remove(&7);
        assert!(livne_compare(&even, &short, &s, &t, true).unwrap_err().to_string().contains("p = 7"));
    }

    #[test]
    fn trace_csv() {
        let m = read_traces_csv("p,trace\n3,7\n7, 6\n").unwrap();
        assert_eq!(m, BTreeMap::from([(3, 7), (7, 6)]));
        assert!(read_traces_csv("p,trace\n3,7\n3,8\n").is_err());
        assert!(read_traces_csv("p,trace\nx,7\n").is_err());
    }
}
