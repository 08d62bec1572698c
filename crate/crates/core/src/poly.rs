//! Sparse polynomials with coefficients reduced mod p.

use std::collections::BTreeMap;

use crate::catalog::Monomial;
use crate::ffield::PrimeField;

/// Polynomial over `F_p`; terms sorted by exponent vector, merged, nonzero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModPoly {
    nvars: usize,
    terms: Vec<(u32, Vec<u32>)>,
}

impl ModPoly {
    pub fn from_terms<I>(field: &PrimeField, nvars: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (u64, Vec<u32>)>,
    {
        let mut merged: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (c, e) in terms {
            debug_assert_eq!(e.len(), nvars);
            let slot = merged.entry(e).or_insert(0);
            *slot = (*slot + c % field.p() as u64) % field.p() as u64;
        }
        let terms = merged
            .into_iter()
            .filter(|&(_, c)| c != 0)
            .map(|(e, c)| (c as u32, e))
            .collect();
        ModPoly { nvars, terms }
    }

    pub fn from_monomials(field: &PrimeField, nvars: usize, monomials: &[Monomial]) -> Self {
        Self::from_terms(
            field,
            nvars,
            monomials
                .iter()
                .map(|m| (field.element(m.coefficient).value() as u64, m.exponents.clone())),
        )
    }

    pub fn constant(field: &PrimeField, nvars: usize, c: u32) -> Self {
        Self::from_terms(field, nvars, [(c as u64, vec![0; nvars])])
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> &[(u32, Vec<u32>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(_, e)| e.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    pub fn max_exponent(&self) -> u32 {
        self.terms
            .iter()
            .flat_map(|(_, e)| e.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn derivative(&self, field: &PrimeField, var: usize) -> Self {
        Self::from_terms(
            field,
            self.nvars,
            self.terms.iter().filter(|(_, e)| e[var] > 0).map(|(c, e)| {
                let mut e2 = e.clone();
                e2[var] -= 1;
                (field.mul_raw(*c, field.element(e[var] as i64).value()) as u64, e2)
            }),
        )
    }

    pub fn mul(&self, field: &PrimeField, other: &Self) -> Self {
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (c1, e1) in &self.terms {
            for (c2, e2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.push((field.mul_raw(*c1, *c2) as u64, e));
            }
        }
        Self::from_terms(field, self.nvars, out)
    }

    pub fn eval(&self, field: &PrimeField, point: &[u32]) -> u32 {
        let mut acc = 0u32;
        for (c, e) in &self.terms {
            let mut t = *c;
            for (x, &k) in point.iter().zip(e) {
                if k > 0 {
                    t = field.mul_raw(t, field.pow_raw(*x, k as u64));
                }
            }
            acc = field.add_raw(acc, t);
        }
        acc
    }

    /// `f(x)` with `x_i = sum_k forms[i][k] u_k`, a polynomial in `nvars_new` variables.
    pub fn substitute_linear(&self, field: &PrimeField, nvars_new: usize, forms: &[Vec<u32>]) -> Self {
        let mut total: BTreeMap<Vec<u32>, u64> = BTreeMap::new();
        for (c, e) in &self.terms {
            let mut acc: BTreeMap<Vec<u32>, u32> = BTreeMap::from([(vec![0; nvars_new], *c)]);
            for (i, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    let mut next: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
                    for (mono, &v) in &acc {
                        for (j, &l) in forms[i].iter().enumerate() {
                            if l == 0 {
                                continue;
                            }
                            let mut m2 = mono.clone();
                            m2[j] += 1;
                            let slot = next.entry(m2).or_insert(0);
                            *slot = field.add_raw(*slot, field.mul_raw(v, l));
                        }
                    }
                    acc = next;
                }
            }
            for (mono, v) in acc {
                let slot = total.entry(mono).or_insert(0);
                *slot = (*slot + v as u64) % field.p() as u64;
            }
        }
        Self::from_terms(field, nvars_new, total.into_iter().map(|(e, c)| (c, e)))
    }

    /// Matrix of second partial derivatives at `point`.
    pub fn hessian(&self, field: &PrimeField, point: &[u32]) -> Vec<Vec<u32>> {
        let n = self.nvars;
        let first: Vec<ModPoly> = (0..n).map(|i| self.derivative(field, i)).collect();
        let mut h = vec![vec![0u32; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = first[i].derivative(field, j).eval(field, point);
                h[i][j] = v;
                h[j][i] = v;
            }
        }
        h
    }
}

/// Determinant over `F_p` by Gaussian elimination.
pub fn determinant(field: &PrimeField, matrix: &[Vec<u32>]) -> u32 {
    let n = matrix.len();
    let mut m: Vec<Vec<u32>> = matrix.to_vec();
    let mut det = 1u32;
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| m[r][col] != 0) else {
            return 0;
        };
        if pivot != col {
            m.swap(pivot, col);
            det = field.sub_raw(0, det);
        }
        det = field.mul_raw(det, m[col][col]);
        let inv = field.inv_raw(m[col][col]).expect("nonzero pivot");
        for r in col + 1..n {
            if m[r][col] == 0 {
                continue;
            }
            let factor = field.mul_raw(m[r][col], inv);
            for c in col..n {
                let sub = field.mul_raw(factor, m[col][c]);
                m[r][c] = field.sub_raw(m[r][c], sub);
            }
        }
    }
    det
}

/// Restriction `B^T H B` of a symmetric form to the span of the columns `basis`.
pub fn restrict_form(field: &PrimeField, form: &[Vec<u32>], basis: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let k = basis.len();
    let mut out = vec![vec![0u32; k]; k];
    for a in 0..k {
        for b in 0..k {
            let mut acc = 0u32;
            for (i, row) in form.iter().enumerate() {
                if basis[a][i] == 0 {
                    continue;
                }
                for (j, &h) in row.iter().enumerate() {
                    if basis[b][j] == 0 || h == 0 {
                        continue;
                    }
                    let t = field.mul_raw(field.mul_raw(basis[a][i], h), basis[b][j]);
                    acc = field.add_raw(acc, t);
                }
            }
            out[a][b] = acc;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_derivative() {
        let f = PrimeField::new(7).unwrap();
        let p = ModPoly::from_terms(&f, 2, [(3, vec![2, 1]), (4, vec![2, 1]), (1, vec![0, 0])]);
        assert_eq!(p.terms(), &[(1, vec![0, 0])]);
        let q = ModPoly::from_terms(&f, 2, [(1, vec![3, 0]), (2, vec![1, 1])]);
        let dq = q.derivative(&f, 0);
        assert_eq!(dq.terms(), &[(2, vec![0, 1]), (3, vec![2, 0])]);
        assert_eq!(q.eval(&f, &[2, 3]), (8 + 12) % 7);
    }

    #[test]
    fn linear_substitution() {
        let f = PrimeField::new(13).unwrap();
        // x0^2 x1 with x0 = u0 + u1, x1 = 2 u1.
        let p = ModPoly::from_terms(&f, 2, [(1, vec![2, 1])]);
        let q = p.substitute_linear(&f, 2, &[vec![1, 1], vec![0, 2]]);
        for (a, b) in [(0u32, 1u32), (3, 5), (12, 7)] {
            let x = [f.add_raw(a, b), f.mul_raw(2, b)];
            assert_eq!(q.eval(&f, &[a, b]), p.eval(&f, &x));
        }
    }

    #[test]
    fn determinant_small() {
        let f = PrimeField::new(11).unwrap();
        let m = vec![vec![2, 3], vec![5, 7]];
        assert_eq!(determinant(&f, &m), f.element(14 - 15).value());
        let m3 = vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 4]];
        assert_eq!(determinant(&f, &m3), f.element(-4).value());
    }
}
