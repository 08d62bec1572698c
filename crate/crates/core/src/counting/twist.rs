//! Twisted forms: the F_p-structure on `F_{p^2}^{n+1}` fixed by `x -> Phi(x^(p))`.
//!
//! For a signed permutation `Phi` with `Phi^2 = I` and `p` odd, split the
//! coordinates into the `+1` and `-1` eigenspaces. Points with `x^(p) = Phi(x)`
//! are exactly `x = B+ u+ + sqrt(n) B- u-` with `u` rational, so the twisted
//! count is the ordinary count of `G(u) = F(x(u))`, which has `F_p`
//! coefficients (up to the factor `sqrt(n)` when `F` is anti-invariant).

use std::collections::BTreeMap;

use crate::catalog::{InvolutionSpec, VarietySpec};
use crate::error::{domain, Result};
use crate::ffield::{FiniteField, Fp2Element, PrimeField, QuadraticExtension};
use crate::poly::ModPoly;

/// One new coordinate `u_k`: its direction in the original coordinates and its eigenvalue.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TwistColumn {
    pub vector: Vec<i64>,
    /// True for the `-1` eigenspace, which carries the factor `sqrt(n)`.
    pub anti: bool,
}

#[derive(Clone, Debug)]
pub struct TwistedForm {
    pub extension: QuadraticExtension,
    pub columns: Vec<TwistColumn>,
    pub equations: Vec<ModPoly>,
    /// `eps` with `F(Phi x) = eps F(x)`, per equation.
    pub signs: Vec<i64>,
}

impl TwistedForm {
    pub fn new(spec: &VarietySpec, phi: &InvolutionSpec, p: u64) -> Result<Self> {
        let n = spec.nvars();
        if phi.matrix.len() != n {
            return Err(domain!("involution {} has size {}, expected {n}", phi.id, phi.matrix.len()));
        }
        if p == 2 {
            return Err(domain!("twisted counts need an odd prime"));
        }
        let perm = phi.signed_permutation()?;
        let signs = spec
            .equations
            .iter()
            .map(|eq| phi.equation_sign(eq))
            .collect::<Result<Vec<_>>>()?;
        let extension = QuadraticExtension::new(p)?;
        let columns = eigen_columns(&perm);
        let base = *extension.base();
        let mut equations = Vec::with_capacity(spec.equations.len());
        for (i, eq) in spec.equations.iter().enumerate() {
            let g = expand(&extension, &columns, eq.iter().map(|m| (m.coefficient, &m.exponents)));
            let real = g.values().all(|c| c.b.value() == 0);
            let imaginary = g.values().all(|c| c.a.value() == 0);
            let terms: Vec<(u64, Vec<u32>)> = if real {
                g.into_iter().map(|(e, c)| (c.a.value() as u64, e)).collect()
            } else if imaginary {
                g.into_iter().map(|(e, c)| (c.b.value() as u64, e)).collect()
            } else {
                return Err(domain!("equation {i} of {} has no F_p-form under {}", spec.id, phi.id));
            };
            let poly = ModPoly::from_terms(&base, n, terms);
            if poly.is_zero() {
                return Err(domain!("twisted equation {i} of {} vanishes identically mod {p}", spec.id));
            }
            equations.push(poly);
        }
        Ok(TwistedForm {
            extension,
            columns,
            equations,
            signs,
        })
    }

    pub fn base(&self) -> PrimeField {
        *self.extension.base()
    }

    /// The point of `P^n(F_{p^2})` with twisted coordinates `u`.
    pub fn lift(&self, u: &[u32]) -> Vec<Fp2Element> {
        let f = &self.extension;
        let dim = self.columns.len();
        let mut x = vec![f.zero(); dim];
        for (col, &uk) in self.columns.iter().zip(u) {
            if uk == 0 {
                continue;
            }
            let scale = if col.anti {
                f.mul(f.sqrt_nonresidue(), f.from_int(uk as i64))
            } else {
                f.from_int(uk as i64)
            };
            for (xi, &v) in x.iter_mut().zip(&col.vector) {
                if v != 0 {
                    *xi = f.add(*xi, f.mul(scale, f.from_int(v)));
                }
            }
        }
        x
    }

    /// Whether the twisted point `u` is also fixed by `Phi` (one eigen-part vanishes).
    pub fn is_fixed(&self, u: &[u32]) -> bool {
        let plus_zero = self.columns.iter().zip(u).all(|(c, &v)| c.anti || v == 0);
        let minus_zero = self.columns.iter().zip(u).all(|(c, &v)| !c.anti || v == 0);
        plus_zero || minus_zero
    }
}

/// Eigenvector basis: orbits in order of their smallest coordinate,
/// the `+1` vector before the `-1` vector of a swapped pair.
pub(crate) fn eigen_columns(perm: &[(usize, i64)]) -> Vec<TwistColumn> {
    let n = perm.len();
    let mut done = vec![false; n];
    let mut cols = Vec::with_capacity(n);
    for i in 0..n {
        if done[i] {
            continue;
        }
        // Phi e_i = s e_j where row j has its nonzero in column i.
        let (j, s) = perm
            .iter()
            .enumerate()
            .find(|(_, &(c, _))| c == i)
            .map(|(r, &(_, s))| (r, s))
            .expect("permutation");
        done[i] = true;
        done[j] = true;
        let unit = |k: usize| (0..n).map(|t| i64::from(t == k)).collect::<Vec<i64>>();
        if j == i {
            cols.push(TwistColumn {
                vector: unit(i),
                anti: s < 0,
            });
        } else {
            let mut plus = unit(i);
            plus[j] = s;
            let mut minus = unit(i);
            minus[j] = -s;
            cols.push(TwistColumn {
                vector: plus,
                anti: false,
            });
            cols.push(TwistColumn {
                vector: minus,
                anti: true,
            });
        }
    }
    cols
}

/// Expand `sum c prod x_i^{e_i}` with `x_i = sum_k L[i][k] u_k` over `F_{p^2}`.
fn expand<'a, I>(f: &QuadraticExtension, columns: &[TwistColumn], monomials: I) -> BTreeMap<Vec<u32>, Fp2Element>
where
    I: Iterator<Item = (i64, &'a Vec<u32>)>,
{
    let dim = columns.len();
    // Linear form of each original coordinate in the u-variables.
    let forms: Vec<Vec<(usize, Fp2Element)>> = (0..dim)
        .map(|i| {
            columns
                .iter()
                .enumerate()
                .filter(|(_, c)| c.vector[i] != 0)
                .map(|(k, c)| {
                    let v = f.from_int(c.vector[i]);
                    (k, if c.anti { f.mul(v, f.sqrt_nonresidue()) } else { v })
                })
                .collect()
        })
        .collect();
    let mut total: BTreeMap<Vec<u32>, Fp2Element> = BTreeMap::new();
    for (coef, exps) in monomials {
        let mut acc: BTreeMap<Vec<u32>, Fp2Element> = BTreeMap::from([(vec![0; dim], f.from_int(coef))]);
        for (i, &e) in exps.iter().enumerate() {
            for _ in 0..e {
                let mut next: BTreeMap<Vec<u32>, Fp2Element> = BTreeMap::new();
                for (mono, c) in &acc {
                    for &(k, l) in &forms[i] {
                        let mut m2 = mono.clone();
                        m2[k] += 1;
                        let slot = next.entry(m2).or_insert(f.zero());
                        *slot = f.add(*slot, f.mul(*c, l));
                    }
                }
                acc = next;
            }
        }
        for (mono, c) in acc {
            let slot = total.entry(mono).or_insert(f.zero());
            *slot = f.add(*slot, c);
        }
    }
    total.retain(|_, c| *c != f.zero());
    total
}
