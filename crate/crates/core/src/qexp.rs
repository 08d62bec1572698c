//! Truncated q-series on the `1/24` exponent grid, eta products and the
//! level 25 weight 4 newform.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{domain, Error, Result};

/// `sum_k c_k q^{(lead + 24 k)/24}` for `k < coeffs.len()`; nothing is known
/// from exponent `reach() / 24` on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QSeries {
    lead_num: i64,
    coeffs: Vec<BigInt>,
}

impl QSeries {
    /// Leading zeros are absorbed into the exponent; an all-zero series keeps its lead.
    pub fn new(lead_num: i64, coeffs: Vec<BigInt>) -> Self {
        let skip = coeffs.iter().take_while(|c| c.is_zero()).count();
        if skip == coeffs.len() {
            return QSeries { lead_num, coeffs };
        }
        QSeries {
            lead_num: lead_num + 24 * skip as i64,
            coeffs: coeffs[skip..].to_vec(),
        }
    }

    pub fn from_i64(lead_num: i64, coeffs: &[i64]) -> Self {
        Self::new(lead_num, coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    /// `1 + O(q^n)`.
    pub fn one(n: usize) -> Self {
        let mut c = vec![BigInt::zero(); n.max(1)];
        c[0] = BigInt::one();
        QSeries { lead_num: 0, coeffs: c }
    }

    /// `O(q^n)`.
    pub fn zero(n: usize) -> Self {
        QSeries {
            lead_num: 0,
            coeffs: vec![BigInt::zero(); n],
        }
    }

    pub fn lead_num(&self) -> i64 {
        self.lead_num
    }

    pub fn precision(&self) -> usize {
        self.coeffs.len()
    }

    /// Numerator of the first unknown exponent.
    pub fn reach(&self) -> i64 {
        self.lead_num + 24 * self.coeffs.len() as i64
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Same series cut to `n` coefficients.
    pub fn truncate(&self, n: usize) -> Self {
        QSeries {
            lead_num: self.lead_num,
            coeffs: self.coeffs[..n.min(self.coeffs.len())].to_vec(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if (self.lead_num - other.lead_num).rem_euclid(24) != 0 {
            return Err(domain!(
                "exponent grids differ: {}/24 and {}/24",
                self.lead_num,
                other.lead_num
            ));
        }
        let lead = self.lead_num.min(other.lead_num);
        let reach = self.reach().min(other.reach());
        let len = ((reach - lead).max(0) / 24) as usize;
        let mut c = vec![BigInt::zero(); len];
        for s in [self, other] {
            let offset = ((s.lead_num - lead) / 24) as usize;
            for (k, v) in s.coeffs.iter().enumerate() {
                if offset + k < len {
                    c[offset + k] += v;
                }
            }
        }
        Ok(QSeries::new(lead, c))
    }

    pub fn scale(&self, k: i64) -> Self {
        let k = BigInt::from(k);
        QSeries::new(self.lead_num, self.coeffs.iter().map(|c| c * &k).collect())
    }

    /// Product, known up to the shorter of the two reaches shifted by the other lead.
    pub fn mul(&self, other: &Self) -> Self {
        let n = self.coeffs.len().min(other.coeffs.len());
        let mut c = vec![BigInt::zero(); n];
        for (i, a) in self.coeffs.iter().take(n).enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().take(n - i).enumerate() {
                if !b.is_zero() {
                    c[i + j] += a * b;
                }
            }
        }
        QSeries::new(self.lead_num + other.lead_num, c)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = QSeries::one(self.coeffs.len());
        let mut base = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Coefficient at grid position `k`, i.e. of `q^{(lead + 24 k)/24}`.
    pub fn coefficient_at(&self, k: usize) -> Result<BigInt> {
        self.coeffs.get(k).cloned().ok_or_else(|| {
            Error::Precision(format!(
                "grid position {k} is beyond the {} known coefficients",
                self.coeffs.len()
            ))
        })
    }

    /// Coefficient of `q^n` for an integer exponent `n`.
    pub fn coefficient(&self, n: i64) -> Result<BigInt> {
        let num = 24 * n;
        if (num - self.lead_num).rem_euclid(24) != 0 {
            return Err(domain!("q^{n} is not on the grid {}/24 + Z", self.lead_num));
        }
        if num < self.lead_num {
            return Ok(BigInt::zero());
        }
        if num >= self.reach() {
            return Err(Error::Precision(format!(
                "q^{n} is beyond the precision of the series (known below q^({}/24))",
                self.reach()
            )));
        }
        Ok(self.coeffs[((num - self.lead_num) / 24) as usize].clone())
    }

    /// Coefficient of `q^n` as `i64`.
    pub fn coefficient_i64(&self, n: i64) -> Result<i64> {
        let c = self.coefficient(n)?;
        c.to_i64().ok_or_else(|| domain!("coefficient of q^{n} does not fit in 64 bits"))
    }

    /// Coefficients as a JSON array of integers.
    pub fn coefficients_json(&self) -> String {
        let parts: Vec<String> = self.coeffs.iter().map(|c| c.to_string()).collect();
        format!("[{}]", parts.join(","))
    }
}

impl fmt::Display for QSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    f.write_str("-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            write!(f, "{} q^({}/24)", c.abs(), self.lead_num + 24 * k as i64)?;
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " + O(q^({}/24))", self.reach())
    }
}

/// `q^{m/24} prod_{n >= 1} (1 - q^{mn})` with `precision` coefficients.
pub fn eta(m: u32, precision: usize) -> Result<QSeries> {
    if m == 0 {
        return Err(domain!("eta scale must be positive"));
    }
    if precision == 0 {
        return Err(domain!("eta needs at least one coefficient"));
    }
    let mut c = vec![BigInt::zero(); precision];
    c[0] = BigInt::one();
    let step = m as usize;
    let mut n = 1;
    while step * n < precision {
        let s = step * n;
        for k in (s..precision).rev() {
            let (lo, hi) = c.split_at_mut(k);
            hi[0] -= &lo[k - s];
        }
        n += 1;
    }
    Ok(QSeries {
        lead_num: m as i64,
        coeffs: c,
    })
}

/// Product of `eta(m)^e` over the given `(m, e)`, known through `q^{n}` when
/// the total leading exponent is an integer.
pub fn eta_product(factors: &[(u32, u32)], n: i64) -> Result<QSeries> {
    let lead: i64 = factors.iter().map(|&(m, e)| (m * e) as i64).sum();
    let reach = 24 * (n + 1);
    let len = ((reach - lead).max(24) / 24) as usize;
    let mut acc = QSeries::one(len);
    for &(m, e) in factors {
        acc = acc.mul(&eta(m, len)?.pow(e));
    }
    Ok(acc)
}

/// Exponents of `eta(z)`, `eta(5z)`, `eta(25z)` in the five terms.
const F25_SHAPES: [(u32, u32, u32); 5] = [(4, 4, 0), (3, 4, 1), (2, 4, 2), (1, 4, 3), (0, 4, 4)];

/// Coefficients that make the sum a Hecke eigenform.
pub const F25_COEFFICIENTS: [i64; 5] = [1, 5, 20, 25, 25];

/// The coefficients `1, 5, 20, 1, 1` as found in the printed formula.
pub const F25_PRINTED_COEFFICIENTS: [i64; 5] = [1, 5, 20, 1, 1];

pub fn f25_with(coefficients: [i64; 5], n: i64) -> Result<QSeries> {
    if n < 2 {
        return Err(domain!("f25 needs precision at least 2"));
    }
    let mut total = QSeries::zero((n + 1) as usize);
    for (&(a, b, c), &k) in F25_SHAPES.iter().zip(&coefficients) {
        let factors: Vec<(u32, u32)> = [(1, a), (5, b), (25, c)].into_iter().filter(|&(_, e)| e > 0).collect();
        let term = eta_product(&factors, n)?.scale(k);
        total = total.add(&term)?;
    }
    Ok(total)
}

/// The weight 4 newform of level 25, coefficients through `q^n`.
pub fn f25(n: i64) -> Result<QSeries> {
    f25_with(F25_COEFFICIENTS, n)
}

/// The eta sum with the printed coefficients; not a Hecke eigenform.
pub fn f25_as_printed(n: i64) -> Result<QSeries> {
    f25_with(F25_PRINTED_COEFFICIENTS, n)
}

/// Per prime, whether `|a_p| <= 2 p^{(k-1)/2}`.
pub fn hasse_check(s: &QSeries, weight: u32, primes: &[u64]) -> Result<Vec<bool>> {
    primes
        .iter()
        .map(|&p| {
            let a = s.coefficient(p as i64)?;
            let bound = BigInt::from(4) * BigInt::from(p).pow(weight.saturating_sub(1));
            Ok(&a * &a <= bound)
        })
        .collect()
}

/// `a_{p^2} = a_p^2 - p^{k-1}`.
pub fn hecke_square_ok(s: &QSeries, weight: u32, p: u64) -> Result<bool> {
    let ap = s.coefficient(p as i64)?;
    let ap2 = s.coefficient((p * p) as i64)?;
    Ok(ap2 == &ap * &ap - BigInt::from(p).pow(weight - 1))
}

/// `a_{mn} = a_m a_n`.
pub fn multiplicative_ok(s: &QSeries, m: i64, n: i64) -> Result<bool> {
    Ok(s.coefficient(m * n)? == s.coefficient(m)? * s.coefficient(n)?)
}

/// Coefficient at a good prime of the tensor product of two eigenforms.
pub fn tensor_ap(a: i64, b: i64) -> i64 {
    a * b
}
