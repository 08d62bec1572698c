//! Arithmetic in `F_p` and `F_{p^2}`, plus Kronecker symbols.
//!
//! Primes are capped below `2^31`, so a product of two reduced residues fits
//! in a `u64`. The quadratic extension is presented as `F_p(sqrt n)` with `n`
//! the smallest positive non-residue.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Largest admissible characteristic (exclusive).
pub const PRIME_LIMIT: u64 = 1 << 31;

/// Deterministic Miller-Rabin, exact for all `u64`.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const SMALL: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &q in &SMALL {
        if n % q == 0 {
            return n == q;
        }
    }
    let mut d = n - 1;
    let mut s = 0;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    let mulmod = |a: u64, b: u64| ((a as u128 * b as u128) % n as u128) as u64;
    'witness: for &a in &SMALL {
        let mut x = 1u64;
        let (mut base, mut e) = (a % n, d);
        while e > 0 {
            if e & 1 == 1 {
                x = mulmod(x, base);
            }
            base = mulmod(base, base);
            e >>= 1;
        }
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes in `[lo, hi]`, ascending.
pub fn primes_between(lo: u64, hi: u64) -> Vec<u64> {
    (lo..=hi).filter(|&n| is_prime(n)).collect()
}

/// Kronecker symbol `(d/m)`.
///
/// Conventions: `(d/2)` is 0, 1, -1 for `d` even, `d = ±1 mod 8`, `d = ±3 mod 8`;
/// `(d/-1)` is the sign of `d` (with `(0/-1) = 1`); `(d/0)` is 1 for `d = ±1`
/// and 0 otherwise.
pub fn kronecker(d: i64, m: i64) -> i8 {
    let (mut a, mut n) = (d as i128, m as i128);
    if n == 0 {
        return i8::from(a == 1 || a == -1);
    }
    let mut sign: i8 = 1;
    if n < 0 {
        n = -n;
        if a < 0 {
            sign = -sign;
        }
    }
    let twos = n.trailing_zeros();
    if twos > 0 {
        if a % 2 == 0 {
            return 0;
        }
        n >>= twos;
        if twos % 2 == 1 && matches!(a.rem_euclid(8), 3 | 5) {
            sign = -sign;
        }
    }
    // Jacobi symbol (a/n) for odd positive n.
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n % 8, 3 | 5) {
                sign = -sign;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a % 4 == 3 && n % 4 == 3 {
            sign = -sign;
        }
        a %= n;
    }
    if n == 1 {
        sign
    } else {
        0
    }
}

/// Common interface for the two field shapes used by the generic (slow) paths.
pub trait FiniteField: Send + Sync {
    type Elem: Copy + Eq + fmt::Debug + Send + Sync;

    fn characteristic(&self) -> u32;
    /// Extension degree over the prime field.
    fn degree(&self) -> u32;
    fn order(&self) -> u64;
    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn from_int(&self, v: i64) -> Self::Elem;
    fn add(&self, x: Self::Elem, y: Self::Elem) -> Self::Elem;
    fn sub(&self, x: Self::Elem, y: Self::Elem) -> Self::Elem;
    fn mul(&self, x: Self::Elem, y: Self::Elem) -> Self::Elem;
    fn neg(&self, x: Self::Elem) -> Self::Elem;
    fn inv(&self, x: Self::Elem) -> Result<Self::Elem>;
    /// The `i`-th element in a fixed enumeration, `i < order()`; index 0 is zero.
    fn nth(&self, i: u64) -> Self::Elem;

    fn is_zero(&self, x: Self::Elem) -> bool {
        x == self.zero()
    }

    fn pow(&self, x: Self::Elem, mut e: u64) -> Self::Elem {
        let (mut acc, mut base) = (self.one(), x);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Quadratic character with `chi(0) = 0`.
    fn quadratic_character(&self, x: Self::Elem) -> i8 {
        if self.is_zero(x) {
            return 0;
        }
        if self.characteristic() == 2 {
            return 1;
        }
        if self.pow(x, (self.order() - 1) / 2) == self.one() {
            1
        } else {
            -1
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FpElement(u32);

impl FpElement {
    pub fn value(self) -> u32 {
        self.0
    }
}

impl fmt::Display for FpElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PrimeField {
    p: u32,
}

impl PrimeField {
    pub fn new(p: u64) -> Result<Self> {
        if p >= PRIME_LIMIT {
            return Err(domain!("characteristic {p} is not below 2^31"));
        }
        if !is_prime(p) {
            return Err(domain!("{p} is not prime"));
        }
        Ok(PrimeField { p: p as u32 })
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn element(&self, v: i64) -> FpElement {
        FpElement(v.rem_euclid(self.p as i64) as u32)
    }

    #[inline]
    pub fn reduce(&self, v: u64) -> u32 {
        (v % self.p as u64) as u32
    }

    #[inline]
    pub fn add_raw(&self, x: u32, y: u32) -> u32 {
        let s = x as u64 + y as u64;
        (if s >= self.p as u64 { s - self.p as u64 } else { s }) as u32
    }

    #[inline]
    pub fn sub_raw(&self, x: u32, y: u32) -> u32 {
        if x >= y {
            x - y
        } else {
            x + (self.p - y)
        }
    }

    #[inline]
    pub fn mul_raw(&self, x: u32, y: u32) -> u32 {
        ((x as u64 * y as u64) % self.p as u64) as u32
    }

    pub fn pow_raw(&self, x: u32, mut e: u64) -> u32 {
        let (mut acc, mut base) = (1 % self.p, x % self.p);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_raw(acc, base);
            }
            base = self.mul_raw(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv_raw(&self, x: u32) -> Result<u32> {
        if x % self.p == 0 {
            return Err(domain!("inverse of zero in F_{}", self.p));
        }
        Ok(self.pow_raw(x, self.p as u64 - 2))
    }

    /// Exact `x op y`; `y` is ignored for `Inv`.
    pub fn apply(&self, op: FieldOp, x: FpElement, y: FpElement) -> Result<FpElement> {
        Ok(match op {
            FieldOp::Add => self.add(x, y),
            FieldOp::Sub => self.sub(x, y),
            FieldOp::Mul => self.mul(x, y),
            FieldOp::Inv => self.inv(x)?,
        })
    }

    /// Legendre symbol of a raw residue (1 for every unit when p = 2).
    pub fn legendre(&self, x: u32) -> i8 {
        self.quadratic_character(FpElement(x % self.p))
    }

    /// Smallest positive quadratic non-residue; `None` for `p = 2`.
    pub fn smallest_nonresidue(&self) -> Option<u32> {
        if self.p == 2 {
            return None;
        }
        (2..self.p).find(|&n| self.legendre(n) == -1)
    }

    /// Table of `chi(v)` for `v` in `0..p`.
    pub fn character_table(&self) -> Vec<i8> {
        let mut table = vec![-1i8; self.p as usize];
        table[0] = 0;
        for x in 1..self.p as u64 {
            table[(x * x % self.p as u64) as usize] = 1;
        }
        table
    }
}

impl FiniteField for PrimeField {
    type Elem = FpElement;

    fn characteristic(&self) -> u32 {
        self.p
    }
    fn degree(&self) -> u32 {
        1
    }
    fn order(&self) -> u64 {
        self.p as u64
    }
    fn zero(&self) -> FpElement {
        FpElement(0)
    }
    fn one(&self) -> FpElement {
        FpElement(1 % self.p)
    }
    fn from_int(&self, v: i64) -> FpElement {
        self.element(v)
    }
    fn add(&self, x: FpElement, y: FpElement) -> FpElement {
        FpElement(self.add_raw(x.0, y.0))
    }
    fn sub(&self, x: FpElement, y: FpElement) -> FpElement {
        FpElement(self.sub_raw(x.0, y.0))
    }
    fn mul(&self, x: FpElement, y: FpElement) -> FpElement {
        FpElement(self.mul_raw(x.0, y.0))
    }
    fn neg(&self, x: FpElement) -> FpElement {
        FpElement(self.sub_raw(0, x.0))
    }
    fn inv(&self, x: FpElement) -> Result<FpElement> {
        self.inv_raw(x.0).map(FpElement)
    }
    fn nth(&self, i: u64) -> FpElement {
        FpElement(i as u32)
    }
    fn pow(&self, x: FpElement, e: u64) -> FpElement {
        FpElement(self.pow_raw(x.0, e))
    }
}

/// `a + b sqrt(n)` in a fixed presentation of `F_{p^2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Fp2Element {
    pub a: FpElement,
    pub b: FpElement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QuadraticExtension {
    base: PrimeField,
    n: u32,
}

impl QuadraticExtension {
    /// `F_{p^2}` adjoining the square root of the smallest non-residue.
    pub fn new(p: u64) -> Result<Self> {
        let base = PrimeField::new(p)?;
        let n = base
            .smallest_nonresidue()
            .ok_or_else(|| domain!("F_4 is not supported; the characteristic must be odd"))?;
        Ok(QuadraticExtension { base, n })
    }

    /// Alternative presentation with a caller-chosen non-residue.
    pub fn with_nonresidue(p: u64, n: i64) -> Result<Self> {
        let base = PrimeField::new(p)?;
        let n = base.element(n).value();
        if base.p() == 2 || base.legendre(n) != -1 {
            return Err(domain!("{n} is not a quadratic non-residue mod {p}"));
        }
        Ok(QuadraticExtension { base, n })
    }

    pub fn base(&self) -> &PrimeField {
        &self.base
    }

    /// The non-residue whose square root generates the extension.
    pub fn nonresidue(&self) -> u32 {
        self.n
    }

    pub fn element(&self, a: i64, b: i64) -> Fp2Element {
        Fp2Element {
            a: self.base.element(a),
            b: self.base.element(b),
        }
    }

    /// The generator `sqrt(n)`.
    pub fn sqrt_nonresidue(&self) -> Fp2Element {
        self.element(0, 1)
    }

    pub fn embed(&self, x: FpElement) -> Fp2Element {
        Fp2Element {
            a: x,
            b: FpElement(0),
        }
    }

    /// `x^p`, i.e. conjugation `a + b sqrt(n) -> a - b sqrt(n)`.
    pub fn frobenius(&self, x: Fp2Element) -> Fp2Element {
        Fp2Element {
            a: x.a,
            b: self.base.neg(x.b),
        }
    }

    pub fn norm(&self, x: Fp2Element) -> FpElement {
        let f = &self.base;
        f.sub(f.mul(x.a, x.a), f.mul(f.mul(x.b, x.b), FpElement(self.n)))
    }

    pub fn is_in_base(&self, x: Fp2Element) -> bool {
        x.b.0 == 0
    }
}

impl FiniteField for QuadraticExtension {
    type Elem = Fp2Element;

    fn characteristic(&self) -> u32 {
        self.base.p
    }
    fn degree(&self) -> u32 {
        2
    }
    fn order(&self) -> u64 {
        self.base.p as u64 * self.base.p as u64
    }
    fn zero(&self) -> Fp2Element {
        self.element(0, 0)
    }
    fn one(&self) -> Fp2Element {
        self.element(1, 0)
    }
    fn from_int(&self, v: i64) -> Fp2Element {
        self.element(v, 0)
    }
    fn add(&self, x: Fp2Element, y: Fp2Element) -> Fp2Element {
        Fp2Element {
            a: self.base.add(x.a, y.a),
            b: self.base.add(x.b, y.b),
        }
    }
    fn sub(&self, x: Fp2Element, y: Fp2Element) -> Fp2Element {
        Fp2Element {
            a: self.base.sub(x.a, y.a),
            b: self.base.sub(x.b, y.b),
        }
    }
    fn mul(&self, x: Fp2Element, y: Fp2Element) -> Fp2Element {
        let f = &self.base;
        let bb = f.mul(f.mul(x.b, y.b), FpElement(self.n));
        Fp2Element {
            a: f.add(f.mul(x.a, y.a), bb),
            b: f.add(f.mul(x.a, y.b), f.mul(x.b, y.a)),
        }
    }
    fn neg(&self, x: Fp2Element) -> Fp2Element {
        Fp2Element {
            a: self.base.neg(x.a),
            b: self.base.neg(x.b),
        }
    }
    fn inv(&self, x: Fp2Element) -> Result<Fp2Element> {
        let norm = self
            .base
            .inv(self.norm(x))
            .map_err(|_| domain!("inverse of zero in F_{}^2", self.base.p))?;
        let conj = self.frobenius(x);
        Ok(Fp2Element {
            a: self.base.mul(conj.a, norm),
            b: self.base.mul(conj.b, norm),
        })
    }
    fn nth(&self, i: u64) -> Fp2Element {
        let p = self.base.p as u64;
        Fp2Element {
            a: FpElement((i % p) as u32),
            b: FpElement((i / p) as u32),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primality_matches_trial_division() {
        let trial = |n: u64| n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0);
        for n in 0..5000 {
            assert_eq!(is_prime(n), trial(n), "n = {n}");
        }
        assert!(is_prime(2_147_483_647));
        assert!(!is_prime(3_215_031_751));
    }

    #[test]
    fn field_ops() {
        let f3 = PrimeField::new(3).unwrap();
        assert_eq!(f3.apply(FieldOp::Add, f3.element(2), f3.element(2)).unwrap().value(), 1);
        let f7 = PrimeField::new(7).unwrap();
        assert_eq!(f7.inv(f7.element(3)).unwrap().value(), 5);
        assert_eq!(f7.inv(f7.element(1)).unwrap().value(), 1);
        assert!(f7.inv(f7.element(0)).is_err());
        assert!(PrimeField::new(9).is_err());
        assert!(PrimeField::new(PRIME_LIMIT + 11).is_err());
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(1, 15), 1);
        assert_eq!(kronecker(2, 7), 1);
        assert_eq!(kronecker(-1, 13), 1);
        let squares: Vec<i64> = (1..29).map(|x| x * x % 29).collect();
        let expected = if squares.contains(&(-5i64).rem_euclid(29)) { 1 } else { -1 };
        assert_eq!(kronecker(-5, 29), expected);
        assert_eq!(kronecker(5, 2), -1);
        assert_eq!(kronecker(7, 2), 1);
        assert_eq!(kronecker(6, 2), 0);
        assert_eq!(kronecker(-3, -1), -1);
        assert_eq!(kronecker(3, 0), 0);
        assert_eq!(kronecker(-1, 0), 1);
    }

    #[test]
    fn kronecker_agrees_with_residue_tables() {
        for p in primes_between(3, 1000) {
            let f = PrimeField::new(p).unwrap();
            let table = f.character_table();
            for d in -60i64..60 {
                let r = d.rem_euclid(p as i64) as usize;
                assert_eq!(kronecker(d, p as i64), table[r], "d = {d}, p = {p}");
            }
        }
    }

    #[test]
    fn frobenius_over_f9() {
        let f9 = QuadraticExtension::new(3).unwrap();
        assert_eq!(f9.nonresidue(), 2);
        let s = f9.sqrt_nonresidue();
        assert_eq!(f9.frobenius(s), f9.neg(s));
        assert_eq!(f9.pow(s, 3), f9.frobenius(s));
        let a = f9.element(2, 0);
        assert_eq!(f9.frobenius(a), a);
    }

    #[test]
    fn extension_inverse_and_character() {
        let f = QuadraticExtension::new(7).unwrap();
        for i in 1..f.order() {
            let x = f.nth(i);
            assert_eq!(f.mul(x, f.inv(x).unwrap()), f.one());
        }
        // Every element of F_p is a square in F_{p^2}.
        for v in 1..7 {
            assert_eq!(f.quadratic_character(f.from_int(v)), 1);
        }
        let squares = (1..f.order()).filter(|&i| f.quadratic_character(f.nth(i)) == 1).count();
        assert_eq!(squares, 24);
    }
}
