//! Chart enumeration kernel over `F_p`.
//!
//! A polynomial in `x_0..x_m` is compiled into a chain of substitution
//! levels: level `i` maps the coefficients of the distinct monomials in
//! `x_i..x_m` to those in `x_{i+1}..x_m` once `x_i` is fixed. The last
//! coordinate is swept in a flat loop over a buffer, which the compiler
//! vectorizes; zero tests use multiplication by `p^{-1}` modulo a power of two.

use std::collections::BTreeMap;

use crate::ffield::PrimeField;
use crate::poly::ModPoly;

/// Values a coordinate ranges over inside one chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Dom {
    Fixed(u32),
    Full,
    NonZero,
}

impl Dom {
    fn range(self, p: u32) -> (u32, u32) {
        match self {
            Dom::Fixed(v) => (v, v + 1),
            Dom::Full => (0, p),
            Dom::NonZero => (1, p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Mode {
    /// Count common zeros; optionally collect points where all partials vanish too.
    Zeros { singular: bool },
    /// Sum of `1 + chi(f(x))` for the single equation `f`.
    CharacterSum,
    /// Programs are `B` and `C`; each point adds the number of roots in the
    /// solved coordinate read from the root table.
    Table { singular: bool },
}

/// Root counts of `u(t) + b t^e + c` in `t`, for all `(b, c)`.
pub(crate) struct RootTable {
    p: u32,
    exp: u32,
    /// `(coefficient, exponent)` of the fixed part `u`.
    fixed: Vec<(u32, u32)>,
    counts: Vec<u16>,
    /// Whether some root is also a root of the derivative.
    double: Vec<bool>,
}

impl RootTable {
    pub fn new(field: &PrimeField, fixed: Vec<(u32, u32)>, exp: u32) -> RootTable {
        let p = field.p();
        let pu = p as usize;
        let mut counts = vec![0u16; pu * pu];
        let mut double = vec![false; pu * pu];
        let u: Vec<u32> = (0..p).map(|t| Self::eval_fixed(field, &fixed, t)).collect();
        let du: Vec<u32> = (0..p).map(|t| Self::eval_fixed_derivative(field, &fixed, t)).collect();
        let te: Vec<u32> = (0..p).map(|t| field.pow_raw(t, exp as u64)).collect();
        let dte: Vec<u32> = (0..p)
            .map(|t| field.mul_raw(exp % p, if exp == 0 { 0 } else { field.pow_raw(t, exp as u64 - 1) }))
            .collect();
        for b in 0..p {
            let row = b as usize * pu;
            for t in 0..pu {
                let val = field.add_raw(u[t], field.mul_raw(b, te[t]));
                let c = field.sub_raw(0, val) as usize;
                counts[row + c] += 1;
                if field.add_raw(du[t], field.mul_raw(b, dte[t])) == 0 {
                    double[row + c] = true;
                }
            }
        }
        RootTable {
            p,
            exp,
            fixed,
            counts,
            double,
        }
    }

    fn eval_fixed(field: &PrimeField, fixed: &[(u32, u32)], t: u32) -> u32 {
        fixed
            .iter()
            .fold(0, |acc, &(c, e)| field.add_raw(acc, field.mul_raw(c, field.pow_raw(t, e as u64))))
    }

    fn eval_fixed_derivative(field: &PrimeField, fixed: &[(u32, u32)], t: u32) -> u32 {
        fixed.iter().filter(|&&(_, e)| e > 0).fold(0, |acc, &(c, e)| {
            let d = field.mul_raw(c, field.mul_raw(e % field.p(), field.pow_raw(t, e as u64 - 1)));
            field.add_raw(acc, d)
        })
    }

    /// Roots of `u(t) + b t^e + c` that are also roots of its derivative.
    fn double_roots(&self, field: &PrimeField, b: u32, c: u32) -> Vec<u32> {
        (0..self.p)
            .filter(|&t| {
                let v = field.add_raw(Self::eval_fixed(field, &self.fixed, t), field.mul_raw(b, field.pow_raw(t, self.exp as u64)));
                field.add_raw(v, c) == 0
            })
            .filter(|&t| {
                let d = if self.exp == 0 {
                    0
                } else {
                    field.mul_raw(b, field.mul_raw(self.exp % self.p, field.pow_raw(t, self.exp as u64 - 1)))
                };
                field.add_raw(Self::eval_fixed_derivative(field, &self.fixed, t), d) == 0
            })
            .collect()
    }
}

#[derive(Default, Debug)]
pub(crate) struct Tally {
    pub count: u64,
    pub singular: Vec<Vec<u32>>,
}

impl Tally {
    pub fn merge(mut self, other: Tally) -> Tally {
        self.count += other.count;
        self.singular.extend(other.singular);
        self
    }
}

struct Level {
    next_len: usize,
    /// (source term, destination term, exponent of the substituted coordinate)
    moves: Vec<(u32, u32, u32)>,
}

struct Program {
    base: Vec<u32>,
    levels: Vec<Level>,
    last_exps: Vec<u32>,
    fits_u32: bool,
}

impl Program {
    fn compile(poly: &ModPoly, p: u32) -> Program {
        let nvars = poly.nvars();
        let mut keys: Vec<Vec<u32>> = poly.terms().iter().map(|(_, e)| e.clone()).collect();
        let base = poly.terms().iter().map(|(c, _)| *c).collect();
        let mut levels = Vec::with_capacity(nvars.saturating_sub(1));
        for _ in 0..nvars.saturating_sub(1) {
            let mut index: BTreeMap<Vec<u32>, u32> = BTreeMap::new();
            let mut next: Vec<Vec<u32>> = Vec::new();
            let mut moves = Vec::with_capacity(keys.len());
            for (src, key) in keys.iter().enumerate() {
                let suffix = key[1..].to_vec();
                let dst = *index.entry(suffix.clone()).or_insert_with(|| {
                    next.push(suffix);
                    (next.len() - 1) as u32
                });
                moves.push((src as u32, dst, key[0]));
            }
            levels.push(Level {
                next_len: next.len(),
                moves,
            });
            keys = next;
        }
        let last_exps: Vec<u32> = keys.iter().map(|k| k[0]).collect();
        let bound = last_exps.len() as u64 * (p as u64 - 1) * (p as u64 - 1);
        Program {
            base,
            levels,
            last_exps,
            fits_u32: bound <= u32::MAX as u64,
        }
    }
}

pub(crate) struct System {
    field: PrimeField,
    p: u32,
    nvars: usize,
    programs: Vec<Program>,
    polys: Vec<ModPoly>,
    gradients: Vec<Vec<ModPoly>>,
    pow: Vec<u32>,
    chi: Vec<i8>,
    table: Option<RootTable>,
    inv32: u32,
    lim32: u32,
    inv64: u64,
    lim64: u64,
}

fn inverse_mod_word(p: u64) -> u64 {
    // Newton iteration for p^{-1} mod 2^64 (p odd).
    let mut x = p;
    for _ in 0..6 {
        x = x.wrapping_mul(2u64.wrapping_sub(p.wrapping_mul(x)));
    }
    x
}

impl System {
    pub fn new(field: PrimeField, nvars: usize, polys: Vec<ModPoly>, mode: Mode) -> System {
        let p = field.p();
        let programs: Vec<Program> = polys.iter().map(|f| Program::compile(f, p)).collect();
        let gradients = match mode {
            Mode::Zeros { singular: true } => polys
                .iter()
                .map(|f| (0..nvars).map(|v| f.derivative(&field, v)).collect())
                .collect(),
            _ => Vec::new(),
        };
        let maxexp = polys.iter().map(|f| f.max_exponent()).max().unwrap_or(0) as usize;
        let mut pow = vec![0u32; (maxexp + 1) * p as usize];
        for v in 0..p as usize {
            let mut acc = 1 % p;
            for e in 0..=maxexp {
                pow[e * p as usize + v] = acc;
                acc = field.mul_raw(acc, v as u32);
            }
        }
        let chi = match mode {
            Mode::CharacterSum => field.character_table(),
            _ => Vec::new(),
        };
        let (inv64, lim64, inv32, lim32) = if p % 2 == 1 {
            let inv = inverse_mod_word(p as u64);
            (inv, u64::MAX / p as u64, inv as u32, u32::MAX / p)
        } else {
            (0, 0, 0, 0)
        };
        System {
            field,
            p,
            nvars,
            programs,
            polys,
            gradients,
            pow,
            chi,
            table: None,
            inv32,
            lim32,
            inv64,
            lim64,
        }
    }

    /// System over the coordinates other than the solved one, with programs `B` and `C`.
    /// `gradient` holds the partials of the full equation, in the order
    /// `(other coordinates..., solved coordinate)`.
    pub fn with_table(field: PrimeField, nvars: usize, b: ModPoly, c: ModPoly, table: RootTable, gradient: Vec<ModPoly>) -> System {
        let mut system = System::new(field, nvars, vec![b, c], Mode::Zeros { singular: false });
        system.gradients = vec![gradient];
        system.table = Some(table);
        system
    }

    /// First coordinate of a chart that is worth splitting on (not fixed, not innermost).
    pub fn split_var(&self, chart: &[Dom]) -> Option<usize> {
        (0..self.nvars.saturating_sub(1)).find(|&i| !matches!(chart[i], Dom::Fixed(_)))
    }

    pub fn dom_range(&self, d: Dom) -> (u32, u32) {
        d.range(self.p)
    }

    /// Enumerate the chart with coordinate `split` (if any) restricted to `[lo, hi)`.
    pub fn run(&self, chart: &[Dom], split: Option<usize>, lo: u32, hi: u32, mode: Mode) -> Tally {
        let mut state: Vec<Vec<Vec<u32>>> = self
            .programs
            .iter()
            .map(|prog| {
                let mut lv = Vec::with_capacity(prog.levels.len() + 1);
                lv.push(prog.base.clone());
                for l in &prog.levels {
                    lv.push(vec![0; l.next_len]);
                }
                lv
            })
            .collect();
        let mut scratch = Scratch {
            assign: vec![0; self.nvars],
            acc: Vec::new(),
            buf32: vec![0; self.p as usize],
            buf64: vec![0; self.p as usize],
            vb: vec![0; self.p as usize],
            vc: vec![0; self.p as usize],
            tally: Tally::default(),
        };
        self.descend(chart, split, lo, hi, 0, &mut state, &mut scratch, mode);
        scratch.tally
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        chart: &[Dom],
        split: Option<usize>,
        lo: u32,
        hi: u32,
        var: usize,
        state: &mut [Vec<Vec<u32>>],
        s: &mut Scratch,
        mode: Mode,
    ) {
        let (mut a, mut b) = chart[var].range(self.p);
        if split == Some(var) {
            a = a.max(lo);
            b = b.min(hi);
        }
        if var + 1 == self.nvars {
            self.inner(a, b, state, s, mode);
            return;
        }
        for v in a..b {
            s.assign[var] = v;
            for (k, prog) in self.programs.iter().enumerate() {
                let level = &prog.levels[var];
                let (head, tail) = state[k].split_at_mut(var + 1);
                let cur = &head[var];
                let next = &mut tail[0];
                s.acc.clear();
                s.acc.resize(level.next_len, 0);
                let p = self.p as usize;
                for &(src, dst, e) in &level.moves {
                    s.acc[dst as usize] += cur[src as usize] as u64 * self.pow[e as usize * p + v as usize] as u64;
                }
                for (n, &x) in next.iter_mut().zip(&s.acc) {
                    *n = (x % self.p as u64) as u32;
                }
            }
            self.descend(chart, split, lo, hi, var + 1, state, s, mode);
        }
    }

    fn final_coefs<'a>(&self, state: &'a [Vec<Vec<u32>>], k: usize) -> &'a [u32] {
        state[k].last().expect("program has at least one level")
    }

    /// `f_k(x_last)` from final-level coefficients, reduced.
    fn eval_last(&self, k: usize, coefs: &[u32], x: u32) -> u32 {
        let p = self.p as usize;
        let mut acc = 0u64;
        for (&c, &e) in coefs.iter().zip(&self.programs[k].last_exps) {
            acc += c as u64 * self.pow[e as usize * p + x as usize] as u64;
        }
        (acc % self.p as u64) as u32
    }

    /// Derivative of `f_k` in the last coordinate.
    fn eval_last_derivative(&self, k: usize, coefs: &[u32], x: u32) -> u32 {
        let p = self.p as usize;
        let mut acc = 0u64;
        for (&c, &e) in coefs.iter().zip(&self.programs[k].last_exps) {
            if e > 0 {
                let t = c as u64 * self.pow[(e as usize - 1) * p + x as usize] as u64 % self.p as u64;
                acc += t * (e as u64 % self.p as u64);
            }
        }
        (acc % self.p as u64) as u32
    }

    fn inner(&self, a: u32, b: u32, state: &[Vec<Vec<u32>>], s: &mut Scratch, mode: Mode) {
        if a >= b {
            return;
        }
        if self.programs.is_empty() {
            s.tally.count += (b - a) as u64;
            return;
        }
        let n = (b - a) as usize;
        let c0 = self.final_coefs(state, 0);
        let prog = &self.programs[0];
        let p = self.p as usize;
        match mode {
            Mode::Table { singular } => self.inner_table(a, b, state, s, singular),
            Mode::CharacterSum => {
                let mut sum = 0u64;
                if prog.fits_u32 {
                    fill_u32(c0, &prog.last_exps, &self.pow, p, a as usize, b as usize, &mut s.buf32);
                    for &v in &s.buf32[..n] {
                        sum += (1 + self.chi[(v % self.p) as usize]) as u64;
                    }
                } else {
                    fill_u64(c0, &prog.last_exps, &self.pow, p, a as usize, b as usize, &mut s.buf64);
                    for &v in &s.buf64[..n] {
                        sum += (1 + self.chi[(v % self.p as u64) as usize]) as u64;
                    }
                }
                s.tally.count += sum;
            }
            Mode::Zeros { singular } => {
                let simple = self.programs.len() == 1 && !singular;
                let odd = self.p % 2 == 1;
                if prog.fits_u32 {
                    fill_u32(c0, &prog.last_exps, &self.pow, p, a as usize, b as usize, &mut s.buf32);
                    let buf = &s.buf32[..n];
                    if simple {
                        s.tally.count += if odd {
                            let (inv, lim) = (self.inv32, self.lim32);
                            buf.iter().filter(|&&v| v.wrapping_mul(inv) <= lim).count()
                        } else {
                            buf.iter().filter(|&&v| v & 1 == 0).count()
                        } as u64;
                        return;
                    }
                    let hits: Vec<u32> = (0..n)
                        .filter(|&i| buf[i] % self.p == 0)
                        .map(|i| a + i as u32)
                        .collect();
                    self.process_hits(&hits, state, s, singular);
                } else {
                    fill_u64(c0, &prog.last_exps, &self.pow, p, a as usize, b as usize, &mut s.buf64);
                    let buf = &s.buf64[..n];
                    if simple {
                        s.tally.count += if odd {
                            let (inv, lim) = (self.inv64, self.lim64);
                            buf.iter().filter(|&&v| v.wrapping_mul(inv) <= lim).count()
                        } else {
                            buf.iter().filter(|&&v| v & 1 == 0).count()
                        } as u64;
                        return;
                    }
                    let hits: Vec<u32> = (0..n)
                        .filter(|&i| buf[i] % self.p as u64 == 0)
                        .map(|i| a + i as u32)
                        .collect();
                    self.process_hits(&hits, state, s, singular);
                }
            }
        }
    }

    /// Reduced values of program `k` at `x_last` in `[a, b)`, written to `out`.
    fn fill_reduced(&self, k: usize, a: u32, b: u32, state: &[Vec<Vec<u32>>], buf64: &mut [u64], out: &mut [u32]) {
        let prog = &self.programs[k];
        let coefs = self.final_coefs(state, k);
        let p = self.p as usize;
        let n = (b - a) as usize;
        if prog.fits_u32 {
            fill_u32(coefs, &prog.last_exps, &self.pow, p, a as usize, b as usize, out);
            for v in &mut out[..n] {
                *v %= self.p;
            }
        } else {
            fill_u64(coefs, &prog.last_exps, &self.pow, p, a as usize, b as usize, buf64);
            for (v, &w) in out[..n].iter_mut().zip(&buf64[..n]) {
                *v = (w % self.p as u64) as u32;
            }
        }
    }

    fn inner_table(&self, a: u32, b: u32, state: &[Vec<Vec<u32>>], s: &mut Scratch, singular: bool) {
        let table = self.table.as_ref().expect("table mode needs a root table");
        let n = (b - a) as usize;
        let pu = self.p as usize;
        let mut vb = std::mem::take(&mut s.vb);
        let mut vc = std::mem::take(&mut s.vc);
        self.fill_reduced(0, a, b, state, &mut s.buf64, &mut vb);
        self.fill_reduced(1, a, b, state, &mut s.buf64, &mut vc);
        let mut sum = 0u64;
        for (&bv, &cv) in vb[..n].iter().zip(&vc[..n]) {
            sum += table.counts[bv as usize * pu + cv as usize] as u64;
        }
        s.tally.count += sum;
        if singular {
            let last = self.nvars - 1;
            for i in 0..n {
                let (bv, cv) = (vb[i], vc[i]);
                if !table.double[bv as usize * pu + cv as usize] {
                    continue;
                }
                s.assign[last] = a + i as u32;
                for t in table.double_roots(&self.field, bv, cv) {
                    let mut point = s.assign.clone();
                    point.push(t);
                    if self.gradients[0].iter().all(|g| g.eval(&self.field, &point) == 0) {
                        s.tally.singular.push(point);
                    }
                }
            }
        }
        s.vb = vb;
        s.vc = vc;
    }

    fn process_hits(&self, hits: &[u32], state: &[Vec<Vec<u32>>], s: &mut Scratch, singular: bool) {
        let last = self.nvars - 1;
        'hit: for &x in hits {
            for k in 1..self.programs.len() {
                if self.eval_last(k, self.final_coefs(state, k), x) != 0 {
                    continue 'hit;
                }
            }
            s.tally.count += 1;
            if !singular {
                continue;
            }
            for k in 0..self.programs.len() {
                if self.eval_last_derivative(k, self.final_coefs(state, k), x) != 0 {
                    continue 'hit;
                }
            }
            s.assign[last] = x;
            let point = &s.assign;
            let all_vanish = self
                .gradients
                .iter()
                .flatten()
                .all(|g| g.eval(&self.field, point) == 0);
            if all_vanish {
                debug_assert!(self.polys.iter().all(|f| f.eval(&self.field, point) == 0));
                s.tally.singular.push(point.clone());
            }
        }
    }
}

struct Scratch {
    assign: Vec<u32>,
    acc: Vec<u64>,
    buf32: Vec<u32>,
    buf64: Vec<u64>,
    vb: Vec<u32>,
    vc: Vec<u32>,
    tally: Tally,
}

#[inline]
fn fill_u32(coefs: &[u32], exps: &[u32], pow: &[u32], p: usize, lo: usize, hi: usize, buf: &mut [u32]) {
    let buf = &mut buf[..hi - lo];
    buf.fill(0);
    for (&c, &e) in coefs.iter().zip(exps) {
        if c == 0 {
            continue;
        }
        let row = &pow[e as usize * p + lo..e as usize * p + hi];
        for (slot, &r) in buf.iter_mut().zip(row) {
            *slot += c * r;
        }
    }
}

#[inline]
fn fill_u64(coefs: &[u32], exps: &[u32], pow: &[u32], p: usize, lo: usize, hi: usize, buf: &mut [u64]) {
    let buf = &mut buf[..hi - lo];
    buf.fill(0);
    for (&c, &e) in coefs.iter().zip(exps) {
        if c == 0 {
            continue;
        }
        let row = &pow[e as usize * p + lo..e as usize * p + hi];
        for (slot, &r) in buf.iter_mut().zip(row) {
            *slot += c as u64 * r as u64;
        }
    }
}
