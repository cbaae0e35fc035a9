//! Finite fields F_q, q = p^ℓ ≤ 1024, in a polynomial basis over F_p.
//!
//! An element a₀ + a₁X + … + a_{ℓ−1}X^{ℓ−1} is encoded as the integer
//! Σ aᵢ pⁱ. Multiplication has a schoolbook reference path; the hot path
//! goes through log/exp tables built from it.

use crate::error::{Error, Result};
use num_integer::Integer;
use std::fmt;

pub const MAX_ORDER: u32 = 1024;

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElem(pub u16);

impl FieldElem {
    pub const ZERO: FieldElem = FieldElem(0);
    pub const ONE: FieldElem = FieldElem(1);

    #[inline]
    pub fn code(self) -> usize {
        self.0 as usize
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Arithmetic context for F_q. Immutable once built.
pub struct FieldCtx {
    p: u32,
    ell: u32,
    q: u32,
    modulus: Vec<u32>,
    add: Vec<u16>,
    neg: Vec<u16>,
    exp: Vec<u16>,
    log: Vec<u16>,
    findex: Vec<u32>,
    by_index: Vec<FieldElem>,
}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldCtx").field("p", &self.p).field("ell", &self.ell).field("modulus", &self.modulus).finish()
    }
}

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        self.q == other.q && self.modulus == other.modulus
    }
}

impl Eq for FieldCtx {}

/// Builds the context for F_q.
pub fn field_new(q: u32) -> Result<FieldCtx> {
    FieldCtx::new(q)
}

/// Returns (p, ℓ) with q = p^ℓ, or `None`.
pub fn prime_power(q: u64) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let mut p = 2u64;
    while p * p <= q {
        if q.is_multiple_of(p) {
            break;
        }
        p += 1;
    }
    if !q.is_multiple_of(p) {
        p = q;
    }
    let mut r = q;
    let mut ell = 0;
    while r.is_multiple_of(p) {
        r /= p;
        ell += 1;
    }
    (r == 1).then_some((p as u32, ell))
}

pub fn is_prime(n: u64) -> bool {
    matches!(prime_power(n), Some((_, 1)))
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut f = 2;
    while f * f <= n {
        if n.is_multiple_of(f) {
            out.push(f);
            while n.is_multiple_of(f) {
                n /= f;
            }
        }
        f += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

// Polynomials over F_p, low degree first, no trailing zeros.
fn poly_trim(a: &mut Vec<u32>) {
    while a.last() == Some(&0) {
        a.pop();
    }
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let db = b.len() - 1;
    let lead_inv = inv_mod(b[db], p);
    while r.len() > db {
        let dr = r.len() - 1;
        let c = r[dr] * lead_inv % p;
        let shift = dr - db;
        for (i, &bi) in b.iter().enumerate() {
            r[i + shift] = (r[i + shift] + p - c * bi % p) % p;
        }
        poly_trim(&mut r);
    }
    r
}

fn inv_mod(a: u32, p: u32) -> u32 {
    let e = (a as i64).extended_gcd(&(p as i64));
    e.x.rem_euclid(p as i64) as u32
}

fn digits(mut code: u32, p: u32, ell: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(ell as usize);
    for _ in 0..ell {
        out.push(code % p);
        code /= p;
    }
    out
}

fn is_irreducible(g: &[u32], p: u32) -> bool {
    let ell = g.len() - 1;
    for deg in 1..=ell / 2 {
        let count = (p as u64).pow(deg as u32);
        for low in 0..count {
            let mut h = digits(low as u32, p, deg as u32);
            h.push(1);
            if poly_rem(g, &h, p).is_empty() {
                return false;
            }
        }
    }
    true
}

impl FieldCtx {
    pub fn new(q: u32) -> Result<Self> {
        let (p, ell) = prime_power(q as u64).ok_or(Error::NotPrimePower(q as u64))?;
        if q > MAX_ORDER {
            return Err(Error::Unsupported(format!("q = {q} exceeds {MAX_ORDER}")));
        }
        let modulus = Self::smallest_irreducible(p, ell);
        let mut ctx = FieldCtx {
            p,
            ell,
            q,
            modulus,
            add: Vec::new(),
            neg: Vec::new(),
            exp: Vec::new(),
            log: Vec::new(),
            findex: Vec::new(),
            by_index: Vec::new(),
        };
        ctx.build_tables();
        Ok(ctx)
    }

    // Candidates are enumerated so that c₀ is the most significant key.
    fn smallest_irreducible(p: u32, ell: u32) -> Vec<u32> {
        let total = p.pow(ell);
        for t in 0..total {
            let mut g: Vec<u32> = (0..ell).map(|i| t / p.pow(ell - 1 - i) % p).collect();
            g.push(1);
            if is_irreducible(&g, p) {
                return g;
            }
        }
        unreachable!("an irreducible polynomial of every degree exists")
    }

    fn build_tables(&mut self) {
        let q = self.q as usize;
        let (p, ell) = (self.p, self.ell);
        let digs: Vec<Vec<u32>> = (0..q as u32).map(|c| digits(c, p, ell)).collect();
        let encode = |d: &[u32]| -> u16 { d.iter().rev().fold(0u32, |acc, &x| acc * p + x) as u16 };
        self.add = vec![0; q * q];
        for a in 0..q {
            for b in 0..q {
                let s: Vec<u32> = digs[a].iter().zip(&digs[b]).map(|(x, y)| (x + y) % p).collect();
                self.add[a * q + b] = encode(&s);
            }
        }
        self.neg = (0..q).map(|a| encode(&digs[a].iter().map(|x| (p - x) % p).collect::<Vec<_>>())).collect();

        let gen = self.find_generator();
        self.exp = vec![0; 2 * (q - 1)];
        self.log = vec![0; q];
        let mut x = FieldElem::ONE;
        for i in 0..q - 1 {
            self.exp[i] = x.0;
            self.exp[i + q - 1] = x.0;
            self.log[x.code()] = i as u16;
            x = self.mul_schoolbook(x, gen);
        }

        let mut long: Vec<u16> = Vec::new();
        self.findex = vec![0; q];
        for (c, d) in digs.iter().enumerate().skip(1) {
            let len = d.iter().filter(|&&a| a != 0).count();
            if len == 1 {
                let i = d.iter().position(|&a| a != 0).unwrap() as u32;
                let a = d[i as usize];
                self.findex[c] = self.q - 1 - (ell - i) * (p - 1) + a;
            } else {
                long.push(c as u16);
            }
        }
        long.sort_by(|&a, &b| {
            let la = digs[a as usize].iter().filter(|&&x| x != 0).count();
            let lb = digs[b as usize].iter().filter(|&&x| x != 0).count();
            lb.cmp(&la).then_with(|| digs[a as usize].cmp(&digs[b as usize]))
        });
        for (i, &c) in long.iter().enumerate() {
            self.findex[c as usize] = i as u32 + 1;
        }
        self.by_index = vec![FieldElem::ZERO; q - 1];
        for c in 1..q {
            self.by_index[self.findex[c] as usize - 1] = FieldElem(c as u16);
        }
    }

    fn find_generator(&self) -> FieldElem {
        let order = (self.q - 1) as u64;
        let factors = prime_factors(order);
        for c in 1..self.q {
            let g = FieldElem(c as u16);
            if factors.iter().all(|&r| self.pow_schoolbook(g, order / r) != FieldElem::ONE) {
                return g;
            }
        }
        FieldElem::ONE
    }

    fn pow_schoolbook(&self, a: FieldElem, mut e: u64) -> FieldElem {
        let mut base = a;
        let mut acc = FieldElem::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul_schoolbook(acc, base);
            }
            base = self.mul_schoolbook(base, base);
            e >>= 1;
        }
        acc
    }

    /// Polynomial product reduced mod g. Reference path for the tables.
    pub fn mul_schoolbook(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let (p, ell) = (self.p, self.ell);
        let da = digits(a.0 as u32, p, ell);
        let db = digits(b.0 as u32, p, ell);
        let mut prod = vec![0u32; 2 * ell as usize];
        for (i, &x) in da.iter().enumerate() {
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % p;
            }
        }
        let r = poly_rem(&prod, &self.modulus, p);
        FieldElem(r.iter().rev().fold(0u32, |acc, &x| acc * p + x) as u16)
    }

    pub fn p(&self) -> u32 {
        self.p
    }
    pub fn ell(&self) -> u32 {
        self.ell
    }
    pub fn q(&self) -> u32 {
        self.q
    }
    /// Coefficients of the monic modulus g, low degree first.
    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn elem(&self, code: u32) -> Result<FieldElem> {
        if code < self.q {
            Ok(FieldElem(code as u16))
        } else {
            Err(Error::BadParameter(format!("{code} is not an element of F_{}", self.q)))
        }
    }

    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElem> {
        if coeffs.len() > self.ell as usize || coeffs.iter().any(|&a| a >= self.p) {
            return Err(Error::BadParameter(format!("bad coefficient vector {coeffs:?}")));
        }
        Ok(FieldElem(coeffs.iter().rev().fold(0u32, |acc, &x| acc * self.p + x) as u16))
    }

    pub fn coeffs(&self, a: FieldElem) -> Vec<u32> {
        digits(a.0 as u32, self.p, self.ell)
    }

    /// Image of an integer in the prime subfield.
    pub fn from_int(&self, n: i64) -> FieldElem {
        FieldElem(n.rem_euclid(self.p as i64) as u16)
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        FieldElem(self.add[a.code() * self.q as usize + b.code()])
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(self.neg[a.code()])
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        if a.is_zero() || b.is_zero() {
            return FieldElem::ZERO;
        }
        FieldElem(self.exp[self.log[a.code()] as usize + self.log[b.code()] as usize])
    }

    pub fn inv(&self, a: FieldElem) -> Result<FieldElem> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.q as usize - 1;
        Ok(FieldElem(self.exp[(n - self.log[a.code()] as usize) % n]))
    }

    pub fn div(&self, a: FieldElem, b: FieldElem) -> Result<FieldElem> {
        Ok(self.mul(a, self.inv(b)?))
    }

    pub fn pow(&self, a: FieldElem, e: u64) -> FieldElem {
        if e == 0 {
            return FieldElem::ONE;
        }
        if a.is_zero() {
            return FieldElem::ZERO;
        }
        let n = self.q as u64 - 1;
        let l = self.log[a.code()] as u64 * (e % n) % n;
        FieldElem(self.exp[l as usize])
    }

    /// a · (n mod p).
    pub fn scale_int(&self, a: FieldElem, n: u64) -> FieldElem {
        self.mul(a, self.from_int((n % self.p as u64) as i64))
    }

    /// Number of non-zero coefficients.
    pub fn element_len(&self, h: FieldElem) -> usize {
        let (p, mut c) = (self.p as u16, h.0);
        let mut len = 0;
        while c > 0 {
            if c % p != 0 {
                len += 1;
            }
            c /= p;
        }
        len
    }

    /// The indexing bijection f: F_q* → {1,…,q−1}; `None` for zero.
    pub fn index_f(&self, h: FieldElem) -> Option<usize> {
        match self.findex[h.code()] {
            0 => None,
            i => Some(i as usize),
        }
    }

    /// Inverse of `index_f`.
    pub fn elem_at_index(&self, i: usize) -> Option<FieldElem> {
        i.checked_sub(1).and_then(|j| self.by_index.get(j).copied())
    }

    /// Units listed in f-order.
    pub fn units_by_index(&self) -> &[FieldElem] {
        &self.by_index
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.q as u16).map(FieldElem)
    }

    pub fn units(&self) -> impl Iterator<Item = FieldElem> {
        (1..self.q as u16).map(FieldElem)
    }

    /// Table of x ↦ c·x, indexed by code.
    pub fn mul_row(&self, c: FieldElem) -> Vec<u16> {
        self.elements().map(|x| self.mul(c, x).0).collect()
    }

    #[inline]
    pub(crate) fn add_code(&self, a: u16, b: u16) -> u16 {
        self.add[a as usize * self.q as usize + b as usize]
    }

    /// Multiplicative order of a unit.
    pub fn order(&self, a: FieldElem) -> Result<u64> {
        if a.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let n = self.q as u64 - 1;
        let l = self.log[a.code()] as u64;
        Ok(n / l.gcd(&n))
    }
}
