//! Exact linear algebra over F_q: rank, reduced row echelon form, kernel,
//! frozen coordinates and uniform kernel sampling.
//!
//! Rows are reduced densely, bit-packed when q = 2 and as element codes
//! otherwise. `Echelon` accepts rows one at a time, so rank increments of
//! appended rows come for free.

use crate::error::{Error, Result};
use crate::gf::{is_prime, FieldCtx, FieldElem};
use crate::sparse::SparseMatrix;
use num_integer::Integer;
use rand::Rng;
use std::sync::Arc;

pub const MAX_DENSE_COLS: usize = 8192;
const NONE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct EliminationResult {
    pub rank: usize,
    pub pivots: Vec<usize>,
    pub rref_rows: Vec<Vec<FieldElem>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelSummary {
    pub nullity: usize,
    pub basis: Vec<Vec<FieldElem>>,
    pub frozen: Vec<usize>,
}

impl KernelSummary {
    /// Uniform element of the kernel: iid uniform coordinates on the basis.
    pub fn sample<R: Rng + ?Sized>(&self, field: &FieldCtx, ncols: usize, rng: &mut R) -> Vec<FieldElem> {
        let mut x = vec![FieldElem::ZERO; ncols];
        for b in &self.basis {
            let c = FieldElem(rng.random_range(0..field.q()) as u16);
            if c.is_zero() {
                continue;
            }
            for (xi, &bi) in x.iter_mut().zip(b) {
                *xi = field.add(*xi, field.mul(c, bi));
            }
        }
        x
    }
}

/// Incremental row echelon form.
pub struct Echelon {
    field: Arc<FieldCtx>,
    ncols: usize,
    words: usize,
    binary: bool,
    brows: Vec<Vec<u64>>,
    grows: Vec<Vec<u16>>,
    pivcol: Vec<usize>,
    slot: Vec<u32>,
}

impl Echelon {
    pub fn new(field: Arc<FieldCtx>, ncols: usize) -> Result<Self> {
        if ncols > MAX_DENSE_COLS {
            return Err(Error::TooLarge(format!("{ncols} columns exceed the dense cap {MAX_DENSE_COLS}")));
        }
        Ok(Echelon {
            binary: field.q() == 2,
            field,
            ncols,
            words: ncols.div_ceil(64),
            brows: Vec::new(),
            grows: Vec::new(),
            pivcol: Vec::new(),
            slot: vec![NONE; ncols],
        })
    }

    pub fn rank(&self) -> usize {
        self.pivcol.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Adds a row; returns whether the rank went up.
    pub fn insert_sparse(&mut self, row: &[(u32, FieldElem)]) -> bool {
        if self.binary {
            let mut v = vec![0u64; self.words];
            for &(j, x) in row {
                if !x.is_zero() {
                    v[j as usize / 64] ^= 1 << (j % 64);
                }
            }
            self.insert_bits(v)
        } else {
            let mut v = vec![0u16; self.ncols];
            for &(j, x) in row {
                v[j as usize] = self.field.add_code(v[j as usize], x.0);
            }
            self.insert_codes(v)
        }
    }

    pub fn insert_dense(&mut self, row: &[FieldElem]) -> bool {
        let sparse: Vec<(u32, FieldElem)> =
            row.iter().enumerate().filter(|e| !e.1.is_zero()).map(|(j, &x)| (j as u32, x)).collect();
        self.insert_sparse(&sparse)
    }

    fn insert_bits(&mut self, mut v: Vec<u64>) -> bool {
        let mut w = 0;
        loop {
            while w < self.words && v[w] == 0 {
                w += 1;
            }
            if w == self.words {
                return false;
            }
            let c = w * 64 + v[w].trailing_zeros() as usize;
            match self.slot[c] {
                NONE => {
                    self.slot[c] = self.pivcol.len() as u32;
                    self.pivcol.push(c);
                    self.brows.push(v);
                    return true;
                }
                r => {
                    let row = &self.brows[r as usize];
                    for i in w..self.words {
                        v[i] ^= row[i];
                    }
                }
            }
        }
    }

    fn insert_codes(&mut self, mut v: Vec<u16>) -> bool {
        let f = &self.field;
        let mut c = 0;
        loop {
            while c < self.ncols && v[c] == 0 {
                c += 1;
            }
            if c == self.ncols {
                return false;
            }
            match self.slot[c] {
                NONE => {
                    let inv = f.inv(FieldElem(v[c])).expect("non-zero pivot");
                    for x in v[c..].iter_mut() {
                        *x = f.mul(inv, FieldElem(*x)).0;
                    }
                    self.slot[c] = self.pivcol.len() as u32;
                    self.pivcol.push(c);
                    self.grows.push(v);
                    return true;
                }
                r => {
                    let factor = f.neg(FieldElem(v[c]));
                    let row = &self.grows[r as usize];
                    for j in c..self.ncols {
                        if row[j] != 0 {
                            v[j] = f.add_code(v[j], f.mul(factor, FieldElem(row[j])).0);
                        }
                    }
                }
            }
        }
    }

    /// Back-substitutes to reduced row echelon form with rows sorted by pivot.
    pub fn into_rref(mut self) -> Rref {
        let mut order: Vec<usize> = (0..self.pivcol.len()).collect();
        order.sort_by_key(|&i| self.pivcol[i]);
        let pivots: Vec<usize> = order.iter().map(|&i| self.pivcol[i]).collect();
        let f = self.field.clone();
        if self.binary {
            let mut rows: Vec<Vec<u64>> = order.iter().map(|&i| std::mem::take(&mut self.brows[i])).collect();
            for i in (0..rows.len()).rev() {
                let c = pivots[i];
                let (w, b) = (c / 64, c % 64);
                let (head, tail) = rows.split_at_mut(i);
                let pr = &tail[0];
                for r in head.iter_mut() {
                    if r[w] >> b & 1 == 1 {
                        for k in w..self.words {
                            r[k] ^= pr[k];
                        }
                    }
                }
            }
            Rref { field: f, binary: self.binary, ncols: self.ncols, pivots, brows: rows, grows: Vec::new() }
        } else {
            let mut rows: Vec<Vec<u16>> = order.iter().map(|&i| std::mem::take(&mut self.grows[i])).collect();
            for i in (0..rows.len()).rev() {
                let c = pivots[i];
                let (head, tail) = rows.split_at_mut(i);
                let pr = &tail[0];
                for r in head.iter_mut() {
                    if r[c] != 0 {
                        let factor = f.neg(FieldElem(r[c]));
                        for j in c..self.ncols {
                            if pr[j] != 0 {
                                r[j] = f.add_code(r[j], f.mul(factor, FieldElem(pr[j])).0);
                            }
                        }
                    }
                }
            }
            Rref { field: f, binary: self.binary, ncols: self.ncols, pivots, brows: Vec::new(), grows: rows }
        }
    }
}

/// Reduced row echelon form in packed storage.
pub struct Rref {
    field: Arc<FieldCtx>,
    binary: bool,
    ncols: usize,
    pivots: Vec<usize>,
    brows: Vec<Vec<u64>>,
    grows: Vec<Vec<u16>>,
}

impl Rref {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    fn entry(&self, i: usize, j: usize) -> FieldElem {
        if self.binary {
            FieldElem((self.brows[i][j / 64] >> (j % 64) & 1) as u16)
        } else {
            FieldElem(self.grows[i][j])
        }
    }

    fn row_weight(&self, i: usize) -> usize {
        if self.binary {
            self.brows[i].iter().map(|w| w.count_ones() as usize).sum()
        } else {
            self.grows[i].iter().filter(|&&x| x != 0).count()
        }
    }

    pub fn rows(&self) -> Vec<Vec<FieldElem>> {
        (0..self.rank()).map(|i| (0..self.ncols).map(|j| self.entry(i, j)).collect()).collect()
    }

    /// Columns that vanish on the whole kernel. A pivot column is frozen
    /// exactly when its reduced row has no entry outside the pivot, since
    /// reduced rows vanish on the other pivot columns.
    pub fn frozen(&self) -> Vec<usize> {
        let mut out: Vec<usize> =
            (0..self.rank()).filter(|&i| self.row_weight(i) == 1).map(|i| self.pivots[i]).collect();
        out.sort_unstable();
        out
    }

    pub fn free_columns(&self) -> Vec<usize> {
        let mut is_pivot = vec![false; self.ncols];
        for &c in &self.pivots {
            is_pivot[c] = true;
        }
        (0..self.ncols).filter(|&j| !is_pivot[j]).collect()
    }

    /// One basis vector per free column f: x_f = 1, pivots back-substituted.
    pub fn kernel_basis(&self) -> Vec<Vec<FieldElem>> {
        let f = &self.field;
        self.free_columns()
            .into_iter()
            .map(|fc| {
                let mut x = vec![FieldElem::ZERO; self.ncols];
                x[fc] = FieldElem::ONE;
                for (i, &pc) in self.pivots.iter().enumerate() {
                    x[pc] = f.neg(self.entry(i, fc));
                }
                x
            })
            .collect()
    }
}

fn echelon_of(a: &SparseMatrix) -> Result<Echelon> {
    let mut e = Echelon::new(a.field().clone(), a.ncols())?;
    for r in a.rows() {
        e.insert_sparse(r);
    }
    Ok(e)
}

pub fn rank(a: &SparseMatrix) -> Result<usize> {
    Ok(echelon_of(a)?.rank())
}

pub fn nullity(a: &SparseMatrix) -> Result<usize> {
    Ok(a.ncols() - rank(a)?)
}

pub fn rref(a: &SparseMatrix) -> Result<Rref> {
    Ok(echelon_of(a)?.into_rref())
}

pub fn eliminate(a: &SparseMatrix) -> Result<EliminationResult> {
    let r = rref(a)?;
    Ok(EliminationResult { rank: r.rank(), pivots: r.pivots().to_vec(), rref_rows: r.rows() })
}

pub fn kernel(a: &SparseMatrix) -> Result<KernelSummary> {
    let r = rref(a)?;
    let basis = r.kernel_basis();
    Ok(KernelSummary { nullity: basis.len(), basis, frozen: r.frozen() })
}

pub fn frozen(a: &SparseMatrix) -> Result<Vec<usize>> {
    Ok(rref(a)?.frozen())
}

pub fn sample_kernel<R: Rng + ?Sized>(a: &SparseMatrix, rng: &mut R) -> Result<Vec<FieldElem>> {
    Ok(kernel(a)?.sample(a.field(), a.ncols(), rng))
}

/// ρ_σ(s) = Σᵢ dᵢ·1{σᵢ = s}, indexed by element code.
pub fn rho(field: &FieldCtx, sigma: &[FieldElem], dvec: &[u32]) -> Result<Vec<u64>> {
    if sigma.len() != dvec.len() {
        return Err(Error::LengthMismatch(sigma.len(), dvec.len()));
    }
    let mut out = vec![0u64; field.q() as usize];
    for (s, &d) in sigma.iter().zip(dvec) {
        out[s.code()] += d as u64;
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Full,
    NotFull,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalRankReport {
    pub verdict: Verdict,
    /// (prime, rank over F_prime) for each prime tried.
    pub witnesses: Vec<(u32, usize)>,
}

/// Full row rank over Q of a 0/1 pattern, certified from one direction:
/// full rank modulo some prime implies full rank over Q. If every tried
/// prime is deficient the answer is `NotFull` as a heuristic. Primes are
/// the smallest ones coprime to `f_d`.
pub fn rational_full_row_rank(pattern: &SparseMatrix, prime_budget: usize, f_d: u32) -> RationalRankReport {
    let m = pattern.nrows();
    let mut witnesses = Vec::new();
    let f_d = f_d.max(1);
    let mut p = 1u32;
    while witnesses.len() < prime_budget {
        p += 1;
        if p > crate::gf::MAX_ORDER {
            break;
        }
        if !is_prime(p as u64) || p.gcd(&f_d) != 1 {
            continue;
        }
        let field = Arc::new(FieldCtx::new(p).expect("prime order"));
        match rank(&pattern.pattern_over(field)) {
            Ok(r) => {
                witnesses.push((p, r));
                if r == m {
                    return RationalRankReport { verdict: Verdict::Full, witnesses };
                }
            }
            Err(_) => break,
        }
    }
    let verdict = if witnesses.is_empty() { Verdict::Inconclusive } else { Verdict::NotFull };
    RationalRankReport { verdict, witnesses }
}
