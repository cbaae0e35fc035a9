//! Frequency-vector lattices of the solution sets
//! S_q(χ₁,…,χ_k₀) = {σ ∈ F_q^k₀ : Σ χᵢσᵢ = 0}.
//!
//! Vectors live in Z^{F_q*} with coordinates ordered by the indexing
//! bijection f, so coordinate i − 1 belongs to the unit h with f(h) = i.

use crate::error::{Error, Result};
use crate::gf::{FieldCtx, FieldElem};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::BTreeSet;

/// Upper bound on q^k₀ for exhaustive enumeration.
pub const SOLUTION_CAP: u64 = 10_000_000;
/// Upper bound on the number of lattice points visited by `intersect_divisible`.
pub const BOX_CAP: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolutionSet {
    pub coeffs: Vec<FieldElem>,
    pub sols: Vec<Vec<FieldElem>>,
}

fn check_coeffs(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<()> {
    if coeffs.is_empty() {
        return Err(Error::BadInput("empty coefficient list".into()));
    }
    if let Some(c) = coeffs.iter().find(|c| c.is_zero() || c.code() >= ctx.q() as usize) {
        return Err(Error::BadInput(format!("{c} is not a unit of F_{}", ctx.q())));
    }
    let size = (ctx.q() as u64).checked_pow(coeffs.len() as u32);
    if size.is_none_or(|s| s > SOLUTION_CAP) {
        return Err(Error::TooLarge(format!("q^k0 = {}^{} exceeds {SOLUTION_CAP}", ctx.q(), coeffs.len())));
    }
    Ok(())
}

// Free choice of σ₂..σ_k₀, then σ₁ = −χ₁⁻¹ Σ_{i≥2} χᵢσᵢ.
fn for_each_solution(ctx: &FieldCtx, coeffs: &[FieldElem], mut visit: impl FnMut(&[FieldElem])) {
    let k0 = coeffs.len();
    let q = ctx.q() as u16;
    let inv1 = ctx.inv(coeffs[0]).expect("unit");
    let mut sigma = vec![FieldElem::ZERO; k0];
    loop {
        let s = (1..k0).fold(FieldElem::ZERO, |acc, i| ctx.add(acc, ctx.mul(coeffs[i], sigma[i])));
        sigma[0] = ctx.neg(ctx.mul(inv1, s));
        visit(&sigma);
        let mut i = 1;
        loop {
            if i == k0 {
                return;
            }
            sigma[i].0 += 1;
            if sigma[i].0 < q {
                break;
            }
            sigma[i] = FieldElem::ZERO;
            i += 1;
        }
    }
}

pub fn solutions(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<SolutionSet> {
    check_coeffs(ctx, coeffs)?;
    let mut sols = Vec::new();
    for_each_solution(ctx, coeffs, |s| sols.push(s.to_vec()));
    Ok(SolutionSet { coeffs: coeffs.to_vec(), sols })
}

/// Count of each unit among the coordinates of σ, in f-order.
pub fn freq_vector(ctx: &FieldCtx, sigma: &[FieldElem]) -> Vec<i64> {
    let mut v = vec![0i64; ctx.q() as usize - 1];
    for &s in sigma {
        if let Some(i) = ctx.index_f(s) {
            v[i - 1] += 1;
        }
    }
    v
}

fn unit_vec(ctx: &FieldCtx, h: FieldElem) -> Vec<i64> {
    freq_vector(ctx, &[h])
}

fn add_into(a: &mut [i64], b: &[i64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Column-style Hermite normal form of an integer lattice.
///
/// Columns are sorted by pivot row, each column vanishes above its pivot,
/// pivots are positive and every entry in a pivot row to the left of the
/// pivot lies in [0, pivot). This form is unique for a given lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Hnf {
    dim: usize,
    cols: Vec<Vec<BigInt>>,
    pivots: Vec<usize>,
    det_abs: BigInt,
}

struct HnfBuilder {
    dim: usize,
    cols: Vec<Vec<BigInt>>,
    col_of_row: Vec<Option<usize>>,
    pending: usize,
}

fn ext_gcd(a: &BigInt, b: &BigInt) -> (BigInt, BigInt, BigInt) {
    let e = a.extended_gcd(b);
    if e.gcd.is_negative() {
        (-e.gcd, -e.x, -e.y)
    } else {
        (e.gcd, e.x, e.y)
    }
}

impl HnfBuilder {
    fn new(dim: usize) -> Self {
        HnfBuilder { dim, cols: Vec::new(), col_of_row: vec![None; dim], pending: 0 }
    }

    fn insert(&mut self, mut v: Vec<BigInt>) {
        for r in 0..self.dim {
            if v[r].is_zero() {
                continue;
            }
            let Some(ci) = self.col_of_row[r] else {
                self.col_of_row[r] = Some(self.cols.len());
                self.cols.push(v);
                break;
            };
            let b = &mut self.cols[ci];
            let (g, s, t) = ext_gcd(&b[r], &v[r]);
            let bq = &b[r] / &g;
            let vq = &v[r] / &g;
            for i in r..self.dim {
                let nb = &s * &b[i] + &t * &v[i];
                let nv = &bq * &v[i] - &vq * &b[i];
                b[i] = nb;
                v[i] = nv;
            }
        }
        self.pending += 1;
        if self.pending >= 16 {
            self.reduce();
        }
    }

    fn reduce(&mut self) {
        self.pending = 0;
        let mut order: Vec<usize> = (0..self.cols.len()).collect();
        let piv = |c: &Vec<BigInt>| c.iter().position(|x| !x.is_zero()).unwrap();
        order.sort_by_key(|&i| piv(&self.cols[i]));
        let mut cols: Vec<Vec<BigInt>> = order.into_iter().map(|i| std::mem::take(&mut self.cols[i])).collect();
        let pivots: Vec<usize> = cols.iter().map(piv).collect();
        for (i, &r) in pivots.iter().enumerate() {
            if cols[i][r].is_negative() {
                for x in cols[i][r..].iter_mut() {
                    *x = -&*x;
                }
            }
            let (left, right) = cols.split_at_mut(i);
            let c = &right[0];
            for col in left.iter_mut() {
                let m = col[r].div_floor(&c[r]);
                if !m.is_zero() {
                    for k in r..self.dim {
                        col[k] -= &m * &c[k];
                    }
                }
            }
        }
        self.col_of_row = vec![None; self.dim];
        for (i, &r) in pivots.iter().enumerate() {
            self.col_of_row[r] = Some(i);
        }
        self.cols = cols;
    }

    fn finish(mut self) -> Hnf {
        self.reduce();
        let pivots: Vec<usize> = self.cols.iter().map(|c| c.iter().position(|x| !x.is_zero()).unwrap()).collect();
        let det_abs = if self.cols.len() == self.dim {
            self.cols.iter().zip(&pivots).fold(BigInt::one(), |acc, (c, &r)| acc * &c[r])
        } else {
            BigInt::zero()
        };
        Hnf { dim: self.dim, cols: self.cols, pivots, det_abs }
    }
}

/// HNF of the lattice spanned by `columns`, each of length `dim`.
pub fn hnf(columns: &[Vec<i64>], dim: usize) -> Hnf {
    let mut b = HnfBuilder::new(dim);
    for c in columns {
        assert_eq!(c.len(), dim, "column length");
        b.insert(c.iter().map(|&x| BigInt::from(x)).collect());
    }
    b.finish()
}

impl Hnf {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<BigInt>] {
        &self.cols
    }

    /// |det| when the lattice has full rank, else 0.
    pub fn det_abs(&self) -> &BigInt {
        &self.det_abs
    }

    pub fn is_identity(&self) -> bool {
        self.rank() == self.dim && self.det_abs.is_one()
    }

    pub fn columns_i64(&self) -> Option<Vec<Vec<i64>>> {
        self.cols.iter().map(|c| c.iter().map(|x| x.to_i64()).collect()).collect()
    }

    /// Lattice membership by forward substitution.
    pub fn contains(&self, v: &[i64]) -> bool {
        let mut t: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        let mut next = 0;
        for r in 0..self.dim {
            if next < self.pivots.len() && self.pivots[next] == r {
                let c = &self.cols[next];
                let (w, rem) = t[r].div_rem(&c[r]);
                if !rem.is_zero() {
                    return false;
                }
                for k in r..self.dim {
                    t[k] -= &w * &c[k];
                }
                next += 1;
            } else if !t[r].is_zero() {
                return false;
            }
        }
        true
    }
}

fn bareiss_i128(mut m: Vec<Vec<i128>>) -> Option<BigInt> {
    let n = m.len();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            let Some(i) = (k + 1..n).find(|&i| m[i][k] != 0) else {
                return Some(BigInt::zero());
            };
            m.swap(k, i);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let a = m[i][j].checked_mul(m[k][k])?;
                let b = m[i][k].checked_mul(m[k][j])?;
                m[i][j] = a.checked_sub(b)? / prev;
            }
        }
        prev = m[k][k];
    }
    Some(BigInt::from(if n == 0 { 1 } else { sign * m[n - 1][n - 1] }))
}

fn bareiss_big(mut m: Vec<Vec<BigInt>>) -> BigInt {
    let n = m.len();
    let mut negate = false;
    let mut prev = BigInt::one();
    for k in 0..n {
        if m[k][k].is_zero() {
            let Some(i) = (k + 1..n).find(|&i| !m[i][k].is_zero()) else {
                return BigInt::zero();
            };
            m.swap(k, i);
            negate = !negate;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = (&m[i][j] * &m[k][k] - &m[i][k] * &m[k][j]) / &prev;
                m[i][j] = v;
            }
        }
        prev = m[k][k].clone();
    }
    let d = if n == 0 { BigInt::one() } else { m[n - 1][n - 1].clone() };
    if negate {
        -d
    } else {
        d
    }
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(rows: &[Vec<i64>]) -> BigInt {
    let small: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    bareiss_i128(small)
        .unwrap_or_else(|| bareiss_big(rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()))
}

/// A candidate basis of (q − 1) integer vectors in Z^{F_q*}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LatticeBasis {
    pub vectors: Vec<Vec<i64>>,
    pub det_abs: BigInt,
}

impl LatticeBasis {
    pub fn new(vectors: Vec<Vec<i64>>) -> Self {
        let det_abs = determinant(&vectors).abs();
        LatticeBasis { vectors, det_abs }
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn hnf(&self) -> Hnf {
        let dim = self.vectors.first().map_or(0, Vec::len);
        hnf(&self.vectors, dim)
    }
}

/// HNF of the module generated by all frequency vectors of solutions.
pub fn module_bruteforce(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<Hnf> {
    check_coeffs(ctx, coeffs)?;
    let mut gens: BTreeSet<Vec<i64>> = BTreeSet::new();
    for_each_solution(ctx, coeffs, |s| {
        gens.insert(freq_vector(ctx, s));
    });
    gens.remove(&vec![0; ctx.q() as usize - 1]);
    let gens: Vec<Vec<i64>> = gens.into_iter().collect();
    Ok(hnf(&gens, ctx.q() as usize - 1))
}

fn x_pow(ctx: &FieldCtx, i: usize) -> FieldElem {
    let mut c = vec![0u32; ctx.ell() as usize];
    c[i] = 1;
    ctx.from_coeffs(&c).expect("valid monomial")
}

/// The two bases for identical coefficients: B₁ (columns of M_q) and
/// B₂ (columns of A_q), both listed in f-order of the defining unit h.
pub fn basis_identical(ctx: &FieldCtx) -> Result<(LatticeBasis, LatticeBasis)> {
    let (p, ell) = (ctx.p(), ctx.ell() as usize);
    let units = ctx.units_by_index();
    let neg_x: Vec<Vec<i64>> = (0..ell).map(|i| unit_vec(ctx, ctx.neg(x_pow(ctx, i)))).collect();

    let b1: Vec<Vec<i64>> = units
        .iter()
        .map(|&h| {
            let mut v = unit_vec(ctx, h);
            for (i, &a) in ctx.coeffs(h).iter().enumerate() {
                for _ in 0..a {
                    add_into(&mut v, &neg_x[i]);
                }
            }
            v
        })
        .collect();

    let half = (p - 1) / 2;
    let b2: Vec<Vec<i64>> = units
        .iter()
        .map(|&h| {
            let a = ctx.coeffs(h);
            let r = a.iter().rposition(|&x| x != 0).expect("unit");
            let top = ctx
                .from_coeffs(&{
                    let mut t = vec![0; ell];
                    t[r] = a[r];
                    t
                })
                .expect("monomial");
            let mut v = unit_vec(ctx, h);
            if ctx.element_len(h) >= 2 {
                add_into(&mut v, &unit_vec(ctx, ctx.neg(top)));
                add_into(&mut v, &unit_vec(ctx, ctx.add(ctx.neg(h), top)));
            } else if p == 2 {
                add_into(&mut v, &unit_vec(ctx, h));
            } else if a[r] <= half {
                add_into(&mut v, &unit_vec(ctx, ctx.neg(h)));
            } else {
                // h = −a·X^r with a = p − a_r ≤ (p − 1)/2.
                let am = p - a[r];
                let xr = x_pow(ctx, r);
                add_into(&mut v, &unit_vec(ctx, ctx.neg(xr)));
                add_into(&mut v, &unit_vec(ctx, ctx.scale_int(xr, am as u64 + 1)));
            }
            v
        })
        .collect();
    Ok((LatticeBasis::new(b1), LatticeBasis::new(b2)))
}

/// Which orbit construction produced a basis for unequal coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneralBasis {
    pub basis: LatticeBasis,
    /// 1, 2 or 3.
    pub case: u8,
    /// Positions of (χ₁, χ₂, χ₃) in the input.
    pub order: [usize; 3],
    /// χ₂/χ₁ and χ₃/χ₁.
    pub chi2: FieldElem,
    pub chi3: FieldElem,
    /// Orderings built before one with |det| = 1 was found.
    pub attempts: usize,
}

fn orbit_basis(ctx: &FieldCtx, case: u8, chi2: FieldElem, chi3: FieldElem) -> LatticeBasis {
    let gamma = match case {
        1 | 2 => ctx.inv(chi3).expect("unit"),
        _ => ctx.neg(ctx.inv(chi2).expect("unit")),
    };
    let mut seen = vec![false; ctx.q() as usize];
    let mut out = Vec::with_capacity(ctx.q() as usize - 1);
    for &u in ctx.units_by_index() {
        if seen[u.code()] {
            continue;
        }
        let mut orbit = vec![u];
        seen[u.code()] = true;
        let mut g = ctx.mul(gamma, u);
        while g != u {
            seen[g.code()] = true;
            orbit.push(g);
            g = ctx.mul(gamma, g);
        }
        for w in orbit.windows(2) {
            let mut v = unit_vec(ctx, w[0]);
            add_into(&mut v, &unit_vec(ctx, w[1]));
            out.push(v);
        }
        let (g1, g2) = (orbit[0], orbit[1 % orbit.len()]);
        let third = match case {
            1 => ctx.add(g2, orbit[2 % orbit.len()]),
            2 => ctx.add(g1, g1),
            _ => ctx.mul(ctx.sub(FieldElem::ONE, chi3), g1),
        };
        let mut v = unit_vec(ctx, g1);
        add_into(&mut v, &unit_vec(ctx, g2));
        add_into(&mut v, &unit_vec(ctx, third));
        out.push(v);
    }
    LatticeBasis::new(out)
}

/// Orbit-based basis for coefficient lists that are not all equal.
///
/// Orderings (χ₁, χ₂, χ₃) of the input with χ₃/χ₁ ≠ 1 are tried by case
/// priority; the first one whose basis has |det| = 1 is returned. If none
/// does, the first candidate is returned so verification can flag it.
pub fn basis_general_detailed(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<GeneralBasis> {
    if coeffs.len() < 3 {
        return Err(Error::BadInput("need at least three coefficients".into()));
    }
    if let Some(c) = coeffs.iter().find(|c| c.is_zero() || c.code() >= ctx.q() as usize) {
        return Err(Error::BadInput(format!("{c} is not a unit of F_{}", ctx.q())));
    }
    if coeffs.iter().all(|&c| c == coeffs[0]) {
        return Err(Error::BadInput("all coefficients are equal".into()));
    }
    let k0 = coeffs.len();
    let minus_one = ctx.neg(FieldElem::ONE);
    let mut cands: Vec<(u8, [usize; 3], FieldElem, FieldElem)> = Vec::new();
    for i1 in 0..k0 {
        let inv = ctx.inv(coeffs[i1])?;
        for i2 in (0..k0).filter(|&i| i != i1) {
            for i3 in (0..k0).filter(|&i| i != i1 && i != i2) {
                let c2 = ctx.mul(coeffs[i2], inv);
                let c3 = ctx.mul(coeffs[i3], inv);
                if c3 == FieldElem::ONE {
                    continue;
                }
                let case = if ctx.p() == 2 && c2 == FieldElem::ONE {
                    1
                } else if ctx.p() != 2 && c2 == minus_one {
                    2
                } else {
                    3
                };
                if !cands.iter().any(|c| c.2 == c2 && c.3 == c3) {
                    cands.push((case, [i1, i2, i3], c2, c3));
                }
            }
        }
    }
    cands.sort_by_key(|c| c.0);
    let mut first = None;
    for (n, &(case, order, c2, c3)) in cands.iter().enumerate() {
        let basis = orbit_basis(ctx, case, c2, c3);
        let found = GeneralBasis { basis, case, order, chi2: c2, chi3: c3, attempts: n + 1 };
        if found.basis.det_abs.is_one() {
            return Ok(found);
        }
        first.get_or_insert(found);
    }
    first.ok_or_else(|| Error::BadInput("no ordering with χ₃ ≠ χ₁".into()))
}

pub fn basis_general(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<LatticeBasis> {
    Ok(basis_general_detailed(ctx, coeffs)?.basis)
}

/// B₂ for identical coefficients, the orbit basis otherwise.
pub fn construct_basis(ctx: &FieldCtx, coeffs: &[FieldElem]) -> Result<LatticeBasis> {
    if coeffs.len() >= 3 && coeffs.iter().all(|&c| c == coeffs[0]) {
        if coeffs[0].is_zero() || coeffs[0].code() >= ctx.q() as usize {
            return Err(Error::BadInput(format!("{} is not a unit", coeffs[0])));
        }
        Ok(basis_identical(ctx)?.1)
    } else {
        basis_general(ctx, coeffs)
    }
}

// Can the multiset `values` be placed on distinct positions so that the
// weighted sum vanishes?
fn realizable(ctx: &FieldCtx, coeffs: &[FieldElem], values: &[FieldElem]) -> bool {
    fn go(ctx: &FieldCtx, c: &[FieldElem], vals: &[FieldElem], used: &mut [bool], acc: FieldElem) -> bool {
        let Some((&v, rest)) = vals.split_first() else {
            return acc.is_zero();
        };
        for i in 0..c.len() {
            if !used[i] {
                used[i] = true;
                let ok = go(ctx, c, rest, used, ctx.add(acc, ctx.mul(c[i], v)));
                used[i] = false;
                if ok {
                    return true;
                }
            }
        }
        false
    }
    values.len() <= coeffs.len() && go(ctx, coeffs, values, &mut vec![false; coeffs.len()], FieldElem::ZERO)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisReport {
    /// Every vector is the frequency vector of a solution.
    pub solution_vectors: bool,
    /// HNF(basis) equals HNF of the brute-force module.
    pub module_equal: bool,
    /// |det| equals q when all coefficients agree and 1 otherwise.
    pub det_matches: bool,
    pub det_abs: BigInt,
    pub expected_det: u64,
    pub note: Option<String>,
}

impl BasisReport {
    pub fn ok(&self) -> bool {
        self.solution_vectors && self.module_equal && self.det_matches
    }
}

pub fn verify_basis(ctx: &FieldCtx, coeffs: &[FieldElem], basis: &LatticeBasis) -> BasisReport {
    let n = ctx.q() as usize - 1;
    let units = ctx.units_by_index();
    let shape_ok = basis.vectors.len() == n && basis.vectors.iter().all(|v| v.len() == n);
    let solution_vectors = shape_ok
        && basis.vectors.iter().all(|v| {
            if v.iter().any(|&x| x < 0) {
                return false;
            }
            let vals: Vec<FieldElem> =
                v.iter().zip(units).flat_map(|(&c, &u)| std::iter::repeat_n(u, c as usize)).collect();
            realizable(ctx, coeffs, &vals)
        });
    let all_equal = coeffs.iter().all(|&c| c == coeffs[0]);
    let expected_det = if all_equal { ctx.q() as u64 } else { 1 };
    let (module_equal, note) = match module_bruteforce(ctx, coeffs) {
        Ok(m) if shape_ok => (basis.hnf() == m, None),
        Ok(_) => (false, Some(format!("basis must have {n} vectors of length {n}"))),
        Err(e) => (false, Some(e.to_string())),
    };
    BasisReport {
        solution_vectors,
        module_equal,
        det_matches: basis.det_abs == BigInt::from(expected_det),
        det_abs: basis.det_abs.clone(),
        expected_det,
        note,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntersectionReport {
    pub f_d: u32,
    pub points_checked: u64,
    pub divisible_points: u64,
    /// Every visited lattice point divisible by f_d lies in f_d·M.
    pub forward_ok: bool,
    /// Every visited point of f_d·M is divisible by f_d and lies in M.
    pub converse_ok: bool,
    pub holds: bool,
}

fn contains_small(cols: &[Vec<i64>], pivots: &[usize], v: &[i64]) -> bool {
    let mut t = v.to_vec();
    let mut next = 0;
    for r in 0..t.len() {
        if next < pivots.len() && pivots[next] == r {
            let c = &cols[next];
            if t[r] % c[r] != 0 {
                return false;
            }
            let w = t[r] / c[r];
            for k in r..t.len() {
                t[k] -= w * c[k];
            }
            next += 1;
        } else if t[r] != 0 {
            return false;
        }
    }
    true
}

/// Checks M ∩ f·Z^{q−1} = f·M on all points B·z with z ∈ [−f, f]^{q−1},
/// which meets every residue class of z modulo f.
pub fn intersect_divisible(ctx: &FieldCtx, basis: &LatticeBasis, f_d: u32) -> Result<IntersectionReport> {
    if f_d == 0 {
        return Err(Error::BadParameter("f_d must be at least 1".into()));
    }
    if f_d.gcd(&ctx.q()) != 1 {
        return Err(Error::NotCoprime { f: f_d as u64, q: ctx.q() as u64 });
    }
    if f_d == 1 {
        return Ok(IntersectionReport {
            f_d,
            points_checked: 0,
            divisible_points: 0,
            forward_ok: true,
            converse_ok: true,
            holds: true,
        });
    }
    let n = basis.vectors.len();
    let span = 2 * f_d as u64 + 1;
    if span.checked_pow(n as u32).is_none_or(|c| c > BOX_CAP) {
        return Err(Error::TooLarge(format!("{span}^{n} lattice points")));
    }
    let h = basis.hnf();
    let hcols = h.columns_i64().ok_or_else(|| Error::TooLarge("HNF entries exceed 64 bits".into()))?;
    let pivots: Vec<usize> = hcols.iter().map(|c| c.iter().position(|&x| x != 0).unwrap()).collect();
    let f = f_d as i64;
    let cols = &basis.vectors;
    let mut z = vec![-f; n];
    let mut y = vec![0i64; n];
    for (j, c) in cols.iter().enumerate() {
        for (yi, &ci) in y.iter_mut().zip(c) {
            *yi += z[j] * ci;
        }
    }
    let (mut points, mut divisible) = (0u64, 0u64);
    let (mut forward_ok, mut converse_ok) = (true, true);
    let mut scratch = vec![0i64; n];
    loop {
        points += 1;
        if y.iter().all(|&v| v % f == 0) {
            divisible += 1;
            for (s, &v) in scratch.iter_mut().zip(&y) {
                *s = v / f;
            }
            forward_ok &= contains_small(&hcols, &pivots, &scratch);
        }
        if z.iter().all(|&v| v % f == 0) {
            converse_ok &= y.iter().all(|&v| v % f == 0) && contains_small(&hcols, &pivots, &y);
        }
        let mut j = 0;
        loop {
            if j == n {
                return Ok(IntersectionReport {
                    f_d,
                    points_checked: points,
                    divisible_points: divisible,
                    forward_ok,
                    converse_ok,
                    holds: forward_ok && converse_ok,
                });
            }
            if z[j] < f {
                z[j] += 1;
                for (yi, &ci) in y.iter_mut().zip(&cols[j]) {
                    *yi += ci;
                }
                break;
            }
            z[j] = -f;
            for (yi, &ci) in y.iter_mut().zip(&cols[j]) {
                *yi -= 2 * f * ci;
            }
            j += 1;
        }
    }
}

/// Coefficient multisets of size k₀ over F_q*, one per class under global
/// scaling, each given as its lexicographically smallest sorted representative.
pub fn multisets_up_to_scaling(ctx: &FieldCtx, k0: usize) -> Vec<Vec<FieldElem>> {
    let q = ctx.q() as u16;
    let mut out = Vec::new();
    let mut cur = vec![FieldElem(1); k0];
    if k0 == 0 {
        return out;
    }
    loop {
        let canonical = ctx
            .units()
            .map(|s| {
                let mut v: Vec<FieldElem> = cur.iter().map(|&c| ctx.mul(s, c)).collect();
                v.sort();
                v
            })
            .min()
            .expect("at least one unit");
        if canonical == cur {
            out.push(cur.clone());
        }
        // Next non-decreasing sequence.
        let Some(i) = (0..k0).rev().find(|&i| cur[i].0 < q - 1) else {
            return out;
        };
        let v = cur[i].0 + 1;
        for c in cur[i..].iter_mut() {
            *c = FieldElem(v);
        }
    }
}
