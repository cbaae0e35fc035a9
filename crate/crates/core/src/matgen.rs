//! Random matrix models: coupled degree sequences, the pairing and simple
//! Tanner-graph matrices, biadjacency patterns, ternary augmentation and pinning.

use crate::error::{Error, Result};
use crate::gf::{FieldCtx, FieldElem};
use crate::sparse::SparseMatrix;
use crate::threshold::ModelSpec;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use std::sync::Arc;

/// Variable degrees `dvec` (columns) and check degrees `kvec` (rows).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequencePair {
    pub dvec: Vec<u32>,
    pub kvec: Vec<u32>,
}

impl DegreeSequencePair {
    pub fn new(dvec: Vec<u32>, kvec: Vec<u32>) -> Result<Self> {
        let sd: u64 = dvec.iter().map(|&x| x as u64).sum();
        let sk: u64 = kvec.iter().map(|&x| x as u64).sum();
        if sd != sk {
            return Err(Error::BadParameter(format!("degree sums differ: {sd} vs {sk}")));
        }
        Ok(DegreeSequencePair { dvec, kvec })
    }

    pub fn n(&self) -> usize {
        self.dvec.len()
    }

    pub fn m(&self) -> usize {
        self.kvec.len()
    }

    /// Number of edges.
    pub fn total(&self) -> u64 {
        self.dvec.iter().map(|&x| x as u64).sum()
    }
}

/// Default retry cap for degree sampling, ⌈200·√n⌉.
pub fn default_degree_tries(n: usize) -> usize {
    (200.0 * (n as f64).sqrt()).ceil() as usize
}

/// Draws d₁..dₙ, m ~ Po(dn/k) and k₁..k_m until the degree sums agree.
pub fn sample_degrees<R: Rng + ?Sized>(
    spec: &ModelSpec,
    n: usize,
    rng: &mut R,
    max_tries: usize,
) -> Result<DegreeSequencePair> {
    let fk = spec.kdist.gcd_support() as usize;
    if n == 0 || !n.is_multiple_of(fk) {
        return Err(Error::BadParameter(format!("n = {n} must be positive and divisible by {fk}")));
    }
    if max_tries == 0 {
        return Err(Error::BadParameter("max_tries must be at least 1".into()));
    }
    let lambda = spec.d() * n as f64 / spec.k();
    let pois =
        if lambda > 0.0 { Some(Poisson::new(lambda).map_err(|e| Error::BadParameter(e.to_string()))?) } else { None };
    for _ in 0..max_tries {
        let dvec: Vec<u32> = (0..n).map(|_| spec.ddist.sample(rng)).collect();
        let m = pois.as_ref().map_or(0, |p| p.sample(rng) as usize);
        let kvec: Vec<u32> = (0..m).map(|_| spec.kdist.sample(rng)).collect();
        let sd: u64 = dvec.iter().map(|&x| x as u64).sum();
        let sk: u64 = kvec.iter().map(|&x| x as u64).sum();
        if sd == sk {
            return Ok(DegreeSequencePair { dvec, kvec });
        }
    }
    Err(Error::RetriesExhausted(max_tries))
}

fn clone_list(degs: &DegreeSequencePair) -> Vec<u32> {
    let mut v = Vec::with_capacity(degs.total() as usize);
    for (j, &d) in degs.dvec.iter().enumerate() {
        v.extend(std::iter::repeat_n(j as u32, d as usize));
    }
    v
}

fn assemble<R: Rng + ?Sized>(
    field: &Arc<FieldCtx>,
    degs: &DegreeSequencePair,
    matching: &[u32],
    rng: &mut R,
    mut coeff: impl FnMut(&mut R) -> FieldElem,
) -> SparseMatrix {
    let mut m = SparseMatrix::new(field.clone(), degs.n());
    let mut off = 0;
    for &k in &degs.kvec {
        let mut nb = matching[off..off + k as usize].to_vec();
        off += k as usize;
        nb.sort_unstable();
        let mut row = Vec::with_capacity(nb.len());
        let mut i = 0;
        while i < nb.len() {
            let mut j = i;
            while j < nb.len() && nb[j] == nb[i] {
                j += 1;
            }
            let chi = coeff(rng);
            row.push((nb[i] as usize, field.scale_int(chi, (j - i) as u64)));
            i = j;
        }
        m.push_row(row).expect("columns in range");
    }
    m
}

/// Pairing model: uniform matching of clones, one χ draw per adjacent
/// (row, column) pair multiplied by the edge multiplicity.
pub fn gen_pairing<R: Rng + ?Sized>(spec: &ModelSpec, degs: &DegreeSequencePair, rng: &mut R) -> SparseMatrix {
    let mut clones = clone_list(degs);
    clones.shuffle(rng);
    assemble(spec.field(), degs, &clones, rng, |r| spec.sample_chi(r))
}

// Fisher–Yates in check-clone order, restarting at the first repeated
// neighbour inside a row. Aborting a uniform permutation early and
// rejecting it whole give the same conditional law.
fn simple_matching<R: Rng + ?Sized>(degs: &DegreeSequencePair, rng: &mut R, max_tries: usize) -> Result<Vec<u32>> {
    let base = clone_list(degs);
    let len = base.len();
    let mut clones = base.clone();
    'attempt: for _ in 0..max_tries {
        clones.copy_from_slice(&base);
        let mut pos = 0;
        for &k in &degs.kvec {
            let start = pos;
            for _ in 0..k {
                let r = rng.random_range(pos..len);
                clones.swap(pos, r);
                if clones[start..pos].contains(&clones[pos]) {
                    continue 'attempt;
                }
                pos += 1;
            }
        }
        return Ok(clones);
    }
    Err(Error::RetriesExhausted(max_tries))
}

/// Simple model: the pairing model conditioned on having no multi-edges.
pub fn gen_simple<R: Rng + ?Sized>(
    spec: &ModelSpec,
    degs: &DegreeSequencePair,
    rng: &mut R,
    max_tries: usize,
) -> Result<SparseMatrix> {
    let matching = simple_matching(degs, rng, max_tries)?;
    Ok(assemble(spec.field(), degs, &matching, rng, |r| spec.sample_chi(r)))
}

/// 0/1 adjacency pattern over the caller's field.
pub fn gen_biadjacency<R: Rng + ?Sized>(
    field: Arc<FieldCtx>,
    degs: &DegreeSequencePair,
    rng: &mut R,
    simple: bool,
    max_tries: usize,
) -> Result<SparseMatrix> {
    let matching = if simple {
        simple_matching(degs, rng, max_tries)?
    } else {
        let mut c = clone_list(degs);
        c.shuffle(rng);
        c
    };
    Ok(assemble(&field, degs, &matching, rng, |_| FieldElem::ONE))
}

/// One row with three uniformly chosen positions (with replacement) and
/// iid χ coefficients.
pub fn ternary_row<R: Rng + ?Sized>(spec: &ModelSpec, ncols: usize, rng: &mut R) -> Vec<(usize, FieldElem)> {
    (0..3)
        .map(|_| {
            let j = rng.random_range(0..ncols);
            (j, spec.sample_chi(rng))
        })
        .collect()
}

pub fn add_ternary_rows<R: Rng + ?Sized>(
    a: &SparseMatrix,
    t: usize,
    spec: &ModelSpec,
    rng: &mut R,
) -> Result<SparseMatrix> {
    if t > 0 && a.ncols() == 0 {
        return Err(Error::BadParameter("cannot add rows to a matrix without columns".into()));
    }
    let mut out = a.clone();
    for _ in 0..t {
        out.push_row(ternary_row(spec, a.ncols(), rng))?;
    }
    Ok(out)
}

/// Appends θ rows, each a single 1 at a uniform column.
pub fn pin<R: Rng + ?Sized>(a: &SparseMatrix, theta: usize, rng: &mut R) -> Result<SparseMatrix> {
    if theta > 0 && a.ncols() == 0 {
        return Err(Error::BadParameter("cannot pin a matrix without columns".into()));
    }
    let mut out = a.clone();
    for _ in 0..theta {
        out.push_row(vec![(rng.random_range(0..a.ncols()), FieldElem::ONE)])?;
    }
    Ok(out)
}
