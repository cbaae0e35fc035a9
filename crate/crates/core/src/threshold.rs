//! The functional Φ, the full-row-rank condition and the quantities
//! derived from it.
//!
//! Φ(z) = D(1 − K′(z)/k) − (d/k)(1 − K(z) − (1 − z)K′(z)).
//!
//! Its derivative factors as Φ′(z) = K″(z)/k · g(z) with
//! g(z) = d(1 − z) − D′(1 − K′(z)/k), and K″ > 0 on (0, 1] when every check
//! degree is at least 3, so local maxima of Φ are sign changes of g.

use crate::degdist::DegreeDist;
use crate::error::{Error, Result};
use crate::gf::{FieldCtx, FieldElem};
use num_integer::Integer;
use rand::Rng;
use std::sync::Arc;

/// Margin inside which the strict inequality is not decided.
pub const MARGIN: f64 = 1e-9;
const Z_MIN: f64 = 1e-4;
const CONDITION_GRID: usize = 4000;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Degree laws, field and coefficient law of the random matrix model.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub ddist: DegreeDist,
    pub kdist: DegreeDist,
    field: Arc<FieldCtx>,
    chi: Vec<(FieldElem, f64)>,
    chi_cdf: Vec<f64>,
}

impl ModelSpec {
    /// `chi = None` means uniform on F_q*.
    pub fn new(ddist: DegreeDist, kdist: DegreeDist, q: u32, chi: Option<Vec<(FieldElem, f64)>>) -> Result<Self> {
        Self::with_field(ddist, kdist, Arc::new(FieldCtx::new(q)?), chi)
    }

    pub fn with_field(
        ddist: DegreeDist,
        kdist: DegreeDist,
        field: Arc<FieldCtx>,
        chi: Option<Vec<(FieldElem, f64)>>,
    ) -> Result<Self> {
        if kdist.min_value() < 3 {
            return Err(Error::BadParameter(format!(
                "check degrees must be at least 3, support starts at {}",
                kdist.min_value()
            )));
        }
        let chi = match chi {
            None => {
                let w = 1.0 / (field.q() - 1) as f64;
                field.units().map(|u| (u, w)).collect::<Vec<_>>()
            }
            Some(c) => {
                if c.is_empty() {
                    return Err(Error::BadParameter("empty coefficient law".into()));
                }
                for &(e, w) in &c {
                    if e.is_zero() || e.code() >= field.q() as usize {
                        return Err(Error::BadParameter(format!("{e} is not a unit of F_{}", field.q())));
                    }
                    if !(w > 0.0 && w <= 1.0) {
                        return Err(Error::BadParameter(format!("bad coefficient probability {w}")));
                    }
                }
                let mut seen: Vec<_> = c.iter().map(|x| x.0).collect();
                seen.sort();
                if seen.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::BadParameter("repeated element in coefficient law".into()));
                }
                let total: f64 = c.iter().map(|x| x.1).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::BadParameter(format!("coefficient law sums to {total}")));
                }
                c
            }
        };
        let total: f64 = chi.iter().map(|x| x.1).sum();
        let mut acc = 0.0;
        let chi_cdf = chi
            .iter()
            .map(|x| {
                acc += x.1 / total;
                acc
            })
            .collect();
        Ok(ModelSpec { ddist, kdist, field, chi, chi_cdf })
    }

    pub fn q(&self) -> u32 {
        self.field.q()
    }

    pub fn field(&self) -> &Arc<FieldCtx> {
        &self.field
    }

    pub fn chi(&self) -> &[(FieldElem, f64)] {
        &self.chi
    }

    /// E[d].
    pub fn d(&self) -> f64 {
        self.ddist.mean()
    }

    /// E[k].
    pub fn k(&self) -> f64 {
        self.kdist.mean()
    }

    pub fn sample_chi<R: Rng + ?Sized>(&self, rng: &mut R) -> FieldElem {
        if self.chi.len() == 1 {
            return self.chi[0].0;
        }
        let u: f64 = rng.random();
        let i = self.chi_cdf.partition_point(|&c| c <= u);
        self.chi[i.min(self.chi.len() - 1)].0
    }

    fn phi_raw(&self, z: f64) -> f64 {
        let (d, k) = (self.d(), self.k());
        let kp = self.kdist.pgf_d1_raw(z);
        let arg = (1.0 - kp / k).clamp(0.0, 1.0);
        self.ddist.pgf_raw(arg) - d / k * (1.0 - self.kdist.pgf_raw(z) - (1.0 - z) * kp)
    }

    // Same sign as Φ′ on (0, 1].
    fn slope_sign_fn(&self, z: f64) -> f64 {
        let arg = (1.0 - self.kdist.pgf_d1_raw(z) / self.k()).clamp(0.0, 1.0);
        self.d() * (1.0 - z) - self.ddist.pgf_d1_raw(arg)
    }
}

fn unit(z: f64) -> Result<()> {
    if (0.0..=1.0).contains(&z) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(z))
    }
}

pub fn phi(spec: &ModelSpec, z: f64) -> Result<f64> {
    unit(z)?;
    Ok(spec.phi_raw(z))
}

/// Golden-section search for a maximum of `f` on [a, b].
pub fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiMax {
    pub argmax: f64,
    pub value: f64,
}

/// Global maximum of Φ on [0, 1] by grid scan plus golden-section refinement
/// around every grid-local maximum. Ties keep the smallest argument.
pub fn phi_max(spec: &ModelSpec, grid_points: usize, refine_tol: f64) -> PhiMax {
    let n = grid_points.max(1000);
    let tol = refine_tol.clamp(1e-15, 1e-6);
    let zs: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let vs: Vec<f64> = zs.iter().map(|&z| spec.phi_raw(z)).collect();
    let mut best = PhiMax { argmax: zs[0], value: vs[0] };
    let consider = |z: f64, v: f64, best: &mut PhiMax| {
        if v > best.value {
            *best = PhiMax { argmax: z, value: v };
        }
    };
    for i in 0..n {
        consider(zs[i], vs[i], &mut best);
    }
    for i in 0..n {
        let left = i == 0 || vs[i] >= vs[i - 1];
        let right = i == n - 1 || vs[i] >= vs[i + 1];
        if left && right {
            let a = zs[i.saturating_sub(1)];
            let b = zs[(i + 1).min(n - 1)];
            let (z, v) = golden_max(|z| spec.phi_raw(z), a, b, tol);
            consider(z, v, &mut best);
        }
    }
    best
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionReport {
    pub holds: bool,
    pub coprime: bool,
    pub phi0: f64,
    pub max_phi_interior: f64,
    pub argmax: f64,
    pub margin: f64,
    pub boundary_case: bool,
}

/// Decides Φ(z) < Φ(0) on (0, 1] together with gcd(q, f_d) = 1.
///
/// Φ is extremely flat at 0 (Φ(z) − Φ(0) = O(z³) for cubic check laws), so
/// comparing values near 0 against Φ(0) says nothing. Candidates for the
/// supremum are instead z = 1 and the interior local maxima, located as
/// sign changes of g on a grid over [z_min, 1] and refined by golden section.
/// Below z_min, 20 geometric points are probed and only count if Φ is
/// increasing there or already exceeds Φ(0) by more than the margin.
pub fn condition_check(spec: &ModelSpec) -> ConditionReport {
    let phi0 = spec.phi_raw(0.0);
    let fd = spec.ddist.gcd_support();
    let coprime = spec.q().gcd(&fd) == 1;

    let mut argmax = 1.0;
    let mut best = spec.phi_raw(1.0);
    let mut consider = |z: f64, v: f64| {
        if v > best {
            best = v;
            argmax = z;
        }
    };

    for j in 1..=20 {
        let z = Z_MIN * 10f64.powf(-0.5 * j as f64);
        let v = spec.phi_raw(z);
        if spec.slope_sign_fn(z) > 0.0 || v > phi0 + MARGIN {
            consider(z, v);
        }
    }

    let zs: Vec<f64> =
        (0..CONDITION_GRID).map(|i| Z_MIN + (1.0 - Z_MIN) * i as f64 / (CONDITION_GRID - 1) as f64).collect();
    let gs: Vec<f64> = zs.iter().map(|&z| spec.slope_sign_fn(z)).collect();
    if gs[0] > 0.0 {
        consider(zs[0], spec.phi_raw(zs[0]));
    }
    for i in 0..CONDITION_GRID - 1 {
        if gs[i] > 0.0 && gs[i + 1] <= 0.0 {
            let (z, v) = golden_max(|z| spec.phi_raw(z), zs[i], zs[i + 1], 1e-12);
            let (z, v) = [(zs[i], spec.phi_raw(zs[i])), (zs[i + 1], spec.phi_raw(zs[i + 1]))]
                .into_iter()
                .fold((z, v), |acc, c| if c.1 > acc.1 { c } else { acc });
            consider(z, v);
        }
    }

    let margin = phi0 - best;
    ConditionReport {
        holds: coprime && margin > MARGIN,
        coprime,
        phi0,
        max_phi_interior: best,
        argmax,
        margin,
        boundary_case: margin.abs() <= MARGIN,
    }
}

/// Predicted limit of rank(A)/n, namely 1 − max Φ.
pub fn normalized_rank(spec: &ModelSpec) -> f64 {
    1.0 - phi_max(spec, 10_000, 1e-9).value
}

/// Bisection bracket (lo, hi) for the random k-XORSAT style threshold:
/// the condition holds at lo and fails (or is borderline) at hi.
pub fn xorsat_bracket(k: u32, q: u32, tol: f64) -> Result<(f64, f64)> {
    if k < 3 {
        return Err(Error::BadParameter(format!("k must be at least 3, got {k}")));
    }
    if !(tol > 0.0 && tol <= 1e-4) {
        return Err(Error::BadParameter(format!("tol must lie in (0, 1e-4], got {tol}")));
    }
    let field = Arc::new(FieldCtx::new(q)?);
    let kdist = DegreeDist::fixed(k);
    let holds = |d: f64| -> Result<bool> {
        let spec = ModelSpec::with_field(
            DegreeDist::poisson(d, 1e-12)?,
            kdist.clone(),
            field.clone(),
            Some(vec![(FieldElem::ONE, 1.0)]),
        )?;
        let r = condition_check(&spec);
        Ok(r.holds && !r.boundary_case)
    };
    let (mut lo, mut hi) = (1e-3, k as f64);
    if !holds(lo)? {
        return Err(Error::BadParameter("condition fails already at d = 0.001".into()));
    }
    while hi - lo >= tol {
        let mid = 0.5 * (lo + hi);
        if holds(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

pub fn xorsat_threshold(k: u32, q: u32, tol: f64) -> Result<f64> {
    let (lo, hi) = xorsat_bracket(k, q, tol)?;
    Ok(0.5 * (lo + hi))
}

/// Φ̃_δ(α, β) = Φ(α) + (exp(−3δβ²) − 1)·D(1 − K′(α)/k) − δ + 3δβ² − 2δβ³.
pub fn tilde_phi(spec: &ModelSpec, delta: f64, alpha: f64, beta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(Error::BadParameter(format!("delta must lie in (0, 0.1], got {delta}")));
    }
    unit(alpha)?;
    unit(beta)?;
    Ok(tilde_phi_raw(spec, delta, alpha, beta))
}

fn tilde_phi_raw(spec: &ModelSpec, delta: f64, alpha: f64, beta: f64) -> f64 {
    let arg = (1.0 - spec.kdist.pgf_d1_raw(alpha) / spec.k()).clamp(0.0, 1.0);
    let b2 = beta * beta;
    spec.phi_raw(alpha) + ((-3.0 * delta * b2).exp() - 1.0) * spec.ddist.pgf_raw(arg) - delta + 3.0 * delta * b2
        - 2.0 * delta * b2 * beta
}

/// Maximum of Φ̃_δ over the unit square: 200×200 grid, then alternating
/// golden-section sweeps in each coordinate from the best grid point.
pub fn tilde_phi_max(spec: &ModelSpec, delta: f64) -> Result<(f64, f64, f64)> {
    tilde_phi(spec, delta, 0.0, 0.0)?;
    const G: usize = 200;
    let h = 1.0 / (G - 1) as f64;
    let (mut a, mut b, mut v) = (0.0, 0.0, tilde_phi_raw(spec, delta, 0.0, 0.0));
    for i in 0..G {
        for j in 0..G {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let w = tilde_phi_raw(spec, delta, x, y);
            if w > v {
                (a, b, v) = (x, y, w);
            }
        }
    }
    for _ in 0..4 {
        let (x, w) = golden_max(|x| tilde_phi_raw(spec, delta, x, b), (a - h).max(0.0), (a + h).min(1.0), 1e-10);
        if w > v {
            (a, v) = (x, w);
        }
        let (y, w) = golden_max(|y| tilde_phi_raw(spec, delta, a, y), (b - h).max(0.0), (b + h).min(1.0), 1e-10);
        if w > v {
            (b, v) = (y, w);
        }
    }
    Ok((a, b, v))
}
