//! Degree distributions on the non-negative integers.
//!
//! Every distribution is stored as a finite list of atoms. Poisson and
//! power-law laws are truncated where the remaining tail drops below `tol`
//! and then renormalized.

use crate::error::{Error, Result};
use num_integer::Integer;
use rand::Rng;

/// Default truncation threshold for infinite supports.
pub const DEFAULT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct DegreeDist {
    atoms: Vec<(u32, f64)>,
    cdf: Vec<f64>,
    mean: f64,
    second: f64,
    tail_mass_dropped: f64,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol <= 1e-8 {
        Ok(())
    } else {
        Err(Error::BadParameter(format!("tol must lie in (0, 1e-8], got {tol}")))
    }
}

impl DegreeDist {
    fn from_weights(mut atoms: Vec<(u32, f64)>, tail: f64) -> Self {
        atoms.retain(|&(_, w)| w > 0.0);
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        for a in atoms.iter_mut() {
            a.1 /= total;
        }
        let mut acc = 0.0;
        let cdf = atoms
            .iter()
            .map(|a| {
                acc += a.1;
                acc
            })
            .collect();
        let mean = atoms.iter().map(|&(v, p)| v as f64 * p).sum();
        let second = atoms.iter().map(|&(v, p)| (v as f64).powi(2) * p).sum();
        DegreeDist { atoms, cdf, mean, second, tail_mass_dropped: tail }
    }

    /// Point mass at `c`.
    pub fn fixed(c: u32) -> Self {
        Self::from_weights(vec![(c, 1.0)], 0.0)
    }

    /// Finite table of (value, probability) pairs.
    pub fn table(pairs: &[(u32, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::BadParameter("empty table".into()));
        }
        let mut atoms = pairs.to_vec();
        atoms.sort_by_key(|a| a.0);
        if atoms.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::BadParameter("repeated value in table".into()));
        }
        if atoms.iter().any(|a| !(a.1 > 0.0 && a.1 <= 1.0)) {
            return Err(Error::BadParameter("table probabilities must lie in (0, 1]".into()));
        }
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadParameter(format!("table probabilities sum to {total}")));
        }
        Ok(Self::from_weights(atoms, 0.0))
    }

    /// Poisson(mean), truncated at the smallest cutoff with tail mass below `tol`.
    pub fn poisson(mean: f64, tol: f64) -> Result<Self> {
        if !(mean > 0.0 && mean.is_finite() && mean <= 1e6) {
            return Err(Error::BadParameter(format!("poisson mean must be positive, got {mean}")));
        }
        check_tol(tol)?;
        // Generate well past the bulk in log space, then take suffix sums so
        // the tail is summed from its smallest terms upward.
        let ln_mean = mean.ln();
        let mut pmf = Vec::new();
        let mut lp = -mean;
        let mut v = 0u32;
        loop {
            pmf.push(lp.exp());
            v += 1;
            lp += ln_mean - (v as f64).ln();
            if v as f64 > mean && lp < -745.0 {
                break;
            }
        }
        let mut suffix = vec![0.0; pmf.len() + 1];
        for i in (0..pmf.len()).rev() {
            suffix[i] = suffix[i + 1] + pmf[i];
        }
        let cut = (0..pmf.len()).find(|&l| suffix[l + 1] < tol).unwrap_or(pmf.len() - 1);
        let atoms = (0..=cut).map(|l| (l as u32, pmf[l])).collect();
        Ok(Self::from_weights(atoms, suffix[cut + 1]))
    }

    /// P(d = ℓ) ∝ ℓ^(−α) for ℓ ≥ kmin, truncated using the integral tail bound.
    pub fn powerlaw(alpha: f64, kmin: u32, tol: f64) -> Result<Self> {
        if !(alpha > 3.0 && alpha.is_finite()) {
            return Err(Error::BadParameter(format!("power-law exponent must exceed 3, got {alpha}")));
        }
        if kmin == 0 {
            return Err(Error::BadParameter("power-law kmin must be at least 1".into()));
        }
        check_tol(tol)?;
        let mut atoms = Vec::new();
        let mut partial = 0.0;
        let mut l = kmin;
        loop {
            let w = (l as f64).powf(-alpha);
            atoms.push((l, w));
            partial += w;
            // Σ_{j>l} j^(−α) ≤ ∫_l^∞ x^(−α) dx
            let tail = (l as f64).powf(1.0 - alpha) / (alpha - 1.0);
            if tail / partial < tol {
                return Ok(Self::from_weights(atoms, tail / partial));
            }
            l = l.checked_add(1).ok_or_else(|| Error::BadParameter("power-law support overflow".into()))?;
        }
    }

    pub fn atoms(&self) -> &[(u32, f64)] {
        &self.atoms
    }

    pub fn tail_mass_dropped(&self) -> f64 {
        self.tail_mass_dropped
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn second_moment(&self) -> f64 {
        self.second
    }

    pub fn min_value(&self) -> u32 {
        self.atoms[0].0
    }

    pub fn max_value(&self) -> u32 {
        self.atoms[self.atoms.len() - 1].0
    }

    /// gcd of the support; gcd(0, x) = x.
    pub fn gcd_support(&self) -> u32 {
        self.atoms.iter().fold(0u32, |g, a| g.gcd(&a.0))
    }

    // Horner over (exponent, coefficient) pairs sorted by exponent.
    fn horner(terms: impl DoubleEndedIterator<Item = (u32, f64)>, x: f64) -> f64 {
        let mut it = terms.rev();
        let Some((mut top, c)) = it.next() else {
            return 0.0;
        };
        let mut acc = c;
        for (e, c) in it {
            acc = acc * x.powi((top - e) as i32) + c;
            top = e;
        }
        acc * x.powi(top as i32)
    }

    pub(crate) fn pgf_raw(&self, x: f64) -> f64 {
        Self::horner(self.atoms.iter().copied(), x)
    }

    pub(crate) fn pgf_d1_raw(&self, x: f64) -> f64 {
        Self::horner(self.atoms.iter().filter(|a| a.0 >= 1).map(|&(v, p)| (v - 1, v as f64 * p)), x)
    }

    pub(crate) fn pgf_d2_raw(&self, x: f64) -> f64 {
        Self::horner(self.atoms.iter().filter(|a| a.0 >= 2).map(|&(v, p)| (v - 2, v as f64 * (v as f64 - 1.0) * p)), x)
    }

    fn domain(x: f64) -> Result<()> {
        if (0.0..=1.0).contains(&x) {
            Ok(())
        } else {
            Err(Error::OutOfDomain(x))
        }
    }

    /// Generating function Σ pᵥ xᵛ.
    pub fn pgf(&self, x: f64) -> Result<f64> {
        Self::domain(x)?;
        Ok(self.pgf_raw(x))
    }

    pub fn pgf_d1(&self, x: f64) -> Result<f64> {
        Self::domain(x)?;
        Ok(self.pgf_d1_raw(x))
    }

    pub fn pgf_d2(&self, x: f64) -> Result<f64> {
        Self::domain(x)?;
        Ok(self.pgf_d2_raw(x))
    }

    /// Law of the degree seen from a uniformly random edge end.
    pub fn size_biased(&self) -> Result<Self> {
        if self.mean <= 0.0 {
            return Err(Error::BadParameter("size-biasing needs a positive mean".into()));
        }
        let atoms = self.atoms.iter().filter(|a| a.0 > 0).map(|&(v, p)| (v, v as f64 * p / self.mean)).collect();
        Ok(Self::from_weights(atoms, 0.0))
    }

    /// Inverse-CDF draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= u);
        self.atoms[i.min(self.atoms.len() - 1)].0
    }
}

pub fn dist_fixed(c: u32) -> DegreeDist {
    DegreeDist::fixed(c)
}

pub fn dist_table(pairs: &[(u32, f64)]) -> Result<DegreeDist> {
    DegreeDist::table(pairs)
}

pub fn dist_poisson(mean: f64, tol: f64) -> Result<DegreeDist> {
    DegreeDist::poisson(mean, tol)
}

pub fn dist_powerlaw(alpha: f64, kmin: u32, tol: f64) -> Result<DegreeDist> {
    DegreeDist::powerlaw(alpha, kmin, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fixed_is_monomial() {
        let d = DegreeDist::fixed(3);
        assert_eq!(d.atoms(), &[(3, 1.0)]);
        for x in [0.0, 0.3, 1.0] {
            assert_abs_diff_eq!(d.pgf(x).unwrap(), x * x * x, epsilon = 1e-15);
        }
    }

    #[test]
    fn table_by_hand() {
        let d = DegreeDist::table(&[(3, 0.5), (4, 0.5)]).unwrap();
        assert_abs_diff_eq!(d.pgf(0.5).unwrap(), 0.09375, epsilon = 1e-15);
        assert_abs_diff_eq!(d.pgf_d1(1.0).unwrap(), 3.5, epsilon = 1e-12);
        // D''(1) = E[d(d−1)] = (6 + 12)/2
        assert_abs_diff_eq!(d.pgf_d2(1.0).unwrap(), 9.0, epsilon = 1e-12);
    }

    #[test]
    fn table_rejects() {
        assert!(DegreeDist::table(&[]).is_err());
        assert!(DegreeDist::table(&[(3, 0.5), (3, 0.5)]).is_err());
        assert!(DegreeDist::table(&[(3, 0.5), (4, 0.4)]).is_err());
        assert!(DegreeDist::table(&[(3, 1.5), (4, -0.5)]).is_err());
    }

    #[test]
    fn domain_errors() {
        let d = DegreeDist::fixed(3);
        assert_eq!(d.pgf(1.5), Err(Error::OutOfDomain(1.5)));
        assert!(d.pgf_d1(-0.1).is_err());
        assert!(d.pgf_d2(f64::NAN).is_err());
    }

    #[test]
    fn gcds() {
        assert_eq!(DegreeDist::table(&[(3, 0.5), (4, 0.5)]).unwrap().gcd_support(), 1);
        assert_eq!(DegreeDist::fixed(4).gcd_support(), 4);
        assert_eq!(DegreeDist::table(&[(6, 0.5), (9, 0.5)]).unwrap().gcd_support(), 3);
        assert_eq!(DegreeDist::fixed(0).gcd_support(), 0);
    }

    #[test]
    fn size_bias() {
        let d = DegreeDist::table(&[(1, 0.5), (3, 0.5)]).unwrap();
        let s = d.size_biased().unwrap();
        assert_eq!(s.atoms().len(), 2);
        assert_abs_diff_eq!(s.atoms()[0].1, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(s.atoms()[1].1, 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(s.mean(), d.second_moment() / d.mean(), epsilon = 1e-12);
        assert_eq!(DegreeDist::fixed(5).size_biased().unwrap(), DegreeDist::fixed(5));
        assert!(DegreeDist::fixed(0).size_biased().is_err());
    }

    #[test]
    fn poisson_matches_closed_form() {
        let d = DegreeDist::poisson(6.5, 1e-12).unwrap();
        assert!(d.tail_mass_dropped() < 1e-12);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(d.pgf(x).unwrap(), (6.5 * (x - 1.0)).exp(), epsilon = 1e-12);
            assert_abs_diff_eq!(d.pgf_d1(x).unwrap(), 6.5 * (6.5 * (x - 1.0)).exp(), epsilon = 1e-10);
        }
        assert_abs_diff_eq!(d.mean(), 6.5, epsilon = 1e-10);
    }

    #[test]
    fn poisson_cutoff_is_smallest() {
        let tol = 1e-9;
        let d = DegreeDist::poisson(2.5, tol).unwrap();
        let l = d.max_value() as i32;
        let pmf = |v: i32| (-2.5f64 + v as f64 * 2.5f64.ln() - (1..=v).map(|j| (j as f64).ln()).sum::<f64>()).exp();
        let tail_after = |c: i32| (c + 1..200).map(pmf).sum::<f64>();
        assert!(tail_after(l) < tol);
        assert!(tail_after(l - 1) >= tol);
    }

    // ζ(s) by direct summation with an Euler–Maclaurin remainder.
    fn zeta(s: f64) -> f64 {
        let n = 1000.0f64;
        let head: f64 = (1..1000).map(|j| (j as f64).powf(-s)).sum();
        head + n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s) + s / 12.0 * n.powf(-s - 1.0)
    }

    // Polylogarithm Li_s(x) for x ≤ 1.
    fn polylog(s: f64, x: f64) -> f64 {
        if x == 1.0 {
            return zeta(s);
        }
        let mut acc = 0.0;
        let mut xp = x;
        for j in 1..200_000 {
            let t = xp * (j as f64).powf(-s);
            acc += t;
            if t.abs() < 1e-20 {
                break;
            }
            xp *= x;
        }
        acc
    }

    #[test]
    fn powerlaw_matches_polylog() {
        let alpha = 3.5;
        let d = DegreeDist::powerlaw(alpha, 1, 1e-10).unwrap();
        let z = zeta(alpha);
        assert_abs_diff_eq!(d.mean(), zeta(alpha - 1.0) / z, epsilon = 1e-5);
        for i in 0..=100 {
            let x = i as f64 / 100.0;
            assert_abs_diff_eq!(d.pgf(x).unwrap(), polylog(alpha, x) / z, epsilon = 1e-9);
        }
    }

    #[test]
    fn powerlaw_rejects() {
        assert!(DegreeDist::powerlaw(3.0, 1, 1e-12).is_err());
        assert!(DegreeDist::powerlaw(3.5, 0, 1e-12).is_err());
        assert!(DegreeDist::powerlaw(3.5, 1, 1e-3).is_err());
        assert!(DegreeDist::poisson(0.0, 1e-12).is_err());
    }

    #[test]
    fn sampling_frequencies() {
        let d = DegreeDist::table(&[(3, 0.2), (5, 0.3), (8, 0.5)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000usize;
        let mut counts = [0usize; 9];
        let mut sum = 0u64;
        for _ in 0..n {
            let v = d.sample(&mut rng);
            counts[v as usize] += 1;
            sum += v as u64;
        }
        let var = d.second_moment() - d.mean().powi(2);
        let mean = sum as f64 / n as f64;
        assert!((mean - d.mean()).abs() < 5.0 * (var / n as f64).sqrt());
        for &(v, p) in d.atoms() {
            let f = counts[v as usize] as f64 / n as f64;
            assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt());
        }
        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        assert!((0..100).all(|_| d.sample(&mut a) == d.sample(&mut b)));
        assert!((0..100).all(|_| DegreeDist::fixed(7).sample(&mut a) == 7));
    }
}
