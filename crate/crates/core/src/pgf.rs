//! Probability mass functions on the positive integers and their
//! generating functions, represented as ratios of real polynomials.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly;

/// Tolerance for pmf masses summing to one and for pgf normalization.
pub const PMF_SUM_TOL: f64 = 1e-12;

/// Denominator magnitudes below this count as evaluation at a pole.
pub const POLE_TOL: f64 = 1e-14;

/// A finite probability mass function on strictly positive integers.
///
/// Support points are strictly increasing and every stored mass is positive;
/// zero-mass entries are dropped at construction so the largest support point
/// always carries positive mass.
#[derive(Debug, Clone, PartialEq)]
pub struct FinitePmf {
    points: Vec<(u32, f64)>,
}

impl FinitePmf {
    /// Build from `(support, mass)` pairs.
    ///
    /// Pairs may be given in any order. Zero masses are trimmed; negative
    /// masses, duplicate or zero support points, and masses not summing to
    /// one (within [`PMF_SUM_TOL`]) are rejected.
    pub fn new(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut points: Vec<(u32, f64)> = Vec::new();
        for (k, m) in pairs {
            if !m.is_finite() || m < 0.0 {
                return Err(Error::InvalidPmf(format!("mass {m} at support {k}")));
            }
            if m == 0.0 {
                continue;
            }
            if k == 0 {
                return Err(Error::InvalidPmf(format!(
                    "support must start at 1, got mass {m} at 0"
                )));
            }
            points.push((k, m));
        }
        if points.is_empty() {
            return Err(Error::InvalidPmf("no positive masses".into()));
        }
        points.sort_by_key(|&(k, _)| k);
        for w in points.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidPmf(format!("duplicate support point {}", w[0].0)));
            }
        }
        let sum: f64 = points.iter().map(|&(_, m)| m).sum();
        if (sum - 1.0).abs() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!(
                "masses sum to {sum}, expected 1 within {PMF_SUM_TOL:e}"
            )));
        }
        Ok(Self { points })
    }

    /// The single-point pmf at `k` (deterministic value).
    pub fn deterministic(k: u32) -> Result<Self> {
        Self::new([(k, 1.0)])
    }

    /// `(support, mass)` pairs in increasing support order.
    pub fn points(&self) -> &[(u32, f64)] {
        &self.points
    }

    /// Largest support point (carries positive mass by construction).
    pub fn max_support(&self) -> u32 {
        self.points.last().expect("non-empty").0
    }

    /// Mass at `k`, zero off support.
    pub fn mass_at(&self, k: u32) -> f64 {
        self.points
            .binary_search_by_key(&k, |&(p, _)| p)
            .map(|i| self.points[i].1)
            .unwrap_or(0.0)
    }

    /// Mean `sum k * m_k`.
    pub fn mean(&self) -> f64 {
        self.points.iter().map(|&(k, m)| k as f64 * m).sum()
    }

    /// The pgf `sum m_k z^k` as a rational function with unit denominator.
    pub fn pgf(&self) -> RationalPgf {
        let deg = self.max_support() as usize;
        let mut num = vec![0.0; deg + 1];
        for &(k, m) in &self.points {
            num[k as usize] = m;
        }
        RationalPgf { num, den: vec![1.0] }
    }
}

/// A probability generating function as a ratio of real polynomials,
/// analytic on the closed unit disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalPgf {
    num: Vec<f64>,
    den: Vec<f64>,
}

impl RationalPgf {
    /// Build from ascending numerator and denominator coefficients.
    ///
    /// Validates that the value at `z = 1` is one (within [`PMF_SUM_TOL`])
    /// and that no denominator root lies in the closed unit disk, so the
    /// function is analytic wherever a pgf must be.
    pub fn new(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        let mut num = num;
        let mut den = den;
        poly::trim_leading_zeros(&mut num);
        poly::trim_leading_zeros(&mut den);
        if den.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidPmf("zero denominator".into()));
        }
        let f = Self { num, den };
        let at_one = f.eval(Complex64::new(1.0, 0.0))?;
        if (at_one - 1.0).norm() > PMF_SUM_TOL {
            return Err(Error::InvalidPmf(format!(
                "pgf(1) = {at_one}, expected 1 within {PMF_SUM_TOL:e}"
            )));
        }
        if f.den.len() > 1 {
            let roots = poly::all_roots(&f.den)
                .ok_or_else(|| Error::InvalidPmf("denominator root finding failed".into()))?;
            for r in roots {
                if r.norm() <= 1.0 + 1e-12 {
                    return Err(Error::InvalidPmf(format!(
                        "denominator root {r} inside the closed unit disk"
                    )));
                }
            }
        }
        Ok(f)
    }

    /// The geometric pgf `p z / (1 - (1-p) z)` with parameter `p` in (0, 1].
    pub fn geometric(p: f64) -> Result<Self> {
        if !(0.0 < p && p <= 1.0) {
            return Err(Error::InvalidPmf(format!("geometric parameter {p} outside (0, 1]")));
        }
        Self::new(vec![0.0, p], vec![1.0, -(1.0 - p)])
    }

    /// Ascending numerator coefficients.
    pub fn numerator(&self) -> &[f64] {
        &self.num
    }

    /// Ascending denominator coefficients.
    pub fn denominator(&self) -> &[f64] {
        &self.den
    }

    /// Evaluate at a complex argument via Horner on both polynomials.
    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        let d = poly::eval(&self.den, z);
        if d.norm() < POLE_TOL {
            return Err(Error::PoleAtArgument { z, denom_mag: d.norm() });
        }
        Ok(poly::eval(&self.num, z) / d)
    }

    /// Complex derivative at `z` (quotient rule).
    pub fn eval_deriv(&self, z: Complex64) -> Result<Complex64> {
        let (n, dn) = poly::eval_with_deriv(&self.num, z);
        let (d, dd) = poly::eval_with_deriv(&self.den, z);
        if d.norm() < POLE_TOL {
            return Err(Error::PoleAtArgument { z, denom_mag: d.norm() });
        }
        Ok((dn * d - n * dd) / (d * d))
    }

    /// Mean of the underlying distribution: the derivative at `z = 1`.
    pub fn mean(&self) -> f64 {
        let n = poly::eval_real(&self.num, 1.0);
        let d = poly::eval_real(&self.den, 1.0);
        let dn = poly::deriv_real(&self.num, 1.0);
        let dd = poly::deriv_real(&self.den, 1.0);
        (dn * d - n * dd) / (d * d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn finite_pmf_normalization_and_trimming() {
        let pmf = FinitePmf::new([(1, 0.4), (2, 0.3), (3, 0.3), (5, 0.0)]).unwrap();
        assert_eq!(pmf.max_support(), 3);
        assert_eq!(pmf.mass_at(2), 0.3);
        assert_eq!(pmf.mass_at(4), 0.0);
        assert!((pmf.mean() - 1.9).abs() < 1e-12);
    }

    #[test]
    fn finite_pmf_rejects_bad_input() {
        assert!(FinitePmf::new([(1, 0.5), (2, 0.6)]).is_err());
        assert!(FinitePmf::new([(0, 1.0)]).is_err());
        assert!(FinitePmf::new([(1, -0.5), (2, 1.5)]).is_err());
        assert!(FinitePmf::new([(1, 0.5), (1, 0.5)]).is_err());
        assert!(FinitePmf::new(std::iter::empty()).is_err());
    }

    #[test]
    fn pgf_normalization_at_one() {
        let g = FinitePmf::new([(1, 0.4), (2, 0.3), (3, 0.3)]).unwrap().pgf();
        assert!((g.eval(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-12);
        let y = RationalPgf::geometric(0.4).unwrap();
        assert!((y.eval(c(1.0, 0.0)).unwrap() - 1.0).norm() < 1e-12);
    }

    #[test]
    fn eval_matches_direct_sum() {
        // G(z) = 0.4z + 0.3z^2 + 0.3z^3 at z = 0.5 is 0.2 + 0.075 + 0.0375.
        let g = FinitePmf::new([(1, 0.4), (2, 0.3), (3, 0.3)]).unwrap().pgf();
        let v = g.eval(c(0.5, 0.0)).unwrap();
        assert!((v - 0.3125).norm() < 1e-15);
    }

    #[test]
    fn means_from_quotient_rule() {
        let g = FinitePmf::new([(1, 0.4), (2, 0.3), (3, 0.3)]).unwrap().pgf();
        assert!((g.mean() - 1.9).abs() < 1e-12);
        let y = FinitePmf::new([(1, 0.4), (2, 0.6)]).unwrap().pgf();
        assert!((y.mean() - 1.6).abs() < 1e-12);
        let geo = RationalPgf::geometric(0.4).unwrap();
        assert!((geo.mean() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn pole_detection() {
        let geo = RationalPgf::geometric(0.2).unwrap();
        // Pole of 0.2z/(1-0.8z) at z = 1.25.
        let err = geo.eval(c(1.25, 0.0)).unwrap_err();
        assert!(matches!(err, Error::PoleAtArgument { .. }));
    }

    #[test]
    fn rejects_pole_inside_unit_disk() {
        // z/(1 - 0.5/0.5... ) denominator root at 0.5: pgf(1) = 1 forced via numerator.
        // num/den with den root at 0.5: den = 1 - 2z, num chosen so f(1) = 1: num = -1z.
        let err = RationalPgf::new(vec![0.0, -1.0], vec![1.0, -2.0]).unwrap_err();
        assert!(matches!(err, Error::InvalidPmf(_)));
    }

    #[test]
    fn rejects_unnormalized_pgf() {
        assert!(RationalPgf::new(vec![0.0, 0.9], vec![1.0]).is_err());
    }

    #[test]
    fn geometric_param_bounds() {
        assert!(RationalPgf::geometric(0.0).is_err());
        assert!(RationalPgf::geometric(1.2).is_err());
        assert!(RationalPgf::geometric(1.0).is_ok());
    }
}
