//! The continuous-time batch queue with exponential service, reached as
//! the fine-slot limit of the discrete model.
//!
//! The characteristic equation keeps its shape with the inter-arrival pgf
//! replaced by the Laplace-Stieltjes transform:
//!
//! ```text
//! A*(mu_hat (1 - Y(s))) * sum_{i=1..b} g_i s^(b-i)  -  s^b  =  0
//! ```
//!
//! Roots are bracketed by solving a discretized model (slot width `Delta`)
//! with the discrete machinery, then Newton-polished on the exact transform
//! equation. The mixture constants solve the same linear system with the
//! continuous arrival rate; the slot width cancels out of the final
//! distributions.

use num_complex::Complex64;

use crate::chareq;
use crate::error::{Error, Result};
use crate::model::{CapacityDist, InterArrivalDist, QueueModel};
use crate::pgf::FinitePmf;
use crate::steady::{self, EpochDist, SteadySolution};

/// Slot width used to bracket the roots before polishing.
pub const BRACKET_DELTA: f64 = 1e-3;

/// Truncation level for discretized inter-arrival tails.
pub const DISCRETIZE_TAIL_TOL: f64 = 1e-12;

/// Cap on the discretized inter-arrival support when the slot width is
/// chosen internally for root bracketing. Beyond roughly this many slots
/// the binomial-style coefficients of `A(1 - mu + mu Y(s))` underflow and
/// the cleared polynomial stops being representable; the Newton polish on
/// the exact transform equation recovers full accuracy from the coarse
/// starting points.
const BRACKET_SUPPORT_CAP: u32 = 64;

/// Continuous inter-arrival laws, closed under the transforms the solver
/// needs.
#[derive(Debug, Clone, PartialEq)]
pub enum CtInterArrival {
    /// Exponential with the given rate per unit time.
    Exponential { rate: f64 },
    /// Every inter-arrival takes exactly `time` units.
    Deterministic { time: f64 },
    /// Erlang: `stages` exponential stages each of the given rate.
    Erlang { stages: u32, rate: f64 },
}

impl CtInterArrival {
    pub fn mean(&self) -> f64 {
        match *self {
            Self::Exponential { rate } => 1.0 / rate,
            Self::Deterministic { time } => time,
            Self::Erlang { stages, rate } => stages as f64 / rate,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Self::Exponential { rate } => rate > 0.0 && rate.is_finite(),
            Self::Deterministic { time } => time > 0.0 && time.is_finite(),
            Self::Erlang { stages, rate } => stages >= 1 && rate > 0.0 && rate.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCtParameter(format!("{self:?}")))
        }
    }

    /// The Laplace-Stieltjes transform at a complex argument.
    pub fn lst(&self, theta: Complex64) -> Complex64 {
        match *self {
            Self::Exponential { rate } => rate / (theta + rate),
            Self::Deterministic { time } => (-time * theta).exp(),
            Self::Erlang { stages, rate } => (rate / (theta + rate)).powu(stages),
        }
    }

    /// Derivative of the transform with respect to its argument.
    pub fn lst_deriv(&self, theta: Complex64) -> Complex64 {
        match *self {
            Self::Exponential { rate } => -rate / ((theta + rate) * (theta + rate)),
            Self::Deterministic { time } => -time * (-time * theta).exp(),
            Self::Erlang { stages, rate } => {
                -(stages as f64) * rate.powi(stages as i32)
                    / (theta + rate).powu(stages + 1)
            }
        }
    }

    /// Cumulative distribution function at `t >= 0`.
    fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Self::Exponential { rate } => 1.0 - (-rate * t).exp(),
            Self::Deterministic { time } => {
                if t >= time {
                    1.0
                } else {
                    0.0
                }
            }
            Self::Erlang { stages, rate } => {
                let x = rate * t;
                let mut term = 1.0;
                let mut partial = 1.0;
                for j in 1..stages {
                    term *= x / j as f64;
                    partial += term;
                }
                1.0 - (-x).exp() * partial
            }
        }
    }

    /// Discretize with slot width `delta`: `a_n = P((n-1) delta < A <= n delta)`,
    /// truncated where the remaining tail mass drops below
    /// [`DISCRETIZE_TAIL_TOL`], then renormalized by the captured mass.
    pub fn discretize(&self, delta: f64) -> Result<InterArrivalDist> {
        match *self {
            // Exact: slot counts of an exponential are geometric, so no
            // truncation is needed and the pgf stays rational.
            Self::Exponential { rate } => {
                InterArrivalDist::geometric(1.0 - (-rate * delta).exp())
            }
            Self::Deterministic { time } => {
                let slots = (time / delta).round().max(1.0) as u32;
                InterArrivalDist::deterministic(slots)
            }
            Self::Erlang { .. } => {
                let mut pairs = Vec::new();
                let mut prev = 0.0;
                let mut n = 1u32;
                loop {
                    let cur = self.cdf(n as f64 * delta);
                    let mass = cur - prev;
                    if mass > 0.0 {
                        pairs.push((n, mass));
                    }
                    prev = cur;
                    if 1.0 - cur < DISCRETIZE_TAIL_TOL {
                        break;
                    }
                    n += 1;
                    if n > 20_000_000 {
                        return Err(Error::InvalidCtParameter(format!(
                            "discretization of {self:?} at delta={delta} does not terminate"
                        )));
                    }
                }
                let total: f64 = pairs.iter().map(|&(_, m)| m).sum();
                Ok(InterArrivalDist::Finite(FinitePmf::new(
                    pairs.into_iter().map(|(k, m)| (k, m / total)),
                )?))
            }
        }
    }
}

/// A validated continuous-time model.
#[derive(Debug, Clone)]
pub struct CtModel {
    arrival: CtInterArrival,
    batch: FinitePmf,
    mu_hat: f64,
    capacity: CapacityDist,
    lambda_hat: f64,
    rho: f64,
}

impl CtModel {
    pub fn build(
        arrival: CtInterArrival,
        batch: FinitePmf,
        mu_hat: f64,
        capacity: CapacityDist,
    ) -> Result<Self> {
        arrival.validate()?;
        if !(mu_hat > 0.0 && mu_hat.is_finite()) {
            return Err(Error::InvalidCtParameter(format!("service rate {mu_hat}")));
        }
        let lambda_hat = 1.0 / arrival.mean();
        let rho = lambda_hat * batch.mean() / (mu_hat * capacity.mean());
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(Self { arrival, batch, mu_hat, capacity, lambda_hat, rho })
    }

    pub fn arrival(&self) -> &CtInterArrival {
        &self.arrival
    }

    pub fn batch(&self) -> &FinitePmf {
        &self.batch
    }

    pub fn mu_hat(&self) -> f64 {
        self.mu_hat
    }

    pub fn capacity(&self) -> &CapacityDist {
        &self.capacity
    }

    pub fn lambda_hat(&self) -> f64 {
        self.lambda_hat
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn b(&self) -> u32 {
        self.batch.max_support()
    }

    /// The discrete model on slots of width `delta` whose limit this model
    /// is: discretized arrivals, `mu = mu_hat * delta`, batch and capacity
    /// unchanged.
    pub fn discretize(&self, delta: f64) -> Result<QueueModel> {
        if !(delta > 0.0 && self.mu_hat * delta < 1.0) {
            return Err(Error::InvalidCtParameter(format!(
                "slot width {delta} incompatible with service rate {}",
                self.mu_hat
            )));
        }
        QueueModel::build(
            self.arrival.discretize(delta)?,
            self.batch.clone(),
            self.mu_hat * delta,
            self.capacity.clone(),
        )
    }

    /// Slot width for internal root bracketing: the nominal
    /// [`BRACKET_DELTA`] where the discretized pgf stays rational, and a
    /// coarser slot elsewhere so the discretized support stays within
    /// [`BRACKET_SUPPORT_CAP`] slots and the per-slot completion
    /// probability stays moderate (both keep the cleared polynomial's
    /// coefficients inside the representable range).
    fn bracket_delta(&self) -> f64 {
        match self.arrival {
            CtInterArrival::Exponential { .. } => BRACKET_DELTA,
            CtInterArrival::Deterministic { time } => {
                let slots = (3.0 * self.mu_hat * time).round().clamp(8.0, 64.0);
                time / slots
            }
            CtInterArrival::Erlang { .. } => {
                // Upper tail quantile at the truncation level, by doubling.
                let mut t = self.arrival.mean();
                while 1.0 - self.arrival.cdf(t) >= DISCRETIZE_TAIL_TOL {
                    t *= 2.0;
                }
                (0.5 / self.mu_hat).min(t / BRACKET_SUPPORT_CAP as f64)
            }
        }
    }
}

/// The continuous-time characteristic function
/// `A*(mu_hat (1 - Y(s))) Gamma(s) - s^b`.
pub fn ct_char_fn(model: &CtModel, s: Complex64) -> Result<Complex64> {
    let y = model.capacity.pgf().eval(s)?;
    let theta = model.mu_hat * (Complex64::new(1.0, 0.0) - y);
    let gamma: Complex64 =
        model.batch.points().iter().map(|&(i, g)| g * s.powu(model.b() - i)).sum();
    Ok(model.arrival.lst(theta) * gamma - s.powu(model.b()))
}

fn ct_char_deriv(model: &CtModel, s: Complex64) -> Result<Complex64> {
    let y_pgf = model.capacity.pgf();
    let y = y_pgf.eval(s)?;
    let dy = y_pgf.eval_deriv(s)?;
    let theta = model.mu_hat * (Complex64::new(1.0, 0.0) - y);
    let b = model.b();
    let mut gamma = Complex64::new(0.0, 0.0);
    let mut dgamma = Complex64::new(0.0, 0.0);
    for &(i, g) in model.batch.points() {
        gamma += g * s.powu(b - i);
        if b - i >= 1 {
            dgamma += g * (b - i) as f64 * s.powu(b - i - 1);
        }
    }
    Ok(model.arrival.lst_deriv(theta) * (-model.mu_hat * dy) * gamma
        + model.arrival.lst(theta) * dgamma
        - (b as f64) * s.powu(b - 1))
}

/// The `b` roots of the continuous-time characteristic equation inside the
/// unit circle: discrete roots as starting points, Newton on the exact
/// transform equation to finish.
pub fn ct_char_roots(model: &CtModel) -> Result<Vec<Complex64>> {
    let b = model.b() as usize;
    let mut delta = model.bracket_delta();
    let mut last_err = None;
    for _ in 0..4 {
        match try_roots_at(model, delta) {
            Ok(roots) => return Ok(roots),
            Err(e) => {
                last_err = Some(e);
                delta /= 4.0;
                if model.mu_hat * delta >= 1.0 {
                    break;
                }
            }
        }
    }
    Err(last_err.unwrap_or(Error::RootCountMismatch { expected: b, found: 0, moduli: vec![] }))
}

fn try_roots_at(model: &CtModel, delta: f64) -> Result<Vec<Complex64>> {
    let discrete = model.discretize(delta)?;
    let cs = chareq::find_interior_roots(&discrete)?;
    let mut roots: Vec<Complex64> = cs
        .interior_roots
        .iter()
        .map(|&start| polish_ct_root(model, start))
        .collect::<Result<_>>()?;

    let b = model.b() as usize;
    let mismatch = |found: usize, roots: &[Complex64]| Error::RootCountMismatch {
        expected: b,
        found,
        moduli: roots.iter().map(|r| r.norm()).collect(),
    };
    roots.retain(|r| r.norm() < 1.0 - chareq::INTERIOR_MARGIN);
    if roots.len() != b {
        return Err(mismatch(roots.len(), &roots));
    }
    for i in 0..b {
        for j in (i + 1)..b {
            let d = (roots[i] - roots[j]).norm();
            if d < chareq::SEPARATION_TOL {
                return Err(Error::RepeatedRoot { root: roots[i], separation: d });
            }
        }
    }
    for &r in &roots {
        if ct_char_fn(model, r)?.norm() > chareq::RESIDUAL_TOL {
            return Err(mismatch(roots.len(), &roots));
        }
    }
    symmetrize(&mut roots);
    roots.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
    Ok(roots)
}

fn polish_ct_root(model: &CtModel, start: Complex64) -> Result<Complex64> {
    let mut s = start;
    for _ in 0..200 {
        let f = ct_char_fn(model, s)?;
        let df = ct_char_deriv(model, s)?;
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        s -= step;
        if !s.re.is_finite() || !s.im.is_finite() || s.norm() > 1.5 {
            return Ok(start);
        }
        if step.norm() < 1e-14 {
            break;
        }
    }
    Ok(s)
}

fn symmetrize(roots: &mut [Complex64]) {
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        if roots[i].im.abs() < 1e-9 {
            roots[i].im = 0.0;
            used[i] = true;
            continue;
        }
        for j in (i + 1)..roots.len() {
            if !used[j] && (roots[i].conj() - roots[j]).norm() < 1e-9 {
                let re = 0.5 * (roots[i].re + roots[j].re);
                let im = 0.5 * (roots[i].im - roots[j].im);
                roots[i] = Complex64::new(re, im);
                roots[j] = Complex64::new(re, -im);
                used[i] = true;
                used[j] = true;
                break;
            }
        }
    }
}

/// Pre-arrival and arbitrary-epoch distributions of the continuous-time
/// queue. The constants solve the discrete system with the continuous
/// arrival rate; the distributions are
///
/// ```text
/// p_n^- = (1/lambda_hat) sum_j c_j r_j^n
/// p_n   = sum_j c_j (G(1/r_j) - 1) / (mu_hat (1 - Y(r_j))) r_j^n,  n >= 1
/// p_0   = 1 - sum_j c_j (sum_i g_i r_j^(1-i) - r_j) / (mu_hat (1-r_j)(1-Y(r_j)))
/// ```
pub fn ct_distributions(model: &CtModel) -> Result<(EpochDist, EpochDist)> {
    let sol = ct_solution(model)?;
    Ok((steady::pre_arrival_dist(&sol), steady::arbitrary_dist(&sol)))
}

/// Full continuous-time solution in the same shape as the discrete one.
pub fn ct_solution(model: &CtModel) -> Result<SteadySolution> {
    let roots = ct_char_roots(model)?;
    let one = Complex64::new(1.0, 0.0);
    let lambda_hat = model.lambda_hat;
    let (constants, condition_estimate) = steady::constants_for_roots(&roots, lambda_hat)?;

    let y_pgf = model.capacity.pgf();
    let mut coeffs_k = Vec::with_capacity(roots.len());
    for (&r, &c) in roots.iter().zip(&constants) {
        let y = y_pgf.eval(r)?;
        let g_at_inv: Complex64 =
            model.batch.points().iter().map(|&(i, g)| g * r.powi(-(i as i32))).sum();
        coeffs_k.push(c * (g_at_inv - one) / (model.mu_hat * (one - y)));
    }
    let p0 = 1.0
        - roots
            .iter()
            .zip(&coeffs_k)
            .map(|(&r, &k)| k * r / (one - r))
            .sum::<Complex64>()
            .re;
    let tail_rate = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(SteadySolution::from_parts(
        roots,
        constants,
        coeffs_k,
        lambda_hat,
        p0,
        tail_rate,
        condition_estimate,
        ct_pseudo_model(model)?,
    ))
}

/// A stand-in discrete model recorded on the continuous solution so shared
/// accessors (batch pmf, capacity) keep working; the coarse bracketing
/// discretization is good enough for that purpose. The solution's own rate
/// stays the continuous `lambda_hat`.
fn ct_pseudo_model(model: &CtModel) -> Result<QueueModel> {
    model.discretize(model.bracket_delta())
}
