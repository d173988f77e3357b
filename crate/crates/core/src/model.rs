//! Full parameterization of the discrete-time batch-arrival,
//! batch-service queue, with stability validation.
//!
//! Customers arrive in batches of size `X` (pmf `g`), the inter-arrival
//! time between batches is i.i.d. with pmf `a_n` on `n >= 1`, service of a
//! batch takes a geometric number of slots with parameter `mu`, and at each
//! service completion the server removes `min(Y, queue)` customers where
//! the capacity `Y` is drawn fresh. Stability requires the traffic
//! intensity `rho = lambda * g_bar / (mu * y_bar)` to stay below one.

use crate::error::{Error, Result};
use crate::pgf::{FinitePmf, RationalPgf};

/// Inter-arrival time distribution of batches, on `n >= 1` slots.
#[derive(Debug, Clone, PartialEq)]
pub enum InterArrivalDist {
    /// Finite-support pmf; a single support point models deterministic
    /// inter-arrival times.
    Finite(FinitePmf),
    /// Geometric with per-slot arrival probability `lambda`:
    /// `a_n = (1-lambda)^(n-1) lambda`, pgf `lambda z / (1 - (1-lambda) z)`.
    Geometric(f64),
}

impl InterArrivalDist {
    /// Deterministic inter-arrival time of `slots` slots.
    pub fn deterministic(slots: u32) -> Result<Self> {
        Ok(Self::Finite(FinitePmf::deterministic(slots)?))
    }

    /// Geometric inter-arrival with parameter `lambda` in (0, 1).
    pub fn geometric(lambda: f64) -> Result<Self> {
        if !(0.0 < lambda && lambda < 1.0) {
            return Err(Error::InvalidPmf(format!("geometric lambda {lambda} outside (0, 1)")));
        }
        Ok(Self::Geometric(lambda))
    }

    /// Mean inter-arrival time in slots.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Finite(pmf) => pmf.mean(),
            Self::Geometric(lambda) => 1.0 / lambda,
        }
    }

    /// The pgf `A(z)`.
    pub fn pgf(&self) -> RationalPgf {
        match self {
            Self::Finite(pmf) => pmf.pgf(),
            Self::Geometric(lambda) => {
                RationalPgf::geometric(*lambda).expect("validated at construction")
            }
        }
    }
}

/// Serving-capacity distribution `Y`.
#[derive(Debug, Clone, PartialEq)]
pub enum CapacityDist {
    Finite(FinitePmf),
    /// Geometric with parameter `alpha` in (0, 1): pgf `alpha z / (1 - (1-alpha) z)`,
    /// mean `1/alpha`. The one infinite-support family supported.
    Geometric(f64),
}

impl CapacityDist {
    /// The server always removes up to exactly one customer.
    pub fn unit() -> Self {
        Self::Finite(FinitePmf::deterministic(1).expect("valid"))
    }

    pub fn geometric(alpha: f64) -> Result<Self> {
        if !(0.0 < alpha && alpha < 1.0) {
            return Err(Error::InvalidPmf(format!("geometric alpha {alpha} outside (0, 1)")));
        }
        Ok(Self::Geometric(alpha))
    }

    /// Mean capacity `y_bar`.
    pub fn mean(&self) -> f64 {
        match self {
            Self::Finite(pmf) => pmf.mean(),
            Self::Geometric(alpha) => 1.0 / alpha,
        }
    }

    /// The pgf `Y(z)`.
    pub fn pgf(&self) -> RationalPgf {
        match self {
            Self::Finite(pmf) => pmf.pgf(),
            Self::Geometric(alpha) => {
                RationalPgf::geometric(*alpha).expect("validated at construction")
            }
        }
    }

    /// True when `Y` is the unit capacity, i.e. `Y(z) = z`.
    pub fn is_unit(&self) -> bool {
        matches!(self, Self::Finite(pmf) if pmf.points() == [(1, 1.0)])
    }
}

/// A validated, stable queue parameterization with derived quantities.
#[derive(Debug, Clone)]
pub struct QueueModel {
    arrival: InterArrivalDist,
    batch: FinitePmf,
    mu: f64,
    capacity: CapacityDist,
    lambda: f64,
    g_bar: f64,
    y_bar: f64,
    rho: f64,
}

impl QueueModel {
    /// Assemble and validate a model. The batch-arrival rate is derived as
    /// `1 / E[A]`; stability `rho < 1` is enforced.
    pub fn build(
        arrival: InterArrivalDist,
        batch: FinitePmf,
        mu: f64,
        capacity: CapacityDist,
    ) -> Result<Self> {
        let lambda = 1.0 / arrival.mean();
        Self::build_with_rate(arrival, batch, mu, capacity, lambda)
    }

    /// Assemble a model using a supplied batch-arrival rate in place of
    /// `1 / E[A]`. The rate enters only the normalization of the mixture
    /// constants (and hence `rho`); the characteristic equation depends on
    /// the inter-arrival law itself.
    pub fn build_with_rate(
        arrival: InterArrivalDist,
        batch: FinitePmf,
        mu: f64,
        capacity: CapacityDist,
        lambda: f64,
    ) -> Result<Self> {
        if !(0.0 < mu && mu < 1.0) {
            return Err(Error::InvalidPmf(format!("mu {mu} outside (0, 1)")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidPmf(format!("arrival rate {lambda} not positive")));
        }
        let g_bar = batch.mean();
        let y_bar = capacity.mean();
        let rho = lambda * g_bar / (mu * y_bar);
        if rho >= 1.0 {
            return Err(Error::Unstable { rho });
        }
        Ok(Self { arrival, batch, mu, capacity, lambda, g_bar, y_bar, rho })
    }

    pub fn arrival(&self) -> &InterArrivalDist {
        &self.arrival
    }

    /// Arrival batch-size pmf `g`.
    pub fn batch(&self) -> &FinitePmf {
        &self.batch
    }

    /// Per-slot service completion probability.
    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn capacity(&self) -> &CapacityDist {
        &self.capacity
    }

    /// Batch-arrival rate per slot.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Mean arrival batch size.
    pub fn g_bar(&self) -> f64 {
        self.g_bar
    }

    /// Mean serving capacity.
    pub fn y_bar(&self) -> f64 {
        self.y_bar
    }

    /// Traffic intensity `lambda * g_bar / (mu * y_bar)`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    /// Maximum arrival batch size `b`; `g_b > 0` by pmf construction.
    pub fn b(&self) -> u32 {
        self.batch.max_support()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pmf(pairs: &[(u32, f64)]) -> FinitePmf {
        FinitePmf::new(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn worked_example_derived_quantities() {
        let m = QueueModel::build(
            InterArrivalDist::geometric(0.2).unwrap(),
            pmf(&[(1, 0.4), (2, 0.3), (3, 0.3)]),
            0.5,
            CapacityDist::Finite(pmf(&[(1, 0.4), (2, 0.6)])),
        )
        .unwrap();
        assert!((m.rho() - 0.475).abs() < 1e-12);
        assert!((m.g_bar() - 1.9).abs() < 1e-12);
        assert!((m.y_bar() - 1.6).abs() < 1e-12);
        assert_eq!(m.b(), 3);
    }

    #[test]
    fn deterministic_heavy_batches() {
        let m = QueueModel::build(
            InterArrivalDist::deterministic(10).unwrap(),
            pmf(&[(1, 0.2), (5, 0.3), (10, 0.5)]),
            0.9,
            CapacityDist::unit(),
        )
        .unwrap();
        assert!((m.rho() - 0.7444).abs() < 5e-5);
        assert!((m.g_bar() - 6.7).abs() < 1e-12);
        assert_eq!(m.b(), 10);
        assert!((m.lambda() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn single_customer_batches() {
        let m = QueueModel::build(
            InterArrivalDist::deterministic(5).unwrap(),
            pmf(&[(1, 1.0)]),
            0.5,
            CapacityDist::unit(),
        )
        .unwrap();
        assert!((m.rho() - 0.4).abs() < 1e-12);
        assert!((m.g_bar() - 1.0).abs() < 1e-12);
        assert!((m.y_bar() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rho_recomputed_from_raw_parts() {
        let arrival = InterArrivalDist::geometric(0.25).unwrap();
        let batch = pmf(&[(1, 0.5), (4, 0.5)]);
        let cap = CapacityDist::geometric(0.5).unwrap();
        let m = QueueModel::build(arrival.clone(), batch.clone(), 0.7, cap.clone()).unwrap();
        let expect = (1.0 / arrival.mean()) * batch.mean() / (0.7 * cap.mean());
        assert_eq!(m.rho(), expect);
    }

    #[test]
    fn unstable_rejected_with_rho() {
        let err = QueueModel::build(
            InterArrivalDist::geometric(0.9).unwrap(),
            pmf(&[(3, 1.0)]),
            0.5,
            CapacityDist::unit(),
        )
        .unwrap_err();
        match err {
            Error::Unstable { rho } => assert!(rho >= 1.0),
            other => panic!("expected Unstable, got {other}"),
        }
    }

    #[test]
    fn batch_trailing_zeros_trimmed_for_b() {
        let m = QueueModel::build(
            InterArrivalDist::geometric(0.1).unwrap(),
            pmf(&[(1, 0.5), (2, 0.5), (3, 0.0)]),
            0.5,
            CapacityDist::unit(),
        )
        .unwrap();
        assert_eq!(m.b(), 2);
    }

    #[test]
    fn mu_bounds_enforced() {
        let batch = pmf(&[(1, 1.0)]);
        for mu in [0.0, 1.0, -0.2, 1.5] {
            assert!(QueueModel::build(
                InterArrivalDist::geometric(0.2).unwrap(),
                batch.clone(),
                mu,
                CapacityDist::unit(),
            )
            .is_err());
        }
    }
}
