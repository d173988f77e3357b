//! Slot-accurate Monte-Carlo simulation of the queue, for validating the
//! analytic solver against an implementation that shares none of its code.
//!
//! Each slot `[k, k+1)` runs in early-arrival order: observe the queue at
//! the boundary, admit a batch if the inter-arrival countdown hit zero
//! (observing the pre-arrival state first), then resolve a potential
//! service completion at the slot end. A completion fires with probability
//! `mu` and removes `min(Y, queue)` customers with `Y` drawn fresh, which
//! is a no-op on an empty queue.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{CapacityDist, InterArrivalDist, QueueModel};
use crate::pgf::FinitePmf;
use crate::steady::{EpochDist, EpochKind};

/// Number of batches used for batch-means confidence intervals.
/// Queue-length samples at nearby slots are correlated, so per-bin
/// half-widths come from the spread of per-batch proportions rather than
/// the binomial formula.
const MEANS_BATCHES: usize = 64;

/// Simulation run parameters.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    /// Total slots simulated, including warmup.
    pub slots: u64,
    /// Leading slots discarded before recording.
    pub warmup: u64,
    /// RNG seed; a fixed seed replays bit-identically.
    pub seed: u64,
    /// Queue lengths at or above this land in the overflow bucket.
    pub histogram_cap: usize,
}

impl SimConfig {
    pub fn new(slots: u64, seed: u64) -> Self {
        Self { slots, warmup: 10_000, seed, histogram_cap: 512 }
    }

    /// Default warmup: `10^4` slots or `20 / (1 - tail_rate)`, whichever
    /// is larger.
    pub fn default_warmup(tail_rate: f64) -> u64 {
        let mixing = if tail_rate < 1.0 { 20.0 / (1.0 - tail_rate) } else { f64::INFINITY };
        (mixing.min(1e9) as u64).max(10_000)
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_histogram_cap(mut self, cap: usize) -> Self {
        self.histogram_cap = cap.max(1);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.warmup >= self.slots {
            return Err(Error::InvalidPmf(format!(
                "warmup {} must be below slot count {}",
                self.warmup, self.slots
            )));
        }
        Ok(())
    }
}

/// An observed queue-length histogram with batch-means error estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalDist {
    kind: EpochKind,
    /// Counts per queue length; the final bin collects everything at or
    /// above the histogram cap.
    counts: Vec<u64>,
    total: u64,
    /// Per-batch counts, row per batch, used for the half-widths.
    batch_counts: Vec<Vec<u64>>,
}

impl EmpiricalDist {
    pub fn kind(&self) -> EpochKind {
        self.kind
    }

    /// Counts per bin; the last bin is the overflow bucket.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of ordinary (non-overflow) bins.
    pub fn cap(&self) -> usize {
        self.counts.len() - 1
    }

    /// Observed proportion in bin `n`.
    pub fn prob(&self, n: usize) -> f64 {
        self.counts[n] as f64 / self.total as f64
    }

    /// Mass that landed in the overflow bucket.
    pub fn overflow_prob(&self) -> f64 {
        self.prob(self.counts.len() - 1)
    }

    /// 95% confidence half-width of `prob(n)` from batch means.
    pub fn half_width_95(&self, n: usize) -> f64 {
        1.96 * self.std_error(n)
    }

    /// Batch-means standard error of `prob(n)`.
    pub fn std_error(&self, n: usize) -> f64 {
        self.std_error_of(|batch| batch[n] as f64)
    }

    /// Standard error of a proportion aggregated by `f` over bins.
    fn std_error_of(&self, f: impl Fn(&[u64]) -> f64) -> f64 {
        let b = self.batch_counts.len();
        if b < 2 || self.total == 0 {
            return f64::INFINITY;
        }
        let per_batch_total = self.total as f64 / b as f64;
        if per_batch_total == 0.0 {
            return f64::INFINITY;
        }
        let props: Vec<f64> = self
            .batch_counts
            .iter()
            .map(|batch| {
                let t: u64 = batch.iter().sum();
                if t == 0 {
                    0.0
                } else {
                    f(batch) / t as f64
                }
            })
            .collect();
        let mean = props.iter().sum::<f64>() / b as f64;
        let var = props.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / (b as f64 - 1.0);
        (var / b as f64).sqrt()
    }

    fn std_error_tail(&self, from: usize) -> f64 {
        self.std_error_of(|batch| batch[from..].iter().map(|&c| c as f64).sum())
    }

    fn tail_prob(&self, from: usize) -> f64 {
        self.counts[from..].iter().sum::<u64>() as f64 / self.total as f64
    }
}

/// Pre-sampled inverse-cdf draw for the discrete laws in the model.
enum Sampler {
    Finite { cumulative: Vec<(u32, f64)> },
    Geometric { param: f64 },
}

impl Sampler {
    fn finite(pmf: &FinitePmf) -> Self {
        let mut cumulative = Vec::with_capacity(pmf.points().len());
        let mut acc = 0.0;
        for &(k, m) in pmf.points() {
            acc += m;
            cumulative.push((k, acc));
        }
        Self::Finite { cumulative }
    }

    fn for_arrival(dist: &InterArrivalDist) -> Self {
        match dist {
            InterArrivalDist::Finite(pmf) => Self::finite(pmf),
            InterArrivalDist::Geometric(p) => Self::Geometric { param: *p },
        }
    }

    fn for_capacity(dist: &CapacityDist) -> Self {
        match dist {
            CapacityDist::Finite(pmf) => Self::finite(pmf),
            CapacityDist::Geometric(p) => Self::Geometric { param: *p },
        }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> u64 {
        match self {
            Self::Finite { cumulative } => {
                let u: f64 = rng.gen();
                for &(k, c) in cumulative {
                    if u < c {
                        return k as u64;
                    }
                }
                cumulative.last().expect("non-empty pmf").0 as u64
            }
            Self::Geometric { param } => {
                let u: f64 = rng.gen();
                1 + ((1.0 - u).ln() / (1.0 - param).ln()).floor() as u64
            }
        }
    }
}

struct Histogram {
    counts: Vec<u64>,
    batch_counts: Vec<Vec<u64>>,
    current_batch: usize,
}

impl Histogram {
    fn new(cap: usize) -> Self {
        Self {
            counts: vec![0; cap + 1],
            batch_counts: vec![vec![0; cap + 1]; MEANS_BATCHES],
            current_batch: 0,
        }
    }

    fn record(&mut self, q: u64) {
        let bin = (q as usize).min(self.counts.len() - 1);
        self.counts[bin] += 1;
        self.batch_counts[self.current_batch][bin] += 1;
    }

    fn into_dist(self, kind: EpochKind) -> EmpiricalDist {
        let total = self.counts.iter().sum();
        EmpiricalDist { kind, counts: self.counts, total, batch_counts: self.batch_counts }
    }
}

/// Run the simulation; returns the arbitrary-epoch and pre-arrival
/// histograms. Identical inputs (including the seed) replay exactly.
///
/// Four independent RNG streams are derived from the seed, one per
/// purpose -- inter-arrival draws, batch sizes, the per-slot service
/// trial, and capacity draws -- so a change to how one law is sampled
/// cannot shift the others.
pub fn simulate(model: &QueueModel, cfg: &SimConfig) -> Result<(EmpiricalDist, EmpiricalDist)> {
    cfg.validate()?;
    let stream = |purpose: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(purpose);
        rng
    };
    let mut rng_arrival = stream(0);
    let mut rng_batch = stream(1);
    let mut rng_service = stream(2);
    let mut rng_capacity = stream(3);

    let arrival = Sampler::for_arrival(model.arrival());
    let batch = Sampler::finite(model.batch());
    let capacity = Sampler::for_capacity(model.capacity());
    let mu = model.mu();

    let mut arbitrary = Histogram::new(cfg.histogram_cap);
    let mut pre_arrival = Histogram::new(cfg.histogram_cap);

    let mut queue: u64 = 0;
    let mut countdown = arrival.draw(&mut rng_arrival);
    let recorded = cfg.slots - cfg.warmup;

    for slot in 0..cfg.slots {
        let recording = slot >= cfg.warmup;
        if recording {
            let batch_idx =
                ((slot - cfg.warmup) * MEANS_BATCHES as u64 / recorded) as usize;
            arbitrary.current_batch = batch_idx;
            pre_arrival.current_batch = batch_idx;
            arbitrary.record(queue);
        }
        if countdown == 0 {
            if recording {
                pre_arrival.record(queue);
            }
            queue += batch.draw(&mut rng_batch);
            countdown = arrival.draw(&mut rng_arrival);
        }
        countdown -= 1;
        if rng_service.gen::<f64>() < mu {
            let cap = capacity.draw(&mut rng_capacity);
            queue -= cap.min(queue);
        }
    }

    Ok((arbitrary.into_dist(EpochKind::Arbitrary), pre_arrival.into_dist(EpochKind::PreArrival)))
}

/// Pass/fail thresholds for [`compare`].
#[derive(Debug, Clone, Copy)]
pub struct CompareThresholds {
    /// Total variation distance limit.
    pub tvd: f64,
    /// Per-bin |z| limit.
    pub max_z: f64,
}

impl Default for CompareThresholds {
    fn default() -> Self {
        Self { tvd: 5e-3, max_z: 4.0 }
    }
}

/// One compared bin.
#[derive(Debug, Clone, Copy)]
pub struct BinComparison {
    /// Queue length, or `None` for the lumped tail.
    pub n: Option<usize>,
    pub analytic: f64,
    pub empirical: f64,
    /// Deviation in batch-means standard errors.
    pub z: f64,
}

/// Result of an analytic-versus-empirical comparison.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub tvd: f64,
    pub max_abs_z: f64,
    pub bins: Vec<BinComparison>,
    pub thresholds: CompareThresholds,
    pub pass: bool,
}

/// Compare an analytic distribution with a simulated histogram:
/// total variation distance over the histogram bins plus per-bin z-scores.
/// Bins whose expected count falls below five are lumped (together with
/// the overflow bucket) into a single tail bin so the normal
/// approximation stays honest.
pub fn compare(analytic: &EpochDist, empirical: &EmpiricalDist) -> Result<CompareReport> {
    compare_with_thresholds(analytic, empirical, CompareThresholds::default())
}

pub fn compare_with_thresholds(
    analytic: &EpochDist,
    empirical: &EmpiricalDist,
    thresholds: CompareThresholds,
) -> Result<CompareReport> {
    if analytic.kind() != empirical.kind() {
        return Err(Error::EpochKindMismatch {
            analytic: analytic.kind(),
            empirical: empirical.kind(),
        });
    }
    let total = empirical.total() as f64;
    let cap = empirical.cap();

    // Leading run of bins with healthy expected counts; everything after
    // the first thin bin joins the tail lump.
    let mut head = 0;
    while head < cap && analytic.prob(head) * total >= 5.0 {
        head += 1;
    }

    let mut bins = Vec::with_capacity(head + 1);
    let mut tvd = 0.0;
    let mut max_abs_z = 0.0f64;
    for n in 0..head {
        let p = analytic.prob(n);
        let q = empirical.prob(n);
        let se = empirical.std_error(n);
        let z = if se.is_finite() && se > 0.0 { (q - p) / se } else { 0.0 };
        tvd += (q - p).abs();
        max_abs_z = max_abs_z.max(z.abs());
        bins.push(BinComparison { n: Some(n), analytic: p, empirical: q, z });
    }
    // Lumped tail: analytic mass beyond the retained head versus observed.
    let p_tail = if head == 0 { 1.0 } else { analytic.tail_mass(head) };
    let q_tail = empirical.tail_prob(head);
    let se_tail = empirical.std_error_tail(head);
    let z_tail = if se_tail.is_finite() && se_tail > 0.0 && (p_tail * total >= 5.0) {
        (q_tail - p_tail) / se_tail
    } else {
        0.0
    };
    tvd += (q_tail - p_tail).abs();
    tvd *= 0.5;
    max_abs_z = max_abs_z.max(z_tail.abs());
    bins.push(BinComparison { n: None, analytic: p_tail, empirical: q_tail, z: z_tail });

    let pass = tvd < thresholds.tvd && max_abs_z < thresholds.max_z;
    Ok(CompareReport { tvd, max_abs_z, bins, thresholds, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InterArrivalDist;
    use crate::steady;

    fn pmf(pairs: &[(u32, f64)]) -> FinitePmf {
        FinitePmf::new(pairs.iter().copied()).unwrap()
    }

    fn worked_example() -> QueueModel {
        QueueModel::build(
            InterArrivalDist::geometric(0.2).unwrap(),
            pmf(&[(1, 0.4), (2, 0.3), (3, 0.3)]),
            0.5,
            CapacityDist::Finite(pmf(&[(1, 0.4), (2, 0.6)])),
        )
        .unwrap()
    }

    #[test]
    fn deterministic_replay() {
        let m = worked_example();
        let cfg = SimConfig::new(200_000, 42);
        let (a1, p1) = simulate(&m, &cfg).unwrap();
        let (a2, p2) = simulate(&m, &cfg).unwrap();
        assert_eq!(a1, a2);
        assert_eq!(p1, p2);
    }

    #[test]
    fn overloaded_server_never_backlogs() {
        // mu close to one and capacity that swallows any batch: the queue
        // is cleared by slot end except for the rare missed service trial,
        // so with Det(1) arrivals and mu ~ 1, p_0 dominates. With an exact
        // mu = 1 the model would be invalid (mu must stay below one), so
        // assert the limiting structure instead: every batch admitted at a
        // zero queue.
        let m = QueueModel::build(
            InterArrivalDist::deterministic(4).unwrap(),
            pmf(&[(1, 1.0)]),
            0.99,
            CapacityDist::Finite(pmf(&[(8, 1.0)])),
        )
        .unwrap();
        let cfg = SimConfig::new(100_000, 7).with_warmup(1000);
        let (arb, pre) = simulate(&m, &cfg).unwrap();
        // Queue is empty at nearly every pre-arrival epoch.
        assert!(pre.prob(0) > 0.95, "pre p0 = {}", pre.prob(0));
        assert!(arb.prob(0) > 0.7);
    }

    #[test]
    fn empirical_matches_analytic_worked_example() {
        let m = worked_example();
        let sol = steady::solve(&m).unwrap();
        let cfg = SimConfig::new(1_000_000, 4242).with_warmup(10_000);
        let (arb, pre) = simulate(&m, &cfg).unwrap();
        let p0 = 0.582779;
        assert!((arb.prob(0) - p0).abs() < 3.0 * arb.half_width_95(0) / 1.96 * 3.0 + 3e-3);
        let report = compare(&steady::arbitrary_dist(&sol), &arb).unwrap();
        assert!(report.tvd < 0.02, "tvd {}", report.tvd);
        let report = compare(&steady::pre_arrival_dist(&sol), &pre).unwrap();
        assert!(report.tvd < 0.02, "tvd {}", report.tvd);
    }

    #[test]
    fn arrival_rate_recovers_lambda() {
        let m = worked_example();
        let cfg = SimConfig::new(2_000_000, 11).with_warmup(10_000);
        let (arb, pre) = simulate(&m, &cfg).unwrap();
        let rate = pre.total() as f64 / arb.total() as f64;
        // Geometric inter-arrival: Var(A) = (1-lambda)/lambda^2; the rate
        // estimator has standard error sqrt(lambda^3 Var(A) / slots).
        let lambda = m.lambda();
        let var = (1.0 - lambda) / (lambda * lambda);
        let se = (lambda.powi(3) * var / arb.total() as f64).sqrt();
        assert!((rate - lambda).abs() < 3.0 * se + 2.0 / arb.total() as f64);
    }

    #[test]
    fn epoch_kind_mismatch_rejected() {
        let m = worked_example();
        let sol = steady::solve(&m).unwrap();
        let cfg = SimConfig::new(50_000, 3);
        let (arb, _) = simulate(&m, &cfg).unwrap();
        let err = compare(&steady::pre_arrival_dist(&sol), &arb).unwrap_err();
        assert!(matches!(err, Error::EpochKindMismatch { .. }));
    }

    #[test]
    fn compare_is_zero_against_own_histogram() {
        // Build a fake empirical histogram that matches the analytic
        // distribution exactly; TVD must vanish.
        let m = worked_example();
        let sol = steady::solve(&m).unwrap();
        let analytic = steady::arbitrary_dist(&sol);
        let total: u64 = 1 << 40;
        let cap = 256;
        let mut counts: Vec<u64> = (0..cap).map(|n| {
            (analytic.prob(n) * total as f64).round() as u64
        }).collect();
        let used: u64 = counts.iter().sum();
        counts.push(total - used);
        let batch_counts = (0..MEANS_BATCHES)
            .map(|_| counts.iter().map(|c| c / MEANS_BATCHES as u64).collect())
            .collect();
        let emp = EmpiricalDist {
            kind: EpochKind::Arbitrary,
            counts,
            total,
            batch_counts,
        };
        let report = compare(&analytic, &emp).unwrap();
        assert!(report.tvd < 1e-9, "tvd {}", report.tvd);
    }

    #[test]
    fn warmup_must_leave_room() {
        let m = worked_example();
        let cfg = SimConfig::new(100, 1).with_warmup(100);
        assert!(simulate(&m, &cfg).is_err());
    }

    #[test]
    fn default_warmup_rule() {
        assert_eq!(SimConfig::default_warmup(0.5), 10_000);
        let near_one = SimConfig::default_warmup(0.999_999);
        assert!((near_one as f64 - 2e7).abs() <= 1.0);
    }

    #[test]
    fn independent_seeds_agree_with_each_other() {
        let m = worked_example();
        let sol = steady::solve(&m).unwrap();
        let analytic = steady::arbitrary_dist(&sol);
        let (a1, _) = simulate(&m, &SimConfig::new(500_000, 101)).unwrap();
        let (a2, _) = simulate(&m, &SimConfig::new(500_000, 202)).unwrap();
        let r1 = compare(&analytic, &a1).unwrap();
        let r2 = compare(&analytic, &a2).unwrap();
        // Cross-seed TVD is the same order as each seed's TVD to the
        // analytic answer.
        let mut cross = 0.0;
        for n in 0..a1.cap() {
            cross += (a1.prob(n) - a2.prob(n)).abs();
        }
        cross = 0.5 * (cross + (a1.overflow_prob() - a2.overflow_prob()).abs());
        let scale = r1.tvd.max(r2.tvd);
        assert!(cross < 10.0 * scale && cross > scale / 10.0, "cross {cross}, scale {scale}");
    }
}
