//! Steady-state queue-length distributions.
//!
//! With the interior roots `r_1..r_b` in hand, the mixture constants
//! `c_1..c_b` solve the linear system
//!
//! ```text
//! sum_j c_j r_j^(-k) = 0        for k = 1..b-1
//! sum_j c_j / (1 - r_j) = lambda
//! ```
//!
//! and the distributions are geometric mixtures: at a pre-arrival epoch
//! `p_n^- = (1/lambda) sum_j c_j r_j^n`, and at an arbitrary epoch
//! `p_n = sum_j K_j r_j^n` for `n >= 1` with `p_0` fixed by normalization.

use num_complex::Complex64;

use crate::chareq::{self, CharSystem};
use crate::error::{Error, Result};
use crate::model::QueueModel;

/// Pivot magnitudes below this (after row scaling) are treated as singular.
pub const PIVOT_TOL: f64 = 1e-13;

/// Residual bound for each raw row of the constant system.
pub const ROW_RESIDUAL_TOL: f64 = 1e-9;

/// Condition estimates above this raise the ill-conditioning flag.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Which observation instant a distribution describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EpochKind {
    /// Just before a batch arrival.
    PreArrival,
    /// At a generic slot boundary.
    Arbitrary,
}

/// The solved steady state: roots, mixture constants, and the precomputed
/// arbitrary-epoch coefficients.
#[derive(Debug, Clone)]
pub struct SteadySolution {
    roots: Vec<Complex64>,
    constants: Vec<Complex64>,
    coeffs_k: Vec<Complex64>,
    lambda: f64,
    p0: f64,
    tail_rate: f64,
    condition_estimate: f64,
    model: QueueModel,
}

/// A closed-form queue-length distribution at one epoch kind.
#[derive(Debug, Clone)]
pub struct EpochDist {
    kind: EpochKind,
    /// `(root, coefficient)` terms; `prob(n) = Re sum coeff * root^n` for `n >= 1`.
    terms: Vec<(Complex64, Complex64)>,
    p0: f64,
    tail_rate: f64,
}

/// Tail behavior of the pre-arrival distribution.
#[derive(Debug, Clone, Copy)]
pub struct TailDecay {
    /// Largest interior root modulus; `p_(n+1)^- / p_n^-` approaches it when
    /// the dominant root dominates cleanly.
    pub rate: f64,
    /// The dominant-modulus root is real.
    pub dominant_real: bool,
    /// No other root shares the dominant modulus.
    pub dominant_unique: bool,
    /// The dominant root is simple (guaranteed by the root separation guard).
    pub dominant_simple: bool,
}

impl TailDecay {
    /// True when the ratio `p_(n+1)^- / p_n^-` converges to `rate` rather
    /// than oscillating.
    pub fn ratio_converges(&self) -> bool {
        self.dominant_real && self.dominant_unique && self.dominant_simple
    }
}

/// Solve the constant system for a given root set and arrival rate:
/// rows `k = b-1` down to `1`, then the normalization row. Each row is
/// scaled by its largest entry before pivoting; residuals are re-checked
/// on the raw rows. Returns the constants and a condition estimate.
pub(crate) fn constants_for_roots(
    roots: &[Complex64],
    lambda: f64,
) -> Result<(Vec<Complex64>, f64)> {
    let b = roots.len();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); b]; b];
    let mut rhs = vec![Complex64::new(0.0, 0.0); b];
    for (row, k) in (1..b).rev().enumerate() {
        for j in 0..b {
            m[row][j] = roots[j].powi(-(k as i32));
        }
    }
    for j in 0..b {
        m[b - 1][j] = (Complex64::new(1.0, 0.0) - roots[j]).inv();
    }
    rhs[b - 1] = Complex64::new(lambda, 0.0);

    let (mut constants, condition_estimate) = solve_complex_system(m.clone(), rhs.clone())?;
    // Iterative refinement: with inverse powers of small-modulus roots the
    // raw rows carry large cancelling terms, and a couple of correction
    // solves recover the digits the elimination loses.
    for _ in 0..3 {
        let residual: Vec<Complex64> = m
            .iter()
            .zip(&rhs)
            .map(|(row, &target)| {
                target - row.iter().zip(&constants).map(|(a, c)| a * c).sum::<Complex64>()
            })
            .collect();
        if residual.iter().map(|r| r.norm()).fold(0.0, f64::max) < 1e-11 {
            break;
        }
        let (delta, _) = solve_complex_system(m.clone(), residual)?;
        for (c, d) in constants.iter_mut().zip(delta) {
            *c += d;
        }
    }
    symmetrize_constants(roots, &mut constants);

    // Residuals relative to the largest term in each row: rows with
    // inverse powers of a near-origin root carry terms far above one, and
    // absolute cancellation below an ulp of those terms is not observable
    // in double precision.
    for k in 1..b {
        let mut res = Complex64::new(0.0, 0.0);
        let mut scale = 1.0f64;
        for j in 0..b {
            let term = constants[j] * roots[j].powi(-(k as i32));
            scale = scale.max(term.norm());
            res += term;
        }
        if res.norm() > ROW_RESIDUAL_TOL * scale {
            return Err(Error::SingularSystem(format!(
                "row k={k} residual {:e} exceeds {ROW_RESIDUAL_TOL:e} (scale {scale:e})",
                res.norm()
            )));
        }
    }
    let norm_res: Complex64 = (0..b)
        .map(|j| constants[j] / (Complex64::new(1.0, 0.0) - roots[j]))
        .sum::<Complex64>()
        - lambda;
    if norm_res.norm() > ROW_RESIDUAL_TOL {
        return Err(Error::SingularSystem(format!(
            "normalization residual {:e} exceeds {ROW_RESIDUAL_TOL:e}",
            norm_res.norm()
        )));
    }
    Ok((constants, condition_estimate))
}

/// Solve the b-by-b complex system for the mixture constants and
/// precompute the arbitrary-epoch coefficients.
pub fn solve_constants(cs: &CharSystem, model: &QueueModel) -> Result<SteadySolution> {
    let roots = cs.interior_roots.clone();
    assert_eq!(roots.len(), model.b() as usize, "char system does not match model");
    let lambda = model.lambda();
    let (constants, condition_estimate) = constants_for_roots(&roots, lambda)?;
    let coeffs_k = arbitrary_coeffs(model, &roots, &constants)?;
    let p0 = 1.0
        - coeffs_k
            .iter()
            .zip(&roots)
            .map(|(k, r)| k * r / (Complex64::new(1.0, 0.0) - r))
            .sum::<Complex64>()
            .re;
    let tail_rate = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);

    Ok(SteadySolution {
        roots,
        constants,
        coeffs_k,
        lambda,
        p0,
        tail_rate,
        condition_estimate,
        model: model.clone(),
    })
}

/// Find the interior roots and solve for the constants in one step.
pub fn solve(model: &QueueModel) -> Result<SteadySolution> {
    let cs = chareq::find_interior_roots(model)?;
    solve_constants(&cs, model)
}

/// `K_j = c_j (1 - mu + mu Y(r_j)) (sum_i g_i r_j^(b-i) - r_j^b) / (mu (1 - Y(r_j))) r_j^(-b)`.
fn arbitrary_coeffs(
    model: &QueueModel,
    roots: &[Complex64],
    constants: &[Complex64],
) -> Result<Vec<Complex64>> {
    let mu = model.mu();
    let b = model.b();
    let y_pgf = model.capacity().pgf();
    let one = Complex64::new(1.0, 0.0);
    roots
        .iter()
        .zip(constants)
        .map(|(&r, &c)| {
            let y = y_pgf.eval(r)?;
            let gamma: Complex64 = model
                .batch()
                .points()
                .iter()
                .map(|&(i, g)| g * r.powu(b - i))
                .sum();
            Ok(c * (one - mu + mu * y) * (gamma - r.powu(b)) / (mu * (one - y)) / r.powu(b))
        })
        .collect()
}

/// Gaussian elimination with partial pivoting on a row-scaled copy.
/// Returns the solution and a crude condition estimate (max/min scaled
/// pivot magnitude).
fn solve_complex_system(
    mut m: Vec<Vec<Complex64>>,
    mut rhs: Vec<Complex64>,
) -> Result<(Vec<Complex64>, f64)> {
    let n = m.len();
    for (row, r) in m.iter_mut().zip(rhs.iter_mut()) {
        let scale = row.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return Err(Error::SingularSystem("zero row".into()));
        }
        for v in row.iter_mut() {
            *v /= scale;
        }
        *r /= scale;
    }

    let mut max_pivot = 0.0f64;
    let mut min_pivot = f64::INFINITY;
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&a, &b| m[a][col].norm().partial_cmp(&m[b][col].norm()).unwrap())
            .unwrap();
        let pivot = m[pivot_row][col];
        if pivot.norm() < PIVOT_TOL {
            return Err(Error::SingularSystem(format!(
                "pivot magnitude {:e} below {PIVOT_TOL:e} at column {col}",
                pivot.norm()
            )));
        }
        max_pivot = max_pivot.max(pivot.norm());
        min_pivot = min_pivot.min(pivot.norm());
        m.swap(col, pivot_row);
        rhs.swap(col, pivot_row);
        for row in (col + 1)..n {
            let factor = m[row][col] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let upper = m[col][k];
                m[row][k] -= factor * upper;
            }
            let upper = rhs[col];
            rhs[row] -= factor * upper;
        }
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    for row in (0..n).rev() {
        let mut acc = rhs[row];
        for k in (row + 1)..n {
            acc -= m[row][k] * x[k];
        }
        x[row] = acc / m[row][row];
    }
    Ok((x, max_pivot / min_pivot))
}

/// Average constants over conjugate root pairs and flatten the constants
/// attached to real roots, so realness of the distributions is exact.
fn symmetrize_constants(roots: &[Complex64], constants: &mut [Complex64]) {
    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        if roots[i].im == 0.0 {
            constants[i].im = 0.0;
            used[i] = true;
            continue;
        }
        for j in (i + 1)..roots.len() {
            if !used[j] && roots[j] == roots[i].conj() {
                let avg = 0.5 * (constants[i] + constants[j].conj());
                constants[i] = avg;
                constants[j] = avg.conj();
                used[i] = true;
                used[j] = true;
                break;
            }
        }
    }
}

impl SteadySolution {
    /// Assemble a solution from already-validated parts (continuous-time
    /// path).
    pub(crate) fn from_parts(
        roots: Vec<Complex64>,
        constants: Vec<Complex64>,
        coeffs_k: Vec<Complex64>,
        lambda: f64,
        p0: f64,
        tail_rate: f64,
        condition_estimate: f64,
        model: QueueModel,
    ) -> Self {
        Self { roots, constants, coeffs_k, lambda, p0, tail_rate, condition_estimate, model }
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// Mixture constants, ordered like [`Self::roots`].
    pub fn constants(&self) -> &[Complex64] {
        &self.constants
    }

    /// Arbitrary-epoch coefficients `K_j`, ordered like [`Self::roots`].
    pub fn coeffs_k(&self) -> &[Complex64] {
        &self.coeffs_k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Arbitrary-epoch probability of an empty queue.
    pub fn p0(&self) -> f64 {
        self.p0
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    pub fn model(&self) -> &QueueModel {
        &self.model
    }

    /// Crude condition estimate of the constant system.
    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Warning channel: the constant system looked ill-conditioned.
    pub fn is_ill_conditioned(&self) -> bool {
        self.condition_estimate > CONDITION_LIMIT
    }
}

/// The pre-arrival distribution `p_n^- = (1/lambda) sum_j c_j r_j^n`.
pub fn pre_arrival_dist(sol: &SteadySolution) -> EpochDist {
    let terms: Vec<_> = sol
        .roots
        .iter()
        .zip(&sol.constants)
        .map(|(&r, &c)| (r, c / sol.lambda))
        .collect();
    let p0 = terms.iter().map(|&(_, c)| c).sum::<Complex64>().re;
    EpochDist { kind: EpochKind::PreArrival, terms, p0, tail_rate: sol.tail_rate }
}

/// The arbitrary-epoch distribution: `p_n = sum_j K_j r_j^n` for `n >= 1`,
/// `p_0` from the geometric tail sum.
pub fn arbitrary_dist(sol: &SteadySolution) -> EpochDist {
    let terms: Vec<_> = sol.roots.iter().copied().zip(sol.coeffs_k.iter().copied()).collect();
    EpochDist { kind: EpochKind::Arbitrary, terms, p0: sol.p0, tail_rate: sol.tail_rate }
}

/// Mean queue length of a distribution via the closed geometric sums.
pub fn mean_queue_length(dist: &EpochDist) -> f64 {
    dist.mean()
}

/// Tail decay rate and dominance report.
pub fn tail_decay_rate(sol: &SteadySolution) -> TailDecay {
    let rate = sol.tail_rate;
    let dominant: Vec<&Complex64> =
        sol.roots.iter().filter(|r| (r.norm() - rate).abs() <= 1e-9 * rate.max(1.0)).collect();
    TailDecay {
        rate,
        dominant_real: dominant.iter().all(|r| r.im == 0.0),
        dominant_unique: dominant.len() == 1,
        dominant_simple: true,
    }
}

impl EpochDist {
    pub fn kind(&self) -> EpochKind {
        self.kind
    }

    /// `(root, coefficient)` terms of the geometric mixture.
    pub fn terms(&self) -> &[(Complex64, Complex64)] {
        &self.terms
    }

    /// Probability of queue length `n`.
    pub fn prob(&self, n: usize) -> f64 {
        if n == 0 {
            return self.p0;
        }
        self.series(n).re
    }

    fn series(&self, n: usize) -> Complex64 {
        self.terms.iter().map(|&(r, c)| c * r.powu(n as u32)).sum()
    }

    /// Imaginary residue of the mixture at `n`; should vanish.
    pub fn imag_residue(&self, n: usize) -> f64 {
        self.series(n).im.abs()
    }

    /// `sum_{k >= n} prob(k)` for `n >= 1`, in closed form.
    pub fn tail_mass(&self, n: usize) -> f64 {
        assert!(n >= 1, "tail_mass is defined for n >= 1");
        self.terms
            .iter()
            .map(|&(r, c)| c * r.powu(n as u32) / (Complex64::new(1.0, 0.0) - r))
            .sum::<Complex64>()
            .re
    }

    /// `sum_{k <= n} prob(k)`.
    pub fn cumulative(&self, n: usize) -> f64 {
        let total = self.p0 + self.tail_mass(1);
        total - self.tail_mass(n + 1)
    }

    /// Mean `sum n prob(n)` via the geometric sums.
    pub fn mean(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(r, c)| {
                let om = Complex64::new(1.0, 0.0) - r;
                c * r / (om * om)
            })
            .sum::<Complex64>()
            .re
    }

    pub fn tail_rate(&self) -> f64 {
        self.tail_rate
    }

    /// Truncation cutoff: smallest `N` with `tail_rate^N < 1e-12`, capped
    /// at `10^5`.
    pub fn suggested_cutoff(&self) -> usize {
        if self.tail_rate <= 0.0 {
            return 8;
        }
        let n = (1e-12f64.ln() / self.tail_rate.ln()).ceil();
        (n.max(8.0) as usize).min(100_000)
    }
}

/// Which reduced form a model matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SpecialCase {
    /// `Y(s) = s`: batch arrivals, single service.
    UnitCapacity,
    /// `G(s) = s`: single arrivals, batch service.
    UnitBatch,
    /// Both reductions: the classic single-arrival single-service queue.
    Both,
}

/// Solve via the reduced closed forms for the unit-capacity and/or
/// unit-batch special cases. Produces the same solution as the general
/// path (tested to 1e-10) but routes through the simplified expressions.
pub fn solve_special(model: &QueueModel) -> Result<SteadySolution> {
    let unit_capacity = model.capacity().is_unit();
    let unit_batch = model.batch().points() == [(1, 1.0)];
    let case = match (unit_capacity, unit_batch) {
        (true, true) => SpecialCase::Both,
        (true, false) => SpecialCase::UnitCapacity,
        (false, true) => SpecialCase::UnitBatch,
        (false, false) => {
            return Err(Error::NotSpecialCase(
                "requires unit capacity (Y(s)=s) or unit batches (G(s)=s)".into(),
            ))
        }
    };

    let cs = chareq::find_interior_roots(model)?;
    let roots = cs.interior_roots.clone();
    let mu = model.mu();
    let lambda = model.lambda();
    let one = Complex64::new(1.0, 0.0);

    let (constants, coeffs_k, p0) = match case {
        SpecialCase::Both => {
            // Single real root; c_1 = lambda (1 - r_1),
            // p_n = (lambda/mu)(1-r_1)(1-mu+mu r_1) r_1^(n-1),
            // p_0 = 1 - (lambda/mu)(1-mu+mu r_1).
            let r = roots[0];
            let c = lambda * (one - r);
            let k = (lambda / mu) * (one - r) * (one - mu + mu * r) / r;
            let p0 = 1.0 - (lambda / mu) * (one - mu + mu * r).re;
            (vec![c], vec![k], p0)
        }
        SpecialCase::UnitBatch => {
            // c_1 = lambda (1 - r_1);
            // p_n = lambda (1-r_1)^2 (1-mu+mu Y(r_1)) r_1^(n-1) / (mu (1-Y(r_1))),
            // p_0 = 1 - lambda (1-r_1)(1-mu+mu Y(r_1)) / (mu (1-Y(r_1))).
            let r = roots[0];
            let y = model.capacity().pgf().eval(r)?;
            let c = lambda * (one - r);
            let k = lambda * (one - r) * (one - r) * (one - mu + mu * y) / (mu * (one - y)) / r;
            let p0 = 1.0 - (lambda * (one - r) * (one - mu + mu * y) / (mu * (one - y))).re;
            (vec![c], vec![k], p0)
        }
        SpecialCase::UnitCapacity => {
            // Constants from the general system; K_j with Y(r_j) = r_j:
            // K_j = c_j (1-mu+mu r_j)(sum_i g_i r_j^(b-i) - r_j^b) / (mu (1-r_j)) r_j^(-b),
            // p_0 = 1 - sum_j c_j (1-mu+mu r_j)(sum_i g_i r_j^(1-i) - r_j) / (mu (1-r_j)^2).
            let general = solve_constants(&cs, model)?;
            let constants = general.constants.clone();
            let b = model.b();
            let coeffs_k: Vec<Complex64> = roots
                .iter()
                .zip(&constants)
                .map(|(&r, &c)| {
                    let gamma: Complex64 =
                        model.batch().points().iter().map(|&(i, g)| g * r.powu(b - i)).sum();
                    c * (one - mu + mu * r) * (gamma - r.powu(b)) / (mu * (one - r)) / r.powu(b)
                })
                .collect();
            let p0 = 1.0
                - roots
                    .iter()
                    .zip(&constants)
                    .map(|(&r, &c)| {
                        let g1: Complex64 = model
                            .batch()
                            .points()
                            .iter()
                            .map(|&(i, g)| g * r.powi(1 - i as i32))
                            .sum();
                        c * (one - mu + mu * r) * (g1 - r) / (mu * (one - r) * (one - r))
                    })
                    .sum::<Complex64>()
                    .re;
            (constants, coeffs_k, p0)
        }
    };

    let tail_rate = roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
    Ok(SteadySolution {
        roots,
        constants,
        coeffs_k,
        lambda,
        p0,
        tail_rate,
        condition_estimate: 1.0,
        model: model.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{CapacityDist, InterArrivalDist};
    use crate::pgf::FinitePmf;

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
    fn worked_example_constants() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        // Roots sorted (modulus desc, re desc, im desc):
        // 0.603819, -0.183817+0.263763i, -0.183817-0.263763i.
        let expect = [
            Complex64::new(0.061593, 0.0),
            Complex64::new(0.027481, -0.000834),
            Complex64::new(0.027481, 0.000834),
        ];
        for (got, want) in sol.constants().iter().zip(expect) {
            assert!((got - want).norm() < 1e-6, "{got} vs {want}");
        }
    }

    #[test]
    fn constant_rows_recompute() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let total: Complex64 = sol
            .roots()
            .iter()
            .zip(sol.constants())
            .map(|(&r, &c)| c / (Complex64::new(1.0, 0.0) - r))
            .sum();
        assert!((total.re - m.lambda()).abs() < 1e-12 && total.im.abs() < 1e-12);
        for k in 1..sol.roots().len() {
            let res: Complex64 = sol
                .roots()
                .iter()
                .zip(sol.constants())
                .map(|(&r, &c)| c * r.powi(-(k as i32)))
                .sum();
            assert!(res.norm() < 1e-9, "k={k} residual {}", res.norm());
        }
    }

    #[test]
    fn worked_example_distributions() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let pre = pre_arrival_dist(&sol);
        let arb = arbitrary_dist(&sol);
        let expect = [0.582779, 0.137643, 0.101641, 0.076705];
        for (n, want) in expect.iter().enumerate() {
            assert!((pre.prob(n) - want).abs() < 1e-6, "pre n={n}");
            assert!((arb.prob(n) - want).abs() < 1e-6, "arb n={n}");
        }
        assert!((mean_queue_length(&pre) - 1.133649).abs() < 1e-5);
        assert!((mean_queue_length(&arb) - 1.133649).abs() < 1e-5);
    }

    #[test]
    fn mean_matches_truncated_sum() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        for dist in [pre_arrival_dist(&sol), arbitrary_dist(&sol)] {
            let direct: f64 = (1..=500).map(|n| n as f64 * dist.prob(n)).sum();
            assert!((dist.mean() - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn p0_from_series_and_complement_agree() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let arb = arbitrary_dist(&sol);
        let tail: f64 = (1..=2000).map(|n| arb.prob(n)).sum();
        assert!((arb.prob(0) - (1.0 - tail)).abs() < 1e-8);
    }

    #[test]
    fn bernoulli_arrivals_equalize_epochs() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let pre = pre_arrival_dist(&sol);
        let arb = arbitrary_dist(&sol);
        for n in 0..=200 {
            assert!((pre.prob(n) - arb.prob(n)).abs() < 1e-9, "n={n}");
        }
    }

    #[test]
    fn tail_decay_worked_example() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let tail = tail_decay_rate(&sol);
        assert!((tail.rate - 0.603819).abs() < 1e-6);
        assert!(tail.ratio_converges());
        let pre = pre_arrival_dist(&sol);
        let ratio = pre.prob(201) / pre.prob(200);
        assert!((ratio - tail.rate).abs() < 1e-6);
    }

    #[test]
    fn realness_is_exact_after_symmetrization() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let pre = pre_arrival_dist(&sol);
        let arb = arbitrary_dist(&sol);
        for n in 0..=500 {
            assert_eq!(pre.imag_residue(n), 0.0);
            assert_eq!(arb.imag_residue(n), 0.0);
        }
    }

    #[test]
    fn single_root_constant_closed_form() {
        // Unit batches: c_1 = lambda (1 - r_1) straight from the
        // normalization row.
        let m = QueueModel::build(
            InterArrivalDist::geometric(0.2).unwrap(),
            pmf(&[(1, 1.0)]),
            0.5,
            CapacityDist::Finite(pmf(&[(1, 0.4), (2, 0.6)])),
        )
        .unwrap();
        let sol = solve(&m).unwrap();
        let r1 = sol.roots()[0];
        let expect = m.lambda() * (Complex64::new(1.0, 0.0) - r1);
        assert!((sol.constants()[0] - expect).norm() < 1e-12);
    }

    #[test]
    fn special_cases_match_general_path() {
        let candidates = [
            // GI/Geo/1.
            QueueModel::build(
                InterArrivalDist::geometric(0.2).unwrap(),
                pmf(&[(1, 1.0)]),
                0.5,
                CapacityDist::unit(),
            )
            .unwrap(),
            // GI/Geo^Y/1 with the worked example's capacity.
            QueueModel::build(
                InterArrivalDist::geometric(0.2).unwrap(),
                pmf(&[(1, 1.0)]),
                0.5,
                CapacityDist::Finite(pmf(&[(1, 0.4), (2, 0.6)])),
            )
            .unwrap(),
            // GI^X/Geo/1.
            QueueModel::build(
                InterArrivalDist::geometric(0.15).unwrap(),
                pmf(&[(1, 0.5), (2, 0.2), (3, 0.3)]),
                0.6,
                CapacityDist::unit(),
            )
            .unwrap(),
        ];
        for m in candidates {
            let special = solve_special(&m).unwrap();
            let general = solve(&m).unwrap();
            let (sp, sa) = (pre_arrival_dist(&special), arbitrary_dist(&special));
            let (gp, ga) = (pre_arrival_dist(&general), arbitrary_dist(&general));
            for n in 0..=100 {
                assert!((sp.prob(n) - gp.prob(n)).abs() < 1e-10, "pre n={n}");
                assert!((sa.prob(n) - ga.prob(n)).abs() < 1e-10, "arb n={n}");
            }
        }
    }

    #[test]
    fn special_case_agreement_with_near_origin_root() {
        // Heavy deterministic arrivals put an interior root near the
        // origin; its inverse powers amplify rounding, so the two routes
        // agree to the conditioning floor rather than 1e-10.
        let m = QueueModel::build(
            InterArrivalDist::deterministic(10).unwrap(),
            pmf(&[(1, 0.2), (5, 0.3), (10, 0.5)]),
            0.9,
            CapacityDist::unit(),
        )
        .unwrap();
        let special = solve_special(&m).unwrap();
        let general = solve(&m).unwrap();
        let (sa, ga) = (arbitrary_dist(&special), arbitrary_dist(&general));
        for n in 0..=100 {
            assert!((sa.prob(n) - ga.prob(n)).abs() < 1e-8, "arb n={n}");
        }
    }

    #[test]
    fn gi_geo_1_closed_forms() {
        let m = QueueModel::build(
            InterArrivalDist::geometric(0.2).unwrap(),
            pmf(&[(1, 1.0)]),
            0.5,
            CapacityDist::unit(),
        )
        .unwrap();
        let sol = solve_special(&m).unwrap();
        let r1 = sol.roots()[0].re;
        let pre = pre_arrival_dist(&sol);
        for n in 0..20 {
            let want = (1.0 - r1) * r1.powi(n);
            assert!((pre.prob(n as usize) - want).abs() < 1e-12);
        }
        let p0_expect = 1.0 - (m.lambda() / m.mu()) * (1.0 - m.mu() + m.mu() * r1);
        assert!((sol.p0() - p0_expect).abs() < 1e-12);
    }

    #[test]
    fn not_special_case_rejected() {
        let m = worked_example();
        assert!(matches!(solve_special(&m), Err(Error::NotSpecialCase(_))));
    }

    #[test]
    fn suggested_cutoff_covers_tail() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let pre = pre_arrival_dist(&sol);
        let n = pre.suggested_cutoff();
        assert!(pre.cumulative(n) >= 1.0 - 1e-8);
        assert!(pre.cumulative(n) <= 1.0 + 1e-8);
    }

    // Structural check: the computed constants satisfy the pre-reduction
    // boundary conditions the k-rows were derived from, for every
    // 1 <= n <= b-1:
    // sum_j c_j r_j^n { (1-mu) sum_{i=n+1..b} g_i r_j^(-i)
    //   + mu sum_i y_i r_j^i (sum_{m<=b} g_m r_j^(-m) - sum_{m<=min(i+n,b)} g_m r_j^(-m)) } = 0.
    #[test]
    fn reduced_rows_imply_original_boundary_conditions() {
        let m = worked_example();
        let sol = solve(&m).unwrap();
        let b = m.b();
        let caps: Vec<(u32, f64)> = match m.capacity() {
            CapacityDist::Finite(pmf) => pmf.points().to_vec(),
            CapacityDist::Geometric(_) => unreachable!(),
        };
        for n in 1..b {
            let mut total = Complex64::new(0.0, 0.0);
            for (&r, &c) in sol.roots().iter().zip(sol.constants()) {
                let mut inner = Complex64::new(0.0, 0.0);
                for &(i, g) in m.batch().points() {
                    if i > n {
                        inner += (1.0 - m.mu()) * g * r.powi(-(i as i32));
                    }
                }
                for &(i, y) in &caps {
                    let mut gap = Complex64::new(0.0, 0.0);
                    for &(mm, g) in m.batch().points() {
                        if mm > (i + n).min(b) {
                            gap += g * r.powi(-(mm as i32));
                        }
                    }
                    inner += m.mu() * y * r.powu(i) * gap;
                }
                total += c * r.powu(n) * inner;
            }
            assert!(total.norm() < 1e-12, "n={n} residual {}", total.norm());
        }
    }
}
