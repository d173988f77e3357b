//! Characteristic equation of the queue: construction, denominator
//! clearing, and location of the roots strictly inside the unit circle.
//!
//! The root equation is
//!
//! ```text
//! A(1 - mu + mu Y(s)) * sum_{i=1..b} g_i s^(b-i)  -  s^b  =  0
//! ```
//!
//! where `A` and `Y` are the inter-arrival and capacity pgfs. For a stable
//! model it has exactly `b` roots strictly inside `|s| = 1`, and those roots
//! generate the geometric-mixture form of the steady-state distribution.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::QueueModel;
use crate::pgf::RationalPgf;
use crate::poly;

/// Degree guard for the cleared polynomial.
pub const MAX_CLEARED_DEGREE: usize = 10_000;

/// Roots count as interior when `|r| < 1 - INTERIOR_MARGIN`. The margin
/// separates the ever-present root at `s = 1` (and any unit-circle roots of
/// the capacity factor) from genuine interior roots at double precision.
pub const INTERIOR_MARGIN: f64 = 1e-7;

/// Maximum residual `|char_fn(r)|` accepted for a polished interior root.
pub const RESIDUAL_TOL: f64 = 1e-9;

/// Minimum pairwise separation between interior roots; closer pairs mean
/// the distinct-root solution form does not apply.
pub const SEPARATION_TOL: f64 = 1e-6;

/// The cleared characteristic polynomial together with its full root set
/// and the selected interior roots.
#[derive(Debug, Clone)]
pub struct CharSystem {
    /// Cleared polynomial, ascending coefficients, unscaled.
    pub cleared_poly: Vec<f64>,
    /// Every root of the cleared polynomial.
    pub all_roots: Vec<Complex64>,
    /// Exactly `b` roots with `|r| < 1 - INTERIOR_MARGIN`, conjugate-closed,
    /// sorted by (modulus desc, real part desc, imaginary part desc).
    pub interior_roots: Vec<Complex64>,
}

/// `sum_{i=1..b} g_i s^(b-i)` for the model's batch pmf.
pub(crate) fn batch_weight_poly(model: &QueueModel) -> Vec<f64> {
    let b = model.b() as usize;
    let mut coeffs = vec![0.0; b];
    for &(i, g) in model.batch().points() {
        coeffs[b - i as usize] += g;
    }
    coeffs
}

/// Evaluate the characteristic function at a complex point.
///
/// Propagates a pole error when `1 - mu + mu Y(s)` lands on a pole of `A`
/// or `s` on a pole of `Y`; neither can happen on the closed unit disk.
pub fn char_fn(model: &QueueModel, s: Complex64) -> Result<Complex64> {
    let mu = model.mu();
    let y = model.capacity().pgf().eval(s)?;
    let w = Complex64::new(1.0 - mu, 0.0) + mu * y;
    let a = model.arrival().pgf().eval(w)?;
    let gamma = poly::eval(&batch_weight_poly(model), s);
    Ok(a * gamma - s.powu(model.b()))
}

/// Complex derivative of the characteristic function (chain and product
/// rules on the rational pgfs). Used for Newton polishing.
pub fn char_fn_deriv(model: &QueueModel, s: Complex64) -> Result<Complex64> {
    let mu = model.mu();
    let y_pgf = model.capacity().pgf();
    let a_pgf = model.arrival().pgf();
    let y = y_pgf.eval(s)?;
    let dy = y_pgf.eval_deriv(s)?;
    let w = Complex64::new(1.0 - mu, 0.0) + mu * y;
    let a = a_pgf.eval(w)?;
    let da = a_pgf.eval_deriv(w)?;
    let gpoly = batch_weight_poly(model);
    let (gamma, dgamma) = poly::eval_with_deriv(&gpoly, s);
    let b = model.b();
    Ok(da * (mu * dy) * gamma + a * dgamma - (b as f64) * s.powu(b - 1))
}

/// Clear the denominators of the characteristic function, producing a real
/// polynomial `p` with `p(s) = char_fn(s) * Q(s)` where `Q` collects the
/// denominator of `A` evaluated at the rational argument and enough powers
/// of the denominator of `Y`. `Q` has no roots on the closed unit disk
/// (pgf denominators keep their roots outside it), so `p` introduces no
/// spurious interior roots.
pub fn build_cleared_poly(model: &QueueModel) -> Result<Vec<f64>> {
    let (p, _q) = cleared_poly_parts(model)?;
    Ok(p)
}

/// Returns both the cleared polynomial and the clearing factor `Q`.
pub(crate) fn cleared_poly_parts(model: &QueueModel) -> Result<(Vec<f64>, Vec<f64>)> {
    cleared_poly_raw(
        &model.arrival().pgf(),
        &model.capacity().pgf(),
        &batch_weight_poly(model),
        model.mu(),
    )
}

/// The clearing algebra on raw parts. `gamma` is `sum_i g_i s^(b-i)`
/// (degree `b-1`, constant term `g_b`). Separated from the model so the
/// construction is testable on parameter sets that fail the stability
/// gate.
fn cleared_poly_raw(
    a_pgf: &RationalPgf,
    y_pgf: &RationalPgf,
    gamma: &[f64],
    mu: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let b = gamma.len();

    // w(s) = 1 - mu + mu Y(s) = W(s) / D_Y(s) with
    // W = (1-mu) D_Y + mu N_Y.
    let mut w = vec![0.0];
    poly::add_scaled(&mut w, y_pgf.denominator(), 1.0 - mu);
    poly::add_scaled(&mut w, y_pgf.numerator(), mu);

    let m = a_pgf.numerator().len().max(a_pgf.denominator().len()) - 1;
    let degree_estimate = m * w.len().saturating_sub(1).max(y_pgf.denominator().len() - 1) + b;
    if degree_estimate > MAX_CLEARED_DEGREE {
        return Err(Error::DegreeOverflow { degree: degree_estimate, max: MAX_CLEARED_DEGREE });
    }

    // A(w(s)) = P(s)/Q(s): substitute w = W/D_Y into num and den of A and
    // multiply through by D_Y^m.
    let mut p_top = vec![0.0];
    let mut q = vec![0.0];
    let mut w_pow = vec![1.0];
    let mut dy_pows: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
    dy_pows.push(vec![1.0]);
    for k in 1..=m {
        dy_pows.push(poly::mul(&dy_pows[k - 1], y_pgf.denominator()));
    }
    for k in 0..=m {
        let base = poly::mul(&w_pow, &dy_pows[m - k]);
        if let Some(&a_k) = a_pgf.numerator().get(k) {
            poly::add_scaled(&mut p_top, &base, a_k);
        }
        if let Some(&d_k) = a_pgf.denominator().get(k) {
            poly::add_scaled(&mut q, &base, d_k);
        }
        if k < m {
            w_pow = poly::mul(&w_pow, &w);
        }
    }

    // p(s) = P(s) * gamma(s) - s^b Q(s).
    let mut cleared = poly::mul(&p_top, gamma);
    let mut shifted = vec![0.0; b];
    shifted.extend_from_slice(&q);
    poly::add_scaled(&mut cleared, &shifted, -1.0);
    poly::trim_leading_zeros(&mut cleared);
    poly::trim_leading_zeros(&mut q);

    if cleared.len() - 1 > MAX_CLEARED_DEGREE {
        return Err(Error::DegreeOverflow { degree: cleared.len() - 1, max: MAX_CLEARED_DEGREE });
    }
    Ok((cleared, q))
}

/// Newton-polish a root candidate on the characteristic function itself,
/// removing the roundoff introduced by denominator clearing. Falls back to
/// the starting point if iteration leaves the region where the candidate
/// makes sense or fails to improve the residual.
fn polish_on_char_fn(model: &QueueModel, start: Complex64) -> Complex64 {
    let start_residual = match char_fn(model, start) {
        Ok(v) => v.norm(),
        Err(_) => return start,
    };
    let mut s = start;
    for _ in 0..100 {
        let (f, df) = match (char_fn(model, s), char_fn_deriv(model, s)) {
            (Ok(f), Ok(df)) => (f, df),
            _ => return start,
        };
        if df.norm() == 0.0 {
            break;
        }
        let step = f / df;
        s -= step;
        if s.norm() > 1.5 || !s.re.is_finite() || !s.im.is_finite() {
            return start;
        }
        if step.norm() < 1e-13 {
            break;
        }
    }
    match char_fn(model, s) {
        Ok(v) if v.norm() <= start_residual => s,
        _ => start,
    }
}

/// Enforce closure of the interior root set under complex conjugation by
/// averaging conjugate pairs and flattening near-real roots.
fn symmetrize_conjugates(roots: &mut [Complex64]) -> bool {
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
        let mut best: Option<(usize, f64)> = None;
        for j in (i + 1)..roots.len() {
            if used[j] {
                continue;
            }
            let d = (roots[i].conj() - roots[j]).norm();
            if best.map_or(true, |(_, bd)| d < bd) {
                best = Some((j, d));
            }
        }
        match best {
            Some((j, d)) if d < 1e-9 => {
                let re = 0.5 * (roots[i].re + roots[j].re);
                let im = 0.5 * (roots[i].im - roots[j].im);
                roots[i] = Complex64::new(re, im);
                roots[j] = Complex64::new(re, -im);
                used[i] = true;
                used[j] = true;
            }
            _ => return false,
        }
    }
    true
}

fn sort_roots(roots: &mut [Complex64]) {
    roots.sort_by(|a, b| {
        b.norm()
            .partial_cmp(&a.norm())
            .unwrap()
            .then(b.re.partial_cmp(&a.re).unwrap())
            .then(b.im.partial_cmp(&a.im).unwrap())
    });
}

/// Find every root of the cleared polynomial and select the `b` roots
/// strictly inside the unit circle, Newton-polished on the characteristic
/// function directly.
pub fn find_interior_roots(model: &QueueModel) -> Result<CharSystem> {
    let cleared = build_cleared_poly(model)?;
    let mut all_roots = poly::all_roots(&cleared).ok_or_else(|| Error::RootCountMismatch {
        expected: model.b() as usize,
        found: 0,
        moduli: vec![],
    })?;
    sort_roots(&mut all_roots);

    let mut interior: Vec<Complex64> = all_roots
        .iter()
        .filter(|r| r.norm() < 1.0 - INTERIOR_MARGIN)
        .map(|r| polish_on_char_fn(model, *r))
        .filter(|r| r.norm() < 1.0 - INTERIOR_MARGIN)
        .collect();

    let b = model.b() as usize;
    let mismatch = |found: usize| Error::RootCountMismatch {
        expected: b,
        found,
        moduli: all_roots.iter().map(|r| r.norm()).collect(),
    };
    if interior.len() != b {
        return Err(mismatch(interior.len()));
    }
    if !symmetrize_conjugates(&mut interior) {
        return Err(mismatch(interior.len()));
    }
    for i in 0..interior.len() {
        for j in (i + 1)..interior.len() {
            let d = (interior[i] - interior[j]).norm();
            if d < SEPARATION_TOL {
                return Err(Error::RepeatedRoot { root: interior[i], separation: d });
            }
        }
    }
    for &r in &interior {
        let residual = char_fn(model, r)?.norm();
        if residual > RESIDUAL_TOL {
            return Err(mismatch(interior.len()));
        }
    }
    sort_roots(&mut interior);
    Ok(CharSystem { cleared_poly: cleared, all_roots, interior_roots: interior })
}

/// Roots of the capacity factor `1 - mu + mu Y(s) = 0` of the full product
/// characteristic equation. For a valid model none of them lie inside the
/// unit disk, so the interior roots all come from the main factor.
pub fn capacity_factor_roots(model: &QueueModel) -> Result<Vec<Complex64>> {
    let y_pgf: RationalPgf = model.capacity().pgf();
    let mut w = vec![0.0];
    poly::add_scaled(&mut w, y_pgf.denominator(), 1.0 - model.mu());
    poly::add_scaled(&mut w, y_pgf.numerator(), model.mu());
    poly::trim_leading_zeros(&mut w);
    poly::all_roots(&w).ok_or_else(|| Error::SingularSystem("capacity factor root finding".into()))
}
