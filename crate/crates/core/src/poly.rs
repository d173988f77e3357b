//! Dense real-coefficient polynomial helpers and a global root finder.
//!
//! Coefficients are stored ascending: `c[0] + c[1] s + c[2] s^2 + ...`.
//! Everything here is plain `f64`/`Complex64` arithmetic; callers own the
//! conditioning decisions (scaling, trimming).

use num_complex::Complex64;

/// Evaluate a real-coefficient polynomial at a complex point (Horner).
pub(crate) fn eval(coeffs: &[f64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Evaluate a polynomial and its derivative at a complex point in one pass.
pub(crate) fn eval_with_deriv(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Evaluate at a real point.
pub(crate) fn eval_real(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Derivative at a real point.
pub(crate) fn deriv_real(coeffs: &[f64], x: f64) -> f64 {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &c in coeffs.iter().rev() {
        dp = dp * x + p;
        p = p * x + c;
    }
    dp
}

/// Product of two polynomials.
pub(crate) fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// `acc += k * a`, growing `acc` as needed.
pub(crate) fn add_scaled(acc: &mut Vec<f64>, a: &[f64], k: f64) {
    if acc.len() < a.len() {
        acc.resize(a.len(), 0.0);
    }
    for (dst, &src) in acc.iter_mut().zip(a.iter()) {
        *dst += k * src;
    }
}

/// Non-negative integer power.
#[cfg(test)]
pub(crate) fn pow(a: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = mul(&out, a);
    }
    out
}

/// Drop trailing (highest-degree) zero coefficients.
pub(crate) fn trim_leading_zeros(coeffs: &mut Vec<f64>) {
    while coeffs.len() > 1 && coeffs.last().is_some_and(|c| *c == 0.0) {
        coeffs.pop();
    }
}

/// All complex roots of a real-coefficient polynomial via the
/// Aberth-Ehrlich simultaneous iteration.
///
/// The coefficient vector is normalized internally so its largest entry has
/// magnitude one. Roots at the origin (zero low-order coefficients) are
/// factored out exactly before iterating. Returns `None` when the iteration
/// fails to converge, which for the polynomials arising here signals a
/// genuinely pathological input.
pub(crate) fn all_roots(coeffs: &[f64]) -> Option<Vec<Complex64>> {
    let mut c: Vec<f64> = coeffs.to_vec();
    trim_leading_zeros(&mut c);
    if c.len() <= 1 {
        // Constant polynomial: no roots (the zero polynomial is rejected upstream).
        return Some(vec![]);
    }

    let mut roots = Vec::with_capacity(c.len() - 1);
    // Exact roots at the origin.
    let mut low = 0;
    while low < c.len() - 1 && c[low] == 0.0 {
        low += 1;
    }
    for _ in 0..low {
        roots.push(Complex64::new(0.0, 0.0));
    }
    let mut c = c[low..].to_vec();

    let max_mag = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max_mag == 0.0 || !max_mag.is_finite() {
        return None;
    }
    for v in c.iter_mut() {
        *v /= max_mag;
    }

    let n = c.len() - 1;
    if n == 0 {
        return Some(roots);
    }
    if n == 1 {
        roots.push(Complex64::new(-c[0] / c[1], 0.0));
        return Some(roots);
    }
    if n == 2 {
        let (a, b, cc) = (c[2], c[1], c[0]);
        let disc = Complex64::new(b * b - 4.0 * a * cc, 0.0).sqrt();
        // Citardauq form on the smaller-cancellation branch.
        let q = -0.5 * (Complex64::new(b, 0.0) + disc * b.signum());
        roots.push(q / a);
        roots.push(Complex64::new(cc, 0.0) / q);
        return Some(roots);
    }

    // Initial guesses from the Newton polygon: the upper convex hull of
    // (i, ln|c_i|) groups the roots into rings, and each hull edge from i1
    // to i2 contributes i2-i1 roots of modulus roughly
    // (|c_i1|/|c_i2|)^(1/(i2-i1)). This stays meaningful when the
    // coefficients span hundreds of orders of magnitude, where single
    // global radius bounds overflow. An irrational angular offset keeps
    // real-axis symmetry from stalling the iteration.
    let hull = newton_polygon_hull(&c);
    let mut zs: Vec<Complex64> = Vec::with_capacity(n);
    for edge in hull.windows(2) {
        let (i1, y1) = edge[0];
        let (i2, y2) = edge[1];
        let count = i2 - i1;
        let radius = ((y1 - y2) / count as f64).exp().clamp(1e-12, 1e12);
        for j in 0..count {
            let k = zs.len();
            let theta = 2.0 * std::f64::consts::PI * (j as f64 + 0.5) / count as f64
                + 0.618_033_988_749_895 * k as f64
                + 0.41;
            zs.push(Complex64::from_polar(radius, theta));
        }
    }
    debug_assert_eq!(zs.len(), n);

    const MAX_SWEEPS: usize = 600;
    const TOL: f64 = 1e-13;
    let mut settled = vec![false; n];
    for _ in 0..MAX_SWEEPS {
        for k in 0..n {
            let zk = zs[k];
            let (p, dp) = eval_with_deriv(&c, zk);
            if !p.re.is_finite() || !p.im.is_finite() {
                // Evaluation overflowed; pull the guess inward and retry.
                zs[k] = zk * 0.5;
                settled[k] = false;
                continue;
            }
            if p.norm() == 0.0 {
                settled[k] = true;
                continue;
            }
            let newton = if dp.norm() > 0.0 {
                p / dp
            } else {
                // Flat spot: nudge off it.
                zs[k] += Complex64::new(1e-8, 1e-8);
                settled[k] = false;
                continue;
            };
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, &zj) in zs.iter().enumerate() {
                if j != k {
                    let d = zk - zj;
                    if d.norm() > 0.0 {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - newton * repulsion;
            let step = if denom.norm() > 1e-290 { newton / denom } else { newton };
            if !step.re.is_finite() || !step.im.is_finite() {
                zs[k] = zk * 0.5;
                settled[k] = false;
                continue;
            }
            zs[k] = zk - step;
            settled[k] = step.norm() < TOL * (1.0 + zs[k].norm());
        }
        if settled.iter().all(|&s| s) {
            roots.extend(zs);
            return Some(roots);
        }
    }
    // Far roots of polynomials whose coefficients span extreme ranges can
    // be numerically undetermined (Horner noise exceeds the residual) and
    // never settle. The result is still usable as long as every undecided
    // iterate sits safely outside the unit disk, which is the only region
    // callers consume.
    if zs.iter().zip(&settled).all(|(z, &s)| s || z.norm() > 1.05) {
        roots.extend(zs);
        return Some(roots);
    }
    None
}

/// Upper convex hull of `(i, ln|c_i|)` over nonzero coefficients, as
/// `(index, log-magnitude)` pairs from index 0 to the degree.
fn newton_polygon_hull(c: &[f64]) -> Vec<(usize, f64)> {
    let pts: Vec<(usize, f64)> = c
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, v.abs().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::with_capacity(pts.len());
    for &(i, y) in &pts {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            // Keep the hull upper-convex: drop the middle point when it
            // lies on or below the chord from (i1, y1) to (i, y).
            let cross = (i2 - i1) as f64 * (y - y1) - (i - i1) as f64 * (y2 - y1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((i, y));
    }
    hull
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(mut rs: Vec<Complex64>) -> Vec<f64> {
        rs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        rs.iter().map(|r| r.re).collect()
    }

    #[test]
    fn cubic_with_known_roots() {
        // (s-1)(s-2)(s-3) = s^3 - 6s^2 + 11s - 6
        let roots = all_roots(&[-6.0, 11.0, -6.0, 1.0]).unwrap();
        let rs = sorted_real(roots);
        for (got, want) in rs.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn complex_pair() {
        // s^2 + 1
        let roots = all_roots(&[1.0, 0.0, 1.0]).unwrap();
        assert_eq!(roots.len(), 2);
        for r in roots {
            assert!((r.norm() - 1.0).abs() < 1e-12);
            assert!(r.re.abs() < 1e-12);
        }
    }

    #[test]
    fn roots_at_origin_factored_exactly() {
        // s^2 (s - 5)
        let roots = all_roots(&[0.0, 0.0, -5.0, 1.0]).unwrap();
        let zeros = roots.iter().filter(|r| r.norm() == 0.0).count();
        assert_eq!(zeros, 2);
        assert!(roots.iter().any(|r| (r - Complex64::new(5.0, 0.0)).norm() < 1e-10));
    }

    #[test]
    fn wide_magnitude_spread() {
        // (s - 1e-3)(s - 1)(s - 1e3)
        let p = mul(&mul(&[-1e-3, 1.0], &[-1.0, 1.0]), &[-1e3, 1.0]);
        let rs = sorted_real(all_roots(&p).unwrap());
        assert!((rs[0] - 1e-3).abs() < 1e-9);
        assert!((rs[1] - 1.0).abs() < 1e-9);
        assert!((rs[2] - 1e3).abs() < 1e-6);
    }

    #[test]
    fn high_degree_unit_circle_cluster() {
        // s^20 - 1: twenty roots of unity.
        let mut c = vec![0.0; 21];
        c[0] = -1.0;
        c[20] = 1.0;
        let roots = all_roots(&c).unwrap();
        assert_eq!(roots.len(), 20);
        for r in &roots {
            assert!((r.norm() - 1.0).abs() < 1e-10);
            assert!(eval(&c, *r).norm() < 1e-9);
        }
    }

    #[test]
    fn eval_matches_deriv_pass() {
        let c = [0.03, 0.042, 0.07, -0.566, 0.184, 0.24];
        let z = Complex64::new(0.3, -0.7);
        let (p, dp) = eval_with_deriv(&c, z);
        assert!((p - eval(&c, z)).norm() < 1e-15);
        let h = 1e-7;
        let fd = (eval(&c, z + h) - eval(&c, z - h)) / (2.0 * h);
        assert!((dp - fd).norm() < 1e-6);
    }
}
