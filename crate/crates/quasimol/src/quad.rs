//! One-dimensional Gauss–Legendre quadrature on panel decompositions.
//!
//! Every integrand in this crate is piecewise polynomial once the panel
//! boundaries include the kernel breakpoints, so a fixed 20-point rule per
//! panel (exact through degree 39) integrates them to rounding error. No
//! adaptivity is needed; absolute-value integrands are handled by splitting
//! panels at sign changes first.

use std::sync::OnceLock;

const GL_POINTS: usize = 20;

/// Nodes and weights of the 20-point Gauss–Legendre rule on [-1, 1].
fn gauss_legendre_20() -> &'static ([f64; GL_POINTS], [f64; GL_POINTS]) {
    static RULE: OnceLock<([f64; GL_POINTS], [f64; GL_POINTS])> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_POINTS;
        let mut nodes = [0.0; GL_POINTS];
        let mut weights = [0.0; GL_POINTS];
        for i in 0..n {
            // Chebyshev-like initial guess, then Newton on P_n(x) = 0.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_deriv(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    let (p2, d2) = legendre_with_deriv(n, x);
                    dp = d2;
                    x -= p2 / d2;
                    break;
                }
            }
            nodes[i] = x;
            weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// Value and derivative of the Legendre polynomial P_n via the three-term
/// recurrence.
fn legendre_with_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Integrates `f` over each consecutive panel `[edges[i], edges[i+1]]` with
/// the 20-point rule and sums the contributions.
pub fn integrate_panels(f: impl Fn(f64) -> f64, edges: &[f64]) -> f64 {
    let (nodes, weights) = gauss_legendre_20();
    let mut total = 0.0;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi <= lo {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let hw = 0.5 * (hi - lo);
        let mut acc = 0.0;
        for (x, w) in nodes.iter().zip(weights) {
            acc += w * f(mid + hw * x);
        }
        total += hw * acc;
    }
    total
}

/// Refines `edges` with the sign changes of `f`, located by scan plus
/// bisection, so that `f` has one sign per returned panel.
pub fn split_at_sign_changes(f: impl Fn(f64) -> f64, edges: &[f64]) -> Vec<f64> {
    const SCAN: usize = 256;
    let mut out = Vec::with_capacity(edges.len());
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        out.push(lo);
        if hi <= lo {
            continue;
        }
        let step = (hi - lo) / SCAN as f64;
        let mut a = lo;
        let mut fa = f(a);
        for s in 1..=SCAN {
            let b = if s == SCAN { hi } else { lo + s as f64 * step };
            let fb = f(b);
            if fa == 0.0 || fa.signum() != fb.signum() {
                let mut x0 = a;
                let mut x1 = b;
                let mut f0 = fa;
                for _ in 0..80 {
                    let xm = 0.5 * (x0 + x1);
                    let fm = f(xm);
                    if f0.signum() == fm.signum() {
                        x0 = xm;
                        f0 = fm;
                    } else {
                        x1 = xm;
                    }
                }
                out.push(0.5 * (x0 + x1));
            }
            a = b;
            fa = fb;
        }
    }
    out.push(*edges.last().expect("at least two edges"));
    out.sort_by(|x, y| x.partial_cmp(y).expect("finite edges"));
    out.dedup();
    out
}

/// Supremum of `|f|` over `[edges[0], edges[last]]` by dense sampling; the
/// integrands here are polynomial per panel so 2^17 samples per panel pin the
/// maximum far below the tolerances this is used with.
pub fn sup_abs(f: impl Fn(f64) -> f64, edges: &[f64]) -> f64 {
    const SAMPLES: usize = 1 << 17;
    let mut best = 0.0f64;
    for pair in edges.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        for s in 0..=SAMPLES {
            let x = lo + (hi - lo) * (s as f64 / SAMPLES as f64);
            best = best.max(f(x).abs());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rule_is_exact_through_degree_39() {
        // Monomial integrals over [0, 1]: x^d integrates to 1/(d+1).
        for d in 0..=39u32 {
            let val = integrate_panels(|x| x.powi(d as i32), &[0.0, 1.0]);
            assert_relative_eq!(val, 1.0 / (d as f64 + 1.0), max_relative = 1e-13);
        }
    }

    #[test]
    fn panel_splitting_matches_single_panel_for_polynomials() {
        let f = |x: f64| 3.0 * x * x - x + 0.25;
        let a = integrate_panels(f, &[0.0, 2.0]);
        let b = integrate_panels(f, &[0.0, 0.3, 1.1, 2.0]);
        assert_relative_eq!(a, b, max_relative = 1e-14);
    }

    #[test]
    fn sign_splitting_makes_abs_integrals_exact() {
        // integral of |sin-like cubic| with a root inside the panel
        let f = |x: f64| x * x * x - 0.125; // root at x = 0.5
        let edges = split_at_sign_changes(f, &[0.0, 1.0]);
        assert!(edges.iter().any(|&e| (e - 0.5).abs() < 1e-12));
        let val = integrate_panels(|x| f(x).abs(), &edges);
        // exact: int_0^.5 (1/8 - x^3) + int_.5^1 (x^3 - 1/8) = 3/64 + 11/64
        assert_relative_eq!(val, 14.0 / 64.0, max_relative = 1e-13);
    }

    #[test]
    fn sup_abs_finds_interior_maximum() {
        let f = |x: f64| x * (1.0 - x); // max 0.25 at x = 0.5
        let m = sup_abs(f, &[0.0, 1.0]);
        assert_relative_eq!(m, 0.25, max_relative = 1e-9);
    }
}
