//! Concrete evolution problems: the manufactured Burgers benchmark in its
//! two variants, and a linear transport sanity problem.
//!
//! The Burgers benchmark prescribes the exact solution
//! `rho(t, x) = psi(x + t)` for a compactly supported bump `psi` and moves
//! it with `f(t, x, rho, g) = -rho*g - (1 - psi)*psi'` evaluated at `x + t`:
//! substituting the exact solution makes the time derivative `psi'` match
//! `-f` identically, so every deviation in a run is discretization error.
//! The bump is the problem's own data, distinct from the scheme kernel: a
//! unit-integral profile of half-width `delta`, built from the same radial
//! kernel machinery.

use std::cell::RefCell;

use thiserror::Error;

use crate::kernels::{
    high_order_weights, CompositeRadialKernel, KernelError, KernelSpec, ScaledKernel,
    WendlandBase,
};
use crate::solver::DefiningFunction;

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("unknown problem {name:?}; expected burgers-a, burgers-b, or transport:<u>")]
    Unknown { name: String },
    #[error("transport velocity {u} would carry the profile outside the window; need |u| <= 1")]
    VelocityTooLarge { u: f64 },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// The two published parameter sets of the Burgers benchmark.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Series {
    A,
    B,
}

/// Everything that distinguishes the two series: the scheme kernel the
/// runs should use, and the bump profile the solution is built from.
#[derive(Clone, Copy, Debug)]
pub struct SeriesSpec {
    pub series: Series,
    /// support half-width of the bump
    pub delta: f64,
}

/// Final time of the benchmark runs.
pub const BURGERS_T_FINAL: f64 = 0.5;
/// Computational window the coefficient grid covers.
pub const WINDOW: (f64, f64) = (-1.25, 0.75);

impl SeriesSpec {
    pub fn new(series: Series) -> Self {
        SeriesSpec { series, delta: 0.5 }
    }

    /// Kernel the benchmark runs are meant to use: fourth order, smoothness
    /// 4 for series A; second order, smoothness 2 for series B.
    pub fn scheme_kernel(&self) -> KernelSpec {
        match self.series {
            Series::A => KernelSpec::Composite {
                order: 4,
                smoothness: 4,
                dim: 1,
            },
            Series::B => KernelSpec::Composite {
                order: 2,
                smoothness: 2,
                dim: 1,
            },
        }
    }

    /// The bump `psi` as a scaled kernel: a line-renormalized profile
    /// dilated to half-width `delta`. Series A composes it to fourth order
    /// with the same node/weight construction as the scheme kernels; series
    /// B uses the plain second-order profile.
    pub fn bump(&self) -> ScaledKernel {
        let (k, nodes, order) = match self.series {
            Series::A => (2, vec![1.0, 0.8], 4),
            Series::B => (1, vec![1.0], 2),
        };
        let base = WendlandBase::line_renormalized(k).expect("tabulated profile shape");
        let weights = high_order_weights(&nodes, 1).expect("distinct positive nodes");
        let kernel = CompositeRadialKernel::from_parts(base, nodes, weights, order)
            .expect("matching node and weight counts");
        ScaledKernel::new(kernel, self.delta).expect("positive delta")
    }
}

/// Longest base coefficient table (support exponent 8, cubic factor),
/// padded target for the unrolled Horner in the row evaluator.
const PAD_LEN: usize = 12;

fn padded(coeffs: &[f64], scale: f64) -> [f64; PAD_LEN] {
    let mut out = [0.0; PAD_LEN];
    for (slot, &c) in out.iter_mut().zip(coeffs) {
        *slot = scale * c;
    }
    out
}

#[inline]
fn horner12(c: &[f64; PAD_LEN], u: f64) -> f64 {
    let mut acc = c[PAD_LEN - 1];
    for m in (0..PAD_LEN - 1).rev() {
        acc = acc * u + c[m];
    }
    acc
}

#[derive(Clone, Debug)]
struct NodeRow {
    /// piece boundary: this node contributes for |y| < support
    support: f64,
    /// value coefficients in u = 1 - |y|/support, weight folded in
    cv: [f64; PAD_LEN],
    /// radial-derivative coefficients, weight and chain rule folded in
    cd: [f64; PAD_LEN],
}

/// Piecewise-polynomial plan for evaluating a 1-d bump and its derivative
/// along an arithmetic sequence of points. Each kernel piece covers a
/// contiguous index range on which `u = 1 - |y|/support` is affine in the
/// index, so the inner loops are branch-free and vectorize.
#[derive(Clone, Debug)]
pub(crate) struct BumpRowPlan {
    nodes: Vec<NodeRow>,
}

impl BumpRowPlan {
    pub(crate) fn new(profile: &ScaledKernel) -> Self {
        debug_assert_eq!(profile.dim(), 1);
        let delta = profile.epsilon();
        let base = profile.kernel().base();
        let nodes = profile
            .kernel()
            .nodes()
            .iter()
            .zip(profile.kernel().weights())
            .map(|(&a, &w)| NodeRow {
                support: delta * a,
                cv: padded(base.deriv_coeffs(0), w / delta),
                cd: padded(base.deriv_coeffs(1), w / (delta * delta * a)),
            })
            .collect();
        BumpRowPlan { nodes }
    }

    /// Writes `psi(y_i)` and `psi'(y_i)` for `y_i = y0 + i*step`,
    /// `i = 0..out_v.len()`; `step` must be positive.
    pub(crate) fn eval_row(&self, y0: f64, step: f64, out_v: &mut [f64], out_g: &mut [f64]) {
        debug_assert!(step > 0.0);
        debug_assert_eq!(out_v.len(), out_g.len());
        out_v.fill(0.0);
        out_g.fill(0.0);
        let n = out_v.len() as i64;
        for node in &self.nodes {
            let s = node.support;
            let first = ((-s - y0) / step).floor() as i64 + 1;
            let last = ((s - y0) / step).ceil() as i64 - 1;
            let split = ((-y0) / step).ceil() as i64; // first index with y >= 0
            for (lo, hi, sigma) in [
                (first, last.min(split - 1), -1.0),
                (first.max(split), last, 1.0),
            ] {
                let lo = lo.clamp(0, n) as usize;
                let hi = (hi + 1).clamp(0, n) as usize;
                if lo >= hi {
                    continue;
                }
                let u0 = 1.0 - sigma * y0 / s;
                let du = -sigma * step / s;
                let (v_run, g_run) = (&mut out_v[lo..hi], &mut out_g[lo..hi]);
                for (i, (v, g)) in v_run.iter_mut().zip(g_run).enumerate() {
                    let u = u0 + du * (lo + i) as f64;
                    *v += horner12(&node.cv, u);
                    *g += sigma * horner12(&node.cd, u);
                }
            }
        }
    }
}

thread_local! {
    /// Row buffers for the batched source evaluation; per-thread so the
    /// defining function stays shareable across parallel table cells.
    static ROW_SCRATCH: RefCell<(Vec<f64>, Vec<f64>)> = const { RefCell::new((Vec::new(), Vec::new())) };
}

/// The manufactured Burgers problem for one series: exact solution
/// `psi(x + t)`, dynamics `f(t, x, rho, g) = -rho*g - (1 - psi)*psi'`
/// at `x + t`, initial data `psi`, window fixed by the benchmark.
pub fn burgers_f(series: SeriesSpec) -> DefiningFunction {
    let bump = series.bump();
    let psi = {
        let b = bump.clone();
        move |y: f64| b.value(&[y])
    };
    let psi_prime = {
        let b = bump.clone();
        move |y: f64| b.partial(&[y], 0).expect("profiles are at least C^2")
    };
    let plan = BumpRowPlan::new(&bump);

    let f = {
        let (psi, psi_prime) = (psi.clone(), psi_prime.clone());
        move |t: f64, x: &[f64], rho: f64, g: &[f64]| {
            let y = x[0] + t;
            -rho * g[0] - (1.0 - psi(y)) * psi_prime(y)
        }
    };
    let initial = {
        let psi = psi.clone();
        move |x: &[f64]| psi(x[0])
    };
    let exact = {
        let psi = psi.clone();
        move |t: f64, x: &[f64]| psi(x[0] + t)
    };
    let exact_gradient = move |t: f64, x: &[f64]| vec![psi_prime(x[0] + t)];
    let batch = move |t: f64, x0: f64, h: f64, rho: &[f64], grad: &[f64], out: &mut [f64]| {
        ROW_SCRATCH.with(|cell| {
            let (v, g) = &mut *cell.borrow_mut();
            v.resize(out.len(), 0.0);
            g.resize(out.len(), 0.0);
            plan.eval_row(x0 + t, h, v, g);
            for i in 0..out.len() {
                out[i] = rho[i] * grad[i] + (1.0 - v[i]) * g[i];
            }
        });
    };

    DefiningFunction::new(1, vec![WINDOW], f, initial)
        .with_exact(exact)
        .with_exact_gradient(exact_gradient)
        .with_batched_rhs(batch)
}

/// Constant-velocity transport `d_t rho + u * d_x rho = 0` of a bump,
/// centered so the exact translate `profile(x - u*t - c0)` stays inside the
/// window through the benchmark's final time; this needs `|u| <= 1` and is
/// checked at construction.
pub fn linear_transport(u: f64, profile: ScaledKernel) -> Result<DefiningFunction, ProblemError> {
    if !(u.abs() <= 1.0) {
        return Err(ProblemError::VelocityTooLarge { u });
    }
    let c0 = -u * BURGERS_T_FINAL / 2.0;
    let center = move |t: f64| c0 + u * t;
    let f = move |_t: f64, _x: &[f64], _rho: f64, g: &[f64]| u * g[0];
    let initial = {
        let p = profile.clone();
        move |x: &[f64]| p.value(&[x[0] - c0])
    };
    let exact = {
        let p = profile.clone();
        move |t: f64, x: &[f64]| p.value(&[x[0] - center(t)])
    };
    let exact_gradient = move |t: f64, x: &[f64]| {
        vec![profile
            .partial(&[x[0] - center(t)], 0)
            .expect("profiles are at least C^2")]
    };
    Ok(DefiningFunction::new(1, vec![WINDOW], f, initial)
        .with_exact(exact)
        .with_exact_gradient(exact_gradient))
}

/// Problem selection by name: `burgers-a`, `burgers-b`, `transport:<u>`
/// (transport carries the series-A bump).
pub fn parse_problem(name: &str) -> Result<DefiningFunction, ProblemError> {
    match name {
        "burgers-a" => Ok(burgers_f(SeriesSpec::new(Series::A))),
        "burgers-b" => Ok(burgers_f(SeriesSpec::new(Series::B))),
        _ => {
            if let Some(vel) = name.strip_prefix("transport:") {
                let u: f64 = vel.parse().map_err(|_| ProblemError::Unknown {
                    name: name.to_string(),
                })?;
                linear_transport(u, SeriesSpec::new(Series::A).bump())
            } else {
                Err(ProblemError::Unknown {
                    name: name.to_string(),
                })
            }
        }
    }
}
