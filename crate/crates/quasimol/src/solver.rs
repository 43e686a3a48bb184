//! Semi-discrete scheme and time integration.
//!
//! The coefficients solve the ODE system
//! `drho_i/dt = -f(t, ih, [rho](ih), grad[rho](ih))` with
//! `rho_i(0) = rho_0(ih)`, advanced by classical RK4. Each right-hand-side
//! stage is one fused stencil convolution over the grid followed by one
//! pointwise (or batched) application of the defining function; the stencil
//! is built once per solve and shared by all stages.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::grid::{CoefficientField, GridError, UniformGrid};
use crate::interp::{self, InterpError, Stencil};
use crate::kernels::{KernelError, KernelSpec, ScaledKernel};

type PointFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type SpaceTimeFn = dyn Fn(f64, &[f64]) -> f64 + Send + Sync;
type GradientFn = dyn Fn(f64, &[f64]) -> Vec<f64> + Send + Sync;
type DefiningFn = dyn Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync;
type BatchFn = dyn Fn(f64, f64, f64, &[f64], &[f64], &mut [f64]) + Send + Sync;

/// A first-order evolution problem `d_t rho + f(t, x, rho, grad rho) = 0`
/// with initial data, the spatial window to discretize, and (for
/// manufactured problems) the exact solution to compare against.
pub struct DefiningFunction {
    dim: usize,
    window: Vec<(f64, f64)>,
    f: Box<DefiningFn>,
    initial: Box<PointFn>,
    exact: Option<Box<SpaceTimeFn>>,
    exact_gradient: Option<Box<GradientFn>>,
    batch_neg_f: Option<Box<BatchFn>>,
}

impl DefiningFunction {
    pub fn new(
        dim: usize,
        window: Vec<(f64, f64)>,
        f: impl Fn(f64, &[f64], f64, &[f64]) -> f64 + Send + Sync + 'static,
        initial: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(window.len(), dim, "one window interval per axis");
        DefiningFunction {
            dim,
            window,
            f: Box::new(f),
            initial: Box::new(initial),
            exact: None,
            exact_gradient: None,
            batch_neg_f: None,
        }
    }

    pub fn with_exact(
        mut self,
        exact: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exact = Some(Box::new(exact));
        self
    }

    pub fn with_exact_gradient(
        mut self,
        gradient: impl Fn(f64, &[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.exact_gradient = Some(Box::new(gradient));
        self
    }

    /// Registers a fused evaluation of `-f` over one 1-d grid row:
    /// `out[i] = -f(t, x0 + i*h, rho[i], grad[i])`. Must agree with the
    /// pointwise `f`; the solver prefers it because the per-point dynamic
    /// dispatch dominates once the convolution is fast.
    pub fn with_batched_rhs(
        mut self,
        batch: impl Fn(f64, f64, f64, &[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        self.batch_neg_f = Some(Box::new(batch));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> &[(f64, f64)] {
        &self.window
    }

    pub fn f(&self, t: f64, x: &[f64], rho: f64, grad: &[f64]) -> f64 {
        (self.f)(t, x, rho, grad)
    }

    pub fn initial(&self, x: &[f64]) -> f64 {
        (self.initial)(x)
    }

    pub fn exact(&self, t: f64, x: &[f64]) -> Option<f64> {
        self.exact.as_ref().map(|e| e(t, x))
    }

    pub fn exact_gradient(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        self.exact_gradient.as_ref().map(|e| e(t, x))
    }

    pub(crate) fn batched_rhs(&self) -> Option<&BatchFn> {
        self.batch_neg_f.as_deref()
    }
}

/// Time step selection: explicit, or proportional to the grid spacing.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize {
    Dt(f64),
    /// `dt = factor * h`
    CflH(f64),
}

impl StepSize {
    pub fn dt(self, h: f64) -> f64 {
        match self {
            StepSize::Dt(dt) => dt,
            StepSize::CflH(c) => c * h,
        }
    }
}

/// Everything a solve needs besides the problem itself. `h` and `epsilon`
/// refine independently, subject to `0 < h < epsilon`.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub h: f64,
    pub epsilon: f64,
    pub kernel: KernelSpec,
    pub t_final: f64,
    pub step: StepSize,
    pub dim: usize,
    /// States are recorded at the first step boundary at or past each
    /// requested time.
    pub snapshot_times: Vec<f64>,
}

impl SolverConfig {
    pub fn new(h: f64, epsilon: f64, kernel: KernelSpec, t_final: f64, step: StepSize) -> Self {
        SolverConfig {
            h,
            epsilon,
            kernel,
            t_final,
            step,
            dim: 1,
            snapshot_times: Vec::new(),
        }
    }

    fn validate(&self, problem: &DefiningFunction) -> Result<f64, SolveError> {
        if self.dim != problem.dim() {
            return Err(SolveError::DimensionMismatch {
                config: self.dim,
                problem: problem.dim(),
            });
        }
        if !(self.h > 0.0 && self.h < self.epsilon) || !self.epsilon.is_finite() {
            return Err(SolveError::ScaleOrder {
                h: self.h,
                epsilon: self.epsilon,
            });
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(SolveError::InvalidFinalTime { t: self.t_final });
        }
        let dt = self.step.dt(self.h);
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(SolveError::InvalidStep { dt });
        }
        Ok(dt)
    }
}

/// Outcome of a completed solve. The field's time metadata is exactly
/// `t_final`; the last step is shortened to land there.
pub struct SolveResult {
    pub field: CoefficientField,
    pub step_count: usize,
    pub wall_time: Duration,
    pub snapshots: Vec<CoefficientField>,
}

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("scheme requires 0 < h < epsilon, got h={h}, epsilon={epsilon}")]
    ScaleOrder { h: f64, epsilon: f64 },
    #[error("time step must be positive and finite, got {dt}")]
    InvalidStep { dt: f64 },
    #[error("final time must be nonnegative and finite, got {t}")]
    InvalidFinalTime { t: f64 },
    #[error("config is {config}-dimensional but the problem is {problem}-dimensional")]
    DimensionMismatch { config: usize, problem: usize },
    #[error("right-hand side produced a non-finite value at t={time}")]
    NonFinite { time: f64 },
    #[error("solution lost finiteness during step {step} (t={time}); last finite state attached")]
    BlowUp {
        step: usize,
        time: f64,
        last: Box<CoefficientField>,
    },
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Reusable stage buffers; one allocation per solve, none per step.
struct Workspace {
    padded: Vec<f64>,
    value: Vec<f64>,
    grad: Vec<f64>,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    x: Vec<f64>,
    grad_point: Vec<f64>,
}

impl Workspace {
    fn new(n: usize, dim: usize) -> Self {
        Workspace {
            padded: Vec::new(),
            value: vec![0.0; n],
            grad: vec![0.0; n],
            k: std::array::from_fn(|_| vec![0.0; n]),
            stage: vec![0.0; n],
            x: vec![0.0; dim],
            grad_point: vec![0.0; dim],
        }
    }
}

fn stencil_matches_grid(stencil: &Stencil, grid: &UniformGrid) -> Result<(), SolveError> {
    if stencil.h() != grid.spacing() || stencil.dim() != grid.dim() {
        return Err(InterpError::StencilMismatch {
            stencil_h: stencil.h(),
            stencil_eps: stencil.epsilon(),
            stencil_dim: stencil.dim(),
            h: grid.spacing(),
            eps: stencil.epsilon(),
            dim: grid.dim(),
        }
        .into());
    }
    Ok(())
}

/// Negative defining function evaluated through the interpolant:
/// `out_i = -f(t, ih, [state](ih), grad[state](ih))`.
fn rhs_into(
    t: f64,
    values: &[f64],
    grid: &UniformGrid,
    problem: &DefiningFunction,
    stencil: &Stencil,
    ws: &mut Workspace,
    out: &mut [f64],
) -> Result<(), SolveError> {
    if grid.dim() == 1 {
        interp::pad_values(values, stencil.half() as usize, &mut ws.padded);
        interp::evaluate_pair_padded(stencil, &ws.padded, &mut ws.value, &mut ws.grad);
        let h = grid.spacing();
        let x0 = grid.lo()[0] as f64 * h;
        if let Some(batch) = problem.batched_rhs() {
            batch(t, x0, h, &ws.value, &ws.grad, out);
        } else {
            for (i, slot) in out.iter_mut().enumerate() {
                ws.x[0] = x0 + i as f64 * h;
                *slot = -problem.f(t, &ws.x, ws.value[i], &ws.grad[i..=i]);
            }
        }
    } else {
        // slow reference path for 2-d and 3-d fields
        let field = CoefficientField::from_values(grid.clone(), values.to_vec(), t)
            .expect("buffer sized from grid");
        let mut grads = Vec::with_capacity(grid.dim());
        interp::evaluate_on_grid_generic(&field, stencil, crate::Alpha::Value, &mut ws.value);
        for axis in 0..grid.dim() {
            let mut g = vec![0.0; values.len()];
            interp::evaluate_on_grid_generic(&field, stencil, crate::Alpha::Partial(axis), &mut g);
            grads.push(g);
        }
        let ws_x = &mut ws.x;
        let ws_g = &mut ws.grad_point;
        let val = &ws.value;
        grid.for_each_point(|flat, x| {
            ws_x.copy_from_slice(x);
            for (axis, g) in grads.iter().enumerate() {
                ws_g[axis] = g[flat];
            }
            out[flat] = -problem.f(t, ws_x, val[flat], ws_g);
        });
    }
    if !out.iter().all(|v| v.is_finite()) {
        return Err(SolveError::NonFinite { time: t });
    }
    Ok(())
}

/// One derivative field of the semi-discrete system, as a standalone
/// operation. The solver's time loop uses the same computation through
/// preallocated buffers.
pub fn rhs(
    t: f64,
    state: &CoefficientField,
    problem: &DefiningFunction,
    stencil: &Stencil,
) -> Result<CoefficientField, SolveError> {
    stencil_matches_grid(stencil, state.grid())?;
    let mut ws = Workspace::new(state.values().len(), state.grid().dim());
    let mut out = vec![0.0; state.values().len()];
    rhs_into(t, state.values(), state.grid(), problem, stencil, &mut ws, &mut out)?;
    Ok(CoefficientField::from_values(state.grid().clone(), out, t)
        .expect("buffer sized from grid"))
}

/// Classical four-stage Runge-Kutta update from `t` to `t + dt`, writing
/// the advanced coefficients to `next`.
#[allow(clippy::too_many_arguments)]
fn rk4_into(
    t: f64,
    values: &[f64],
    grid: &UniformGrid,
    dt: f64,
    problem: &DefiningFunction,
    stencil: &Stencil,
    ws: &mut Workspace,
    next: &mut [f64],
) -> Result<(), SolveError> {
    let half_dt = 0.5 * dt;
    let mut k = std::mem::take(&mut ws.k);
    let mut stage = std::mem::take(&mut ws.stage);

    rhs_into(t, values, grid, problem, stencil, ws, &mut k[0])?;
    for (s, (v, k1)) in stage.iter_mut().zip(values.iter().zip(&k[0])) {
        *s = v + half_dt * k1;
    }
    rhs_into(t + half_dt, &stage, grid, problem, stencil, ws, &mut k[1])?;
    for (s, (v, k2)) in stage.iter_mut().zip(values.iter().zip(&k[1])) {
        *s = v + half_dt * k2;
    }
    rhs_into(t + half_dt, &stage, grid, problem, stencil, ws, &mut k[2])?;
    for (s, (v, k3)) in stage.iter_mut().zip(values.iter().zip(&k[2])) {
        *s = v + dt * k3;
    }
    rhs_into(t + dt, &stage, grid, problem, stencil, ws, &mut k[3])?;

    let sixth = dt / 6.0;
    for i in 0..values.len() {
        next[i] = values[i] + sixth * (k[0][i] + 2.0 * (k[1][i] + k[2][i]) + k[3][i]);
    }

    ws.k = k;
    ws.stage = stage;
    Ok(())
}

/// One RK4 step as a standalone operation; all four stages share `stencil`.
pub fn rk4_step(
    t: f64,
    state: &CoefficientField,
    dt: f64,
    problem: &DefiningFunction,
    stencil: &Stencil,
) -> Result<CoefficientField, SolveError> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SolveError::InvalidStep { dt });
    }
    stencil_matches_grid(stencil, state.grid())?;
    let mut ws = Workspace::new(state.values().len(), state.grid().dim());
    let mut next = vec![0.0; state.values().len()];
    rk4_into(t, state.values(), state.grid(), dt, problem, stencil, &mut ws, &mut next)?;
    Ok(CoefficientField::from_values(state.grid().clone(), next, t + dt)
        .expect("buffer sized from grid"))
}

/// Samples the initial data on the window grid and integrates to
/// `config.t_final`. Steps count `ceil(T/dt)` with the last one shortened,
/// so the result's time is exactly `T`.
pub fn solve(problem: &DefiningFunction, config: &SolverConfig) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    let dt = config.validate(problem)?;
    let kernel = ScaledKernel::new(config.kernel.build()?, config.epsilon)?;
    if kernel.dim() != config.dim {
        return Err(SolveError::DimensionMismatch {
            config: config.dim,
            problem: kernel.dim(),
        });
    }
    let stencil = Stencil::build(&kernel, config.h)?;
    let grid = UniformGrid::covering(config.h, problem.window())?;
    let n = grid.len();

    let mut current = {
        let field = CoefficientField::from_fn(grid.clone(), 0.0, |x| problem.initial(x));
        field.values().to_vec()
    };
    let mut next = vec![0.0; n];
    let mut ws = Workspace::new(n, grid.dim());

    let total = config.t_final;
    let steps = if total == 0.0 {
        0
    } else {
        (total / dt).ceil() as usize
    };

    let mut snapshot_times = config.snapshot_times.clone();
    snapshot_times.sort_by(|a, b| a.partial_cmp(b).expect("finite snapshot times"));
    let mut snapshots = Vec::new();
    let mut pending = snapshot_times.iter().copied().peekable();

    let mut t = 0.0;
    while pending.peek().is_some_and(|&want| want <= t) {
        let snap = CoefficientField::from_values(grid.clone(), current.clone(), t)
            .expect("buffer sized from grid");
        snapshots.push(snap);
        pending.next();
    }

    for step in 0..steps {
        let t_next = if step + 1 == steps {
            total
        } else {
            (step + 1) as f64 * dt
        };
        let dt_step = t_next - t;
        let result = rk4_into(
            t, &current, &grid, dt_step, problem, &stencil, &mut ws, &mut next,
        );
        let finite = match result {
            Ok(()) => next.iter().all(|v| v.is_finite()),
            Err(SolveError::NonFinite { .. }) => false,
            Err(other) => return Err(other),
        };
        if !finite {
            let last = CoefficientField::from_values(grid.clone(), current, t)
                .expect("buffer sized from grid");
            return Err(SolveError::BlowUp {
                step,
                time: t,
                last: Box::new(last),
            });
        }
        std::mem::swap(&mut current, &mut next);
        t = t_next;
        while pending.peek().is_some_and(|&want| want <= t) {
            let snap = CoefficientField::from_values(grid.clone(), current.clone(), t)
                .expect("buffer sized from grid");
            snapshots.push(snap);
            pending.next();
        }
    }

    let field = CoefficientField::from_values(grid, current, total)
        .expect("buffer sized from grid");
    Ok(SolveResult {
        field,
        step_count: steps,
        wall_time: started.elapsed(),
        snapshots,
    })
}
