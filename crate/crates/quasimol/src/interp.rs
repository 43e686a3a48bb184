//! Quasi-interpolant evaluation: pointwise, and grid-to-grid through
//! precomputed stencils.
//!
//! The interpolant of a coefficient field is
//! `[rho](x) = h^dim * sum_j rho_j * zeta_eps(x - jh)`, a finite sum because
//! the kernel is compactly supported. At grid points the kernel factors
//! depend only on the index offset, so grid-to-grid evaluation is a discrete
//! convolution with a stencil of kernel samples; that convolution is the
//! solver's inner loop and is written to autovectorize, with value and
//! gradient fused into one pass over the coefficients.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::grid::CoefficientField;
use crate::kernels::{KernelError, ScaledKernel};
use crate::Alpha;

#[derive(Debug, Error)]
pub enum InterpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("field dimension {field_dim} does not match kernel dimension {kernel_dim}")]
    DimensionMismatch { field_dim: usize, kernel_dim: usize },
    #[error("stencil built for h={stencil_h}, epsilon={stencil_eps}, dim={stencil_dim}, got h={h}, epsilon={eps}, dim={dim}")]
    StencilMismatch {
        stencil_h: f64,
        stencil_eps: f64,
        stencil_dim: usize,
        h: f64,
        eps: f64,
        dim: usize,
    },
    #[error("stencil box of {points} points exceeds the {limit} point limit")]
    StencilTooLarge { points: usize, limit: usize },
    #[error("coefficient-mode errors compare plain values; derivatives need the interpolant mode")]
    CoefficientModeDerivative,
}

/// Limit on stencil box size; a request past this is a misconfiguration
/// (e.g. a 3-d stencil with h orders of magnitude below epsilon), not a
/// workload this crate is meant for.
const STENCIL_POINT_LIMIT: usize = 1 << 26;

/// Samples of a scaled kernel and its gradient at grid offsets, for
/// grid-to-grid evaluation. Offsets run over the box `-half..=half` per
/// axis; the kernel support keeps `half <= ceil(eps/h) - 1` whenever the
/// scale nodes stay within the unit ball.
#[derive(Clone, Debug)]
pub struct Stencil {
    h: f64,
    epsilon: f64,
    dim: usize,
    half: i64,
    /// kernel values over the flattened box, row-major, last axis fastest
    values0: Vec<f64>,
    /// gradient components over the box, one per axis
    values1: Vec<Vec<f64>>,
    /// 1-d fast path: h * values0 at offsets 0..=half (symmetric half)
    w0_scaled: Vec<f64>,
    /// 1-d fast path: h * values1 at offsets 0..=half (antisymmetric half,
    /// entry 0 identically zero)
    w1_scaled: Vec<f64>,
}

impl Stencil {
    /// Samples `kernel` and its gradient at every offset `m*h` inside the
    /// support. Needs a kernel smooth enough for a gradient.
    pub fn build(kernel: &ScaledKernel, h: f64) -> Result<Self, InterpError> {
        let dim = kernel.dim();
        let half = ((kernel.support_radius() / h).ceil() - 1.0).max(0.0) as i64;
        let side = 2 * half as usize + 1;
        let points = side.checked_pow(dim as u32).filter(|&p| p <= STENCIL_POINT_LIMIT);
        let points = points.ok_or(InterpError::StencilTooLarge {
            points: side.saturating_pow(dim as u32),
            limit: STENCIL_POINT_LIMIT,
        })?;

        let mut values0 = vec![0.0; points];
        let mut values1 = vec![vec![0.0; points]; dim];
        let mut m = vec![-half; dim];
        let mut x = vec![0.0; dim];
        for flat in 0..points {
            for (xd, &md) in x.iter_mut().zip(&m) {
                *xd = md as f64 * h;
            }
            values0[flat] = kernel.value(&x);
            for (axis, component) in values1.iter_mut().enumerate() {
                component[flat] = kernel.partial(&x, axis)?;
            }
            for axis in (0..dim).rev() {
                m[axis] += 1;
                if m[axis] <= half {
                    break;
                }
                m[axis] = -half;
            }
        }

        let (mut w0_scaled, mut w1_scaled) = (Vec::new(), Vec::new());
        if dim == 1 {
            let vol = h;
            let center = half as usize;
            w0_scaled = (0..=center).map(|i| vol * values0[center + i]).collect();
            w1_scaled = (0..=center).map(|i| vol * values1[0][center + i]).collect();
        }

        Ok(Stencil {
            h,
            epsilon: kernel.epsilon(),
            dim,
            half,
            values0,
            values1,
            w0_scaled,
            w1_scaled,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Offsets run `-half()..=half()` along every axis.
    pub fn half(&self) -> i64 {
        self.half
    }

    /// Kernel values over the flattened offset box.
    pub fn values0(&self) -> &[f64] {
        &self.values0
    }

    /// One gradient component over the flattened offset box.
    pub fn values1(&self, axis: usize) -> &[f64] {
        &self.values1[axis]
    }

    fn matches(&self, field: &CoefficientField, kernel: &ScaledKernel) -> Result<(), InterpError> {
        let ok = self.h == field.grid().spacing()
            && self.epsilon == kernel.epsilon()
            && self.dim == field.grid().dim()
            && self.dim == kernel.dim();
        if ok {
            Ok(())
        } else {
            Err(InterpError::StencilMismatch {
                stencil_h: self.h,
                stencil_eps: self.epsilon,
                stencil_dim: self.dim,
                h: field.grid().spacing(),
                eps: kernel.epsilon(),
                dim: field.grid().dim(),
            })
        }
    }
}

/// Pointwise quasi-interpolant `h^dim * sum_j rho_j * D^alpha zeta(x - jh)`;
/// the reference implementation the stencil paths are checked against.
/// Points outside the grid window are fine: coefficients beyond the box are
/// zero, so the sum just shrinks.
pub fn evaluate(
    field: &CoefficientField,
    kernel: &ScaledKernel,
    x: &[f64],
    alpha: Alpha,
) -> Result<f64, InterpError> {
    let grid = field.grid();
    if grid.dim() != kernel.dim() || x.len() != grid.dim() {
        return Err(InterpError::DimensionMismatch {
            field_dim: grid.dim(),
            kernel_dim: kernel.dim(),
        });
    }
    // validate alpha (axis range, smoothness) once up front
    let probe = vec![kernel.support_radius().max(1.0) * 2.0; kernel.dim()];
    kernel.eval(&probe, alpha)?;

    let h = grid.spacing();
    let radius = kernel.support_radius();
    let (mut lo, mut hi) = (vec![0i64; x.len()], vec![0i64; x.len()]);
    for d in 0..x.len() {
        lo[d] = (((x[d] - radius) / h).ceil() as i64).max(grid.lo()[d]);
        hi[d] = (((x[d] + radius) / h).floor() as i64).min(grid.hi()[d]);
        if lo[d] > hi[d] {
            return Ok(0.0);
        }
    }

    let mut acc = 0.0;
    let mut j = lo.clone();
    let mut diff = vec![0.0; x.len()];
    'outer: loop {
        let mut flat = 0;
        for d in 0..x.len() {
            flat = flat * grid.extent(d) + (j[d] - grid.lo()[d]) as usize;
            diff[d] = x[d] - j[d] as f64 * h;
        }
        let rho = field.values()[flat];
        if rho != 0.0 {
            acc += rho
                * kernel
                    .eval(&diff, alpha)
                    .expect("alpha validated above");
        }
        for d in (0..x.len()).rev() {
            j[d] += 1;
            if j[d] <= hi[d] {
                continue 'outer;
            }
            j[d] = lo[d];
            if d == 0 {
                break 'outer;
            }
        }
    }
    Ok(acc * grid.cell_volume())
}

/// Vector width of the blocked convolution kernels. Eight f64 lanes map to
/// one AVX-512 register or two AVX2 registers.
const BLOCK: usize = 8;

/// Outputs per parallel work item; chunking is fixed so the arithmetic (and
/// hence the result, bitwise) is identical for any worker count.
const PAR_CHUNK: usize = 4096;

/// Fused symmetric/antisymmetric convolution against a zero-padded input:
/// `out0[i] = w0[0]*p[i+k] + sum_m w0[m]*(p[i+k-m] + p[i+k+m])` and
/// `out1[i] = sum_m w1[m]*(p[i+k-m] - p[i+k+m])` with `k = w0.len() - 1`.
fn convolve_pair_serial(padded: &[f64], w0: &[f64], w1: &[f64], out0: &mut [f64], out1: &mut [f64]) {
    let n = out0.len();
    let k = w0.len() - 1;
    debug_assert_eq!(out1.len(), n);
    debug_assert!(padded.len() >= n + 2 * k);
    let mut i = 0;
    while i + BLOCK <= n {
        let mut acc0 = [0.0; BLOCK];
        let mut acc1 = [0.0; BLOCK];
        let center = &padded[i + k..i + k + BLOCK];
        for (a, &c) in acc0.iter_mut().zip(center) {
            *a = w0[0] * c;
        }
        for m in 1..=k {
            let left = &padded[i + k - m..i + k - m + BLOCK];
            let right = &padded[i + k + m..i + k + m + BLOCK];
            let (c0, c1) = (w0[m], w1[m]);
            for l in 0..BLOCK {
                acc0[l] += c0 * (left[l] + right[l]);
                acc1[l] += c1 * (left[l] - right[l]);
            }
        }
        out0[i..i + BLOCK].copy_from_slice(&acc0);
        out1[i..i + BLOCK].copy_from_slice(&acc1);
        i += BLOCK;
    }
    while i < n {
        let mut a0 = w0[0] * padded[i + k];
        let mut a1 = 0.0;
        for m in 1..=k {
            a0 += w0[m] * (padded[i + k - m] + padded[i + k + m]);
            a1 += w1[m] * (padded[i + k - m] - padded[i + k + m]);
        }
        out0[i] = a0;
        out1[i] = a1;
        i += 1;
    }
}

/// Single-output variant of [`convolve_pair_serial`], accumulating in the
/// same order so both paths agree bitwise.
fn convolve_one_serial<const ANTI: bool>(padded: &[f64], w: &[f64], out: &mut [f64]) {
    let n = out.len();
    let k = w.len() - 1;
    let mut i = 0;
    while i + BLOCK <= n {
        let mut acc = [0.0; BLOCK];
        if !ANTI {
            let center = &padded[i + k..i + k + BLOCK];
            for (a, &c) in acc.iter_mut().zip(center) {
                *a = w[0] * c;
            }
        }
        for m in 1..=k {
            let left = &padded[i + k - m..i + k - m + BLOCK];
            let right = &padded[i + k + m..i + k + m + BLOCK];
            let c = w[m];
            for l in 0..BLOCK {
                acc[l] += c * if ANTI { left[l] - right[l] } else { left[l] + right[l] };
            }
        }
        out[i..i + BLOCK].copy_from_slice(&acc);
        i += BLOCK;
    }
    while i < n {
        let mut a = if ANTI { 0.0 } else { w[0] * padded[i + k] };
        for m in 1..=k {
            a += w[m]
                * if ANTI {
                    padded[i + k - m] - padded[i + k + m]
                } else {
                    padded[i + k - m] + padded[i + k + m]
                };
        }
        out[i] = a;
        i += 1;
    }
}

/// Runs the fused convolution over fixed-size output chunks, in parallel
/// when the `parallel` feature is on. Chunks are independent windows of the
/// padded input, so the worker count never changes the result.
pub(crate) fn convolve_pair(
    padded: &[f64],
    w0: &[f64],
    w1: &[f64],
    out0: &mut [f64],
    out1: &mut [f64],
) {
    #[cfg(feature = "parallel")]
    {
        out0.par_chunks_mut(PAR_CHUNK)
            .zip(out1.par_chunks_mut(PAR_CHUNK))
            .enumerate()
            .for_each(|(ci, (c0, c1))| {
                convolve_pair_serial(&padded[ci * PAR_CHUNK..], w0, w1, c0, c1);
            });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (ci, (c0, c1)) in out0
            .chunks_mut(PAR_CHUNK)
            .zip(out1.chunks_mut(PAR_CHUNK))
            .enumerate()
        {
            convolve_pair_serial(&padded[ci * PAR_CHUNK..], w0, w1, c0, c1);
        }
    }
}

fn convolve_one<const ANTI: bool>(padded: &[f64], w: &[f64], out: &mut [f64]) {
    #[cfg(feature = "parallel")]
    {
        out.par_chunks_mut(PAR_CHUNK).enumerate().for_each(|(ci, c)| {
            convolve_one_serial::<ANTI>(&padded[ci * PAR_CHUNK..], w, c);
        });
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (ci, c) in out.chunks_mut(PAR_CHUNK).enumerate() {
            convolve_one_serial::<ANTI>(&padded[ci * PAR_CHUNK..], w, c);
        }
    }
}

/// Copies the field values into the middle of a zero-padded buffer with
/// `pad` zeros on each side.
pub(crate) fn pad_values(values: &[f64], pad: usize, buffer: &mut Vec<f64>) {
    buffer.clear();
    buffer.resize(values.len() + 2 * pad, 0.0);
    buffer[pad..pad + values.len()].copy_from_slice(values);
}

/// Fused 1-d evaluation of the interpolant and its derivative on the whole
/// grid; this is the solver's per-stage workhorse. `padded` must hold the
/// coefficients with `stencil.half()` zeros of padding on each side.
pub(crate) fn evaluate_pair_padded(
    stencil: &Stencil,
    padded: &[f64],
    out_value: &mut [f64],
    out_grad: &mut [f64],
) {
    debug_assert_eq!(stencil.dim, 1);
    convolve_pair(padded, &stencil.w0_scaled, &stencil.w1_scaled, out_value, out_grad);
}

/// Grid-to-grid quasi-interpolant evaluation: `output_i = h^dim *
/// sum_m values_alpha(m) * rho_(i-m)`, equal to pointwise [`evaluate`] at
/// every grid point up to summation order.
pub fn evaluate_on_grid(
    field: &CoefficientField,
    kernel: &ScaledKernel,
    stencil: &Stencil,
    alpha: Alpha,
) -> Result<CoefficientField, InterpError> {
    stencil.matches(field, kernel)?;
    if let Alpha::Partial(axis) = alpha {
        if axis >= stencil.dim {
            return Err(KernelError::AxisOutOfRange {
                axis,
                dim: stencil.dim,
            }
            .into());
        }
        if kernel.kernel().smoothness() < 2 {
            return Err(KernelError::TooRough {
                order: 1,
                smoothness: kernel.kernel().smoothness(),
            }
            .into());
        }
    }

    let mut out = vec![0.0; field.values().len()];
    if stencil.dim == 1 {
        let pad = stencil.half as usize;
        let mut padded = Vec::new();
        pad_values(field.values(), pad, &mut padded);
        match alpha {
            Alpha::Value => convolve_one::<false>(&padded, &stencil.w0_scaled, &mut out),
            Alpha::Partial(_) => convolve_one::<true>(&padded, &stencil.w1_scaled, &mut out),
        }
    } else {
        evaluate_on_grid_generic(field, stencil, alpha, &mut out);
    }
    Ok(CoefficientField::from_values(field.grid().clone(), out, field.time())
        .expect("output sized from input"))
}

/// Direct box-sum fallback for 2-d and 3-d grids.
pub(crate) fn evaluate_on_grid_generic(
    field: &CoefficientField,
    stencil: &Stencil,
    alpha: Alpha,
    out: &mut [f64],
) {
    let grid = field.grid();
    let dim = grid.dim();
    let half = stencil.half;
    let side = (2 * half + 1) as usize;
    let table = match alpha {
        Alpha::Value => &stencil.values0[..],
        Alpha::Partial(axis) => &stencil.values1[axis][..],
    };
    let vol = grid.cell_volume();
    for (flat, slot) in out.iter_mut().enumerate() {
        let j = grid.multi_index(flat);
        let mut m = vec![-half; dim];
        let mut acc = 0.0;
        'box_loop: loop {
            // source index i = j - m must lie in the grid box
            let mut src = 0usize;
            let mut inside = true;
            let mut mflat = 0usize;
            for d in 0..dim {
                let i = j[d] - m[d];
                inside &= i >= grid.lo()[d] && i <= grid.hi()[d];
                if inside {
                    src = src * grid.extent(d) + (i - grid.lo()[d]) as usize;
                }
                mflat = mflat * side + (m[d] + half) as usize;
            }
            if inside {
                acc += table[mflat] * field.values()[src];
            }
            for d in (0..dim).rev() {
                m[d] += 1;
                if m[d] <= half {
                    continue 'box_loop;
                }
                m[d] = -half;
                if d == 0 {
                    break 'box_loop;
                }
            }
        }
        *slot = vol * acc;
    }
}

/// How [`linf_grid_error`] compares a field against an exact solution.
pub enum ErrorMode<'a> {
    /// Compare raw coefficients against exact point values.
    Coefficients,
    /// Evaluate the quasi-interpolant (or its derivative) through the
    /// stencil first, then compare.
    Interpolant {
        kernel: &'a ScaledKernel,
        stencil: &'a Stencil,
    },
}

/// Maximum pointwise error over the grid against an exact function, either
/// at coefficient level or through the quasi-interpolant.
pub fn linf_grid_error(
    field: &CoefficientField,
    exact: impl Fn(&[f64]) -> f64,
    alpha: Alpha,
    mode: ErrorMode<'_>,
) -> Result<f64, InterpError> {
    let approx = match mode {
        ErrorMode::Coefficients => {
            if alpha != Alpha::Value {
                return Err(InterpError::CoefficientModeDerivative);
            }
            None
        }
        ErrorMode::Interpolant { kernel, stencil } => {
            Some(evaluate_on_grid(field, kernel, stencil, alpha)?)
        }
    };
    let values = approx.as_ref().map_or(field.values(), |f| f.values());
    let mut err = 0.0f64;
    field.grid().for_each_point(|flat, x| {
        err = err.max((values[flat] - exact(x)).abs());
    });
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::UniformGrid;
    use crate::kernels::make_kernel;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn setup_1d(h: f64, eps: f64) -> (ScaledKernel, Stencil, CoefficientField) {
        let kernel = ScaledKernel::new(make_kernel(4, 4, 1).unwrap(), eps).unwrap();
        let stencil = Stencil::build(&kernel, h).unwrap();
        let grid = UniformGrid::line(h, -40, 40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = CoefficientField::from_values(grid, values, 0.0).unwrap();
        (kernel, stencil, field)
    }

    #[test]
    fn stencil_respects_symmetry_and_size_bound() {
        let (_, stencil, _) = setup_1d(0.05, 0.4);
        let half = stencil.half();
        let points = 2 * half + 1;
        let max_points = 2 * (0.4f64 / 0.05).ceil() as i64 - 1;
        assert!(points <= max_points);
        let v0 = stencil.values0();
        let v1 = stencil.values1(0);
        let c = half as usize;
        assert_eq!(v1[c], 0.0);
        for m in 1..=c {
            assert_eq!(v0[c + m], v0[c - m]);
            assert_eq!(v1[c + m], -v1[c - m]);
        }
    }

    #[test]
    fn single_coefficient_reproduces_scaled_kernel_value() {
        let h = 0.1;
        let eps = 0.5;
        let kernel = ScaledKernel::new(make_kernel(2, 2, 1).unwrap(), eps).unwrap();
        let grid = UniformGrid::line(h, -10, 10).unwrap();
        let mut values = vec![0.0; grid.len()];
        values[10] = 1.0; // multi-index 0
        let field = CoefficientField::from_values(grid, values, 0.0).unwrap();
        let got = evaluate(&field, &kernel, &[0.0], Alpha::Value).unwrap();
        let eta0 = kernel.kernel().value(0.0);
        assert_relative_eq!(got, h * eta0 / eps, max_relative = 1e-14);
        // far outside the support the interpolant vanishes
        assert_eq!(evaluate(&field, &kernel, &[3.0], Alpha::Value).unwrap(), 0.0);
    }

    #[test]
    fn grid_path_matches_pointwise_oracle() {
        let (kernel, stencil, field) = setup_1d(0.05, 0.4);
        for alpha in [Alpha::Value, Alpha::Partial(0)] {
            let on_grid = evaluate_on_grid(&field, &kernel, &stencil, alpha).unwrap();
            let scale = 1.0 / stencil.epsilon().powi(match alpha {
                Alpha::Value => 1,
                Alpha::Partial(_) => 2,
            });
            field.grid().for_each_point(|flat, x| {
                let direct = evaluate(&field, &kernel, x, alpha).unwrap();
                assert_abs_diff_eq!(
                    on_grid.values()[flat],
                    direct,
                    epsilon = 1e-13 * scale.max(direct.abs())
                );
            });
        }
    }

    #[test]
    fn fused_pair_matches_single_alpha_paths_bitwise() {
        let (kernel, stencil, field) = setup_1d(0.05, 0.4);
        let value = evaluate_on_grid(&field, &kernel, &stencil, Alpha::Value).unwrap();
        let grad = evaluate_on_grid(&field, &kernel, &stencil, Alpha::Partial(0)).unwrap();
        let mut padded = Vec::new();
        pad_values(field.values(), stencil.half() as usize, &mut padded);
        let n = field.values().len();
        let (mut v, mut g) = (vec![0.0; n], vec![0.0; n]);
        evaluate_pair_padded(&stencil, &padded, &mut v, &mut g);
        assert_eq!(v, value.values());
        assert_eq!(g, grad.values());
    }

    #[test]
    fn generic_path_agrees_with_fast_path_in_1d_layout() {
        // same field viewed as 1-d fast path vs the generic box loop on a
        // 2-d grid with a single row is not comparable; instead check the
        // 2-d generic path against the pointwise oracle directly
        let eps = 0.5;
        let h = 0.125;
        let kernel = ScaledKernel::new(make_kernel(2, 2, 2).unwrap(), eps).unwrap();
        let stencil = Stencil::build(&kernel, h).unwrap();
        let grid = UniformGrid::new(h, vec![-6, -6], vec![6, 6]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let field = CoefficientField::from_values(grid, values, 0.0).unwrap();
        for alpha in [Alpha::Value, Alpha::Partial(0), Alpha::Partial(1)] {
            let on_grid = evaluate_on_grid(&field, &kernel, &stencil, alpha).unwrap();
            field.grid().for_each_point(|flat, x| {
                let direct = evaluate(&field, &kernel, x, alpha).unwrap();
                assert_abs_diff_eq!(on_grid.values()[flat], direct, epsilon = 1e-11);
            });
        }
    }

    #[test]
    fn mismatched_stencils_are_rejected() {
        let (kernel, stencil, field) = setup_1d(0.05, 0.4);
        let other = ScaledKernel::new(make_kernel(4, 4, 1).unwrap(), 0.2).unwrap();
        assert!(matches!(
            evaluate_on_grid(&field, &other, &stencil, Alpha::Value),
            Err(InterpError::StencilMismatch { .. })
        ));
        let wrong_h = Stencil::build(&kernel, 0.025).unwrap();
        assert!(matches!(
            evaluate_on_grid(&field, &kernel, &wrong_h, Alpha::Value),
            Err(InterpError::StencilMismatch { .. })
        ));
    }

    #[test]
    fn zero_field_evaluates_to_zero_everywhere() {
        let (kernel, stencil, field) = setup_1d(0.05, 0.4);
        let zero = CoefficientField::zeros(field.grid().clone());
        let out = evaluate_on_grid(&zero, &kernel, &stencil, Alpha::Partial(0)).unwrap();
        assert!(out.values().iter().all(|&v| v == 0.0));
        assert_eq!(evaluate(&zero, &kernel, &[0.123], Alpha::Value).unwrap(), 0.0);
    }

    #[test]
    fn coefficient_mode_rejects_derivatives() {
        let (_, _, field) = setup_1d(0.05, 0.4);
        let err = linf_grid_error(&field, |_| 0.0, Alpha::Partial(0), ErrorMode::Coefficients);
        assert!(matches!(err, Err(InterpError::CoefficientModeDerivative)));
        let zero_err =
            linf_grid_error(&field, |x| x[0], Alpha::Value, ErrorMode::Coefficients).unwrap();
        assert!(zero_err > 0.0);
    }
}
