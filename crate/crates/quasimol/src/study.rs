//! Convergence-study harness: grids of benchmark solves over dyadic
//! `(h, epsilon)` pairs, and the nonlinear least-squares fit of the
//! two-term error model `C1*eps^a + C2*h^b/eps^c` to a finished table.

use std::ops::RangeInclusive;

use thiserror::Error;

use crate::grid::CoefficientField;
use crate::interp::{linf_grid_error, ErrorMode, Stencil};
use crate::kernels::ScaledKernel;
use crate::problems::{burgers_f, Series, SeriesSpec, BURGERS_T_FINAL};
use crate::solver::{solve, SolveError, SolverConfig, StepSize};
use crate::Alpha;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// One convergence-table entry. `error` is `None` when the run diverged or
/// failed; inadmissible pairs (grid not finer than the kernel scale) are
/// not stored at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableCell {
    pub nu_h: i32,
    pub nu_eps: i32,
    pub error: Option<f64>,
}

/// Discrete L-infinity errors of benchmark runs over a dyadic refinement
/// rectangle, `h = 2^nu_h` by `epsilon = 2^nu_eps`.
#[derive(Clone, Debug, Default)]
pub struct ErrorTable {
    pub series: Option<Series>,
    pub cells: Vec<TableCell>,
}

impl ErrorTable {
    /// Cells that finished, as `(nu_h, nu_eps, error)`.
    pub fn present(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        self.cells
            .iter()
            .filter_map(|c| c.error.map(|e| (c.nu_h, c.nu_eps, e)))
    }

    pub fn get(&self, nu_h: i32, nu_eps: i32) -> Option<f64> {
        self.cells
            .iter()
            .find(|c| c.nu_h == nu_h && c.nu_eps == nu_eps)
            .and_then(|c| c.error)
    }
}

/// How a table run measures the error at the final time.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ErrorMeasure {
    /// Compare the reconstructed quasi-interpolant at the grid points
    /// against the exact solution.
    #[default]
    Interpolant,
    /// Compare the raw coefficients against exact point values.
    Coefficients,
}

/// Per-table overrides; the default runs each series with its standard
/// time step and measures interpolant errors at every admissible cell.
#[derive(Clone, Copy, Debug, Default)]
pub struct TableConfig {
    /// Replaces the series' default time-step rule in every cell.
    pub step: Option<StepSize>,
    /// Keep only cells with `nu_eps - nu_h >= min_gap`, mirroring the
    /// published table layout (which starts three dyadic levels below the
    /// kernel scale).
    pub min_gap: Option<i32>,
    pub measure: ErrorMeasure,
}

/// Standard time step for a benchmark run at kernel scale `epsilon`. The
/// fourth-order series needs the smaller step for its deep cells; the
/// second-order series is stable at a quarter scale.
pub fn default_step(series: Series, epsilon: f64) -> StepSize {
    match series {
        Series::A => StepSize::Dt(epsilon / 16.0),
        Series::B => StepSize::Dt(epsilon / 4.0),
    }
}

fn run_cell(spec: SeriesSpec, nu_h: i32, nu_eps: i32, config: &TableConfig) -> Option<f64> {
    let h = (nu_h as f64).exp2();
    let epsilon = (nu_eps as f64).exp2();
    let problem = burgers_f(spec);
    let step = config
        .step
        .unwrap_or_else(|| default_step(spec.series, epsilon));
    let solver_config = SolverConfig::new(h, epsilon, spec.scheme_kernel(), BURGERS_T_FINAL, step);
    let result = match solve(&problem, &solver_config) {
        Ok(r) => r,
        Err(SolveError::BlowUp { .. } | SolveError::NonFinite { .. }) => return None,
        Err(_) => return None,
    };
    table_error(&result.field, &problem, spec, epsilon, h, config).filter(|e| e.is_finite())
}

fn table_error(
    field: &CoefficientField,
    problem: &crate::solver::DefiningFunction,
    _spec: SeriesSpec,
    epsilon: f64,
    h: f64,
    config: &TableConfig,
) -> Option<f64> {
    let exact = |x: &[f64]| problem.exact(BURGERS_T_FINAL, x).expect("benchmark has an oracle");
    match config.measure {
        ErrorMeasure::Coefficients => {
            linf_grid_error(field, exact, Alpha::Value, ErrorMode::Coefficients).ok()
        }
        ErrorMeasure::Interpolant => {
            let kernel = ScaledKernel::new(
                SeriesSpec::new(_spec.series).scheme_kernel().build().ok()?,
                epsilon,
            )
            .ok()?;
            let stencil = Stencil::build(&kernel, h).ok()?;
            linf_grid_error(
                field,
                exact,
                Alpha::Value,
                ErrorMode::Interpolant {
                    kernel: &kernel,
                    stencil: &stencil,
                },
            )
            .ok()
        }
    }
}

/// Runs the benchmark for every admissible `(nu_h, nu_eps)` pair in the
/// given dyadic ranges (endpoints included, coarse rows first). A cell is
/// admissible when `2^nu_h < 2^nu_eps`; failed or diverged cells are
/// recorded as absent, never aborting the rest of the table.
pub fn run_table(
    spec: SeriesSpec,
    nu_h_range: RangeInclusive<i32>,
    nu_eps_range: RangeInclusive<i32>,
    config: &TableConfig,
) -> ErrorTable {
    let mut coords = Vec::new();
    for nu_h in nu_h_range.rev() {
        for nu_eps in nu_eps_range.clone().rev() {
            if nu_h >= nu_eps {
                continue;
            }
            if let Some(gap) = config.min_gap {
                if nu_eps - nu_h < gap {
                    continue;
                }
            }
            coords.push((nu_h, nu_eps));
        }
    }

    #[cfg(feature = "parallel")]
    let cells = coords
        .par_iter()
        .map(|&(nu_h, nu_eps)| TableCell {
            nu_h,
            nu_eps,
            error: run_cell(spec, nu_h, nu_eps, config),
        })
        .collect();
    #[cfg(not(feature = "parallel"))]
    let cells = coords
        .iter()
        .map(|&(nu_h, nu_eps)| TableCell {
            nu_h,
            nu_eps,
            error: run_cell(spec, nu_h, nu_eps, config),
        })
        .collect();

    ErrorTable {
        series: Some(spec.series),
        cells,
    }
}

/// Fitted error model `C1*eps^a + C2*h^b/eps^c` with an RMS log-misfit
/// residual. `C1` and `C2` are positive by construction.
#[derive(Clone, Copy, Debug)]
pub struct FitResult {
    pub c1: f64,
    pub a: f64,
    pub c2: f64,
    pub b: f64,
    pub c: f64,
    pub residual: f64,
    /// Whether the table reaches deep enough into the h-dominated regime
    /// for `(b, c)` to mean anything; when it does not, `eps_only_a` is
    /// the fallback estimate of `a` from the column plateaus alone.
    pub h_term_reliable: bool,
    pub eps_only_a: Option<f64>,
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("{usable} usable cells; fitting the five-parameter model needs at least 8")]
    TooFewCells { usable: usize },
    #[error("no convergence after {iters} iterations; residual {residual:.3e}, last step norm {step_norm:.3e}")]
    NoConvergence {
        iters: usize,
        residual: f64,
        step_norm: f64,
    },
}

const LN2: f64 = std::f64::consts::LN_2;

/// Solves the k-by-k system `a * x = b` in place by Gaussian elimination
/// with partial pivoting; `None` when a pivot collapses.
#[allow(clippy::needless_range_loop)] // two rows of `a` in play at once
fn solve_dense(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let k = b.len();
    for col in 0..k {
        let pivot_row = (col..k)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let pivot = a[col][col];
        if !(pivot.abs() > 1e-300) {
            return None;
        }
        for row in col + 1..k {
            let factor = a[row][col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for c in col..k {
                a[row][c] -= factor * a[col][c];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for row in (0..k).rev() {
        let mut acc = b[row];
        for c in row + 1..k {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Least squares via normal equations for a handful of columns.
fn lstsq(rows: &[Vec<f64>], y: &[f64]) -> Option<Vec<f64>> {
    let k = rows.first()?.len();
    let mut ata = vec![vec![0.0; k]; k];
    let mut aty = vec![0.0; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
            aty[i] += row[i] * yi;
        }
    }
    solve_dense(&mut ata, &mut aty)
}

/// Cells worth fitting: finished, finite, and not outright divergent.
fn usable_cells(table: &ErrorTable) -> Vec<(i32, i32, f64)> {
    table
        .present()
        .filter(|&(_, _, e)| e.is_finite() && e > 0.0 && e < 1.0)
        .collect()
}

fn model_log(theta: &[f64; 5], lh: f64, le: f64) -> f64 {
    let (lc1, a, lc2, b, c) = (theta[0], theta[1], theta[2], theta[3], theta[4]);
    ((lc1 + a * le).exp() + (lc2 + b * lh - c * le).exp()).ln()
}

/// Two-stage initialization: `a` and `C1` from the tail of the deepest-h
/// row (where the eps term dominates), `b` from the median pre-plateau
/// slope of the fixed-eps columns, then `(C2, b, c)` refined on the cells
/// still above their column plateau.
fn initial_guess(cells: &[(i32, i32, f64)]) -> [f64; 5] {
    let deepest = cells.iter().map(|c| c.0).min().expect("nonempty");
    let mut deep_row: Vec<_> = cells.iter().filter(|c| c.0 == deepest).collect();
    deep_row.sort_by_key(|c| -c.1);
    let tail = &deep_row[..deep_row.len().min(3)];
    let (lc1, a) = if tail.len() >= 2 {
        let rows: Vec<Vec<f64>> = tail.iter().map(|c| vec![1.0, c.1 as f64 * LN2]).collect();
        let y: Vec<f64> = tail.iter().map(|c| c.2.ln()).collect();
        match lstsq(&rows, &y).as_deref() {
            Some([lc1, a]) => (*lc1, *a),
            _ => (tail[0].2.ln() - 3.0 * tail[0].1 as f64 * LN2, 3.0),
        }
    } else {
        (tail[0].2.ln() - 3.0 * tail[0].1 as f64 * LN2, 3.0)
    };

    let mut columns: std::collections::BTreeMap<i32, Vec<(i32, f64)>> = Default::default();
    for &(nu_h, nu_eps, e) in cells {
        columns.entry(nu_eps).or_default().push((nu_h, e));
    }
    let mut slopes = Vec::new();
    let mut plateaus = std::collections::BTreeMap::new();
    for (&nu_eps, pts) in columns.iter_mut() {
        pts.sort_by_key(|p| -p.0); // coarse h first
        for pair in pts.windows(2) {
            let ((nh1, e1), (nh2, e2)) = (pair[0], pair[1]);
            if e2 < e1 / 2.0 {
                slopes.push((e1 / e2).log2() / (nh1 - nh2) as f64);
            }
        }
        let plateau = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        plateaus.insert(nu_eps, plateau);
    }
    let b = median(&mut slopes).unwrap_or(4.0);

    let pre: Vec<_> = cells
        .iter()
        .filter(|&&(_, nu_eps, e)| e > 2.0 * plateaus[&nu_eps])
        .collect();
    let (lc2, b2, c) = if pre.len() >= 3 {
        let rows: Vec<Vec<f64>> = pre
            .iter()
            .map(|c| vec![1.0, c.0 as f64 * LN2, -(c.1 as f64) * LN2])
            .collect();
        let y: Vec<f64> = pre.iter().map(|c| c.2.ln()).collect();
        match lstsq(&rows, &y).as_deref() {
            Some([lc2, b2, c]) => (*lc2, *b2, *c),
            _ => (0.0, b, b + 1.0),
        }
    } else {
        (0.0, b, b + 1.0)
    };
    [lc1, a, lc2, b2, c]
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

struct Reliability {
    pre_plateau_cells: usize,
    eps_only_a: Option<f64>,
}

/// A table supports the h-term only if enough cells sit well above their
/// column's plateau; otherwise the plateaus themselves still estimate the
/// eps exponent, using columns whose two deepest rows agree within 30%.
fn reliability(cells: &[(i32, i32, f64)]) -> Reliability {
    let mut columns: std::collections::BTreeMap<i32, Vec<(i32, f64)>> = Default::default();
    for &(nu_h, nu_eps, e) in cells {
        columns.entry(nu_eps).or_default().push((nu_h, e));
    }
    let mut pre_plateau_cells = 0;
    let mut plateaus = Vec::new();
    for (&nu_eps, pts) in columns.iter_mut() {
        pts.sort_by_key(|p| p.0); // deepest h first
        let plateau = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        pre_plateau_cells += pts.iter().filter(|p| p.1 > 2.0 * plateau).count();
        if pts.len() >= 2 {
            let ratio = pts[0].1 / pts[1].1;
            if ratio.max(1.0 / ratio) <= 1.3 {
                plateaus.push((nu_eps, plateau));
            }
        }
    }
    let eps_only_a = if plateaus.len() >= 2 {
        let rows: Vec<Vec<f64>> = plateaus.iter().map(|p| vec![1.0, p.0 as f64]).collect();
        let y: Vec<f64> = plateaus.iter().map(|p| p.1.log2()).collect();
        lstsq(&rows, &y).map(|sol| sol[1])
    } else {
        None
    };
    Reliability {
        pre_plateau_cells,
        eps_only_a,
    }
}

/// Minimum number of cells clearly above their column plateau for the
/// `(b, c)` estimates to be reported as reliable.
const RELIABLE_PRE_PLATEAU_CELLS: usize = 6;

/// Fits `log(error) = log(C1*eps^a + C2*h^b/eps^c)` over the usable cells
/// by damped Gauss-Newton from a two-stage initial guess.
pub fn fit_error_model(table: &ErrorTable) -> Result<FitResult, FitError> {
    let cells = usable_cells(table);
    if cells.len() < 8 {
        return Err(FitError::TooFewCells {
            usable: cells.len(),
        });
    }
    let lh: Vec<f64> = cells.iter().map(|c| c.0 as f64 * LN2).collect();
    let le: Vec<f64> = cells.iter().map(|c| c.1 as f64 * LN2).collect();
    let ly: Vec<f64> = cells.iter().map(|c| c.2.ln()).collect();
    let n = ly.len();

    let mut theta = initial_guess(&cells);
    let cost = |th: &[f64; 5]| -> (f64, Vec<f64>) {
        let r: Vec<f64> = (0..n).map(|i| model_log(th, lh[i], le[i]) - ly[i]).collect();
        (0.5 * r.iter().map(|v| v * v).sum::<f64>(), r)
    };
    let (mut best_cost, mut residuals) = cost(&theta);
    let mut lambda = 1e-3;
    let mut last_step_norm = f64::INFINITY;
    let mut converged = false;

    const MAX_ITERS: usize = 200;
    for _ in 0..MAX_ITERS {
        let (lc1, a, lc2, b, c) = (theta[0], theta[1], theta[2], theta[3], theta[4]);
        // Jacobian of the log-model wrt (lc1, a, lc2, b, c)
        let mut jt_r = [0.0; 5];
        let mut jt_j = [[0.0; 5]; 5];
        for i in 0..n {
            let t1 = (lc1 + a * le[i]).exp();
            let t2 = (lc2 + b * lh[i] - c * le[i]).exp();
            let s = t1 + t2;
            let row = [
                t1 / s,
                t1 * le[i] / s,
                t2 / s,
                t2 * lh[i] / s,
                -t2 * le[i] / s,
            ];
            for p in 0..5 {
                jt_r[p] += row[p] * residuals[i];
                for q in 0..5 {
                    jt_j[p][q] += row[p] * row[q];
                }
            }
        }
        let mut improved = false;
        for _ in 0..60 {
            let mut lhs: Vec<Vec<f64>> = (0..5)
                .map(|p| {
                    let mut row = jt_j[p].to_vec();
                    row[p] += lambda;
                    row
                })
                .collect();
            let mut rhs: Vec<f64> = jt_r.iter().map(|g| -g).collect();
            let Some(step) = solve_dense(&mut lhs, &mut rhs) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial = theta;
            for p in 0..5 {
                trial[p] += step[p];
            }
            let (trial_cost, trial_res) = cost(&trial);
            if trial_cost < best_cost {
                theta = trial;
                best_cost = trial_cost;
                residuals = trial_res;
                lambda = (lambda / 3.0).max(1e-12);
                last_step_norm = step.iter().map(|v| v * v).sum::<f64>().sqrt();
                improved = true;
                break;
            }
            lambda *= 10.0;
        }
        if !improved || last_step_norm < 1e-12 {
            // either a genuine stationary point or no improving direction
            // left in the trust region: done
            converged = true;
            break;
        }
    }
    let residual = (2.0 * best_cost / n as f64).sqrt();
    if !converged {
        return Err(FitError::NoConvergence {
            iters: MAX_ITERS,
            residual,
            step_norm: last_step_norm,
        });
    }

    let rel = reliability(&cells);
    Ok(FitResult {
        c1: theta[0].exp(),
        a: theta[1],
        c2: theta[2].exp(),
        b: theta[3],
        c: theta[4],
        residual,
        h_term_reliable: rel.pre_plateau_cells >= RELIABLE_PRE_PLATEAU_CELLS,
        eps_only_a: rel.eps_only_a,
    })
}

/// Table generated exactly from the error model plus multiplicative noise,
/// on a support whose columns all reach their plateau; used to validate
/// the fit end to end. `noise` returns the relative perturbation for each
/// cell in row-major order (deep h first).
pub fn synthetic_table(
    c1: f64,
    a: f64,
    c2: f64,
    b: f64,
    c: f64,
    mut noise: impl FnMut() -> f64,
) -> ErrorTable {
    let mut cells = Vec::new();
    for nu_h in -16..=-10 {
        for nu_eps in -8..=-2 {
            let h = (nu_h as f64).exp2();
            let eps = (nu_eps as f64).exp2();
            let exact = c1 * eps.powf(a) + c2 * h.powf(b) / eps.powf(c);
            cells.push(TableCell {
                nu_h,
                nu_eps,
                error: Some(exact * (1.0 + noise())),
            });
        }
    }
    ErrorTable {
        series: None,
        cells,
    }
}
