//! Compactly supported radial kernels.
//!
//! The building blocks are the Wendland functions `phi_{n,k}`: polynomials
//! `c * (1-r)^l * p(r)` on `[0, 1)`, zero outside, with smoothness `C^{2k}`
//! and unit mass as radial kernels on `R^n`. Higher approximation orders come
//! from [`CompositeRadialKernel`], a weighted sum of rescaled copies whose
//! weights cancel the leading even radial moments while keeping the mass.
//!
//! All polynomial coefficients are expanded from the integer table data, so
//! evaluation is a single Horner pass per derivative order and carries no
//! accumulated symbolic error.

use std::f64::consts::PI;
use std::str::FromStr;

use thiserror::Error;

use crate::quad;
use crate::{Alpha, NormP};

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("no base kernel is tabulated for dim {dim}, smoothness index {k}; supported: dim 1..=3 with k 0..=3")]
    UnknownBase { dim: usize, k: usize },
    #[error("derivative order {order} exceeds the kernel smoothness C^{smoothness}")]
    TooRough { order: usize, smoothness: usize },
    #[error("scale nodes must be positive, got {value}")]
    NonPositiveNode { value: f64 },
    #[error("repeated scale node {value}: the moment system is singular")]
    RepeatedNode { value: f64 },
    #[error("at least one scale node is required")]
    NoNodes,
    #[error("{nodes} scale nodes paired with {weights} weights")]
    WeightCountMismatch { nodes: usize, weights: usize },
    #[error("unsupported kernel parameters order={order}, smoothness={smoothness}, dim={dim}; supported: order in {{2, 4, 6}}, smoothness in {{2, 4, 6}}, dim in {{1, 2, 3}}")]
    UnsupportedKernel {
        order: usize,
        smoothness: usize,
        dim: usize,
    },
    #[error("scale must be positive and finite, got {epsilon}")]
    InvalidScale { epsilon: f64 },
    #[error("axis {axis} out of range for dimension {dim}")]
    AxisOutOfRange { axis: usize, dim: usize },
    #[error("continuous norms are computed on the line only, kernel has dim {dim}")]
    NormDimension { dim: usize },
    #[error("unrecognized kernel spec {spec:?}; expected wendland:<dim>:<k> or composite:<order>:<smoothness>:<dim>")]
    BadSpec { spec: String },
}

/// Exact rational normalization constant, optionally divided by pi.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Constant {
    num: i64,
    den: i64,
    over_pi: bool,
}

impl Constant {
    const fn rational(num: i64, den: i64) -> Self {
        Constant {
            num,
            den,
            over_pi: false,
        }
    }

    const fn over_pi(num: i64, den: i64) -> Self {
        Constant {
            num,
            den,
            over_pi: true,
        }
    }

    fn value(self) -> f64 {
        let v = self.num as f64 / self.den as f64;
        if self.over_pi {
            v / PI
        } else {
            v
        }
    }
}

fn binom(n: u64, k: u64) -> i128 {
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as i128 / (i + 1) as i128;
    }
    acc
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Reduced fraction with exact arithmetic; magnitudes here stay far below
/// the i128 range.
#[derive(Clone, Copy, Debug)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn new(num: i128, den: i128) -> Self {
        debug_assert!(den != 0);
        let sign = if den < 0 { -1 } else { 1 };
        let g = gcd(num, den).max(1);
        Frac {
            num: sign * num / g,
            den: sign * den / g,
        }
    }

    fn add(self, other: Frac) -> Frac {
        Frac::new(
            self.num * other.den + other.num * self.den,
            self.den * other.den,
        )
    }

    fn scale(self, factor: i128) -> Frac {
        Frac::new(self.num * factor, self.den)
    }

    fn recip_halved(self) -> Frac {
        Frac::new(self.den, 2 * self.num)
    }
}

/// Coefficients of `(1 - r)^support_exponent * p(r)` in powers of
/// `u = 1 - r`, ascending. Working in `u` keeps evaluation exact near the
/// support edge, where the leading `u^l` factor would otherwise be formed
/// by catastrophic cancellation of large monomial terms.
fn expand_in_u(support_exponent: u32, p: &[i64]) -> Vec<i128> {
    let l = support_exponent as usize;
    let mut out = vec![0i128; l + p.len()];
    // p(1 - u) = sum_i [ sum_{j >= i} p_j binom(j, i) (-1)^i ] u^i
    for (i, slot) in out[l..].iter_mut().enumerate() {
        let sign = if i % 2 == 0 { 1 } else { -1 };
        *slot = sign
            * p.iter()
                .enumerate()
                .skip(i)
                .map(|(j, &pj)| pj as i128 * binom(j as u64, i as u64))
                .sum::<i128>();
    }
    out
}

/// Coefficient tables of the radial derivatives, orders `0..=max_order`, in
/// powers of `u = 1 - r`, with the normalization constant and the
/// `(-1)^order` chain-rule sign folded in. The integer products stay below
/// 2^53, so the only rounding is the final division (and pi, where present).
fn derivative_tables(poly: &[i128], constant: Constant, max_order: usize) -> Vec<Vec<f64>> {
    let mut tables = Vec::with_capacity(max_order + 1);
    let mut current = poly.to_vec();
    for order in 0..=max_order {
        let sign = if order % 2 == 0 { 1 } else { -1 };
        tables.push(
            current
                .iter()
                .map(|&c| {
                    let exact = (c * sign * constant.num as i128) as f64;
                    let v = exact / constant.den as f64;
                    if constant.over_pi {
                        v / PI
                    } else {
                        v
                    }
                })
                .collect(),
        );
        let next: Vec<i128> = current
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * i as i128)
            .collect();
        current = if next.is_empty() { vec![0] } else { next };
    }
    tables
}

#[inline]
fn horner(coeffs: &[f64], u: f64) -> f64 {
    let mut acc = 0.0;
    for &c in coeffs.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

#[inline]
fn euclid_norm(x: &[f64]) -> f64 {
    match x {
        [v] => v.abs(),
        _ => x.iter().map(|v| v * v).sum::<f64>().sqrt(),
    }
}

/// Table data per `(dim, k)`: support exponent, constant, factor polynomial
/// coefficients ascending in `r`. The factor polynomials agree for dim 2
/// and 3; only the constants differ.
fn table_entry(dim: usize, k: usize) -> Option<(u32, Constant, &'static [i64])> {
    let entry = match (dim, k) {
        (1, 0) => (1, Constant::rational(1, 1), &[1][..]),
        (1, 1) => (3, Constant::rational(5, 4), &[1, 3][..]),
        (1, 2) => (5, Constant::rational(3, 2), &[1, 5, 8][..]),
        (1, 3) => (7, Constant::rational(55, 32), &[1, 7, 19, 21][..]),
        (2, 0) => (2, Constant::over_pi(6, 1), &[1][..]),
        (2, 1) => (4, Constant::over_pi(7, 1), &[1, 4][..]),
        (2, 2) => (6, Constant::over_pi(3, 1), &[3, 18, 35][..]),
        (2, 3) => (8, Constant::over_pi(78, 7), &[1, 8, 25, 32][..]),
        (3, 0) => (2, Constant::over_pi(15, 2), &[1][..]),
        (3, 1) => (4, Constant::over_pi(21, 2), &[1, 4][..]),
        (3, 2) => (6, Constant::over_pi(165, 32), &[3, 18, 35][..]),
        (3, 3) => (8, Constant::over_pi(1365, 64), &[1, 8, 25, 32][..]),
        _ => return None,
    };
    Some(entry)
}

/// A single Wendland function `phi_{n,k}` with precomputed derivative
/// tables through order `2k`.
#[derive(Clone, Debug)]
pub struct WendlandBase {
    dim: usize,
    smoothness_index: usize,
    constant: Constant,
    derivs: Vec<Vec<f64>>,
}

impl WendlandBase {
    /// The kernel normalized to unit mass as a radial function on `R^dim`.
    pub fn new(dim: usize, k: usize) -> Result<Self, KernelError> {
        let (l, constant, p) =
            table_entry(dim, k).ok_or(KernelError::UnknownBase { dim, k })?;
        Ok(Self::from_parts(dim, k, l, constant, p))
    }

    /// The `(2, k)` profile shape re-normalized to unit integral over the
    /// line. These serve as bump profiles for manufactured solutions, not
    /// as discretization kernels, so the constant is rebuilt from the exact
    /// polynomial integral instead of taken from the table.
    pub fn line_renormalized(k: usize) -> Result<Self, KernelError> {
        let (l, _, p) = table_entry(2, k).ok_or(KernelError::UnknownBase { dim: 2, k })?;
        // integral over [0, 1]: sum_j p_j * B(j + 1, l + 1), with
        // B(j + 1, l + 1) = 1 / ((j + l + 1) * binom(j + l, j))
        let mut integral = Frac::new(0, 1);
        for (j, &pj) in p.iter().enumerate() {
            let den = (j as i128 + l as i128 + 1) * binom((j + l as usize) as u64, j as u64);
            integral = integral.add(Frac::new(1, den).scale(pj as i128));
        }
        let c = integral.recip_halved();
        let constant = Constant::rational(
            i64::try_from(c.num).expect("small table integers"),
            i64::try_from(c.den).expect("small table integers"),
        );
        Ok(Self::from_parts(1, k, l, constant, p))
    }

    fn from_parts(dim: usize, k: usize, l: u32, constant: Constant, p: &[i64]) -> Self {
        let poly = expand_in_u(l, p);
        let derivs = derivative_tables(&poly, constant, 2 * k);
        WendlandBase {
            dim,
            smoothness_index: k,
            constant,
            derivs,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The index `k`; the kernel is `C^{2k}`.
    pub fn smoothness_index(&self) -> usize {
        self.smoothness_index
    }

    pub fn smoothness(&self) -> usize {
        2 * self.smoothness_index
    }

    pub fn constant_value(&self) -> f64 {
        self.constant.value()
    }

    /// Coefficient table of the radial derivative of the given order, as a
    /// polynomial in `u = 1 - r` valid on `0 <= r < 1`.
    pub(crate) fn deriv_coeffs(&self, order: usize) -> &[f64] {
        &self.derivs[order]
    }

    /// Radial derivative of the given order at radius `r >= 0`; exactly zero
    /// for `r >= 1`. Orders above `2k` are not defined everywhere and are
    /// rejected.
    pub fn eval(&self, r: f64, order: usize) -> Result<f64, KernelError> {
        if order > 2 * self.smoothness_index {
            return Err(KernelError::TooRough {
                order,
                smoothness: 2 * self.smoothness_index,
            });
        }
        Ok(self.eval_unchecked(r, order))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, r: f64, order: usize) -> f64 {
        debug_assert!(r >= 0.0);
        if r >= 1.0 {
            return 0.0;
        }
        horner(&self.derivs[order], 1.0 - r)
    }
}

/// Weights `lambda_j` making `sum_j lambda_j phi(r / a_j)` keep unit mass
/// while its even radial moments `2, 4, ..., 2(m - 1)` vanish, where `m` is
/// the node count. Closed form of the inverse Vandermonde in `a_j^2`:
/// `lambda_j = a_j^{-dim} * prod_{i != j} a_i^2 / (a_i^2 - a_j^2)`.
pub fn high_order_weights(nodes: &[f64], dim: usize) -> Result<Vec<f64>, KernelError> {
    if nodes.is_empty() {
        return Err(KernelError::NoNodes);
    }
    for &a in nodes {
        if !(a > 0.0) || !a.is_finite() {
            return Err(KernelError::NonPositiveNode { value: a });
        }
    }
    for (i, &a) in nodes.iter().enumerate() {
        if nodes[..i].contains(&a) {
            return Err(KernelError::RepeatedNode { value: a });
        }
    }
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(j, &aj)| {
            let mut lambda = aj.powi(-(dim as i32));
            for (i, &ai) in nodes.iter().enumerate() {
                if i != j {
                    lambda *= ai * ai / (ai * ai - aj * aj);
                }
            }
            lambda
        })
        .collect();
    Ok(weights)
}

/// Radial kernel `eta(r) = sum_j weights[j] * phi(r / nodes[j])` over a
/// common [`WendlandBase`]. The smoothness is the base's; the approximation
/// order is recorded at construction.
#[derive(Clone, Debug)]
pub struct CompositeRadialKernel {
    base: WendlandBase,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl CompositeRadialKernel {
    /// Direct construction from explicit weights. Weights are taken as
    /// given, so moment properties are the caller's responsibility; use
    /// [`make_kernel`] for the standard combinations.
    pub fn from_parts(
        base: WendlandBase,
        nodes: Vec<f64>,
        weights: Vec<f64>,
        order: usize,
    ) -> Result<Self, KernelError> {
        if nodes.is_empty() {
            return Err(KernelError::NoNodes);
        }
        if nodes.len() != weights.len() {
            return Err(KernelError::WeightCountMismatch {
                nodes: nodes.len(),
                weights: weights.len(),
            });
        }
        for &a in &nodes {
            if !(a > 0.0) || !a.is_finite() {
                return Err(KernelError::NonPositiveNode { value: a });
            }
        }
        Ok(CompositeRadialKernel {
            base,
            nodes,
            weights,
            order,
        })
    }

    pub fn base(&self) -> &WendlandBase {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn smoothness(&self) -> usize {
        self.base.smoothness()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn support_radius(&self) -> f64 {
        self.nodes.iter().copied().fold(0.0, f64::max)
    }

    /// Panel edges `0 < a_(1) < ... < a_(m)` enclosing every polynomial
    /// piece; integrands built from this kernel are smooth between them.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut edges = vec![0.0];
        edges.extend_from_slice(&self.nodes);
        edges.sort_by(|x, y| x.partial_cmp(y).expect("finite nodes"));
        edges.dedup();
        edges
    }

    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        let mut acc = 0.0;
        for (&a, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * self.base.eval_unchecked(r / a, 0);
        }
        acc
    }

    /// Radial derivative of the given order; each copy contributes with the
    /// chain-rule factor `a_j^{-order}`.
    pub fn deriv(&self, r: f64, order: usize) -> Result<f64, KernelError> {
        if order > self.smoothness() {
            return Err(KernelError::TooRough {
                order,
                smoothness: self.smoothness(),
            });
        }
        Ok(self.deriv_unchecked(r, order))
    }

    #[inline]
    pub(crate) fn deriv_unchecked(&self, r: f64, order: usize) -> f64 {
        let mut acc = 0.0;
        for (&a, &w) in self.nodes.iter().zip(&self.weights) {
            acc += w * a.powi(-(order as i32)) * self.base.eval_unchecked(r / a, order);
        }
        acc
    }
}

/// Builds the standard kernel of the given approximation order and
/// smoothness: base `phi_{dim, smoothness/2}` over scale nodes
/// `1, 0.8, 0.6` (as many as `order / 2`), weighted by
/// [`high_order_weights`].
pub fn make_kernel(
    order: usize,
    smoothness: usize,
    dim: usize,
) -> Result<CompositeRadialKernel, KernelError> {
    let supported =
        matches!(order, 2 | 4 | 6) && matches!(smoothness, 2 | 4 | 6) && (1..=3).contains(&dim);
    if !supported {
        return Err(KernelError::UnsupportedKernel {
            order,
            smoothness,
            dim,
        });
    }
    let base = WendlandBase::new(dim, smoothness / 2)?;
    let nodes: &[f64] = match order {
        2 => &[1.0],
        4 => &[1.0, 0.8],
        _ => &[1.0, 0.8, 0.6],
    };
    let weights = high_order_weights(nodes, dim)?;
    CompositeRadialKernel::from_parts(base, nodes.to_vec(), weights, order)
}

/// Radial moment `int_0^inf eta(r) r^{dim - 1 + 2i} dr`, integrated exactly
/// per polynomial piece. Moment 0 equals the reciprocal surface measure of
/// the unit sphere when the kernel has unit mass; moments `1..order/2 - 1`
/// vanish for kernels from [`make_kernel`].
pub fn kernel_moment(kernel: &CompositeRadialKernel, i: usize) -> f64 {
    let power = (kernel.dim() - 1 + 2 * i) as i32;
    quad::integrate_panels(
        |r| kernel.value(r) * r.powi(power),
        &kernel.breakpoints(),
    )
}

/// A composite kernel dilated to support radius `epsilon * max(nodes)`:
/// `zeta_eps(x) = eps^{-dim} * eta(|x| / eps)`.
#[derive(Clone, Debug)]
pub struct ScaledKernel {
    kernel: CompositeRadialKernel,
    epsilon: f64,
    value_scale: f64,
    deriv_scale: f64,
}

impl ScaledKernel {
    pub fn new(kernel: CompositeRadialKernel, epsilon: f64) -> Result<Self, KernelError> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(KernelError::InvalidScale { epsilon });
        }
        let value_scale = epsilon.powi(-(kernel.dim() as i32));
        let deriv_scale = value_scale / epsilon;
        Ok(ScaledKernel {
            kernel,
            epsilon,
            value_scale,
            deriv_scale,
        })
    }

    pub fn kernel(&self) -> &CompositeRadialKernel {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn support_radius(&self) -> f64 {
        self.epsilon * self.kernel.support_radius()
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        self.value_scale * self.kernel.value(euclid_norm(x) / self.epsilon)
    }

    /// First-order partial along `axis`. A radial `C^2` function has
    /// vanishing gradient at the origin; the chain-rule form `eta'(r) x/|x|`
    /// is 0/0 there, so the origin is returned explicitly.
    pub fn partial(&self, x: &[f64], axis: usize) -> Result<f64, KernelError> {
        let dim = self.dim();
        if axis >= dim {
            return Err(KernelError::AxisOutOfRange { axis, dim });
        }
        if self.kernel.smoothness() < 2 {
            return Err(KernelError::TooRough {
                order: 1,
                smoothness: self.kernel.smoothness(),
            });
        }
        debug_assert_eq!(x.len(), dim);
        let rho = euclid_norm(x);
        if rho == 0.0 {
            return Ok(0.0);
        }
        Ok(self.deriv_scale * self.kernel.deriv_unchecked(rho / self.epsilon, 1) * x[axis] / rho)
    }

    /// Value or first-order partial, selected by `alpha`.
    pub fn eval(&self, x: &[f64], alpha: Alpha) -> Result<f64, KernelError> {
        match alpha {
            Alpha::Value => Ok(self.value(x)),
            Alpha::Partial(axis) => self.partial(x, axis),
        }
    }
}

/// Continuous `L^p` norm of the scaled kernel or one derivative over the
/// real line. Between the scaled breakpoints (mirrored about the origin)
/// the integrand is a fixed-sign polynomial once panels are split at sign
/// changes, so the panel quadrature is exact to rounding.
pub fn scaled_lp_norm(
    kernel: &ScaledKernel,
    alpha: Alpha,
    p: NormP,
) -> Result<f64, KernelError> {
    let dim = kernel.dim();
    if dim != 1 {
        return Err(KernelError::NormDimension { dim });
    }
    // Validate the alpha/smoothness combination once, away from the origin.
    kernel.eval(&[kernel.epsilon() * 0.5], alpha)?;
    let f = move |x: f64| {
        kernel
            .eval(&[x], alpha)
            .expect("alpha validated above")
    };
    let mut edges: Vec<f64> = kernel
        .kernel()
        .breakpoints()
        .iter()
        .map(|&a| a * kernel.epsilon())
        .collect();
    let mirrored: Vec<f64> = edges.iter().rev().map(|&e| -e).collect();
    edges = [&mirrored[..edges.len() - 1], &edges].concat();
    Ok(match p {
        NormP::One => {
            let split = quad::split_at_sign_changes(f, &edges);
            quad::integrate_panels(|x| f(x).abs(), &split)
        }
        NormP::Two => quad::integrate_panels(|x| f(x) * f(x), &edges).sqrt(),
        NormP::Inf => quad::sup_abs(f, &edges),
    })
}

/// Textual kernel selector understood by configuration and the command
/// line: `composite:<order>:<smoothness>:<dim>`, or `wendland:<dim>:<k>`
/// for a single plain base kernel (order 2).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KernelSpec {
    Wendland { dim: usize, k: usize },
    Composite { order: usize, smoothness: usize, dim: usize },
}

impl KernelSpec {
    pub fn build(&self) -> Result<CompositeRadialKernel, KernelError> {
        match *self {
            KernelSpec::Wendland { dim, k } => {
                let base = WendlandBase::new(dim, k)?;
                CompositeRadialKernel::from_parts(base, vec![1.0], vec![1.0], 2)
            }
            KernelSpec::Composite {
                order,
                smoothness,
                dim,
            } => make_kernel(order, smoothness, dim),
        }
    }
}

impl FromStr for KernelSpec {
    type Err = KernelError;

    fn from_str(s: &str) -> Result<Self, KernelError> {
        let bad = || KernelError::BadSpec { spec: s.to_string() };
        let parts: Vec<&str> = s.split(':').collect();
        let nums: Result<Vec<usize>, _> = parts[1..].iter().map(|p| p.parse()).collect();
        match (parts.first().copied(), nums) {
            (Some("wendland"), Ok(v)) if v.len() == 2 => {
                Ok(KernelSpec::Wendland { dim: v[0], k: v[1] })
            }
            (Some("composite"), Ok(v)) if v.len() == 3 => Ok(KernelSpec::Composite {
                order: v[0],
                smoothness: v[1],
                dim: v[2],
            }),
            _ => Err(bad()),
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match *self {
            KernelSpec::Wendland { dim, k } => write!(f, "wendland:{dim}:{k}"),
            KernelSpec::Composite {
                order,
                smoothness,
                dim,
            } => write!(f, "composite:{order}:{smoothness}:{dim}"),
        }
    }
}
