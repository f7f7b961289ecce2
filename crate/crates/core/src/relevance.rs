//! Joint ℓ2,1-norm regression and feature relevance scores.
//!
//! Minimizes `Σ_i ‖Ŵᵀx_i − y_i‖₂ + γ Σ_j ‖ŵ_j‖₂` over `Ŵ ∈ R^{d×c}` by
//! iteratively reweighted least squares. Each step replaces every norm by the
//! quadratic that touches it at the current iterate, so the objective never
//! increases.

use ndarray::{Array2, ArrayView2, Axis};
use serde::Serialize;

use crate::compensation::{
    apply_zscore, build_compensated_design, build_design, class_balanced_stats, plain_stats,
    CompensationStats,
};
use crate::error::{Error, Result};
use crate::ingest::LabelVector;
use crate::linalg::cholesky_solve;
use crate::matrix::FeatureMatrix;
use crate::scalar::{norm2, Real};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<T> {
    /// Regularization weight `γ`.
    pub gamma: T,
    pub max_iters: usize,
    /// Stop once the relative objective change falls below this.
    pub rel_tol: T,
    /// Floor on row and residual norms in the reweighting.
    pub eps: T,
}

impl<T: Real> Default for SolverConfig<T> {
    fn default() -> Self {
        Self {
            gamma: T::one(),
            max_iters: 200,
            rel_tol: T::lit(1e-7),
            eps: T::lit(1e-10),
        }
    }
}

impl<T: Real> SolverConfig<T> {
    pub fn with_gamma(gamma: T) -> Self {
        Self {
            gamma,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, reason: String| Err(Error::InvalidParameter { name, reason });
        if !(self.gamma > T::zero()) || !self.gamma.is_finite() {
            return bad("gamma", format!("must be positive and finite, got {}", self.gamma));
        }
        if !(self.eps > T::zero()) {
            return bad("eps", format!("must be positive, got {}", self.eps));
        }
        if !(self.rel_tol > T::zero()) {
            return bad("rel_tol", format!("must be positive, got {}", self.rel_tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters", "must be at least 1".into());
        }
        Ok(())
    }
}

/// Extended weights `Ŵ` (`d × c`, `d = m + 1`); the last row is the bias.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightMatrix<T> {
    w_hat: Array2<T>,
}

impl<T: Real> WeightMatrix<T> {
    pub fn new(w_hat: Array2<T>) -> Result<Self> {
        if w_hat.nrows() < 2 || w_hat.ncols() == 0 {
            return Err(Error::DimensionMismatch {
                expected: "at least one feature row plus a bias row".into(),
                found: format!("{:?}", w_hat.dim()),
            });
        }
        if let Some(((row, col), _)) = w_hat.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { row, col });
        }
        Ok(Self { w_hat })
    }

    pub fn w_hat(&self) -> ArrayView2<'_, T> {
        self.w_hat.view()
    }

    /// Feature weights, without the bias row.
    pub fn w(&self) -> ArrayView2<'_, T> {
        self.w_hat.slice(ndarray::s![..self.m(), ..])
    }

    pub fn bias_row(&self) -> Vec<T> {
        self.w_hat.row(self.m()).to_vec()
    }

    /// Feature count `m`.
    pub fn m(&self) -> usize {
        self.w_hat.nrows() - 1
    }

    pub fn c(&self) -> usize {
        self.w_hat.ncols()
    }

    pub fn per_class(&self) -> Array2<T> {
        self.w().mapv(|v| v.abs())
    }

    pub fn total(&self) -> Vec<T> {
        self.w()
            .axis_iter(Axis(0))
            .map(|row| norm2(row.iter().copied()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport<T> {
    /// Objective at the initial point followed by one value per iteration.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    pub converged: bool,
    /// Whether the final Newton polish lowered the objective; its value is
    /// then the last trace entry.
    pub polished: bool,
}

impl<T: Real> SolveReport<T> {
    pub fn final_objective(&self) -> T {
        *self.objective_trace.last().expect("trace holds the initial objective")
    }
}

fn check_problem<T: Real>(x: ArrayView2<'_, T>, y: ArrayView2<'_, T>) -> Result<()> {
    if x.ncols() != y.ncols() || x.nrows() == 0 || y.nrows() == 0 || x.ncols() == 0 {
        return Err(Error::DimensionMismatch {
            expected: "X (d×n) and Y (c×n) with matching n".into(),
            found: format!("X {:?}, Y {:?}", x.dim(), y.dim()),
        });
    }
    check_finite(x)?;
    check_finite(y)
}

fn check_finite<T: Real>(m: ArrayView2<'_, T>) -> Result<()> {
    match m.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((row, col), _)) => Err(Error::NonFinite { row, col }),
        None => Ok(()),
    }
}

fn residual_norms<T: Real>(
    w_hat: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
) -> Vec<T> {
    let r = w_hat.t().dot(&x) - y;
    r.axis_iter(Axis(1))
        .map(|col| norm2(col.iter().copied()))
        .collect()
}

fn row_norms<T: Real>(w_hat: ArrayView2<'_, T>) -> Vec<T> {
    w_hat
        .axis_iter(Axis(0))
        .map(|row| norm2(row.iter().copied()))
        .collect()
}

fn objective_unchecked<T: Real>(
    w_hat: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    gamma: T,
) -> T {
    let data: T = residual_norms(w_hat, x, y).into_iter().sum();
    let reg: T = row_norms(w_hat).into_iter().sum();
    data + gamma * reg
}

/// `Σ_i ‖Ŵᵀx_i − y_i‖₂ + γ Σ_j ‖ŵ_j‖₂`.
pub fn objective<T: Real>(
    w_hat: ArrayView2<'_, T>,
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    gamma: T,
) -> Result<T> {
    check_problem(x, y)?;
    if w_hat.dim() != (x.nrows(), y.nrows()) {
        return Err(Error::DimensionMismatch {
            expected: format!("Ŵ of shape ({}, {})", x.nrows(), y.nrows()),
            found: format!("{:?}", w_hat.dim()),
        });
    }
    Ok(objective_unchecked(w_hat, x, y, gamma))
}

/// Weighted Gram system `Σ_i x_i x_iᵀ / (2ρ_i) + diag(γ / (2ν_j))` and its
/// right-hand side `Σ_i x_i y_iᵀ / (2ρ_i)`.
fn weighted_system<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    instance_weight: &[T],
    ridge: &[T],
) -> (Array2<T>, Array2<T>) {
    let weighted_x = {
        let mut wx = x.to_owned();
        for (mut col, &w) in wx.axis_iter_mut(Axis(1)).zip(instance_weight) {
            col.mapv_inplace(|v| v * w);
        }
        wx
    };
    let mut a = weighted_x.dot(&x.t());
    for (j, &r) in ridge.iter().enumerate() {
        a[[j, j]] += r;
    }
    let b = weighted_x.dot(&y.t());
    (a, b)
}

/// Minimizes the ℓ2,1 objective for design `x` (`d × n`) and targets `y`
/// (`c × n`).
///
/// Starts from the reweighted step taken at `Ŵ = 0` with unit row norms, so
/// `ρ_i = ‖y_i‖` and `ν_j = 1`. Scaling instances and `γ` together scales this
/// system uniformly, which keeps the iterates equivariant under instance
/// reweighting and duplication. At each step, with
/// `ρ_i = max(‖Ŵᵀx_i − y_i‖, eps)` and `ν_j = max(‖ŵ_j‖, eps)`, solves
/// `(X D_ρ⁻¹ Xᵀ + γ D_ν⁻¹) Ŵ = X D_ρ⁻¹ Yᵀ` with `D_ρ = diag(2ρ_i)` and
/// `D_ν = diag(2ν_j)`, then extends the step by doubling while the objective
/// keeps falling. Returns the best iterate seen.
pub fn solve_l21<T: Real>(
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    config: &SolverConfig<T>,
) -> Result<(WeightMatrix<T>, SolveReport<T>)> {
    config.validate()?;
    check_problem(x, y)?;
    let d = x.nrows();
    let gamma = config.gamma;
    let two = T::lit(2.0);

    let start: Vec<T> = y
        .axis_iter(Axis(1))
        .map(|col| T::one() / (two * norm2(col.iter().copied()).max(config.eps)))
        .collect();
    let (a, b) = weighted_system(x, y, &start, &vec![gamma / two; d]);
    let mut w = cholesky_solve(a.view(), b.view())?;
    let mut f = objective_unchecked(w.view(), x, y, gamma);
    let mut trace = vec![f];
    let mut best = (f, w.clone());
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        iterations += 1;
        let inst: Vec<T> = residual_norms(w.view(), x, y)
            .into_iter()
            .map(|r| T::one() / (two * r.max(config.eps)))
            .collect();
        let ridge: Vec<T> = row_norms(w.view())
            .into_iter()
            .map(|v| gamma / (two * v.max(config.eps)))
            .collect();
        let (a, b) = weighted_system(x, y, &inst, &ridge);
        let step = cholesky_solve(a.view(), b.view())?;
        let (next_w, next) = extrapolate(&w, step, x, y, gamma);
        w = next_w;
        trace.push(next);
        if next < best.0 {
            best = (next, w.clone());
        }
        let change = (f - next).abs();
        f = next;
        if change <= config.rel_tol * f.abs().max(T::min_positive_value()) {
            converged = true;
            break;
        }
    }

    let mut polished = false;
    if let Some(p) = polish(x, y, gamma, &best.1, best.0) {
        let fp = objective_unchecked(p.view(), x, y, gamma);
        if fp < best.0 {
            best = (fp, p);
            trace.push(fp);
            polished = true;
        }
    }

    Ok((
        WeightMatrix::new(best.1)?,
        SolveReport {
            objective_trace: trace,
            iterations,
            converged,
            polished,
        },
    ))
}

/// Largest `d · c` for which the Newton polish runs.
pub const POLISH_MAX_UNKNOWNS: usize = 1024;

/// `√(‖v‖² + μ²)`.
fn smooth_norm<T: Real>(v: impl Iterator<Item = T>, mu: T) -> T {
    (v.map(|a| a * a).sum::<T>() + mu * mu).sqrt()
}

fn smoothed_objective<T: Real>(w: &Array2<T>, x: ArrayView2<'_, T>, y: ArrayView2<'_, T>, gamma: T, mu: T) -> T {
    let r = w.t().dot(&x) - y;
    let data: T = r.axis_iter(Axis(1)).map(|col| smooth_norm(col.iter().copied(), mu)).sum();
    let reg: T = w.axis_iter(Axis(0)).map(|row| smooth_norm(row.iter().copied(), mu)).sum();
    data + gamma * reg
}

/// Adds `weight · (I − v vᵀ / s²) / s` to the `c × c` block of `h` at
/// (`row`, `col`) and returns `v / s`.
fn curvature_block<T: Real>(v: &[T], mu: T) -> (Vec<T>, Vec<T>) {
    let c = v.len();
    let s = smooth_norm(v.iter().copied(), mu);
    let unit: Vec<T> = v.iter().map(|&a| a / s).collect();
    let mut block = vec![T::zero(); c * c];
    for a in 0..c {
        for b in 0..c {
            let delta = if a == b { T::one() } else { T::zero() };
            block[a * c + b] = (delta - unit[a] * unit[b]) / s;
        }
    }
    (unit, block)
}

/// Newton's method on the objective with every norm smoothed to
/// `√(‖·‖² + μ²)`, for a decreasing sequence of `μ`, started at `w0`.
///
/// Near zero residuals and zero rows the reweighting iteration converges only
/// linearly, and slowly; the smoothed problem is strictly convex and Newton
/// converges fast on it. Returns `None` for problems above
/// [`POLISH_MAX_UNKNOWNS`].
fn polish<T: Real>(x: ArrayView2<'_, T>, y: ArrayView2<'_, T>, gamma: T, w0: &Array2<T>, f0: T) -> Option<Array2<T>> {
    let (d, n) = x.dim();
    let c = y.nrows();
    let q = d * c;
    if q > POLISH_MAX_UNKNOWNS {
        return None;
    }
    let base = f0 / T::from_count(n + d);
    if !(base > T::zero()) {
        return None;
    }
    let floor = base * T::epsilon() * T::lit(1e4);
    let mut mu = base * T::lit(1e-3);
    let mut w = w0.clone();
    while mu >= floor {
        for _ in 0..30 {
            let r = w.t().dot(&x) - y;
            let mut g = Array2::<T>::zeros((q, 1));
            let mut h = Array2::<T>::zeros((q, q));
            for (i, col) in r.axis_iter(Axis(1)).enumerate() {
                let (unit, block) = curvature_block(&col.to_vec(), mu);
                for a in 0..d {
                    let xa = x[[a, i]];
                    for b in 0..c {
                        g[[a * c + b, 0]] += xa * unit[b];
                    }
                    for a2 in 0..d {
                        let xx = xa * x[[a2, i]];
                        for b in 0..c {
                            for b2 in 0..c {
                                h[[a * c + b, a2 * c + b2]] += xx * block[b * c + b2];
                            }
                        }
                    }
                }
            }
            for (j, row) in w.axis_iter(Axis(0)).enumerate() {
                let (unit, block) = curvature_block(&row.to_vec(), mu);
                for b in 0..c {
                    g[[j * c + b, 0]] += gamma * unit[b];
                    for b2 in 0..c {
                        h[[j * c + b, j * c + b2]] += gamma * block[b * c + b2];
                    }
                }
            }
            let Ok(step) = cholesky_solve(h.view(), g.view()) else { break };
            // Newton decrement gᵀH⁻¹g
            let decrement: T = g.iter().zip(step.iter()).map(|(&a, &b)| a * b).sum();
            let current = smoothed_objective(&w, x, y, gamma, mu);
            if !(decrement > T::epsilon() * current) {
                break;
            }
            let mut t = T::one();
            let mut moved = false;
            for _ in 0..50 {
                let trial = Array2::from_shape_fn((d, c), |(a, b)| w[[a, b]] - t * step[[a * c + b, 0]]);
                if smoothed_objective(&trial, x, y, gamma, mu) <= current - T::lit(1e-4) * t * decrement {
                    w = trial;
                    moved = true;
                    break;
                }
                t = t * T::lit(0.5);
            }
            if !moved {
                break;
            }
        }
        mu = mu * T::lit(0.1);
    }
    Some(w)
}

/// Longest doubling of the reweighted step `step − w` that still lowers the
/// objective. Components that shrink geometrically toward a kink move along a
/// nearly fixed direction, and plain reweighting only crawls along it.
fn extrapolate<T: Real>(
    w: &Array2<T>,
    step: Array2<T>,
    x: ArrayView2<'_, T>,
    y: ArrayView2<'_, T>,
    gamma: T,
) -> (Array2<T>, T) {
    const MAX_DOUBLINGS: usize = 40;
    let dir = &step - w;
    let mut best_f = objective_unchecked(step.view(), x, y, gamma);
    let mut best = step;
    let mut beta = T::lit(2.0);
    for _ in 0..MAX_DOUBLINGS {
        let trial = w + &dir.mapv(|v| v * beta);
        let f = objective_unchecked(trial.view(), x, y, gamma);
        if !(f < best_f) {
            break;
        }
        best = trial;
        best_f = f;
        beta = beta * T::lit(2.0);
    }
    (best, best_f)
}

/// Per-class scores `|W_{j,l}|` and total scores `‖w_j‖₂`; the bias row is
/// excluded.
pub fn relevance_scores<T: Real>(w: &WeightMatrix<T>) -> (Array2<T>, Vec<T>) {
    (w.per_class(), w.total())
}

/// Feature indices ordered by descending score, ties by ascending index.
pub fn rank_features<T: Real>(total: &[T]) -> Vec<(usize, T)> {
    let mut order: Vec<(usize, T)> = total.iter().copied().enumerate().collect();
    order.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.0.cmp(&b.0))
    });
    order
}

/// Everything the relevance pipeline produced for one run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RelevanceResult<T> {
    pub compensated: bool,
    pub stats: CompensationStats<T>,
    pub weights: WeightMatrix<T>,
    pub report: SolveReport<T>,
}

/// Z-score, build the design and solve.
///
/// With `compensate`, statistics are class-balanced and design columns are
/// scaled by `n / (c · n_l)`. Without, plain moments and the unscaled design
/// are used.
pub fn score_relevance<T: Real>(
    f: &FeatureMatrix<T>,
    labels: &LabelVector,
    config: &SolverConfig<T>,
    compensate: bool,
) -> Result<RelevanceResult<T>> {
    let (stats, (x, y)) = if compensate {
        let stats = class_balanced_stats(f, labels)?;
        let z = apply_zscore(f, &stats)?;
        let design = build_compensated_design(&z, labels, &stats)?;
        (stats, design)
    } else {
        let stats = plain_stats(f)?;
        let z = apply_zscore(f, &stats)?;
        let design = build_design(&z, labels)?;
        (stats, design)
    };
    let (weights, report) = solve_l21(x.view(), y.view(), config)?;
    Ok(RelevanceResult {
        compensated: compensate,
        stats,
        weights,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn objective_at_zero_weights_counts_instances() {
        let x = array![[0.5, -1.0, 2.0], [1.0, 1.0, 1.0]];
        let y = array![[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]];
        let w = Array2::<f64>::zeros((2, 2));
        assert_eq!(objective(w.view(), x.view(), y.view(), 1.0).unwrap(), 3.0);
    }

    #[test]
    fn perfect_fit_without_penalty_is_zero() {
        let x = array![[2.0], [1.0]];
        let y = array![[1.0], [0.0]];
        let w = array![[0.5, 0.0], [0.0, 0.0]];
        assert_eq!(objective(w.view(), x.view(), y.view(), 0.0).unwrap(), 0.0);
    }

    #[test]
    fn objective_checks_shapes() {
        let x = Array2::<f64>::zeros((3, 4));
        let y = Array2::<f64>::zeros((2, 4));
        assert!(objective(Array2::zeros((2, 2)).view(), x.view(), y.view(), 1.0).is_err());
        assert!(objective(Array2::zeros((3, 2)).view(), x.view(), y.t(), 1.0).is_err());
    }

    #[test]
    fn scores_are_row_norms_and_magnitudes() {
        let w = WeightMatrix::new(array![[3.0, -4.0], [0.0, 0.0], [9.0, 9.0]]).unwrap();
        let (per_class, total) = relevance_scores(&w);
        assert_eq!(total, vec![5.0, 0.0]);
        assert_eq!(per_class, array![[3.0, 4.0], [0.0, 0.0]]);
        assert_eq!(w.bias_row(), vec![9.0, 9.0]);
    }

    #[test]
    fn ranking_orders_by_score_then_index() {
        let r = rank_features(&[0.1, 0.9, 0.5]);
        assert_eq!(r.iter().map(|p| p.0).collect::<Vec<_>>(), vec![1, 2, 0]);
        let r = rank_features(&[0.3; 4]);
        assert_eq!(r.iter().map(|p| p.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::<f64>::default().validate().is_ok());
        assert!(SolverConfig::with_gamma(0.0f64).validate().is_err());
        assert!(SolverConfig::with_gamma(-1.0f64).validate().is_err());
        let mut c = SolverConfig::<f64>::default();
        c.eps = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn rejects_non_finite_input() {
        let x = array![[1.0, f64::INFINITY], [1.0, 1.0]];
        let y = array![[1.0, 0.0]];
        assert!(matches!(
            solve_l21(x.view(), y.view(), &SolverConfig::default()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn huge_gamma_shrinks_weights_below_zero_point_bound() {
        let x = array![[0.3, -1.2, 0.8, 2.0], [1.0, 1.0, 1.0, 1.0]];
        let y = array![[1.0, 0.0, 1.0, 0.0], [0.0, 1.0, 0.0, 1.0]];
        let gamma = 1e6;
        let (w, rep) = solve_l21(x.view(), y.view(), &SolverConfig::with_gamma(gamma)).unwrap();
        let reg: f64 = row_norms(w.w_hat()).iter().sum();
        assert!(reg <= 4.0 / gamma, "Σ‖ŵ_j‖ = {reg}");
        assert!(rep.final_objective() <= 4.0 + 1e-9);
    }

    #[test]
    fn trace_is_monotone() {
        let x = array![
            [0.3, -1.2, 0.8, 2.0, -0.5, 0.1],
            [1.5, 0.2, -0.7, 0.4, 0.9, -1.1],
            [1.0, 1.0, 1.0, 1.0, 1.0, 1.0]
        ];
        let y = array![[1.0, 0.0, 1.0, 0.0, 0.0, 1.0], [0.0, 1.0, 0.0, 1.0, 1.0, 0.0]];
        let (_, rep) = solve_l21(x.view(), y.view(), &SolverConfig::with_gamma(0.5)).unwrap();
        for pair in rep.objective_trace.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-9));
        }
        assert!(rep.converged);
    }
}
