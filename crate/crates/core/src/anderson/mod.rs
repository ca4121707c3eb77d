//! Anderson acceleration of fixed-point iterations.
//!
//! Given a map `g` and the residual `r(y) = g(y) - y`, each step keeps the
//! last `m + 1` pairs `(g(y_{k-i}), r_{k-i})`, finds coefficients `alpha`
//! with `sum(alpha) = 1` minimizing `||R_k alpha||_2` (plus a small Tikhonov
//! term), and returns the affine combination `sum_i alpha_i g(y_{k-i})`.
//! With `m = 0` this is the plain fixed-point iteration.

mod qr;

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

pub use qr::{QrStats, QrUpdater, RANK_TOL};

use crate::error::{Error, Result};
use crate::Vector;

/// Tikhonov weight used by default in the coefficient solve.
pub const DEFAULT_REG_SCALE: f64 = 1e-10;

/// How the guarded drivers decide whether an extrapolated point is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuardRule {
    /// Sufficient decrease of the smooth part alone:
    /// `f(x_test) <= f(x_k) - gamma/2 ||grad f(x_k)||^2` (Euclidean) or
    /// `f(x_test) <= f(x_k) + <grad f(x_k), x_bpg - x_k> + D(x_bpg, x_k)/gamma`
    /// (Bregman).
    Smooth,
    /// The model of `f` at the plain step plus `h` on both sides:
    /// `f(x_test) + h(x_test) <= f(x_k) + <grad f(x_k), d> + D(x_k + d, x_k)/gamma + h(x_k + d)`
    /// with `d` the plain step and `D = ||.||^2/2` in the Euclidean case.
    /// The plain step always passes when `gamma <= 1/L`. Identical to
    /// [`GuardRule::Smooth`] when `h = 0`.
    #[default]
    Composite,
}

/// Configuration shared by the engine and the accelerated drivers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AaConfig {
    /// History depth: the window holds `m + 1` residuals.
    pub m: usize,
    /// Tikhonov factor; the penalty is `reg_scale * ||R||_F^2 * ||alpha||^2`.
    pub reg_scale: f64,
    /// Upper bound on `||alpha||_1`; larger solutions are replaced by a
    /// plain fixed-point step.
    pub m_alpha: f64,
    /// Solve through an incrementally updated QR factorization instead of the
    /// bordered normal equations.
    pub use_qr_updates: bool,
    /// Clear the history after a guarded driver rejects an extrapolated step.
    pub flush_on_fallback: bool,
    pub guard: GuardRule,
}

impl AaConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            reg_scale: DEFAULT_REG_SCALE,
            m_alpha: f64::INFINITY,
            use_qr_updates: m > 3,
            flush_on_fallback: false,
            guard: GuardRule::default(),
        }
    }

    pub fn with_reg_scale(mut self, reg_scale: f64) -> Self {
        self.reg_scale = reg_scale;
        self
    }

    pub fn with_m_alpha(mut self, m_alpha: f64) -> Self {
        self.m_alpha = m_alpha;
        self
    }

    pub fn with_qr(mut self, use_qr_updates: bool) -> Self {
        self.use_qr_updates = use_qr_updates;
        self
    }

    pub fn with_flush_on_fallback(mut self, flush: bool) -> Self {
        self.flush_on_fallback = flush;
        self
    }

    pub fn with_guard(mut self, guard: GuardRule) -> Self {
        self.guard = guard;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.reg_scale >= 0.0) || !self.reg_scale.is_finite() {
            return Err(Error::Config(format!(
                "reg_scale must be finite and nonnegative, got {}",
                self.reg_scale
            )));
        }
        if !(self.m_alpha > 1.0) {
            return Err(Error::Config(format!(
                "m_alpha must exceed 1, got {}",
                self.m_alpha
            )));
        }
        Ok(())
    }
}

impl Default for AaConfig {
    fn default() -> Self {
        Self::new(5)
    }
}

/// Sliding window of `(g_i, r_i)` pairs, newest first.
#[derive(Debug, Clone)]
pub struct ResidualHistory {
    capacity: usize,
    entries: VecDeque<(Vector, Vector)>,
}

impl ResidualHistory {
    pub fn new(m: usize) -> Self {
        let capacity = m.saturating_add(1);
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity.min(64)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() == self.capacity
    }

    /// Adds the newest pair, evicting and returning the oldest when full.
    pub fn push(&mut self, g: Vector, r: Vector) -> Option<(Vector, Vector)> {
        let evicted = if self.is_full() {
            self.entries.pop_back()
        } else {
            None
        };
        self.entries.push_front((g, r));
        evicted
    }

    pub fn drop_oldest(&mut self) -> Option<(Vector, Vector)> {
        self.entries.pop_back()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// `g` of the entry `i` steps back (0 = newest).
    pub fn g(&self, i: usize) -> &Vector {
        &self.entries[i].0
    }

    pub fn r(&self, i: usize) -> &Vector {
        &self.entries[i].1
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vector, &Vector)> {
        self.entries.iter().map(|(g, r)| (g, r))
    }

    /// `R_k = [r_k, ..., r_{k-m_k}]`.
    pub fn residual_matrix(&self) -> DMatrix<f64> {
        if self.entries.is_empty() {
            return DMatrix::zeros(0, 0);
        }
        let n = self.entries[0].1.len();
        DMatrix::from_fn(n, self.entries.len(), |i, j| self.entries[j].1[i])
    }
}

/// Extrapolation weights, newest entry first. They always sum to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(Vec<f64>);

impl Coefficients {
    /// Weight one on the newest entry: the plain fixed-point step.
    pub fn fixed_point(len: usize) -> Self {
        let mut alpha = vec![0.0; len.max(1)];
        alpha[0] = 1.0;
        Self(alpha)
    }

    pub(crate) fn from_vec(alpha: Vec<f64>) -> Self {
        Self(alpha)
    }

    /// Wraps user-supplied weights, checking the affine constraint.
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        if alpha.is_empty() {
            return Err(Error::InvalidArgument("empty coefficient vector".into()));
        }
        let s: f64 = alpha.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "coefficients sum to {s}, expected 1"
            )));
        }
        Ok(Self(alpha))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|a| a.abs()).sum()
    }

    pub fn is_fixed_point(&self) -> bool {
        self.0[0] == 1.0 && self.0[1..].iter().all(|&a| a == 0.0)
    }
}

/// Outcome of a coefficient solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSolve {
    pub alpha: Coefficients,
    /// The system was numerically singular and `alpha` is the fixed-point
    /// fallback.
    pub degenerate: bool,
}

/// Minimizes `||R alpha||^2 + reg_scale * ||R||_F^2 * ||alpha||^2` subject to
/// `sum(alpha) = 1`.
///
/// The stationarity conditions are solved as the bordered system
/// `[G 1; 1^T 0] [alpha; lambda] = [0; 1]` with `G = R^T R + reg I`, which
/// equals `G^{-1} 1 / (1^T G^{-1} 1)` whenever `G` is invertible and stays
/// well posed when `R` is singular but injective on `{sum(alpha) = 0}` (for
/// example more columns than rows).
pub fn solve_coefficients(residuals: &DMatrix<f64>, reg_scale: f64) -> CoefficientSolve {
    let p = residuals.ncols();
    assert!(p >= 1, "residual matrix needs at least one column");
    if p == 1 {
        return CoefficientSolve {
            alpha: Coefficients::fixed_point(1),
            degenerate: false,
        };
    }
    let degenerate = || CoefficientSolve {
        alpha: Coefficients::fixed_point(p),
        degenerate: true,
    };

    let mut gram = residuals.transpose() * residuals;
    let fro_sq = gram.trace();
    let lambda = reg_scale * fro_sq;
    for i in 0..p {
        gram[(i, i)] += lambda;
    }
    let scale = gram.diagonal().max();
    if !(scale > 0.0) || !scale.is_finite() {
        return degenerate();
    }
    gram /= scale;

    let mut kkt = DMatrix::zeros(p + 1, p + 1);
    kkt.view_mut((0, 0), (p, p)).copy_from(&gram);
    for i in 0..p {
        kkt[(i, p)] = 1.0;
        kkt[(p, i)] = 1.0;
    }
    let mut rhs = DVector::zeros(p + 1);
    rhs[p] = 1.0;
    let Some(sol) = kkt.full_piv_lu().solve(&rhs) else {
        return degenerate();
    };
    if sol.iter().any(|v| !v.is_finite()) {
        return degenerate();
    }
    // The multiplier is -1 / (1^T z) for z = G^{-1} 1 in unscaled units.
    let multiplier = sol[p] * scale;
    if multiplier.abs() > 1e300 {
        return degenerate();
    }
    let mut alpha: Vec<f64> = sol.iter().take(p).copied().collect();
    // Remove the rounding drift from the affine constraint.
    let s: f64 = alpha.iter().sum();
    let drift = (s - 1.0) / p as f64;
    alpha.iter_mut().for_each(|a| *a -= drift);
    CoefficientSolve {
        alpha: Coefficients(alpha),
        degenerate: false,
    }
}

/// Replaces `alpha` by the fixed-point weights when `||alpha||_1 > m_alpha`.
pub fn enforce_coefficient_bound(alpha: Coefficients, m_alpha: f64) -> Coefficients {
    if alpha.l1_norm() <= m_alpha {
        alpha
    } else {
        Coefficients::fixed_point(alpha.len())
    }
}

/// `sum_i alpha_i g_{k-i}` over the history, newest first.
pub fn extrapolate(history: &ResidualHistory, alpha: &Coefficients) -> Vector {
    assert_eq!(
        history.len(),
        alpha.len(),
        "history and coefficient lengths differ"
    );
    let mut out = history.g(0) * alpha.0[0];
    for (i, &a) in alpha.0.iter().enumerate().skip(1) {
        if a != 0.0 {
            out.axpy(a, history.g(i), 1.0);
        }
    }
    out
}

/// What happened inside one engine step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    pub alpha: Coefficients,
    /// The least-squares system was singular even after dropping the oldest
    /// column.
    pub degenerate: bool,
    /// The coefficient bound forced a fixed-point step.
    pub bounded: bool,
    /// Columns dropped from the window to restore full rank.
    pub dropped: usize,
}

/// Anderson acceleration state: the residual window and, optionally, its
/// QR factorization.
#[derive(Debug, Clone)]
pub struct AndersonEngine {
    config: AaConfig,
    dim: usize,
    history: ResidualHistory,
    qr: Option<QrUpdater>,
}

impl AndersonEngine {
    pub fn new(config: AaConfig, dim: usize) -> Result<Self> {
        config.validate()?;
        let history = ResidualHistory::new(config.m);
        let qr = config
            .use_qr_updates
            .then(|| QrUpdater::new(dim, history.capacity().min(dim.max(1))));
        Ok(Self {
            config,
            dim,
            history,
            qr,
        })
    }

    pub fn config(&self) -> &AaConfig {
        &self.config
    }

    pub fn history(&self) -> &ResidualHistory {
        &self.history
    }

    pub fn qr(&self) -> Option<&QrUpdater> {
        self.qr.as_ref()
    }

    pub fn reset(&mut self) {
        self.history.clear();
        if let Some(qr) = self.qr.as_mut() {
            qr.clear();
        }
    }

    /// Records the newest pair `(g_k, r_k)`.
    pub fn push(&mut self, g: Vector, r: Vector) -> Result<usize> {
        crate::error::check_dim(self.dim, g.len())?;
        crate::error::check_dim(self.dim, r.len())?;
        let Some(qr) = self.qr.as_mut() else {
            self.history.push(g, r);
            return Ok(0);
        };
        if qr.ncols() != self.history.len() {
            qr.clear();
            self.history.clear();
        }
        // The QR window may be narrower than the history when m exceeds the
        // dimension; keep both the same length.
        while self.history.len() >= qr.capacity() {
            self.history.drop_oldest();
            qr.remove_oldest();
        }
        let result = qr.push(&r);
        let fresh = self.history.is_empty();
        self.history.push(g, r);
        if result.is_err() && fresh {
            // Only a zero residual lands here; the window restarts next push.
            qr.clear();
        }
        // A rejected column lies in the span of the stored ones. The factor
        // is left one column short and this step is solved from the full
        // residual matrix; the next push restarts the window.
        Ok(0)
    }

    /// Solves for the extrapolation weights of the current window.
    pub fn coefficients(&mut self) -> StepInfo {
        let len = self.history.len();
        assert!(len > 0, "coefficients requested on an empty history");
        if self.config.m == 0 || len == 1 {
            return StepInfo {
                alpha: Coefficients::fixed_point(len),
                degenerate: false,
                bounded: false,
                dropped: 0,
            };
        }
        let mut dropped = 0;
        let mut solve = self.solve_once();
        if solve.degenerate && self.history.len() > 1 {
            self.history.drop_oldest();
            if let Some(qr) = self.qr.as_mut() {
                qr.remove_oldest();
            }
            dropped += 1;
            solve = self.solve_once();
        }
        let degenerate = solve.degenerate;
        let bounded = solve.alpha.l1_norm() > self.config.m_alpha;
        let alpha = enforce_coefficient_bound(solve.alpha, self.config.m_alpha);
        StepInfo {
            alpha,
            degenerate,
            bounded,
            dropped,
        }
    }

    fn solve_once(&self) -> CoefficientSolve {
        let len = self.history.len();
        match &self.qr {
            Some(qr) if qr.ncols() == len => {
                let (alpha, degenerate) = qr.coefficients(self.config.reg_scale);
                CoefficientSolve { alpha, degenerate }
            }
            Some(_) | None => {
                solve_coefficients(&self.history.residual_matrix(), self.config.reg_scale)
            }
        }
    }

    pub fn extrapolate(&self, alpha: &Coefficients) -> Vector {
        extrapolate(&self.history, alpha)
    }

    /// Pushes `(g, r)`, solves, bounds and extrapolates.
    pub fn step(&mut self, g: Vector, r: Vector) -> Result<(Vector, StepInfo)> {
        let dropped = self.push(g, r)?;
        let mut info = self.coefficients();
        info.dropped += dropped;
        let next = self.extrapolate(&info.alpha);
        Ok((next, info))
    }
}

/// A map whose fixed point is sought.
pub trait FixedPointMap {
    fn dim(&self) -> usize;
    fn apply(&self, y: &Vector) -> Result<Vector>;
}

/// Wraps a closure as a [`FixedPointMap`].
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> FixedPointMap for FnMap<F>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, y: &Vector) -> Result<Vector> {
        (self.f)(y)
    }
}

/// Iterate `y_k` together with its engine.
#[derive(Debug, Clone)]
pub struct AaState {
    pub y: Vector,
    pub k: usize,
    pub engine: AndersonEngine,
    /// `||r_k||` from the most recent step.
    pub last_residual: f64,
}

impl AaState {
    pub fn new(y0: Vector, config: AaConfig) -> Result<Self> {
        let engine = AndersonEngine::new(config, y0.len())?;
        Ok(Self {
            y: y0,
            k: 0,
            engine,
            last_residual: f64::INFINITY,
        })
    }
}

/// One Anderson iteration: evaluate `g(y_k)`, record the residual, solve,
/// bound and extrapolate. The first call from a fresh state is the plain
/// step `y_1 = g(y_0)`.
pub fn aa_iterate<M: FixedPointMap + ?Sized>(
    map: &M,
    state: &mut AaState,
) -> Result<(Vector, StepInfo)> {
    let g = map.apply(&state.y)?;
    let r = &g - &state.y;
    state.last_residual = r.norm();
    let (next, info) = state.engine.step(g, r)?;
    state.y = next.clone();
    state.k += 1;
    Ok((next, info))
}

/// Result of [`anderson_fixed_point`].
#[derive(Debug, Clone)]
pub struct FixedPointRun {
    pub y: Vector,
    pub iterations: usize,
    /// `||g(y_k) - y_k||` for every evaluated iterate.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
}

/// Runs Anderson acceleration until `||g(y) - y|| <= tol * max(1, ||g(y)||)`.
pub fn anderson_fixed_point<M: FixedPointMap + ?Sized>(
    map: &M,
    y0: Vector,
    config: AaConfig,
    tol: f64,
    max_iters: usize,
) -> Result<FixedPointRun> {
    crate::error::check_dim(map.dim(), y0.len())?;
    let mut state = AaState::new(y0, config)?;
    let mut residual_norms = Vec::new();
    let mut converged = false;
    while state.k < max_iters {
        let g = map.apply(&state.y)?;
        let r = &g - &state.y;
        let rn = r.norm();
        residual_norms.push(rn);
        if rn <= tol * g.norm().max(1.0) {
            converged = true;
            break;
        }
        let (next, _) = state.engine.step(g, r)?;
        state.y = next;
        state.k += 1;
    }
    Ok(FixedPointRun {
        y: state.y,
        iterations: state.k,
        residual_norms,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn v(xs: &[f64]) -> Vector {
        DVector::from_vec(xs.to_vec())
    }

    /// Independent route: eliminate the constraint and solve the KKT system
    /// of the unregularized problem with a dense LU.
    fn kkt_oracle(r: &DMatrix<f64>) -> Vec<f64> {
        let p = r.ncols();
        let mut k = DMatrix::zeros(p + 1, p + 1);
        let gram = r.transpose() * r;
        for i in 0..p {
            for j in 0..p {
                k[(i, j)] = gram[(i, j)];
            }
            k[(i, p)] = 1.0;
            k[(p, i)] = 1.0;
        }
        let mut rhs = DVector::zeros(p + 1);
        rhs[p] = 1.0;
        let sol = k.lu().solve(&rhs).unwrap();
        sol.iter().take(p).copied().collect()
    }

    #[test]
    fn single_column_forces_unit_weight() {
        let r = DMatrix::from_column_slice(3, 1, &[0.3, -2.0, 1.0]);
        let s = solve_coefficients(&r, 0.0);
        assert_eq!(s.alpha.as_slice(), &[1.0]);
        assert!(!s.degenerate);
    }

    #[test]
    fn identity_columns_split_evenly() {
        // min a^2 + (1 - a)^2 has its minimum at a = 1/2; check on a grid too.
        let grid_best = (0..=1000)
            .map(|i| i as f64 / 1000.0)
            .min_by(|a, b| {
                let fa = a * a + (1.0 - a) * (1.0 - a);
                let fb = b * b + (1.0 - b) * (1.0 - b);
                fa.partial_cmp(&fb).unwrap()
            })
            .unwrap();
        let r = DMatrix::<f64>::identity(2, 2);
        let s = solve_coefficients(&r, 0.0);
        assert_relative_eq!(s.alpha.as_slice()[0], grid_best, epsilon = 1e-12);
        assert_relative_eq!(s.alpha.as_slice()[1], 1.0 - grid_best, epsilon = 1e-12);
    }

    #[test]
    fn random_system_matches_kkt_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let r = DMatrix::from_fn(5, 3, |_, _| rng.gen_range(-1.0..1.0));
            let s = solve_coefficients(&r, 0.0);
            let oracle = kkt_oracle(&r);
            for (a, b) in s.alpha.as_slice().iter().zip(&oracle) {
                assert_relative_eq!(*a, *b, epsilon = 1e-10, max_relative = 1e-9);
            }
            // Stationarity: R^T R alpha = lambda 1.
            let a = DVector::from_vec(s.alpha.as_slice().to_vec());
            let gram = r.transpose() * &r;
            let ga = &gram * &a;
            let lambda = ga[0];
            let kkt_res = (ga - DVector::from_element(3, lambda)).norm();
            assert!(kkt_res <= 1e-8 * gram.norm());
        }
    }

    #[test]
    fn scalar_residuals_give_closed_form() {
        // Two scalar residuals a, b: alpha = (b, -a) / (b - a).
        let (a, b) = (3.0, -5.0);
        let r = DMatrix::from_row_slice(1, 2, &[a, b]);
        let s = solve_coefficients(&r, 0.0);
        assert!(!s.degenerate);
        assert_relative_eq!(s.alpha.as_slice()[0], b / (b - a), epsilon = 1e-14);
        assert_relative_eq!(s.alpha.as_slice()[1], -a / (b - a), epsilon = 1e-14);
    }

    #[test]
    fn identical_columns_are_degenerate() {
        let r = DMatrix::from_column_slice(2, 2, &[1.0, 2.0, 1.0, 2.0]);
        let s = solve_coefficients(&r, 0.0);
        assert!(s.degenerate);
        assert_eq!(s.alpha.as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn coefficient_bound() {
        let a = Coefficients::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(enforce_coefficient_bound(a, 2.0).as_slice(), &[0.5, 0.5]);
        let a = Coefficients::new(vec![3.0, -2.0]).unwrap();
        assert_eq!(a.l1_norm(), 5.0);
        assert_eq!(enforce_coefficient_bound(a, 4.0).as_slice(), &[1.0, 0.0]);
        let a = Coefficients::new(vec![1.0]).unwrap();
        assert_eq!(enforce_coefficient_bound(a, 1.0).as_slice(), &[1.0]);
    }

    #[test]
    fn extrapolation_examples() {
        let mut h = ResidualHistory::new(1);
        h.push(v(&[2.0]), v(&[0.0]));
        assert_eq!(extrapolate(&h, &Coefficients::fixed_point(1)), v(&[2.0]));

        let mut h = ResidualHistory::new(1);
        h.push(v(&[4.0]), v(&[0.0]));
        h.push(v(&[2.0]), v(&[0.0]));
        let a = Coefficients::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(extrapolate(&h, &a), v(&[3.0]));

        let mut h = ResidualHistory::new(1);
        h.push(v(&[0.0, 1.0]), v(&[0.0, 0.0]));
        h.push(v(&[1.0, 0.0]), v(&[0.0, 0.0]));
        let a = Coefficients::new(vec![2.0, -1.0]).unwrap();
        assert_eq!(extrapolate(&h, &a), v(&[2.0, -1.0]));
    }

    #[test]
    fn history_evicts_oldest() {
        let mut h = ResidualHistory::new(2);
        for i in 0..5 {
            h.push(v(&[i as f64]), v(&[0.0]));
            assert!(h.len() <= h.capacity());
        }
        assert_eq!(h.len(), 3);
        assert_eq!(h.g(0)[0], 4.0);
        assert_eq!(h.g(2)[0], 2.0);
    }

    #[test]
    fn m_zero_reproduces_fixed_point_iteration() {
        let map = FnMap::new(2, |y: &Vector| Ok(v(&[0.5 * y[0] + 1.0, (y[1]).cos()])));
        let mut state = AaState::new(v(&[3.0, 0.2]), AaConfig::new(0)).unwrap();
        let mut plain = v(&[3.0, 0.2]);
        for _ in 0..30 {
            let (next, info) = aa_iterate(&map, &mut state).unwrap();
            plain = map.apply(&plain).unwrap();
            assert!(info.alpha.is_fixed_point());
            assert_eq!(next, plain);
        }
    }

    #[test]
    fn scalar_contraction_m1_no_worse_than_plain() {
        let map = FnMap::new(1, |y: &Vector| Ok(y * 0.5));
        let mut state = AaState::new(v(&[1.0]), AaConfig::new(1).with_reg_scale(0.0)).unwrap();
        let mut plain = v(&[1.0]);
        for _ in 0..2 {
            aa_iterate(&map, &mut state).unwrap();
            plain = map.apply(&plain).unwrap();
        }
        let aa_res = (map.apply(&state.y).unwrap() - &state.y).norm();
        let plain_res = (map.apply(&plain).unwrap() - &plain).norm();
        assert!(aa_res <= plain_res);
    }

    #[test]
    fn affine_map_residual_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 6;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.3..0.3));
        let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let map = FnMap::new(n, move |y: &Vector| Ok(&a * y + &b));
        let mut state = AaState::new(DVector::zeros(n), AaConfig::new(usize::MAX)).unwrap();
        for _ in 0..5 {
            let g = map.apply(&state.y).unwrap();
            let r = &g - &state.y;
            state.engine.push(g, r).unwrap();
            let info = state.engine.coefficients();
            let h = state.engine.history();
            let mut ybar = DVector::zeros(n);
            let mut ra = DVector::zeros(n);
            for (i, &w) in info.alpha.as_slice().iter().enumerate() {
                ybar += (h.g(i) - h.r(i)) * w;
                ra += h.r(i) * w;
            }
            let lhs = (map.apply(&ybar).unwrap() - &ybar).norm();
            assert!((lhs - ra.norm()).abs() <= 1e-10);
            state.y = state.engine.extrapolate(&info.alpha);
        }
    }

    #[test]
    fn qr_and_normal_paths_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 12;
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.2..0.2));
        let b = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let map = FnMap::new(n, move |y: &Vector| Ok(&a * y + &b));
        let mut s1 = AaState::new(DVector::zeros(n), AaConfig::new(4).with_qr(false)).unwrap();
        let mut s2 = AaState::new(DVector::zeros(n), AaConfig::new(4).with_qr(true)).unwrap();
        for _ in 0..8 {
            let (y1, _) = aa_iterate(&map, &mut s1).unwrap();
            let (y2, _) = aa_iterate(&map, &mut s2).unwrap();
            assert!((&y1 - &y2).norm() <= 1e-8 * y1.norm().max(1.0));
        }
    }

    #[test]
    fn invalid_config_rejected() {
        assert!(AndersonEngine::new(AaConfig::new(2).with_m_alpha(1.0), 3).is_err());
        assert!(AndersonEngine::new(AaConfig::new(2).with_reg_scale(-1.0), 3).is_err());
    }
}
