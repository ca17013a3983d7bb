//! CGO probes, the indicator function and support-function estimators.
//!
//! The probe `v = e^{τ x·(ω + iω⊥)}` is harmonic, and its Neumann trace is
//! injected as boundary current. Everything is evaluated pre-multiplied by
//! `e^{−τt}`, so the indicator `I(τ, t) = e^{−τt} {Λ_γ(P,Q) − Λ_1(P,Q)} g`
//! comes straight out of a single forward solve. Rescaling to another `t` is
//! the exact identity `I(τ, t₁) = e^{τ(t₂ − t₁)} I(τ, t₂)`.
//!
//! For a regular direction `ω`, `|I(τ, t)|` grows like `e^{τ(h_D(ω) − t)}`
//! up to an algebraic factor `τ^{−μ}`; the estimators read `h_D(ω)` off that
//! growth rate.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::float::{exp, ln};
use crate::forward::{BoundaryData, ForwardModel};
use crate::geometry::{Direction, Vec2};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Largest exponent `τ(x·ω − t)` ever passed to `exp`.
pub const OVERFLOW_EXPONENT: f64 = 700.0;

/// Indicator magnitudes at or below this are treated as zero: a hundred
/// times the relative solver tolerance, on data of unit scale.
pub const NOISE_FLOOR: f64 = 1e-10;

/// Fraction of failed samples above which a sweep fails as a whole.
pub const MAX_SWEEP_FAILURE_RATE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeParams {
    pub direction: Direction,
    pub tau: f64,
    pub t: f64,
}

impl ProbeParams {
    pub fn new(direction: Direction, tau: f64, t: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidInput(format!("tau must be positive, got {tau}")));
        }
        if !t.is_finite() {
            return Err(Error::InvalidInput(format!("t must be finite, got {t}")));
        }
        Ok(ProbeParams { direction, tau, t })
    }

    fn zeta(&self) -> (Vec2, Vec2) {
        (self.direction.omega(), self.direction.omega_perp())
    }

    fn exponent(&self, x: Vec2) -> f64 {
        self.tau * (x.dot(self.direction.omega()) - self.t)
    }

    /// `e^{−τt} v(x)`.
    pub fn scaled_value(&self, x: Vec2) -> Complex64 {
        let (_, wp) = self.zeta();
        Complex64::from_polar(exp(self.exponent(x)), self.tau * x.dot(wp))
    }

    /// `e^{−τt} ∇v(x) = τ (ω + iω⊥) e^{−τt} v(x)`, as (x, y) components.
    pub fn scaled_gradient(&self, x: Vec2) -> [Complex64; 2] {
        let (w, wp) = self.zeta();
        let v = self.scaled_value(x) * self.tau;
        [v * Complex64::new(w.x, wp.x), v * Complex64::new(w.y, wp.y)]
    }

    /// `e^{−τt} ∂v/∂ν` at `x` for the unit normal `nu`.
    pub fn scaled_normal_derivative(&self, x: Vec2, nu: Vec2) -> Complex64 {
        let (w, wp) = self.zeta();
        self.scaled_value(x) * Complex64::new(self.tau * w.dot(nu), self.tau * wp.dot(nu))
    }

    /// Fails when the scaled probe would overflow somewhere on `∂Ω`.
    pub fn check_overflow(&self, m: &Mesh) -> Result<()> {
        let exponent = m
            .boundary_edges
            .iter()
            .map(|e| self.exponent(m.nodes[e.nodes[0]]))
            .fold(f64::NEG_INFINITY, f64::max);
        if exponent > OVERFLOW_EXPONENT {
            return Err(Error::Overflow {
                exponent,
                limit: OVERFLOW_EXPONENT,
            });
        }
        Ok(())
    }
}

/// `e^{−τt} g_ω` sampled at the midpoint of every boundary edge.
pub fn scaled_probe_trace(m: &Mesh, p: &ProbeParams) -> Result<BoundaryData> {
    p.check_overflow(m)?;
    Ok(BoundaryData::from_fn(m, |y, nu| p.scaled_normal_derivative(y, nu)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorSample {
    pub tau: f64,
    pub t: f64,
    pub value: Complex64,
}

impl IndicatorSample {
    /// The same measurement expressed at another `t`.
    pub fn at_t(&self, t: f64) -> IndicatorSample {
        IndicatorSample {
            tau: self.tau,
            t,
            value: self.value * exp(self.tau * (self.t - t)),
        }
    }

    pub fn log_abs(&self) -> f64 {
        ln(self.value.norm())
    }
}

/// How the difference of the two forward problems is discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndicatorPath {
    /// The background potential of the probe is the probe itself, so only
    /// the field scattered by the inclusions is solved for. Its error does
    /// not carry the `e^{τ}`-sized background discretization error.
    #[default]
    Scattered,
    /// Two independent Neumann solves with the discrete probe trace.
    TwoSolve,
}

/// `I_ω(τ, t)` with `P`, `Q` given as boundary node indices.
pub fn indicator(model: &ForwardModel<'_>, p_node: usize, q_node: usize, params: &ProbeParams) -> Result<IndicatorSample> {
    indicator_with(model, p_node, q_node, params, IndicatorPath::default())
}

pub fn indicator_with(
    model: &ForwardModel<'_>,
    p_node: usize,
    q_node: usize,
    params: &ProbeParams,
    path: IndicatorPath,
) -> Result<IndicatorSample> {
    let value = match path {
        IndicatorPath::Scattered => {
            params.check_overflow(model.mesh())?;
            model.lambda_diff_harmonic(|x| params.scaled_value(x), p_node, q_node)?
        }
        IndicatorPath::TwoSolve => {
            let g = scaled_probe_trace(model.mesh(), params)?;
            model.lambda_diff(&g, p_node, q_node)?
        }
    };
    Ok(IndicatorSample {
        tau: params.tau,
        t: params.t,
        value,
    })
}

/// Samples of a sweep together with the τ values that failed.
#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    pub samples: Vec<IndicatorSample>,
    pub failures: Vec<(f64, Error)>,
}

/// Checks that `tau_grid` is non-empty, positive and strictly increasing.
pub fn check_tau_grid(tau_grid: &[f64]) -> Result<()> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidInput("empty tau grid".into()));
    }
    if tau_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidInput("tau grid values must be positive".into()));
    }
    if tau_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("tau grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Gathers per-τ results; fails if more than a fifth of them failed.
pub fn collect_sweep(results: Vec<(f64, Result<IndicatorSample>)>) -> Result<Sweep> {
    let total = results.len();
    let mut sweep = Sweep {
        samples: Vec::new(),
        failures: Vec::new(),
    };
    for (tau, r) in results {
        match r {
            Ok(s) => sweep.samples.push(s),
            Err(e) => sweep.failures.push((tau, e)),
        }
    }
    if sweep.failures.len() as f64 > MAX_SWEEP_FAILURE_RATE * total as f64 {
        return Err(Error::SweepFailed {
            failed: sweep.failures.len(),
            total,
            first: sweep.failures[0].1.to_string(),
        });
    }
    Ok(sweep)
}

/// One indicator per τ, computed in order.
pub fn indicator_sweep(
    model: &ForwardModel<'_>,
    p_node: usize,
    q_node: usize,
    direction: Direction,
    t: f64,
    tau_grid: &[f64],
) -> Result<Sweep> {
    check_tau_grid(tau_grid)?;
    let results = tau_grid
        .iter()
        .map(|&tau| {
            let r = ProbeParams::new(direction, tau, t).and_then(|p| indicator(model, p_node, q_node, &p));
            (tau, r)
        })
        .collect();
    collect_sweep(results)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateMethod {
    SlopeFit,
    Bisection,
}

impl EstimateMethod {
    pub fn name(self) -> &'static str {
        match self {
            EstimateMethod::SlopeFit => "slope-fit",
            EstimateMethod::Bisection => "bisection",
        }
    }
}

/// Model fitted to `log|I(τ, t)|` over a window of τ values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FitModel {
    /// `c + sτ`.
    #[default]
    Exponential,
    /// `c + sτ − μ log τ`, the asymptotic form at a regular direction.
    ExponentialAlgebraic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEstimate {
    pub direction: Direction,
    pub h_hat: f64,
    pub method: EstimateMethod,
    /// `[τ_min, τ_max]` of the data used.
    pub window: (f64, f64),
    /// Growth rate of `log|I|` in τ at the estimate's `t`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: Option<f64>,
    /// Exponent of the algebraic factor `τ^{−μ}`, when fitted.
    pub mu_hat: Option<f64>,
    /// False when the direction is not regular and the estimate carries no
    /// guarantee; set by callers that know the geometry.
    pub trusted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Fit {
    slope: f64,
    intercept: f64,
    mu: Option<f64>,
    r_squared: f64,
}

/// Least squares by modified Gram–Schmidt on the columns `1, τ[, log τ]`.
fn least_squares(tau: &[f64], y: &[f64], model: FitModel) -> Option<Fit> {
    let n = tau.len();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    cols.push(alloc::vec![1.0; n]);
    cols.push(tau.to_vec());
    if model == FitModel::ExponentialAlgebraic {
        cols.push(tau.iter().map(|&t| -ln(t)).collect());
    }
    let k = cols.len();
    if n < k + 1 {
        return None;
    }
    // QR with R upper triangular
    let mut r = [[0.0f64; 3]; 3];
    let mut q = cols.clone();
    for j in 0..k {
        for i in 0..j {
            let d: f64 = q[i].iter().zip(&q[j]).map(|(a, b)| a * b).sum();
            r[i][j] = d;
            let qi = q[i].clone();
            q[j].iter_mut().zip(&qi).for_each(|(x, a)| *x -= d * a);
        }
        let nrm = crate::float::sqrt(q[j].iter().map(|x| x * x).sum());
        if !(nrm > 1e-12 * crate::float::sqrt(cols[j].iter().map(|x| x * x).sum())) {
            return None;
        }
        r[j][j] = nrm;
        q[j].iter_mut().for_each(|x| *x /= nrm);
    }
    let qty: Vec<f64> = (0..k).map(|j| q[j].iter().zip(y).map(|(a, b)| a * b).sum()).collect();
    let mut coef = [0.0f64; 3];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|i| r[j][i] * coef[i]).sum();
        coef[j] = (qty[j] - s) / r[j][j];
    }
    let mean = y.iter().sum::<f64>() / n as f64;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let pred: f64 = (0..k).map(|j| coef[j] * cols[j][i]).sum();
        ss_res += (y[i] - pred) * (y[i] - pred);
        ss_tot += (y[i] - mean) * (y[i] - mean);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else if ss_res == 0.0 { 1.0 } else { 0.0 };
    Some(Fit {
        intercept: coef[0],
        slope: coef[1],
        mu: (k == 3).then_some(coef[2]),
        r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeOptions {
    pub model: FitModel,
    /// Shortest window considered.
    pub min_window: usize,
    pub noise_floor: f64,
    /// Also fit `log|I(τ, ĥ)|` against `log τ` over the window.
    pub decay_diagnostic: bool,
}

impl Default for SlopeOptions {
    fn default() -> Self {
        SlopeOptions {
            model: FitModel::default(),
            min_window: 4,
            noise_floor: NOISE_FLOOR,
            decay_diagnostic: false,
        }
    }
}

/// Fits `log|I(τ, t)|` over every contiguous window of at least
/// `min_window` samples and keeps the window with the highest R² (ties go
/// to the longer window). `ĥ = slope + t`.
pub fn estimate_support_slope(
    direction: Direction,
    samples: &[IndicatorSample],
    t: f64,
    opts: &SlopeOptions,
) -> Result<SupportEstimate> {
    if samples.len() < opts.min_window.max(4) {
        return Err(Error::InvalidInput(format!(
            "slope fit needs at least {} samples, got {}",
            opts.min_window.max(4),
            samples.len()
        )));
    }
    if samples.iter().any(|s| (s.t - t).abs() > 1e-12 * (1.0 + t.abs())) {
        return Err(Error::InvalidInput("samples must share the fit's t".into()));
    }
    let mut sorted: Vec<IndicatorSample> = samples.to_vec();
    sorted.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let usable: Vec<IndicatorSample> = sorted
        .into_iter()
        .filter(|s| s.value.norm() > opts.noise_floor && s.value.norm().is_finite())
        .collect();
    if usable.len() < opts.min_window.max(4) {
        return Err(Error::BelowNoiseFloor);
    }
    let tau: Vec<f64> = usable.iter().map(|s| s.tau).collect();
    let y: Vec<f64> = usable.iter().map(|s| s.log_abs()).collect();
    let n = usable.len();
    let mut best: Option<(Fit, usize, usize)> = None;
    for len in (opts.min_window.max(4)..=n).rev() {
        for start in 0..=(n - len) {
            let Some(fit) = least_squares(&tau[start..start + len], &y[start..start + len], opts.model) else {
                continue;
            };
            if best.as_ref().is_none_or(|(b, _, _)| fit.r_squared > b.r_squared + 1e-12) {
                best = Some((fit, start, start + len - 1));
            }
        }
    }
    let (fit, lo, hi) = best.ok_or_else(|| Error::InvalidInput("degenerate tau grid".into()))?;
    let h_hat = fit.slope + t;
    let mu_hat = match fit.mu {
        Some(mu) => Some(mu),
        None if opts.decay_diagnostic => decay_exponent(&tau[lo..=hi], &y[lo..=hi], fit.slope),
        None => None,
    };
    Ok(SupportEstimate {
        direction,
        h_hat,
        method: EstimateMethod::SlopeFit,
        window: (tau[lo], tau[hi]),
        slope: fit.slope,
        intercept: fit.intercept,
        r_squared: Some(fit.r_squared),
        mu_hat,
        trusted: true,
    })
}

/// `μ` with `|I(τ, ĥ)| ≈ L τ^{−μ}`: minus the slope of `log|I(τ, ĥ)|`
/// against `log τ`, where `log|I(τ, ĥ)| = log|I(τ, t)| − τ(ĥ − t)`.
fn decay_exponent(tau: &[f64], log_abs: &[f64], slope: f64) -> Option<f64> {
    let x: Vec<f64> = tau.iter().map(|&t| ln(t)).collect();
    let y: Vec<f64> = tau.iter().zip(log_abs).map(|(&t, &l)| l - slope * t).collect();
    least_squares(&x, &y, FitModel::Exponential).map(|f| -f.slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Growth,
    Decay,
    Indeterminate,
}

impl Classification {
    pub fn label(self) -> &'static str {
        match self {
            Classification::Growth => "growth",
            Classification::Decay => "decay",
            Classification::Indeterminate => "indeterminate",
        }
    }
}

/// Relative dead band of the growth classifier.
pub const DEAD_BAND: f64 = 0.1;

/// Classifies `t` from one measurement pair `τ₁ < τ₂` (taken at any common
/// `t`), rescaled to `t` through the exact identity: growth when
/// `|I(τ₂,t)| / |I(τ₁,t)| > 1 + DEAD_BAND`, decay when below `1 − DEAD_BAND`.
pub fn classify(pair: (&IndicatorSample, &IndicatorSample), t: f64) -> Classification {
    let (a, b) = pair;
    let (a, b) = (a.at_t(t), b.at_t(t));
    let (na, nb) = (a.value.norm(), b.value.norm());
    if nb > (1.0 + DEAD_BAND) * na {
        Classification::Growth
    } else if nb < (1.0 - DEAD_BAND) * na {
        Classification::Decay
    } else {
        Classification::Indeterminate
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionOptions {
    pub tau_pair: (f64, f64),
    /// Final bracket width.
    pub tol: f64,
}

impl Default for BisectionOptions {
    fn default() -> Self {
        BisectionOptions {
            tau_pair: (8.0, 16.0),
            tol: 1e-4,
        }
    }
}

/// Bisection on the growth classifier given one measurement pair.
///
/// `t_g` is the supremum of growth and `t_d` the infimum of decay; both are
/// located by bisection and `ĥ` is their midpoint.
pub fn bisect_from_pair(
    direction: Direction,
    pair: (&IndicatorSample, &IndicatorSample),
    t_range: (f64, f64),
    tol: f64,
) -> Result<SupportEstimate> {
    let (lo, hi) = t_range;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("invalid t range [{lo}, {hi}] or tolerance {tol}")));
    }
    let (a, b) = pair;
    if !(a.tau < b.tau) {
        return Err(Error::InvalidInput("tau pair must be increasing".into()));
    }
    if a.value.norm() <= NOISE_FLOOR || b.value.norm() <= NOISE_FLOOR {
        return Err(Error::BelowNoiseFloor);
    }
    let c_lo = classify(pair, lo);
    let c_hi = classify(pair, hi);
    if c_lo != Classification::Growth || c_hi != Classification::Decay {
        return Err(Error::NoBracket {
            t_low: lo,
            t_high: hi,
            low: c_lo.label(),
            high: c_hi.label(),
        });
    }
    let boundary = |target: Classification, inside_low: bool| {
        // invariant: `l` satisfies the low-side predicate, `r` does not
        let pred = |t: f64| (classify(pair, t) == target) == inside_low;
        let (mut l, mut r) = (lo, hi);
        while r - l > tol {
            let mid = 0.5 * (l + r);
            if pred(mid) {
                l = mid;
            } else {
                r = mid;
            }
        }
        0.5 * (l + r)
    };
    let t_growth = boundary(Classification::Growth, true);
    let t_decay = boundary(Classification::Decay, false);
    let slope = (b.log_abs() - a.log_abs()) / (b.tau - a.tau);
    Ok(SupportEstimate {
        direction,
        h_hat: 0.5 * (t_growth + t_decay),
        method: EstimateMethod::Bisection,
        window: (a.tau, b.tau),
        slope,
        intercept: a.log_abs() - slope * a.tau,
        r_squared: None,
        mu_hat: None,
        trusted: true,
    })
}

/// Measures `I(τ₁, t)` and `I(τ₂, t)` once, at the middle of `t_range`, and
/// bisects the growth classifier over `t_range`.
pub fn estimate_support_bisection(
    model: &ForwardModel<'_>,
    p_node: usize,
    q_node: usize,
    direction: Direction,
    t_range: (f64, f64),
    opts: &BisectionOptions,
) -> Result<SupportEstimate> {
    let t_ref = 0.5 * (t_range.0 + t_range.1);
    let (t1, t2) = opts.tau_pair;
    let a = indicator(model, p_node, q_node, &ProbeParams::new(direction, t1, t_ref)?)?;
    let b = indicator(model, p_node, q_node, &ProbeParams::new(direction, t2, t_ref)?)?;
    bisect_from_pair(direction, (&a, &b), t_range, opts.tol)
}
