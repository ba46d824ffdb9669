//! Stability and assumption audits.
//!
//! Each check returns the numeric evidence behind its verdict. Limits that
//! are taken as `t → ∞` in theory are evaluated on the finite realized
//! horizon.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::matfun::{expc, lambda_min_sym, spectrum, transmission_zeros, SigmaDecomposition};
use crate::plant::LtiPlant;
use crate::timescale::{Interval, RealizedGrid};
use crate::{Error, Matrix, Result, C64};

/// Default tolerance for classifying transmission zeros as marginal.
pub const DEFAULT_ZERO_TOL: f64 = 1e-8;
/// Default integer-proximity tolerance of the sampled detectability test.
pub const DEFAULT_DETECTABILITY_TOL: f64 = 1e-9;
/// Default tolerance on `λ_min{H + H*}` in the positive-real diagnostic.
pub const DEFAULT_PR_TOL: f64 = 1e-9;
/// Default trailing fraction of a trace used by [`envelope_fit`].
pub const DEFAULT_ENVELOPE_WINDOW: f64 = 0.6;

fn check_mu(mu: f64) -> Result<()> {
    if mu >= 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("graininess must be >= 0, got {mu}")))
    }
}

/// Strictly inside the Hilger circle `|1 + μλ| < 1`; `Re λ < 0` at `μ = 0`.
pub fn hilger_contains(lambda: C64, mu: f64) -> Result<bool> {
    check_mu(mu)?;
    if mu == 0.0 {
        return Ok(lambda.re < 0.0);
    }
    Ok((C64::new(1.0, 0.0) + lambda * mu).norm() < 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regressivity {
    /// `1 + μλ > 0`
    Positive,
    /// `1 + μλ < 0`
    Negative,
    /// `1 + μλ = 0`
    Nonregressive,
}

pub fn classify_regressivity(lambda: f64, mu: f64) -> Result<Regressivity> {
    check_mu(mu)?;
    let v = 1.0 + mu * lambda;
    Ok(if v.abs() <= 1e-12 {
        Regressivity::Nonregressive
    } else if v > 0.0 {
        Regressivity::Positive
    } else {
        Regressivity::Negative
    })
}

/// Finite-horizon estimate of the decay exponent
/// `α = −limsup (1/(t−t₀)) ∫ log|1+μη|/μ Δt`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEstimate {
    /// `−` running mean of the integrand over the whole horizon.
    pub alpha: f64,
    /// `−` the largest running mean over the trailing half of the horizon.
    pub alpha_limsup: f64,
    pub horizon: f64,
}

impl DecayEstimate {
    /// Membership evidence for the exponentially stable set.
    pub fn is_stable(&self) -> bool {
        self.alpha > 0.0
    }

    /// `cumulative` holds `(t, ∫_{t₀}^{t})` pairs in increasing `t`.
    fn from_cumulative(t0: f64, cumulative: &[(f64, f64)]) -> Result<Self> {
        let &(t_end, total) = cumulative
            .last()
            .ok_or_else(|| Error::invalid("decay exponent needs a non-trivial horizon"))?;
        let horizon = t_end - t0;
        if !(horizon > 0.0) {
            return Err(Error::invalid("decay exponent needs a non-trivial horizon"));
        }
        let tail_start = t0 + 0.5 * horizon;
        let limsup = cumulative
            .iter()
            .filter(|(t, _)| *t >= tail_start && *t > t0)
            .map(|(t, i)| i / (t - t0))
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(DecayEstimate { alpha: -total / horizon, alpha_limsup: -limsup, horizon })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StabilityMembership {
    /// All realized points regressive; exponent estimate attached.
    Exponential(DecayEstimate),
    /// Realized points with `1 + μη = 0` (membership evidence for the real
    /// nonregressive set on this horizon).
    Nonregressive { times: Vec<f64> },
}

/// `log|1 + μη| / μ`, continuous at `μ → 0` where it tends to `Re η`.
fn hilger_real_part(eta: C64, mu: f64) -> f64 {
    if mu == 0.0 {
        return eta.re;
    }
    let z = eta * mu;
    if z.norm() < 1e-6 {
        let z2 = z * z;
        return (z.re - z2.re / 2.0 + (z2 * z).re / 3.0) / mu;
    }
    (C64::new(1.0, 0.0) + z).norm().ln() / mu
}

/// Decay exponent of `z^Δ = η(t) z` along a realized grid.
pub fn decay_exponent<F>(eta: F, grid: &RealizedGrid) -> Result<StabilityMembership>
where
    F: Fn(f64) -> C64,
{
    let t0 = grid.start();
    let mut acc = 0.0;
    let mut cumulative = Vec::with_capacity(grid.points().len());
    let mut nonregressive = Vec::new();
    for iv in grid.intervals() {
        match iv {
            Interval::Scattered { t, mu } => {
                let e = eta(t);
                if (C64::new(1.0, 0.0) + e * mu).norm() <= 1e-12 {
                    nonregressive.push(t);
                    continue;
                }
                acc += mu * hilger_real_part(e, mu);
                cumulative.push((t + mu, acc));
            }
            Interval::Dense { a, b } => {
                acc += 0.5 * (b - a) * (eta(a).re + eta(b).re);
                cumulative.push((b, acc));
            }
        }
    }
    if !nonregressive.is_empty() {
        return Ok(StabilityMembership::Nonregressive { times: nonregressive });
    }
    Ok(StabilityMembership::Exponential(DecayEstimate::from_cumulative(t0, &cumulative)?))
}

/// Decay exponent of a sampled scalar trajectory `s(t) > 0`.
///
/// Each step contributes `log(s_{i+1}/s_i)`, the exact delta integral of
/// `log|1+μη|/μ` (scattered steps) or `Re η` (dense steps) for the
/// piecewise rate `η` that reproduces the samples.
pub fn trajectory_decay_exponent(times: &[f64], values: &[f64]) -> Result<DecayEstimate> {
    if times.len() != values.len() || times.len() < 2 {
        return Err(Error::invalid("trajectory needs at least two samples"));
    }
    let mut acc = 0.0;
    let mut cumulative = Vec::with_capacity(times.len());
    for i in 1..times.len() {
        let (a, b) = (values[i - 1], values[i]);
        if !(a > 0.0 && b > 0.0) {
            break;
        }
        acc += (b / a).ln();
        cumulative.push((times[i], acc));
    }
    DecayEstimate::from_cumulative(times[0], &cumulative)
}

/// Frobenius norm of `AᵀP + PA + μAᵀPA + Q`.
pub fn generalized_lyapunov_residual(a: &Matrix, p: &Matrix, q: &Matrix, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    let n = a.nrows();
    for (name, m) in [("A", a), ("P", p), ("Q", q)] {
        if m.shape() != (n, n) {
            return Err(Error::invalid(format!(
                "{name} must be {n}x{n}, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
    }
    let at = a.transpose();
    let r = &at * p + p * a + &at * p * a * mu + q;
    Ok(r.norm())
}

/// `CB̂ = C expc(μA) B`.
pub fn cb_hat(plant: &LtiPlant, mu: f64) -> Result<Matrix> {
    check_mu(mu)?;
    Ok(plant.c() * expc(&(plant.a() * mu))? * plant.b())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma44Certificate {
    pub q: Matrix,
    /// `λ_min` of the symmetric part of `Q`.
    pub eps2: f64,
}

impl Lemma44Certificate {
    pub fn passes(&self) -> bool {
        self.eps2 > 0.0
    }
}

/// `Q = −(1/k)[Mᵀ + M + μMᵀM]` with `M = −k CB̂`; the unit-`P` time-scale
/// Lyapunov equation for `M` holds with this `Q`.
pub fn lemma44_certificate(cb_hat: &Matrix, k: f64, mu: f64) -> Result<Lemma44Certificate> {
    check_mu(mu)?;
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("gain must be positive, got {k}")));
    }
    if cb_hat.nrows() != cb_hat.ncols() {
        return Err(Error::invalid("CB-hat must be square"));
    }
    let m = cb_hat * -k;
    let mt = m.transpose();
    let q = -(&mt + &m + &mt * &m * mu) / k;
    let eps2 = lambda_min_sym(&q);
    Ok(Lemma44Certificate { q, eps2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinimumPhase {
    /// All zeros strictly in the open left half-plane.
    Strict,
    /// Some zero on the imaginary axis within tolerance, none to its right.
    Marginal,
    NonMinimumPhase,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub minimum_phase: MinimumPhase,
    pub zeros: Vec<C64>,
    pub zero_tol: f64,
    /// `λ_min{(CB)ᵀ + CB}`.
    pub cb_lambda_min: f64,
}

impl AssumptionReport {
    pub fn a1_holds(&self) -> bool {
        self.minimum_phase == MinimumPhase::Strict
    }

    pub fn a2_holds(&self) -> bool {
        self.cb_lambda_min > 0.0
    }
}

pub fn check_assumptions(plant: &LtiPlant, zero_tol: f64) -> Result<AssumptionReport> {
    let zeros = transmission_zeros(plant.a(), plant.b(), plant.c())?;
    let minimum_phase = if zeros.iter().any(|z| z.re > zero_tol) {
        MinimumPhase::NonMinimumPhase
    } else if zeros.iter().any(|z| z.re.abs() <= zero_tol) {
        MinimumPhase::Marginal
    } else {
        MinimumPhase::Strict
    };
    let cb = plant.cb();
    let cb_lambda_min = lambda_min_sym(&(&cb + cb.transpose()));
    Ok(AssumptionReport { minimum_phase, zeros, zero_tol, cb_lambda_min })
}

/// `[0] ∪` 161 log-spaced frequencies over `[1e-3, 1e3]` rad/s.
pub fn default_frequency_grid() -> Vec<f64> {
    let count = 161;
    std::iter::once(0.0)
        .chain((0..count).map(|i| 10f64.powf(-3.0 + 6.0 * i as f64 / (count - 1) as f64)))
        .collect()
}

/// `H(jω) = C (jωI − A + kBC)⁻¹ B`, or `None` when the resolvent is singular.
pub fn closed_loop_frequency_response(
    plant: &LtiPlant,
    k: f64,
    omega: f64,
) -> Option<DMatrix<C64>> {
    let n = plant.n();
    let acl = plant.a() - plant.b() * plant.c() * k;
    let resolvent = DMatrix::<C64>::from_fn(n, n, |i, j| {
        let diag = if i == j { C64::new(0.0, omega) } else { C64::new(0.0, 0.0) };
        diag - C64::new(acl[(i, j)], 0.0)
    });
    let b = plant.b().map(|v| C64::new(v, 0.0));
    let c = plant.c().map(|v| C64::new(v, 0.0));
    let x = resolvent.lu().solve(&b)?;
    let h = c * x;
    h.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PositiveRealVerdict {
    Pass,
    Fail,
    /// `A − k*BC` is not Hurwitz.
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositiveRealReport {
    pub k_star: f64,
    pub verdict: PositiveRealVerdict,
    pub closed_loop_spectrum: Vec<C64>,
    /// Smallest `λ_min{H(jω) + H(jω)*}` over evaluated frequencies.
    pub min_eigenvalue: f64,
    pub worst_frequency: f64,
    pub skipped: Vec<f64>,
}

/// Frequency-grid surrogate for positive realness of the loop closed at
/// `k*`.
pub fn positive_real_diagnostic(
    plant: &LtiPlant,
    k_star: f64,
    freqs: &[f64],
    tol: f64,
) -> Result<PositiveRealReport> {
    let acl = plant.a() - plant.b() * plant.c() * k_star;
    let closed_loop_spectrum = spectrum(&acl)?;
    let mut report = PositiveRealReport {
        k_star,
        verdict: PositiveRealVerdict::NotApplicable,
        closed_loop_spectrum,
        min_eigenvalue: f64::NAN,
        worst_frequency: f64::NAN,
        skipped: Vec::new(),
    };
    if report.closed_loop_spectrum.iter().any(|l| l.re >= 0.0) {
        return Ok(report);
    }
    let mut min_eig = f64::INFINITY;
    let mut worst = f64::NAN;
    for &w in freqs {
        let Some(h) = closed_loop_frequency_response(plant, k_star, w) else {
            report.skipped.push(w);
            continue;
        };
        let herm = &h + h.adjoint();
        let ev = nalgebra::SymmetricEigen::new(herm).eigenvalues.min();
        if ev < min_eig {
            min_eig = ev;
            worst = w;
        }
    }
    report.min_eigenvalue = min_eig;
    report.worst_frequency = worst;
    report.verdict =
        if min_eig >= -tol { PositiveRealVerdict::Pass } else { PositiveRealVerdict::Fail };
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectabilityViolation {
    pub lambda_k: C64,
    pub lambda_l: C64,
    /// `(λ_k − λ_l) μ / (2πj)`.
    pub quotient: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectabilityReport {
    pub mu: f64,
    pub violations: Vec<DetectabilityViolation>,
}

impl DetectabilityReport {
    pub fn passes(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Sampled detectability: no two distinct elements of `{0} ∪ spec(A)` may
/// differ by a nonzero integer multiple of `2πj/μ`.
pub fn detectability_check(a: &Matrix, mu: f64, tol: f64) -> Result<DetectabilityReport> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::invalid(format!("detectability needs mu > 0, got {mu}")));
    }
    let mut points: Vec<C64> = vec![C64::new(0.0, 0.0)];
    for l in spectrum(a)? {
        if points.iter().all(|p| (p - l).norm() > 1e-9 * l.norm().max(1.0)) {
            points.push(l);
        }
    }
    let mut violations = Vec::new();
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let quotient = (points[i] - points[j]) * mu / C64::new(0.0, TAU);
            let nearest = quotient.re.round();
            if nearest != 0.0 && (quotient.re - nearest).abs() <= tol && quotient.im.abs() <= tol {
                violations.push(DetectabilityViolation {
                    lambda_k: points[i],
                    lambda_l: points[j],
                    quotient,
                });
            }
        }
    }
    Ok(DetectabilityReport { mu, violations })
}

/// `‖x(t)‖ ≤ ‖x(t₀)‖ K e^{−α(t−t₀)/2}` fitted over a trailing window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeFit {
    pub k_const: f64,
    /// `+∞` when the window holds no nonzero state.
    pub alpha_fit: f64,
    pub t0: f64,
}

/// Least-squares line through `log‖x‖` on the trailing `window` fraction of
/// the time span; `α = −2·slope` and `K` is the smallest constant (at least
/// 1) making the envelope hold on the window.
pub fn envelope_fit(times: &[f64], norms: &[f64], window: f64) -> Result<EnvelopeFit> {
    if times.is_empty() || times.len() != norms.len() {
        return Err(Error::invalid("envelope fit needs a non-empty trace"));
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::invalid(format!("window fraction must lie in (0, 1], got {window}")));
    }
    let (first, last) = (times[0], times[times.len() - 1]);
    let cut = last - window * (last - first);
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(norms)
        .filter(|(t, v)| **t >= cut && **v > 0.0)
        .map(|(t, v)| (*t, *v))
        .collect();
    if pts.len() < 2 {
        if pts.is_empty() || norms.contains(&0.0) {
            return Ok(EnvelopeFit { k_const: 1.0, alpha_fit: f64::INFINITY, t0: cut });
        }
        return Ok(EnvelopeFit { k_const: 1.0, alpha_fit: 0.0, t0: pts[0].0 });
    }
    let count = pts.len() as f64;
    let mean_t = pts.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_l = pts.iter().map(|p| p.1.ln()).sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, v) in &pts {
        let dt = t - mean_t;
        sxy += dt * (v.ln() - mean_l);
        sxx += dt * dt;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let alpha_fit = -2.0 * slope;
    let (t0, x0) = pts[0];
    let k_const =
        pts.iter().map(|(t, v)| v / (x0 * (-0.5 * alpha_fit * (t - t0)).exp())).fold(1.0, f64::max);
    Ok(EnvelopeFit { k_const, alpha_fit, t0 })
}

/// `∫e^{αt}Δt` against `∫e^{αt}dt` over a grid, with the constants
/// `c₁ = e^{−αμ∞}` (`α > 0`, else `1`) and `c₂ = e^{−αμ∞}` (`α < 0`,
/// else `1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegralComparison {
    pub delta_value: f64,
    pub continuous_value: f64,
    pub c1: f64,
    pub c2: f64,
    pub mu_inf: f64,
    pub holds: bool,
}

fn exp_integral(alpha: f64, a: f64, b: f64) -> f64 {
    if alpha == 0.0 {
        b - a
    } else {
        ((alpha * b).exp() - (alpha * a).exp()) / alpha
    }
}

/// Dense runs of the delta integral are integrated in closed form so the
/// comparison measures only the scattered part.
pub fn integral_comparison(alpha: f64, grid: &RealizedGrid) -> Result<IntegralComparison> {
    if !alpha.is_finite() {
        return Err(Error::invalid("alpha must be finite"));
    }
    let mut delta_value = 0.0;
    for iv in grid.intervals() {
        match iv {
            Interval::Scattered { t, mu } => delta_value += mu * (alpha * t).exp(),
            Interval::Dense { a, b } => delta_value += exp_integral(alpha, a, b),
        }
    }
    let continuous_value = exp_integral(alpha, grid.start(), grid.end());
    let mu_inf = grid.mu_max();
    let shrink = (-alpha * mu_inf).exp();
    let (c1, c2) = if alpha > 0.0 { (shrink, 1.0) } else { (1.0, shrink) };
    let slack = 1e-12 * continuous_value.abs().max(delta_value.abs());
    let holds = c1 * continuous_value <= delta_value + slack
        && delta_value <= c2 * continuous_value + slack;
    Ok(IntegralComparison { delta_value, continuous_value, c1, c2, mu_inf, holds })
}

/// First point along a trajectory where the graininess certificate holds:
/// `‖Σ(μ)‖ < ε₁`, the unit-`P` certificate with `CB̂(μ)` passes, and the
/// loop closed at the current gain passes the positive-real diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifiedPoint {
    pub t: f64,
    pub k: f64,
    pub mu: f64,
    pub eps2: f64,
    pub sigma_norm: f64,
}

pub fn first_certified_point<I>(
    plant: &LtiPlant,
    eps1: f64,
    samples: I,
    freqs: &[f64],
) -> Result<Option<CertifiedPoint>>
where
    I: IntoIterator<Item = (f64, f64, f64)>,
{
    for (t, k, mu) in samples {
        let sigma = SigmaDecomposition::new(plant.a(), mu)?;
        let sigma_norm = sigma.norm();
        if sigma_norm >= eps1 {
            continue;
        }
        let cert = lemma44_certificate(&cb_hat(plant, mu)?, k, mu)?;
        if !cert.passes() {
            continue;
        }
        let pr = positive_real_diagnostic(plant, k, freqs, DEFAULT_PR_TOL)?;
        if pr.verdict == PositiveRealVerdict::Pass {
            return Ok(Some(CertifiedPoint { t, k, mu, eps2: cert.eps2, sigma_norm }));
        }
    }
    Ok(None)
}

/// Aggregated audit results.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StabilityReport {
    pub assumptions: Option<AssumptionReport>,
    pub detectability: Vec<DetectabilityReport>,
    /// `(k, μ, certificate)` lattice.
    pub certificates: Vec<(f64, f64, Lemma44Certificate)>,
    pub positive_real: Vec<PositiveRealReport>,
    pub decay: Option<DecayEstimate>,
    pub envelope: Option<EnvelopeFit>,
    pub certified: Option<CertifiedPoint>,
}

fn fmt_c(z: &C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn fmt_list(zs: &[C64]) -> String {
    zs.iter().map(fmt_c).collect::<Vec<_>>().join(";")
}

impl StabilityReport {
    /// Hard failures: `(CB)ᵀ + CB` not positive definite, or a transmission
    /// zero in the open right half-plane.
    pub fn hard_failure(&self) -> bool {
        self.assumptions
            .as_ref()
            .is_some_and(|a| !a.a2_holds() || a.minimum_phase == MinimumPhase::NonMinimumPhase)
    }

    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv: Vec<(String, String)> = Vec::new();
        let mut put = |k: String, v: String| kv.push((k, v));
        if let Some(a) = &self.assumptions {
            let a1 = match a.minimum_phase {
                MinimumPhase::Strict => "strict",
                MinimumPhase::Marginal => "marginal",
                MinimumPhase::NonMinimumPhase => "non_minimum_phase",
            };
            put("a1.verdict".into(), a1.into());
            put("a1.zeros".into(), fmt_list(&a.zeros));
            put("a2.verdict".into(), if a.a2_holds() { "pass" } else { "fail" }.into());
            put("a2.lambda_min".into(), format!("{}", a.cb_lambda_min));
        }
        for (i, d) in self.detectability.iter().enumerate() {
            put(format!("detectability.{i}.mu"), format!("{}", d.mu));
            put(
                format!("detectability.{i}.verdict"),
                if d.passes() { "pass" } else { "violation" }.into(),
            );
            let pairs: Vec<String> = d
                .violations
                .iter()
                .map(|v| {
                    format!("{}|{}|{}", fmt_c(&v.lambda_k), fmt_c(&v.lambda_l), fmt_c(&v.quotient))
                })
                .collect();
            put(format!("detectability.{i}.violations"), pairs.join(";"));
        }
        for (i, (k, mu, c)) in self.certificates.iter().enumerate() {
            put(format!("certificate.{i}.k"), format!("{k}"));
            put(format!("certificate.{i}.mu"), format!("{mu}"));
            put(format!("certificate.{i}.eps2"), format!("{}", c.eps2));
            put(
                format!("certificate.{i}.verdict"),
                if c.passes() { "pass" } else { "fail" }.into(),
            );
        }
        for (i, p) in self.positive_real.iter().enumerate() {
            put(format!("positive_real.{i}.k_star"), format!("{}", p.k_star));
            let v = match p.verdict {
                PositiveRealVerdict::Pass => "pass",
                PositiveRealVerdict::Fail => "fail",
                PositiveRealVerdict::NotApplicable => "not_applicable",
            };
            put(format!("positive_real.{i}.verdict"), v.into());
            put(format!("positive_real.{i}.min_eigenvalue"), format!("{}", p.min_eigenvalue));
            put(format!("positive_real.{i}.spectrum"), fmt_list(&p.closed_loop_spectrum));
        }
        if let Some(d) = &self.decay {
            put("decay.alpha".into(), format!("{}", d.alpha));
            put("decay.alpha_limsup".into(), format!("{}", d.alpha_limsup));
        }
        if let Some(e) = &self.envelope {
            put("envelope.k".into(), format!("{}", e.k_const));
            put("envelope.alpha_fit".into(), format!("{}", e.alpha_fit));
        }
        if let Some(c) = &self.certified {
            put("certified.t".into(), format!("{}", c.t));
            put("certified.k".into(), format!("{}", c.k));
            put("certified.eps2".into(), format!("{}", c.eps2));
        }
        kv
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(a) = &self.assumptions {
            let a1 = match a.minimum_phase {
                MinimumPhase::Strict => "PASS (strictly minimum phase)",
                MinimumPhase::Marginal => "WARN (marginal: zero on the imaginary axis)",
                MinimumPhase::NonMinimumPhase => "FAIL (non-minimum phase)",
            };
            let _ = writeln!(out, "A1 minimum phase      : {a1}");
            let _ = writeln!(out, "   transmission zeros : [{}]", fmt_list(&a.zeros));
            let _ = writeln!(
                out,
                "A2 (CB)^T + CB > 0    : {} (lambda_min = {})",
                if a.a2_holds() { "PASS" } else { "FAIL" },
                a.cb_lambda_min
            );
        }
        for d in &self.detectability {
            if d.passes() {
                let _ = writeln!(out, "detectability mu={:<10} : PASS", d.mu);
            } else {
                let _ = writeln!(out, "detectability mu={:<10} : VIOLATION", d.mu);
                for v in &d.violations {
                    let _ = writeln!(
                        out,
                        "   {} - {} -> {}",
                        fmt_c(&v.lambda_k),
                        fmt_c(&v.lambda_l),
                        fmt_c(&v.quotient)
                    );
                }
            }
        }
        for (k, mu, c) in &self.certificates {
            let _ = writeln!(
                out,
                "certificate k={k:<8} mu={mu:<10.6} : {} (eps2 = {:.6e})",
                if c.passes() { "PASS" } else { "FAIL" },
                c.eps2
            );
        }
        for p in &self.positive_real {
            let v = match p.verdict {
                PositiveRealVerdict::Pass => "PASS",
                PositiveRealVerdict::Fail => "FAIL",
                PositiveRealVerdict::NotApplicable => "N/A (closed loop not Hurwitz)",
            };
            let _ = writeln!(
                out,
                "positive real k*={:<8} : {v} (min eig = {:.6e}, spectrum [{}])",
                p.k_star,
                p.min_eigenvalue,
                fmt_list(&p.closed_loop_spectrum)
            );
        }
        if let Some(d) = &self.decay {
            let _ = writeln!(
                out,
                "decay exponent        : alpha = {} (limsup proxy {})",
                d.alpha, d.alpha_limsup
            );
        }
        if let Some(e) = &self.envelope {
            let _ = writeln!(
                out,
                "envelope              : K = {}, alpha_fit = {}",
                e.k_const, e.alpha_fit
            );
        }
        if let Some(c) = &self.certified {
            let _ = writeln!(
                out,
                "certified from        : t = {}, k = {} (eps2 = {})",
                c.t, c.k, c.eps2
            );
        }
        out
    }
}
