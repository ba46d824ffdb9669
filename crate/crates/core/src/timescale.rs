//! Time-scale calculus on finite realizations.
//!
//! A [`TimeScaleProgram`] describes a time scale as a cyclic schedule of dense
//! stretches and gaps. [`TimeScaleProgram::realize`] turns it into a
//! [`RealizedGrid`]: an ordered list of [`TimePoint`]s in which scattered
//! points carry their graininess `μ > 0` and dense runs are sampled at an
//! internal quadrature step `h_int` (with `μ = 0`).

use crate::{Error, Result, C64};

/// Default quadrature step inside dense runs, in seconds.
pub const DEFAULT_H_INT: f64 = 1e-3;

/// A point of the time scale together with its graininess.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimePoint {
    pub t: f64,
    /// `0` for right-dense points, the gap to the successor otherwise.
    pub mu: f64,
}

impl TimePoint {
    pub fn dense(t: f64) -> Self {
        TimePoint { t, mu: 0.0 }
    }

    pub fn scattered(t: f64, mu: f64) -> Self {
        TimePoint { t, mu }
    }

    /// Forward jump `σ(t) = t + μ(t)`.
    pub fn sigma(&self) -> f64 {
        self.t + self.mu
    }

    pub fn is_scattered(&self) -> bool {
        self.mu > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// A continuous stretch of the given length.
    Dense { duration: f64 },
    /// A jump of the given length; the point before it is right-scattered.
    Gap { duration: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Dense { duration } | Segment::Gap { duration } => duration,
        }
    }
}

/// Cyclic schedule of dense stretches and gaps starting at `origin`.
///
/// The segment list repeats until the requested horizon is covered, so
/// `[Gap{h}]` is `hℤ` and `[Dense{a}, Gap{b}]` is the `ℙ[a,b]` time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeScaleProgram {
    segments: Vec<Segment>,
    origin: f64,
}

impl TimeScaleProgram {
    pub fn new(segments: Vec<Segment>, origin: f64) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::invalid("time-scale program has no segments"));
        }
        if !origin.is_finite() {
            return Err(Error::invalid("origin must be finite"));
        }
        for (i, s) in segments.iter().enumerate() {
            let d = s.duration();
            if !(d.is_finite() && d > 0.0) {
                return Err(Error::invalid(format!("segment {i} has non-positive duration {d}")));
            }
        }
        Ok(TimeScaleProgram { segments, origin })
    }

    /// `ℙ[a,b]`: dense for `a`, then a gap of `b`, repeating.
    pub fn pab(a: f64, b: f64) -> Result<Self> {
        Self::new(vec![Segment::Dense { duration: a }, Segment::Gap { duration: b }], 0.0)
    }

    /// `hℤ` restricted to `[0, ∞)`.
    pub fn uniform(h: f64) -> Result<Self> {
        Self::new(vec![Segment::Gap { duration: h }], 0.0)
    }

    /// The continuum `[0, ∞)`.
    pub fn continuous() -> Self {
        TimeScaleProgram { segments: vec![Segment::Dense { duration: 1.0 }], origin: 0.0 }
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    /// Realizes the program over `[origin, origin + horizon]`.
    ///
    /// Dense stretches are cut at `h_int` with a shortened final
    /// subinterval. A gap that starts before the horizon is kept whole, so
    /// the final point may lie past `origin + horizon`.
    pub fn realize(&self, horizon: f64, h_int: f64) -> Result<RealizedGrid> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!("horizon must be positive, got {horizon}")));
        }
        if !(h_int.is_finite() && h_int > 0.0) {
            return Err(Error::invalid(format!("h_int must be positive, got {h_int}")));
        }
        let end = self.origin + horizon;
        let tol = 1e-12 * end.abs().max(1.0);
        let mut points = Vec::new();
        let mut t = self.origin;
        'outer: loop {
            for seg in &self.segments {
                if t >= end - tol {
                    break 'outer;
                }
                match *seg {
                    Segment::Dense { duration } => {
                        let b = (t + duration).min(end);
                        let sub_tol = 1e-9 * h_int;
                        let mut j = 0u64;
                        loop {
                            let s = t + j as f64 * h_int;
                            if s >= b - sub_tol {
                                break;
                            }
                            points.push(TimePoint::dense(s));
                            j += 1;
                        }
                        t = b;
                    }
                    Segment::Gap { duration } => {
                        points.push(TimePoint::scattered(t, duration));
                        t += duration;
                    }
                }
            }
        }
        points.push(TimePoint::dense(t));
        Ok(RealizedGrid { points, h_int })
    }
}

/// Piece of a realized grid between two consecutive points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interval {
    /// Jump from a right-scattered point `t` to `t + mu`.
    Scattered { t: f64, mu: f64 },
    /// Quadrature sub-step `[a, b]` of a dense run.
    Dense { a: f64, b: f64 },
}

/// Finite realization of a time scale.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizedGrid {
    points: Vec<TimePoint>,
    h_int: f64,
}

impl RealizedGrid {
    /// Builds a grid from explicit points.
    ///
    /// Times must increase strictly and every scattered point must land on
    /// its successor (`t + μ = t_next`, relative tolerance `1e-9`). The last
    /// point is terminal and its `μ` is ignored.
    pub fn from_points(mut points: Vec<TimePoint>, h_int: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("grid needs at least one point"));
        }
        for w in points.windows(2) {
            let (p, q) = (w[0], w[1]);
            if !(q.t > p.t) {
                return Err(Error::invalid(format!(
                    "grid times not strictly increasing at t = {}",
                    p.t
                )));
            }
            if p.mu < 0.0 || !p.mu.is_finite() {
                return Err(Error::invalid(format!("negative graininess at t = {}", p.t)));
            }
            if p.mu > 0.0 {
                let gap = q.t - p.t;
                if (gap - p.mu).abs() > 1e-9 * gap.abs().max(1.0) {
                    return Err(Error::invalid(format!(
                        "graininess {} at t = {} does not match successor gap {}",
                        p.mu, p.t, gap
                    )));
                }
            }
        }
        if let Some(last) = points.last_mut() {
            last.mu = 0.0;
        }
        Ok(RealizedGrid { points, h_int })
    }

    pub fn points(&self) -> &[TimePoint] {
        &self.points
    }

    pub fn h_int(&self) -> f64 {
        self.h_int
    }

    pub fn start(&self) -> f64 {
        self.points[0].t
    }

    pub fn end(&self) -> f64 {
        self.points[self.points.len() - 1].t
    }

    /// Largest realized graininess, `μ∞` on the horizon.
    pub fn mu_max(&self) -> f64 {
        self.points.iter().map(|p| p.mu).fold(0.0, f64::max)
    }

    pub fn intervals(&self) -> impl Iterator<Item = Interval> + '_ {
        self.points.windows(2).map(|w| {
            if w[0].mu > 0.0 {
                Interval::Scattered { t: w[0].t, mu: w[1].t - w[0].t }
            } else {
                Interval::Dense { a: w[0].t, b: w[1].t }
            }
        })
    }

    fn tol(&self) -> f64 {
        1e-9 * self.h_int.clamp(1e-6, 1.0) * self.end().abs().max(1.0)
    }

    /// Checks that `t` belongs to the realized time scale.
    pub fn contains(&self, t: f64) -> Result<()> {
        let tol = self.tol();
        if !(t >= self.start() - tol && t <= self.end() + tol) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside grid [{}, {}]",
                self.start(),
                self.end()
            )));
        }
        // Index of the last point with time <= t.
        let i = self.points.partition_point(|p| p.t <= t + tol);
        if i == 0 {
            return Ok(());
        }
        let p = self.points[i - 1];
        if p.mu > 0.0 && t > p.t + tol && i < self.points.len() && t < self.points[i].t - tol {
            return Err(Error::OutOfRange(format!(
                "t = {t} lies inside the gap ({}, {})",
                p.t, self.points[i].t
            )));
        }
        Ok(())
    }

    /// Generic delta integral over `[t0, t1]`.
    ///
    /// `scattered(t, μ)` gives the full contribution of a jump at `t`;
    /// `dense(t)` is the integrand on dense runs (trapezoid rule).
    pub(crate) fn integrate<S, D>(&self, t0: f64, t1: f64, mut scattered: S, mut dense: D) -> f64
    where
        S: FnMut(f64, f64) -> f64,
        D: FnMut(f64) -> f64,
    {
        let tol = self.tol();
        let mut acc = 0.0;
        for iv in self.intervals() {
            match iv {
                Interval::Scattered { t, mu } => {
                    if t >= t0 - tol && t < t1 - tol {
                        acc += scattered(t, mu);
                    }
                }
                Interval::Dense { a, b } => {
                    let lo = a.max(t0);
                    let hi = b.min(t1);
                    if hi > lo + tol {
                        acc += 0.5 * (hi - lo) * (dense(lo) + dense(hi));
                    }
                }
            }
        }
        acc
    }
}

/// `∫_{t0}^{t1} f(t) Δt` over a realized grid.
///
/// Scattered points contribute `μ(t) f(t)`; dense runs use the trapezoid
/// rule at the grid's quadrature step. Reversed limits flip the sign.
pub fn delta_integral<F>(f: F, grid: &RealizedGrid, t0: f64, t1: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    grid.contains(t0)?;
    grid.contains(t1)?;
    if t1 < t0 {
        return Ok(-grid.integrate(t1, t0, |t, mu| mu * f(t), &f));
    }
    Ok(grid.integrate(t0, t1, |t, mu| mu * f(t), &f))
}

/// Generalized exponential `e_λ(t, t0)`, the solution factor of `z^Δ = λz`.
///
/// Product of `1 + μλ` over scattered points in `[t0, t)` times
/// `exp(∫λ)` over dense runs. A nonregressive point yields a zero factor.
pub fn ts_exponential<F>(lambda: F, grid: &RealizedGrid, t0: f64, t: f64) -> Result<C64>
where
    F: Fn(f64) -> C64,
{
    if t < t0 {
        return Err(Error::invalid(format!("ts_exponential needs t >= t0 ({t} < {t0})")));
    }
    grid.contains(t0)?;
    grid.contains(t)?;
    let tol = grid.tol();
    let mut product = C64::new(1.0, 0.0);
    let mut exponent = C64::new(0.0, 0.0);
    for iv in grid.intervals() {
        match iv {
            Interval::Scattered { t: s, mu } => {
                if s >= t0 - tol && s < t - tol {
                    product *= C64::new(1.0, 0.0) + lambda(s) * mu;
                }
            }
            Interval::Dense { a, b } => {
                let lo = a.max(t0);
                let hi = b.min(t);
                if hi > lo + tol {
                    exponent += (lambda(lo) + lambda(hi)) * (0.5 * (hi - lo));
                }
            }
        }
    }
    Ok(product * exponent.exp())
}
