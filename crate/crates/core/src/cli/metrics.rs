//! Summary statistics of a trace.

use super::trace::TraceRecord;
use crate::analysis::{
    envelope_fit, trajectory_decay_exponent, DecayEstimate, EnvelopeFit, DEFAULT_ENVELOPE_WINDOW,
};
use crate::{Error, Result};

/// Fraction of the horizon treated as the tail.
pub const TAIL_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceMetrics {
    /// `∫‖y‖²Δt` over the whole trace.
    pub integral_y2: f64,
    /// Contribution of intervals starting in the tail.
    pub tail_integral_y2: f64,
    /// `tail_integral_y2 / integral_y2`, zero when the total vanishes.
    pub tail_fraction: f64,
    pub tail_start: f64,
    pub k_initial: f64,
    pub k_final: f64,
    /// `(k_final − k(tail_start)) / k_final`.
    pub k_tail_variation: f64,
    pub envelope: EnvelopeFit,
    /// Decay exponent of `‖x‖` along the trace, when it stays positive.
    pub decay: Option<DecayEstimate>,
}

/// Delta integral of `‖y‖²` between consecutive rows: left-endpoint on
/// scattered rows, trapezoid on dense ones.
fn y2_increment(a: &TraceRecord, b: &TraceRecord) -> f64 {
    let ya: f64 = a.y.iter().map(|v| v * v).sum();
    if a.mu > 0.0 {
        a.mu * ya
    } else {
        let yb: f64 = b.y.iter().map(|v| v * v).sum();
        0.5 * (b.t - a.t) * (ya + yb)
    }
}

pub fn trace_metrics(records: &[TraceRecord]) -> Result<TraceMetrics> {
    let (first, last) = match (records.first(), records.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::invalid("trace has no rows")),
    };
    let tail_start = last.t - TAIL_FRACTION * (last.t - first.t);
    let (mut total, mut tail) = (0.0, 0.0);
    for w in records.windows(2) {
        let inc = y2_increment(&w[0], &w[1]);
        total += inc;
        if w[0].t >= tail_start {
            tail += inc;
        }
    }
    let k_tail = records.iter().find(|r| r.t >= tail_start).map_or(last.k, |r| r.k);
    let times: Vec<f64> = records.iter().map(|r| r.t).collect();
    let norms: Vec<f64> = records.iter().map(|r| r.norm_x).collect();
    let envelope = envelope_fit(&times, &norms, DEFAULT_ENVELOPE_WINDOW)?;
    let decay = trajectory_decay_exponent(&times, &norms).ok();
    Ok(TraceMetrics {
        integral_y2: total,
        tail_integral_y2: tail,
        tail_fraction: if total > 0.0 { tail / total } else { 0.0 },
        tail_start,
        k_initial: first.k,
        k_final: last.k,
        k_tail_variation: (last.k - k_tail) / last.k,
        envelope,
        decay,
    })
}

impl TraceMetrics {
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("integral_y2".to_string(), format!("{}", self.integral_y2)),
            ("tail_integral_y2".to_string(), format!("{}", self.tail_integral_y2)),
            ("tail_fraction".to_string(), format!("{}", self.tail_fraction)),
            ("k_initial".to_string(), format!("{}", self.k_initial)),
            ("k_final".to_string(), format!("{}", self.k_final)),
            ("k_tail_variation".to_string(), format!("{}", self.k_tail_variation)),
            ("envelope.k".to_string(), format!("{}", self.envelope.k_const)),
            ("envelope.alpha_fit".to_string(), format!("{}", self.envelope.alpha_fit)),
        ];
        if let Some(d) = &self.decay {
            kv.push(("decay.alpha".to_string(), format!("{}", d.alpha)));
            kv.push(("decay.alpha_limsup".to_string(), format!("{}", d.alpha_limsup)));
        }
        kv
    }
}
