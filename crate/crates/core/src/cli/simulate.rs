//! Closed-loop driver.

use super::config::{Scenario, TimeDomain};
use super::trace::TraceRecord;
use crate::controller::{ControllerState, GraininessPolicy};
use crate::plant::{GainLaw, LtiPlant};
use crate::timescale::Segment;
use crate::{Result, Vector};

/// A completed (or blown-up) run.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub records: Vec<TraceRecord>,
    /// Time at which `‖x‖` first exceeded the blow-up threshold.
    pub blow_up: Option<f64>,
}

enum Step {
    Dense(f64),
    Scattered { mu: f64, blocked: bool },
}

struct Recorder<'a> {
    plant: &'a LtiPlant,
    limit: f64,
    records: Vec<TraceRecord>,
    blow_up: Option<f64>,
}

impl Recorder<'_> {
    /// Returns `false` once the state has blown up.
    fn push(&mut self, t: f64, mu: f64, k: f64, blocked: bool, mu_bar: f64, x: &Vector) -> bool {
        let norm_x = x.norm();
        self.records.push(TraceRecord {
            t,
            mu,
            k,
            blocked,
            mu_bar,
            norm_x,
            y: self.plant.output(x).iter().copied().collect(),
            x: x.iter().copied().collect(),
        });
        if !(norm_x <= self.limit) {
            self.blow_up = Some(t);
            return false;
        }
        true
    }
}

fn next_step(
    domain: &TimeDomain,
    counter: usize,
    policy: &mut GraininessPolicy,
    state: &ControllerState,
    horizon: f64,
) -> Step {
    match domain {
        TimeDomain::Blocking(s) => {
            if counter.is_multiple_of(2) {
                Step::Dense(s.continuous_run)
            } else {
                Step::Scattered { mu: policy.next_graininess(state, true), blocked: true }
            }
        }
        TimeDomain::Program(p) => match p.segments()[counter % p.segments().len()] {
            Segment::Dense { duration } => Step::Dense(duration),
            Segment::Gap { duration } => Step::Scattered { mu: duration, blocked: false },
        },
        TimeDomain::Sampled => {
            Step::Scattered { mu: policy.next_graininess(state, true), blocked: true }
        }
        TimeDomain::Continuous => Step::Dense(horizon),
    }
}

/// Runs the closed loop `u = −ky` with adaptive gain over the scenario's
/// horizon. Dense stretches are recorded at every `h_int`; a scattered
/// step that starts before the horizon is completed, so the final time may
/// exceed it.
pub fn simulate(s: &Scenario) -> Result<Simulation> {
    let plant = &s.plant;
    let mut policy = s.policy.clone();
    let t0 = match &s.domain {
        TimeDomain::Program(p) => p.origin(),
        _ => 0.0,
    };
    let end = t0 + s.horizon;
    let tol = 1e-12 * end.abs().max(1.0);
    let mut rec =
        Recorder { plant, limit: s.tolerances.blowup, records: Vec::new(), blow_up: None };
    let mut x = plant.x0().clone();
    let mut state = ControllerState::new(s.k0, t0)?;
    let mut counter = 0;

    'run: while state.t < end - tol {
        match next_step(&s.domain, counter, &mut policy, &state, s.horizon) {
            Step::Dense(duration) => {
                let d = duration.min(end - state.t);
                let run = plant.run_dense(&x, state.k, d, s.h_int, GainLaw::SquaredOutput)?;
                for smp in &run.samples[..run.samples.len() - 1] {
                    if !rec.push(state.t + smp.t, 0.0, smp.k, false, policy.mu_bar(smp.k), &smp.x) {
                        break 'run;
                    }
                }
                x = run.x_end;
                state = ControllerState { k: run.k_end, t: state.t + d, mu_current: 0.0 };
            }
            Step::Scattered { mu, blocked } => {
                if !rec.push(state.t, mu, state.k, blocked, policy.mu_bar(state.k), &x) {
                    break 'run;
                }
                let (x_next, y) = plant.step_scattered(&x, state.k, mu)?;
                state = state.gain_update_scattered(&y, mu)?;
                x = x_next;
            }
        }
        counter += 1;
    }
    if rec.blow_up.is_none() {
        rec.push(state.t, 0.0, state.k, false, policy.mu_bar(state.k), &x);
    }
    Ok(Simulation { records: rec.records, blow_up: rec.blow_up })
}
