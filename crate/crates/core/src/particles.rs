//! Phase-space particle lattice and the staggered leap-frog push.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::FieldInterpolant;
use crate::model::{lattice_coordinate, Scenario, SimConfig};

/// Particles per push work unit; reductions are summed in chunk order.
const PUSH_CHUNK: usize = 1 << 14;

/// Sign multiplying the field in the velocity update, `dV/dt = sign * E`.
///
/// The characteristics of `f_t + v f_x - E f_v = 0` give `dV/dt = -E`, which is the
/// default. `Positive` runs the discrete update with the opposite sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ForceSign {
    #[default]
    Negative,
    Positive,
}

impl ForceSign {
    pub fn value(self) -> f64 {
        match self {
            ForceSign::Negative => -1.0,
            ForceSign::Positive => 1.0,
        }
    }
}

impl fmt::Display for ForceSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForceSign::Negative => write!(f, "-1"),
            ForceSign::Positive => write!(f, "1"),
        }
    }
}

impl FromStr for ForceSign {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "-1" | "-1.0" | "-" => Ok(ForceSign::Negative),
            "1" | "+1" | "1.0" | "+" => Ok(ForceSign::Positive),
            other => Err(format!("force sign must be -1 or 1, got `{other}`")),
        }
    }
}

/// Reductions gathered while pushing velocities from `t^{n-1/2}` to `t^{n+1/2}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PushSummary {
    /// `1/2 sum q V^{n-1/2} V^{n+1/2}`, the kinetic energy centred on `t^n`.
    pub centered_kinetic: f64,
    /// `max |V^{n+1/2}|`.
    pub max_speed: f64,
}

/// Macro-particles with positions at `t^n` and velocities at `t^{n-1/2}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    positions: Vec<f64>,
    velocities: Vec<f64>,
    charges: Vec<f64>,
}

impl ParticleSet {
    /// One particle per lattice site `(i dx, j dv)` with `|i dx| <= L`, `|j dv| <= Q`
    /// and positive density, carrying charge `f_0 dx dv`. Velocities are at `t = 0`.
    pub fn initialize(scenario: &Scenario, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let m = cfg.half_cells() as i64;
        let jmax = cfg.velocity_cells() as i64;
        let cell = cfg.dx * cfg.dv;
        let mut set = ParticleSet::from_parts(Vec::new(), Vec::new(), Vec::new());
        for i in -m..=m {
            let x = lattice_coordinate(i, cfg.dx);
            for j in -jmax..=jmax {
                let v = lattice_coordinate(j, cfg.dv);
                let f = scenario.initial_density(x, v);
                if f > 0.0 {
                    set.positions.push(x);
                    set.velocities.push(v);
                    set.charges.push(f * cell);
                }
            }
        }
        if set.is_empty() {
            return Err(Error::DegenerateScenario);
        }
        Ok(set)
    }

    pub fn from_parts(positions: Vec<f64>, velocities: Vec<f64>, charges: Vec<f64>) -> Self {
        assert_eq!(positions.len(), velocities.len());
        assert_eq!(positions.len(), charges.len());
        ParticleSet {
            positions,
            velocities,
            charges,
        }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn velocities(&self) -> &[f64] {
        &self.velocities
    }

    pub fn charges(&self) -> &[f64] {
        &self.charges
    }

    pub fn total_charge(&self) -> f64 {
        self.charges.iter().sum()
    }

    pub fn momentum(&self) -> f64 {
        self.charges
            .iter()
            .zip(&self.velocities)
            .map(|(q, v)| q * v)
            .sum()
    }

    /// Negates every velocity (time reversal of the staggered state).
    pub fn reverse_velocities(&mut self) {
        self.velocities.iter_mut().for_each(|v| *v = -*v);
    }

    /// `V(t^{-1/2}) = V(0) - sign E(X(0)) dt/2`.
    pub fn half_step_back(&mut self, field: &FieldInterpolant<'_>, dt: f64, sign: ForceSign) {
        let kick = -0.5 * dt * sign.value();
        self.positions
            .par_chunks(PUSH_CHUNK)
            .zip(self.velocities.par_chunks_mut(PUSH_CHUNK))
            .for_each(|(xs, vs)| {
                for (v, &x) in vs.iter_mut().zip(xs) {
                    *v += kick * field.eval(x);
                }
            });
    }

    /// `V^{n+1/2} = V^{n-1/2} + sign dt E^n(X^n)`.
    pub fn push_velocities(
        &mut self,
        field: &FieldInterpolant<'_>,
        dt: f64,
        sign: ForceSign,
    ) -> PushSummary {
        let kick = dt * sign.value();
        let partials: Vec<(f64, f64)> = self
            .positions
            .par_chunks(PUSH_CHUNK)
            .zip(self.velocities.par_chunks_mut(PUSH_CHUNK))
            .zip(self.charges.par_chunks(PUSH_CHUNK))
            .map(|((xs, vs), qs)| {
                let mut kinetic = 0.0;
                let mut speed: f64 = 0.0;
                for ((v, &x), &q) in vs.iter_mut().zip(xs).zip(qs) {
                    let old = *v;
                    let new = old + kick * field.eval(x);
                    kinetic += q * old * new;
                    speed = speed.max(new.abs());
                    *v = new;
                }
                (kinetic, speed)
            })
            .collect();
        summarize(&partials)
    }

    /// Same reductions as [`push_velocities`](Self::push_velocities) without updating the velocities.
    pub fn preview_push(
        &self,
        field: &FieldInterpolant<'_>,
        dt: f64,
        sign: ForceSign,
    ) -> PushSummary {
        let kick = dt * sign.value();
        let partials: Vec<(f64, f64)> = self
            .positions
            .par_chunks(PUSH_CHUNK)
            .zip(self.velocities.par_chunks(PUSH_CHUNK))
            .zip(self.charges.par_chunks(PUSH_CHUNK))
            .map(|((xs, vs), qs)| {
                let mut kinetic = 0.0;
                let mut speed: f64 = 0.0;
                for ((&old, &x), &q) in vs.iter().zip(xs).zip(qs) {
                    let new = old + kick * field.eval(x);
                    kinetic += q * old * new;
                    speed = speed.max(new.abs());
                }
                (kinetic, speed)
            })
            .collect();
        summarize(&partials)
    }

    /// `X^{n+1} = X^n + dt V^{n+1/2}`.
    pub fn push_positions(&mut self, dt: f64) {
        self.positions
            .par_chunks_mut(PUSH_CHUNK)
            .zip(self.velocities.par_chunks(PUSH_CHUNK))
            .for_each(|(xs, vs)| {
                for (x, &v) in xs.iter_mut().zip(vs) {
                    *x += dt * v;
                }
            });
    }

    /// Largest absolute staggered velocity.
    pub fn max_speed(&self) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyParticleSet);
        }
        Ok(self
            .velocities
            .par_iter()
            .map(|v| v.abs())
            .reduce(|| 0.0, f64::max))
    }

    pub fn max_abs_position(&self) -> f64 {
        self.positions.iter().fold(0.0, |a, x| a.max(x.abs()))
    }
}

fn summarize(partials: &[(f64, f64)]) -> PushSummary {
    let mut kinetic = 0.0;
    let mut speed: f64 = 0.0;
    for &(k, s) in partials {
        kinetic += k;
        speed = speed.max(s);
    }
    PushSummary {
        centered_kinetic: 0.5 * kinetic,
        max_speed: speed,
    }
}
