//! Direct integration of the reduced Newton equations q'' = grad U(q).

use crate::error::{Error, Result};
use crate::potentials::{gradient_cartesian, potential_cartesian, Homogeneity};

use super::integrator::{integrate, Event, IntegratorConfig};
use super::FullState;

/// Smallest |q - gq| relative to |q| before a run is aborted.
pub const CLOSE_ENCOUNTER: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewtonSample {
    pub t: f64,
    pub q: [f64; 3],
    pub p: [f64; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonTrajectory {
    pub samples: Vec<NewtonSample>,
    pub transformed: Vec<FullState>,
}

fn norm(q: [f64; 3]) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
}

fn min_pair_distance(q: &[f64]) -> f64 {
    let (a, b, c) = (q[0], q[1], q[2]);
    2.0 * (a * a + b * b).sqrt().min((b * b + c * c).sqrt()).min((a * a + c * c).sqrt())
}

/// H = |p|^2 / 2 - U(q).
pub fn newton_energy(h: Homogeneity, q: [f64; 3], p: [f64; 3]) -> Result<f64> {
    Ok(0.5 * (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]) - potential_cartesian(h, q)?)
}

/// rho = |q|, s = q / rho, z = rho^beta p, v = <z, s>, w = z - v s.
pub fn to_mcgehee(h: Homogeneity, q: [f64; 3], p: [f64; 3]) -> FullState {
    let rho = norm(q);
    let s = [q[0] / rho, q[1] / rho, q[2] / rho];
    let sc = rho.powf(h.beta);
    let z = [sc * p[0], sc * p[1], sc * p[2]];
    let v = z[0] * s[0] + z[1] * s[1] + z[2] * s[2];
    FullState { rho, v, s, w: [z[0] - v * s[0], z[1] - v * s[1], z[2] - v * s[2]] }
}

pub fn from_mcgehee(h: Homogeneity, st: &FullState) -> ([f64; 3], [f64; 3]) {
    let sc = st.rho.powf(-h.beta);
    let mut q = [0.0; 3];
    let mut p = [0.0; 3];
    for k in 0..3 {
        q[k] = st.rho * st.s[k];
        p[k] = sc * (st.v * st.s[k] + st.w[k]);
    }
    (q, p)
}

/// Integrate the reduced Newton system for physical time `horizon` and
/// return the samples together with their McGehee images.
pub fn reduced_newton_oracle(h: Homogeneity, q0: [f64; 3], p0: [f64; 3], horizon: f64, cfg: &IntegratorConfig) -> Result<NewtonTrajectory> {
    potential_cartesian(h, q0)?;
    let f = move |_: f64, y: &[f64; 6]| {
        let g = gradient_cartesian(h, [y[0], y[1], y[2]])?;
        Ok([y[3], y[4], y[5], g[0], g[1], g[2]])
    };
    let ev = [Event::new("close encounter", |_, y: &[f64; 6]| {
        min_pair_distance(y) - CLOSE_ENCOUNTER * norm([y[0], y[1], y[2]])
    })
    .falling()
    .terminal()];
    let y0 = [q0[0], q0[1], q0[2], p0[0], p0[1], p0[2]];
    let cfg = IntegratorConfig { record: true, ..*cfg };
    let sol = integrate(f, 0.0, y0, horizon, &cfg, &ev)?;
    if sol.stopped_by.is_some() {
        return Err(Error::Collision { distance: min_pair_distance(&sol.y) });
    }
    let samples: Vec<NewtonSample> = sol
        .ts
        .iter()
        .zip(&sol.ys)
        .map(|(&t, y)| NewtonSample { t, q: [y[0], y[1], y[2]], p: [y[3], y[4], y[5]] })
        .collect();
    let transformed = samples.iter().map(|s| to_mcgehee(h, s.q, s.p)).collect();
    Ok(NewtonTrajectory { samples, transformed })
}

/// Integrate the McGehee field from `st0` until physical time `t_target`
/// has elapsed; returns the state there.
pub fn mcgehee_at_time(h: Homogeneity, st0: &FullState, t_target: f64, cfg: &IntegratorConfig) -> Result<FullState> {
    let f = super::vf_full_flat(h);
    let ev = [Event::new("t", move |_, y: &[f64; 10]| y[8] - t_target).rising().terminal()];
    // tau horizon generous: dt/dtau = rho^(1+beta) is bounded below on short runs
    let rho_min = st0.rho.max(1e-3);
    let tau_max = 100.0 * t_target.abs().max(1.0) / rho_min.powf(1.0 + h.beta);
    let sol = integrate(f, 0.0, st0.to_array(), tau_max, cfg, &ev)?;
    if sol.stopped_by.is_none() {
        return Err(Error::NoConvergence("target time not reached".into()));
    }
    Ok(FullState::from_array(&sol.y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcgehee_roundtrip() {
        let h = Homogeneity::new(1.3).unwrap();
        let q = [0.7, 0.4, 0.2];
        let p = [-0.3, 0.5, 0.1];
        let st = to_mcgehee(h, q, p);
        let (q2, p2) = from_mcgehee(h, &st);
        for k in 0..3 {
            assert!((q[k] - q2[k]).abs() < 1e-14 && (p[k] - p2[k]).abs() < 1e-14);
        }
    }
}
