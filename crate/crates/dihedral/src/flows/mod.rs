//! Vector fields on the collision manifold and its sections.
//!
//! Three descriptions of the same flow are provided: the full McGehee system
//! in (rho, v, s, w), the projected one-degree-of-freedom system in (x, v)
//! and the regularized system in (x, v, u) with time sigma.

pub mod charts;
pub mod integrator;
pub mod newton;
pub mod output;

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::potentials::{
    covariant_gradient, gradient_cartesian, potential_cartesian, regularized_potential, section_potential, Homogeneity,
    Section,
};

pub use integrator::{integrate, Event, EventHit, IntegratorConfig, Solution};

/// Coefficient b of the drift term (1 - b) in the section equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Drift {
    /// b = beta = alpha / 2.
    #[default]
    Exact,
    /// b = 1/2 for every alpha; the one-parameter family used for the
    /// supercritical estimates.
    Frozen,
}

impl Drift {
    pub fn b(self, h: Homogeneity) -> f64 {
        match self {
            Drift::Exact => h.beta,
            Drift::Frozen => 0.5,
        }
    }
}

impl std::str::FromStr for Drift {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Drift::Exact),
            "frozen" => Ok(Drift::Frozen),
            _ => Err(Error::Domain(format!("unknown drift model {s}"))),
        }
    }
}

/// State of a section flow: coordinate, Sundman velocity, regularized
/// tangential velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionState {
    pub x: f64,
    pub v: f64,
    pub u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FullState {
    pub rho: f64,
    pub v: f64,
    pub s: [f64; 3],
    pub w: [f64; 3],
}

impl FullState {
    pub fn to_array(&self) -> [f64; 10] {
        let [s0, s1, s2] = self.s;
        let [w0, w1, w2] = self.w;
        [self.rho, self.v, s0, s1, s2, w0, w1, w2, 0.0, 0.0]
    }

    pub fn from_array(y: &[f64; 10]) -> Self {
        FullState { rho: y[0], v: y[1], s: [y[2], y[3], y[4]], w: [y[5], y[6], y[7]] }
    }
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// McGehee field: rho' = rho v, v' = |w|^2 + beta v^2 - alpha U(s),
/// s' = w, w' = -|w|^2 s + (beta - 1) v w + grad_s U(s).
pub fn vf_full(h: Homogeneity, st: &FullState) -> Result<FullState> {
    let u = potential_cartesian(h, st.s)?;
    let grad = covariant_gradient(h, st.s)?;
    let w2 = dot(st.w, st.w);
    let mut dw = [0.0; 3];
    for k in 0..3 {
        dw[k] = -w2 * st.s[k] + (h.beta - 1.0) * st.v * st.w[k] + grad[k];
    }
    Ok(FullState {
        rho: st.rho * st.v,
        v: w2 + h.beta * st.v * st.v - h.alpha * u,
        s: st.w,
        w: dw,
    })
}

/// v^2 + |w|^2 - 2U(s); equals 2 rho^alpha H along solutions.
pub fn parabolic_defect(h: Homogeneity, st: &FullState) -> Result<f64> {
    Ok(st.v * st.v + dot(st.w, st.w) - 2.0 * potential_cartesian(h, st.s)?)
}

/// Residual of the energy relation v^2 + |w|^2 - 2U = 2 rho^alpha H.
pub fn full_energy_residual(h: Homogeneity, st: &FullState, energy: f64) -> Result<f64> {
    Ok(parabolic_defect(h, st)? - 2.0 * st.rho.powf(h.alpha) * energy)
}

/// D' - alpha v D for D = v^2 + |w|^2 - 2U(s), along `vf_full`.
///
/// Solutions satisfy D = 2 rho^alpha H, so this vanishes identically on
/// every energy level once |s| = 1 and <w, s> = 0.
pub fn full_constraint_rate(h: Homogeneity, st: &FullState) -> Result<f64> {
    let d = vf_full(h, st)?;
    let du = dot(gradient_cartesian(h, st.s)?, st.w);
    let rate = 2.0 * st.v * d.v + 2.0 * dot(st.w, d.w) - 2.0 * du;
    Ok(rate - h.alpha * st.v * parabolic_defect(h, st)?)
}

/// Full field as a flat array for the integrator; slot 8 carries physical
/// time t with dt/dtau = rho^(1 + beta).
pub fn vf_full_flat(h: Homogeneity) -> impl Fn(f64, &[f64; 10]) -> Result<[f64; 10]> {
    move |_, y| {
        let st = FullState::from_array(y);
        let d = vf_full(h, &st)?;
        let mut out = d.to_array();
        out[8] = st.rho.max(0.0).powf(1.0 + h.beta);
        Ok(out)
    }
}

/// Projected field in tau-time: x' = u_sign sqrt(2U - v^2),
/// v' = (1 - beta)(2U - v^2).
pub fn vf_projected(section: Section, h: Homogeneity, x: f64, v: f64, u_sign: f64) -> Result<[f64; 2]> {
    vf_projected_drift(section, h, h.beta, x, v, u_sign)
}

pub fn vf_projected_drift(section: Section, h: Homogeneity, b: f64, x: f64, v: f64, u_sign: f64) -> Result<[f64; 2]> {
    let u2 = 2.0 * section_potential(section, h, x)?;
    let r = u2 - v * v;
    if r < -1e-14 * u2 {
        return Err(Error::Constraint { residual: -r, limit: 1e-14 * u2 });
    }
    let r = r.max(0.0);
    Ok([u_sign * r.sqrt(), (1.0 - b) * r])
}

/// dv/dx = dir (1 - b) sqrt(2U - v^2), the one-form of the projected flow.
pub fn one_form(section: Section, h: Homogeneity, b: f64, x: f64, v: f64, dir: f64) -> Result<f64> {
    let [dx, _] = vf_projected_drift(section, h, b, x, v, 1.0)?;
    Ok(dir * (1.0 - b) * dx)
}

/// pi / (1 - beta): angle swept by the constant-potential projected flow
/// between the two equilibrium lines.
pub fn kepler_transit_angle(beta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) {
        return Err(Error::Domain(format!("beta = {beta} outside [0, 1)")));
    }
    Ok(PI / (1.0 - beta))
}

/// Transit angle measured by integrating dv/dx = (1 - beta) sqrt(2U0 - v^2)
/// from v = -sqrt(2U0) until v reaches +sqrt(2U0).
///
/// The ODE is integrated in the angle chart v = sqrt(2U0) sin(psi), where it
/// reads dpsi/dx = 1 - beta and the endpoints are regular.
pub fn kepler_transit_numeric(beta: f64, u0: f64, cfg: &IntegratorConfig) -> Result<f64> {
    if !(0.0..1.0).contains(&beta) || u0 <= 0.0 {
        return Err(Error::Domain(format!("beta = {beta}, U0 = {u0}")));
    }
    let vb = (2.0 * u0).sqrt();
    let f = move |_: f64, y: &[f64; 2]| {
        let c = y[0].cos().max(0.0);
        Ok([(1.0 - beta), (1.0 - beta) * vb * c])
    };
    // v touches +vbar tangentially, so the stop is placed on the chart angle;
    // the integrated v must agree with +vbar there.
    let ev = [Event::new("psi = pi/2", move |_, y: &[f64; 2]| y[0] - FRAC_PI_2).rising().terminal()];
    let sol = integrate(f, 0.0, [-FRAC_PI_2, -vb], 4.0 * PI / (1.0 - beta), cfg, &ev)?;
    if sol.stopped_by.is_none() {
        return Err(Error::NoConvergence("transit not completed".into()));
    }
    let miss = (sol.y[1] - vb).abs();
    if miss > 1e-6 * vb {
        return Err(Error::NoConvergence(format!("v misses +vbar by {miss:e} at the end of the transit")));
    }
    Ok(sol.t)
}

/// R, R'/R, W, W' with the even extension across the arms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegTerms {
    pub r: f64,
    pub dlog_r: f64,
    pub w: f64,
    pub dw: f64,
}

pub fn reg_terms(section: Section, h: Homogeneity, x: f64) -> Result<RegTerms> {
    let (lo, hi) = section.domain();
    // reflect across the nearest arm; odd quantities change sign
    let (xr, sgn) = if x > hi {
        (2.0 * hi - x, -1.0)
    } else if x < lo {
        (2.0 * lo - x, -1.0)
    } else {
        (x, 1.0)
    };
    if xr < lo - 1e-9 || xr > hi + 1e-9 {
        return Err(Error::Domain(format!("{} coordinate {x} far outside domain", section.name())));
    }
    let xr = xr.clamp(lo, hi);
    let reg = regularized_potential(section, h, xr)?;
    let a = h.alpha;
    let (r, dlog_r) = match section {
        Section::Planar => ((2.0 * xr).sin().abs().powf(a), 2.0 * a / (2.0 * xr).tan()),
        Section::Tetra => ((2.0 * (FRAC_PI_2 - xr.abs()).sin().abs()).powf(a), -a * xr.tan()),
    };
    Ok(RegTerms { r, dlog_r: sgn * dlog_r, w: reg.w, dw: sgn * reg.dw })
}

/// Regularized section field with a selectable drift coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizedField {
    pub section: Section,
    pub h: Homogeneity,
    pub b: f64,
}

impl RegularizedField {
    pub fn new(section: Section, h: Homogeneity, drift: Drift) -> Self {
        RegularizedField { section, h, b: drift.b(h) }
    }

    /// (rho', v', x', u') with the energy relation substituted into v'.
    pub fn substituted(&self, st: &SectionState, rho: f64, energy: f64) -> Result<[f64; 4]> {
        let t = reg_terms(self.section, self.h, st.x)?;
        let sw = t.w.sqrt();
        let g = t.r / sw;
        let b = self.b;
        let rho_a = if rho > 0.0 { rho.powf(self.h.alpha) } else { 0.0 };
        let dv = 2.0 * g * rho_a * energy + (1.0 - b) * sw * (2.0 - st.v * st.v * t.r / t.w);
        let du = (b - 1.0) * g * st.v * st.u + t.dw / (2.0 * t.w) * (2.0 * t.r - st.u * st.u)
            - t.dlog_r * (t.r - st.u * st.u);
        Ok([g * rho * st.v, dv, st.u, du])
    }

    /// Same field with v' in its original form u^2/g + b g v^2 - 2 b sqrt(W);
    /// undefined on the arms where g = 0.
    pub fn raw(&self, st: &SectionState, rho: f64, energy: f64) -> Result<[f64; 4]> {
        let mut d = self.substituted(st, rho, energy)?;
        let t = reg_terms(self.section, self.h, st.x)?;
        if t.r < 1e-300 {
            return Err(Error::Singular { coord: "arm", value: st.x });
        }
        let sw = t.w.sqrt();
        let g = t.r / sw;
        d[1] = st.u * st.u / g + self.b * g * st.v * st.v - 2.0 * self.b * sw;
        Ok(d)
    }

    /// Flat field on the collision manifold, state [x, v, u].
    pub fn collision_manifold(self) -> impl Fn(f64, &[f64; 3]) -> Result<[f64; 3]> {
        move |_, y| {
            let d = self.substituted(&SectionState { x: y[0], v: y[1], u: y[2] }, 0.0, 0.0)?;
            Ok([d[2], d[1], d[3]])
        }
    }

    /// Flat field with rho, state [x, v, u, rho].
    pub fn with_rho(self, energy: f64) -> impl Fn(f64, &[f64; 4]) -> Result<[f64; 4]> {
        move |_, y| {
            let d = self.substituted(&SectionState { x: y[0], v: y[1], u: y[2] }, y[3], energy)?;
            Ok([d[2], d[1], d[3], d[0]])
        }
    }

    /// u^2 + v^2 R^2/W - 2R - 2 rho^alpha H R^2/W.
    pub fn energy_residual(&self, st: &SectionState, rho: f64, energy: f64) -> Result<f64> {
        energy_residual(self.section, self.h, st, rho, energy)
    }

    /// Derivative of the energy relation along the substituted field.
    pub fn constraint_rate(&self, st: &SectionState, rho: f64, energy: f64) -> Result<f64> {
        let t = reg_terms(self.section, self.h, st.x)?;
        let d = self.substituted(st, rho, energy)?;
        let q = t.r * t.r / t.w;
        let dq = q * (2.0 * t.dlog_r - t.dw / t.w);
        let dr = t.r * t.dlog_r;
        let rho_a = if rho > 0.0 { rho.powf(self.h.alpha) } else { 0.0 };
        let drho_a = if rho > 0.0 { self.h.alpha * rho.powf(self.h.alpha - 1.0) } else { 0.0 };
        let cx = st.v * st.v * dq - 2.0 * dr - 2.0 * rho_a * energy * dq;
        let cv = 2.0 * st.v * q;
        let cu = 2.0 * st.u;
        let crho = -2.0 * drho_a * energy * q;
        Ok(cx * d[2] + cv * d[1] + cu * d[3] + crho * d[0])
    }
}

pub fn energy_residual(section: Section, h: Homogeneity, st: &SectionState, rho: f64, energy: f64) -> Result<f64> {
    let t = reg_terms(section, h, st.x)?;
    let q = t.r * t.r / t.w;
    let rho_a = if rho > 0.0 { rho.powf(h.alpha) } else { 0.0 };
    Ok(st.u * st.u + st.v * st.v * q - 2.0 * t.r - 2.0 * rho_a * energy * q)
}

/// Checked regularized field (exact drift); fails when the state is off
/// the energy shell by more than `tol`.
pub fn vf_regularized(section: Section, h: Homogeneity, st: &SectionState, rho: f64, energy: f64, tol: f64) -> Result<[f64; 4]> {
    let res = energy_residual(section, h, st, rho, energy)?;
    if res.abs() > tol {
        return Err(Error::Constraint { residual: res.abs(), limit: tol });
    }
    RegularizedField::new(section, h, Drift::Exact).substituted(st, rho, energy)
}

/// Regularized velocity u = (R / sqrt W) w.
pub fn u_from_w(section: Section, h: Homogeneity, x: f64, w: f64) -> Result<f64> {
    let t = reg_terms(section, h, x)?;
    Ok(t.r / t.w.sqrt() * w)
}

/// Point on the collision manifold with given (x, v) and direction.
pub fn manifold_state(section: Section, h: Homogeneity, x: f64, v: f64, dir: f64) -> Result<SectionState> {
    let t = reg_terms(section, h, x)?;
    let u2 = 2.0 * t.r - v * v * t.r * t.r / t.w;
    if u2 < -1e-12 {
        return Err(Error::Constraint { residual: -u2, limit: 1e-12 });
    }
    Ok(SectionState { x, v, u: dir * u2.max(0.0).sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transit_formula() {
        assert!((kepler_transit_angle(0.5).unwrap() - 2.0 * PI).abs() < 1e-15);
        assert!((kepler_transit_angle(0.75).unwrap() - 4.0 * PI).abs() < 1e-14);
        assert!((kepler_transit_angle(0.0).unwrap() - PI).abs() < 1e-15);
    }

    #[test]
    fn restpoint_is_fixed() {
        let h = Homogeneity::newtonian();
        let s = [0.5f64.sqrt(), 0.5f64.sqrt(), 0.0];
        let vb = (2.0 * potential_cartesian(h, s).unwrap()).sqrt();
        let d = vf_full(h, &FullState { rho: 0.0, v: vb, s, w: [0.0; 3] }).unwrap();
        assert!(d.v.abs() < 1e-13 && d.w.iter().all(|c| c.abs() < 1e-13));
    }
}
