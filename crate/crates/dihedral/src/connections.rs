//! Branch tracing on the collision manifold, connection graphs and the
//! critical exponents.
//!
//! Branches are followed by one of two tracers. The projected tracer works
//! in the angle chart of `flows::charts` and switches to the arm chart inside
//! a window of width `window` around each arm. The regularized tracer
//! integrates the sigma-flow up to a band of width `sigma_band`, passes the
//! arm in the arm chart and hands back at distance `window`: restarting the
//! sigma-flow right next to an arm loses about 1e-4 in v, since solutions
//! are not smooth there for alpha > 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::central_configs::{
    characteristic_exponents, enumerate_ccs, section_critical_point, vbar_closed_form, CcKind, CentralConfiguration,
};
use crate::error::{Error, Result};
use crate::flows::charts::{psi_field, psi_from, v_from_psi, w_from_psi, Arm, ArmChart};
use crate::flows::output::{SectionSample, SectionTrajectory, TrajectoryEvent};
use crate::flows::{
    energy_residual, integrate, manifold_state, u_from_w, Drift, Event, IntegratorConfig, RegularizedField, SectionState,
};
use crate::potentials::{potential_derivatives, section_potential, Homogeneity, Section};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stability {
    Stable,
    Unstable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

impl std::str::FromStr for Side {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left" => Ok(Side::Left),
            "right" => Ok(Side::Right),
            _ => Err(Error::Domain(format!("unknown side {s}"))),
        }
    }
}

/// A restpoint of a section flow (the sign of vbar is chosen separately).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionRestpoint {
    pub label: String,
    pub x: f64,
    pub vbar: f64,
    pub lambda: f64,
}

/// Configurations lying on a section, ordered by coordinate.
pub fn section_restpoints(section: Section, h: Homogeneity) -> Result<Vec<SectionRestpoint>> {
    let pts: Vec<(&str, f64)> = match section {
        Section::Planar => vec![("p11", section_critical_point(Section::Planar, h)?)],
        Section::Tetra => {
            let p = section_critical_point(Section::Tetra, h)?;
            vec![("e12", -p), ("p11", 0.0), ("e11", p)]
        }
    };
    pts.into_iter()
        .map(|(l, x)| {
            Ok(SectionRestpoint {
                label: l.to_string(),
                x,
                vbar: (2.0 * section_potential(section, h, x)?).sqrt(),
                lambda: potential_derivatives(section, h, x, 2)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub section: Section,
    /// Label of the configuration, e.g. "p11" or "e11".
    pub cc: String,
    pub vbar_positive: bool,
    pub stability: Stability,
    pub side: Side,
}

impl Branch {
    pub fn unstable(section: Section, cc: &str, vbar_positive: bool, side: Side) -> Self {
        Branch { section, cc: cc.to_string(), vbar_positive, stability: Stability::Unstable, side }
    }

    pub fn node(&self) -> String {
        format!("{}{}", self.cc, if self.vbar_positive { '+' } else { '-' })
    }

    pub fn name(&self) -> String {
        let st = match self.stability {
            Stability::Stable => "Ws",
            Stability::Unstable => "Wu",
        };
        let side = match self.side {
            Side::Left => "left",
            Side::Right => "right",
        };
        format!("{st}({}) {side} [{}]", self.node(), self.section.name())
    }

    fn restpoint(&self, h: Homogeneity) -> Result<SectionRestpoint> {
        section_restpoints(self.section, h)?
            .into_iter()
            .find(|r| r.label == self.cc)
            .ok_or_else(|| Error::Domain(format!("{} does not lie on the {} section", self.cc, self.section.name())))
    }
}

/// Parse "p11-", "e11+" style labels.
pub fn parse_node(label: &str) -> Result<(String, bool)> {
    let (cc, sign) = label.split_at(label.len().saturating_sub(1));
    match sign {
        "+" => Ok((cc.to_string(), true)),
        "-" => Ok((cc.to_string(), false)),
        _ => Err(Error::Domain(format!("label {label} must end in + or -"))),
    }
}

/// Eigen-data of a section restpoint for drift coefficient b.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedData {
    pub x: f64,
    pub vbar: f64,
    pub mu: f64,
}

fn seed_data(h: Homogeneity, branch: &Branch, b: f64) -> Result<SeedData> {
    let rp = branch.restpoint(h)?;
    let vbar = if branch.vbar_positive { rp.vbar } else { -rp.vbar };
    if rp.lambda <= 0.0 {
        return Err(Error::Domain(format!(
            "{} is not a saddle of the {} section flow (lambda = {})",
            rp.label,
            branch.section.name(),
            rp.lambda
        )));
    }
    let hb = Homogeneity { alpha: h.alpha, beta: b };
    let (m1, m2) = characteristic_exponents(hb, rp.lambda, vbar);
    let mu = match branch.stability {
        Stability::Unstable => m1.re.max(m2.re),
        Stability::Stable => m1.re.min(m2.re),
    };
    Ok(SeedData { x: rp.x, vbar, mu })
}

/// Residual of mu^2 + (1 - b) vbar mu - lambda for the seeding exponent.
pub fn seed_eigen_residual(h: Homogeneity, branch: &Branch, drift: Drift) -> Result<f64> {
    let b = drift.b(h);
    let d = seed_data(h, branch, b)?;
    let lambda = branch.restpoint(h)?.lambda;
    Ok((d.mu * d.mu + (1.0 - b) * d.vbar * d.mu - lambda).abs())
}

/// Restpoint displaced by eps along the (dx, dw) = (1, mu) eigendirection,
/// on the side given by the branch; v is set from the manifold constraint.
pub fn seed_branch(h: Homogeneity, branch: &Branch, eps: f64, drift: Drift) -> Result<SectionState> {
    if !(0.0..=1e-4).contains(&eps) {
        return Err(Error::Domain(format!("seed offset {eps} outside [0, 1e-4]")));
    }
    let d = seed_data(h, branch, drift.b(h))?;
    let n = (1.0 + d.mu * d.mu).sqrt();
    let dx = branch.side.sign() * eps / n;
    let w = d.mu * dx;
    let x = d.x + dx;
    let u2 = 2.0 * section_potential(branch.section, h, x)?;
    let r = u2 - w * w;
    if r <= 0.0 {
        return Err(Error::Constraint { residual: -r, limit: 0.0 });
    }
    let v = d.vbar.signum() * r.sqrt();
    Ok(SectionState { x, v, u: u_from_w(branch.section, h, x, w)? })
}

/// Tangential velocity w of a section state.
fn w_of(section: Section, h: Homogeneity, st: &SectionState) -> Result<f64> {
    let t = crate::flows::reg_terms(section, h, st.x)?;
    Ok(st.u * t.w.sqrt() / t.r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TracerKind {
    /// Angle chart of the projected one-form.
    Projected,
    /// Regularized sigma-flow.
    Sigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Run until capture, escape or budget exhaustion.
    Outcome,
    /// Stop right after the n-th arm crossing.
    ArmCrossings(usize),
    /// Stop at the first return to the source angle after this many arm
    /// crossings.
    CcReturn { after_arms: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceOptions {
    pub drift: Drift,
    pub tracer: TracerKind,
    pub eps: f64,
    /// Arm window of the projected tracer.
    pub window: f64,
    /// Arm band of the sigma tracer.
    pub sigma_band: f64,
    pub capture_radius: f64,
    pub max_arm_crossings: usize,
    pub leg_horizon: f64,
    pub cfg: IntegratorConfig,
    pub stop: StopRule,
    pub record: bool,
    /// Extra angle logged as `CcAngle { label: "probe", .. }`.
    pub probe: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            drift: Drift::Exact,
            tracer: TracerKind::Projected,
            eps: 1e-6,
            window: 0.02,
            sigma_band: 1e-6,
            capture_radius: 1e-6,
            max_arm_crossings: 200,
            leg_horizon: 400.0,
            cfg: IntegratorConfig::default(),
            stop: StopRule::Outcome,
            record: false,
            probe: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TraceEvent {
    ArmCrossing { arm: Arm, v: f64 },
    ZeroV { x: f64 },
    CcAngle { label: String, x: f64, v: f64 },
    Turning { x: f64, v: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    /// Within the capture radius of a restpoint; `saddle` marks restpoints
    /// that are not sinks of the section flow.
    RestpointCapture { label: String, saddle: bool },
    ArmEscape { arm: Arm, binary: (u8, i8), v_at_arm: f64, v_escape_sign: i8 },
    /// Stop rule reached before an outcome.
    Stopped,
    Undecided { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchOutcome {
    pub outcome: Outcome,
    pub log: Vec<TraceEvent>,
    #[serde(skip)]
    pub trajectory: SectionTrajectory,
}

impl BranchOutcome {
    pub fn arm_v(&self) -> Vec<f64> {
        self.log
            .iter()
            .filter_map(|e| match e {
                TraceEvent::ArmCrossing { v, .. } => Some(*v),
                _ => None,
            })
            .collect()
    }

    pub fn arm_crossings(&self) -> Vec<(Arm, f64)> {
        self.log
            .iter()
            .filter_map(|e| match e {
                TraceEvent::ArmCrossing { arm, v } => Some((*arm, *v)),
                _ => None,
            })
            .collect()
    }

    pub fn zero_v_angles(&self) -> Vec<f64> {
        self.log
            .iter()
            .filter_map(|e| match e {
                TraceEvent::ZeroV { x } => Some(*x),
                _ => None,
            })
            .collect()
    }

    /// Crossings of the angle of `label` as (x, v, arm crossings so far).
    pub fn cc_crossings(&self, label: &str) -> Vec<(f64, f64, usize)> {
        let mut arms = 0;
        let mut out = Vec::new();
        for e in &self.log {
            match e {
                TraceEvent::ArmCrossing { .. } => arms += 1,
                TraceEvent::CcAngle { label: l, x, v } if l == label => out.push((*x, *v, arms)),
                _ => {}
            }
        }
        out
    }
}

// Bulk charts used between arm windows.
trait Bulk<const N: usize>: Sync {
    fn time_label(&self) -> &'static str;
    fn rhs(&self, y: &[f64; N]) -> Result<[f64; N]>;
    fn v(&self, y: &[f64; N]) -> Result<f64>;
    fn section_state(&self, y: &[f64; N]) -> Result<SectionState>;
    fn state(&self, x: f64, v: f64, dir: f64) -> Result<[f64; N]>;
    fn window(&self) -> f64;
    fn sigma_clock(&self) -> bool;
}

struct PsiBulk {
    section: Section,
    h: Homogeneity,
    b: f64,
    window: f64,
}

impl Bulk<2> for PsiBulk {
    fn time_label(&self) -> &'static str {
        "s"
    }
    fn rhs(&self, y: &[f64; 2]) -> Result<[f64; 2]> {
        psi_field(self.section, self.h, self.b, y)
    }
    fn v(&self, y: &[f64; 2]) -> Result<f64> {
        v_from_psi(self.section, self.h, y[0], y[1])
    }
    fn section_state(&self, y: &[f64; 2]) -> Result<SectionState> {
        let w = w_from_psi(self.section, self.h, y[0], y[1])?;
        Ok(SectionState { x: y[0], v: self.v(y)?, u: u_from_w(self.section, self.h, y[0], w)? })
    }
    fn state(&self, x: f64, v: f64, dir: f64) -> Result<[f64; 2]> {
        let u2 = 2.0 * section_potential(self.section, self.h, x)?;
        let w = dir * (u2 - v * v).max(0.0).sqrt();
        Ok([x, psi_from(v, w)])
    }
    fn window(&self) -> f64 {
        self.window
    }
    fn sigma_clock(&self) -> bool {
        false
    }
}

struct SigmaBulk {
    field: RegularizedField,
    band: f64,
}

impl Bulk<3> for SigmaBulk {
    fn time_label(&self) -> &'static str {
        "sigma"
    }
    fn rhs(&self, y: &[f64; 3]) -> Result<[f64; 3]> {
        let d = self.field.substituted(&SectionState { x: y[0], v: y[1], u: y[2] }, 0.0, 0.0)?;
        Ok([d[2], d[1], d[3]])
    }
    fn v(&self, y: &[f64; 3]) -> Result<f64> {
        Ok(y[1])
    }
    fn section_state(&self, y: &[f64; 3]) -> Result<SectionState> {
        Ok(SectionState { x: y[0], v: y[1], u: y[2] })
    }
    fn state(&self, x: f64, v: f64, dir: f64) -> Result<[f64; 3]> {
        let st = manifold_state(self.field.section, self.field.h, x, v, dir)?;
        Ok([st.x, st.v, st.u])
    }
    fn window(&self) -> f64 {
        self.band
    }
    fn sigma_clock(&self) -> bool {
        true
    }
}

enum ArmExit {
    Out { v: f64 },
    Escape { v_arm: f64 },
    Stop,
}

struct Tracer<'a, B> {
    _bulk: std::marker::PhantomData<&'a B>,
    section: Section,
    h: Homogeneity,
    b: f64,
    opts: &'a TraceOptions,
    restpoints: Vec<SectionRestpoint>,
    source: (String, bool),
    log: Vec<TraceEvent>,
    traj: SectionTrajectory,
    arms: usize,
    clock: f64,
    v_escape: f64,
}

impl<'a, B> Tracer<'a, B> {
    fn sample(&mut self, time: f64, st: SectionState) {
        if !self.opts.record {
            return;
        }
        let res = energy_residual(self.section, self.h, &st, 0.0, 0.0).unwrap_or(f64::NAN);
        self.traj.samples.push(SectionSample { time, x: st.x, v: st.v, u: st.u, energy_residual: res });
    }

    fn note(&mut self, time: f64, kind: String) {
        if self.opts.record {
            self.traj.events.push(TrajectoryEvent { time, kind });
        }
    }

    fn source_x(&self) -> f64 {
        self.restpoints.iter().find(|r| r.label == self.source.0).map(|r| r.x).unwrap_or(f64::NAN)
    }

    // Toward the arm, bounce, and away again until leaving the window.
    fn arm_pass(&mut self, arm: Arm, v_in: f64, t_in: f64, t_exit: f64, sigma_clock: bool) -> Result<ArmExit> {
        let chart = ArmChart::new(self.h, self.b, arm);
        let mut v = v_in;
        let mut t0 = t_in;
        loop {
            // toward the arm: t runs from t0 down to 0
            let ch = chart;
            let f = move |t: f64, y: &[f64; 2]| {
                let rate = if sigma_clock { ch.dsigma_dt(t, y[0])? } else { 1.0 };
                Ok([ch.dv_dt(t, y[0], true)?, -rate])
            };
            let ev = [Event::new("v=0", |_, y: &[f64; 2]| y[0])];
            let cfg = IntegratorConfig { record: self.opts.record, ..self.opts.cfg };
            let sol = integrate(f, t0, [v, 0.0], 0.0, &cfg, &ev)?;
            for e in &sol.events {
                self.log.push(TraceEvent::ZeroV { x: chart.x_of_t(e.t) });
            }
            self.push_arm_samples(&chart, &sol.ts, &sol.ys, true);
            self.clock += sol.y[1];
            v = sol.y[0];
            self.log.push(TraceEvent::ArmCrossing { arm, v });
            self.note(self.clock, format!("arm {}", arm.name()));
            self.arms += 1;
            if v > self.v_escape {
                return Ok(ArmExit::Escape { v_arm: v });
            }
            if let StopRule::ArmCrossings(n) = self.opts.stop {
                if self.arms >= n {
                    return Ok(ArmExit::Stop);
                }
            }
            if self.arms >= self.opts.max_arm_crossings {
                return Err(Error::NoConvergence("arm crossing budget exhausted".into()));
            }
            // away from the arm, watching for a turning point
            let f = move |t: f64, y: &[f64; 2]| {
                let rate = if sigma_clock { ch.dsigma_dt(t, y[0]).unwrap_or(0.0) } else { 1.0 };
                Ok([ch.dv_dt(t, y[0], false)?, rate])
            };
            let ev = [
                Event::new("turning", move |t, y: &[f64; 2]| ch.radicand(t, y[0]).unwrap_or(f64::NAN)).falling().terminal(),
                Event::new("v=0", |_, y: &[f64; 2]| y[0]),
            ];
            let sol = integrate(f, 0.0, [v, 0.0], t_exit, &cfg, &ev)?;
            for e in sol.events.iter().filter(|e| e.index == 1) {
                self.log.push(TraceEvent::ZeroV { x: chart.x_of_t(e.t) });
            }
            self.push_arm_samples(&chart, &sol.ts, &sol.ys, false);
            self.clock += sol.y[1];
            v = sol.y[0];
            if sol.stopped_by == Some(0) {
                self.log.push(TraceEvent::Turning { x: chart.x_of_t(sol.t), v });
                t0 = sol.t;
                continue;
            }
            return Ok(ArmExit::Out { v });
        }
    }

    fn push_arm_samples(&mut self, chart: &ArmChart, ts: &[f64], ys: &[[f64; 2]], toward: bool) {
        if !self.opts.record {
            return;
        }
        let base = self.clock;
        for (t, y) in ts.iter().zip(ys) {
            let x = chart.x_of_t(*t);
            let dir = if toward { -chart.arm.inward() } else { chart.arm.inward() };
            let st = manifold_state(self.section, self.h, x, y[0], dir).unwrap_or(SectionState { x, v: y[0], u: f64::NAN });
            self.sample(base + y[1], st);
        }
    }
}

fn run_trace<B: Bulk<N>, const N: usize>(
    bulk: &B,
    section: Section,
    h: Homogeneity,
    source: (String, bool),
    start: SectionState,
    opts: &TraceOptions,
) -> Result<BranchOutcome> {
    let b = opts.drift.b(h);
    let restpoints = section_restpoints(section, h)?;
    let v_escape = vbar_closed_form(CcKind::Planar, h.alpha) + 1.0;
    let mut tr = Tracer {
        _bulk: std::marker::PhantomData,
        section,
        h,
        b,
        opts,
        restpoints,
        source,
        log: Vec::new(),
        traj: SectionTrajectory { time_label: bulk.time_label(), ..Default::default() },
        arms: 0,
        clock: 0.0,
        v_escape,
    };
    let w0 = w_of(section, h, &start)?;
    let mut y = bulk.state(start.x, start.v, w0.signum())?;
    let arms = Arm::of(section);
    let src_x = tr.source_x();
    let finish = |tr: Tracer<B>, outcome: Outcome| BranchOutcome { outcome, log: tr.log, trajectory: tr.traj };
    loop {
        let mut events: Vec<Event<N>> = Vec::new();
        for arm in arms {
            let wdt = bulk.window();
            events.push(Event::new("window", move |_, y: &[f64; N]| arm.distance(y[0]) - wdt).falling().terminal());
        }
        events.push(Event::new("v=0", |_, y: &[f64; N]| bulk.v(y).unwrap_or(f64::NAN)));
        let n_fixed = events.len();
        let mut angles: Vec<(String, f64)> = tr.restpoints.iter().map(|r| (r.label.clone(), r.x)).collect();
        if let Some(p) = opts.probe {
            angles.push(("probe".into(), p));
        }
        for (_, x) in &angles {
            let x = *x;
            events.push(Event::new("cc angle", move |_, y: &[f64; N]| y[0] - x));
        }
        let n_cc = events.len();
        let mut capture_targets = Vec::new();
        for rp in &tr.restpoints {
            for positive in [true, false] {
                if rp.label == tr.source.0 && positive == tr.source.1 {
                    continue;
                }
                let (x, v) = (rp.x, if positive { rp.vbar } else { -rp.vbar });
                let rad = opts.capture_radius;
                capture_targets.push((rp.label.clone(), positive, rp.lambda > 0.0));
                events.push(
                    Event::new("capture", move |_, y: &[f64; N]| {
                        let vv = bulk.v(y).unwrap_or(f64::NAN);
                        ((y[0] - x).powi(2) + (vv - v).powi(2)).sqrt() - rad
                    })
                    .falling()
                    .terminal(),
                );
            }
        }
        let cfg = IntegratorConfig { record: opts.record, ..opts.cfg };
        let t_start = tr.clock;
        let sol = integrate(|_, y: &[f64; N]| bulk.rhs(y), t_start, y, t_start + opts.leg_horizon, &cfg, &events)?;
        let mut stop_at: Option<f64> = None;
        let mut hits = sol.events.clone();
        hits.sort_by(|a, b| a.t.total_cmp(&b.t));
        for e in &hits {
            if Some(e.index) == sol.stopped_by && e.t == sol.t {
                continue;
            }
            if e.index == 2 {
                tr.log.push(TraceEvent::ZeroV { x: e.y[0] });
                tr.note(e.t, "v=0".into());
            } else if e.index >= n_fixed && e.index < n_cc {
                let (label, _) = angles[e.index - n_fixed].clone();
                let v = bulk.v(&e.y)?;
                tr.log.push(TraceEvent::CcAngle { label: label.clone(), x: e.y[0], v });
                tr.note(e.t, format!("angle {label}"));
                if let StopRule::CcReturn { after_arms } = opts.stop {
                    if tr.arms >= after_arms && (e.y[0] - src_x).abs() < 1e-9 && label == tr.source.0 {
                        stop_at = Some(e.t);
                        break;
                    }
                }
            }
        }
        if opts.record {
            let limit = stop_at.unwrap_or(f64::INFINITY);
            for (t, yy) in sol.ts.iter().zip(&sol.ys) {
                if *t <= limit {
                    let st = bulk.section_state(yy)?;
                    tr.sample(*t, st);
                }
            }
        }
        if stop_at.is_some() {
            return Ok(finish(tr, Outcome::Stopped));
        }
        tr.clock = sol.t;
        match sol.stopped_by {
            Some(i) if i < 2 => {
                let arm = arms[i];
                let chart = ArmChart::new(h, b, arm);
                let v_in = bulk.v(&sol.y)?;
                let t_in = chart.t_of_phi(arm.distance(sol.y[0]));
                let t_exit = chart.t_of_phi(opts.window.max(bulk.window()));
                match tr.arm_pass(arm, v_in, t_in, t_exit, bulk.sigma_clock()) {
                    Ok(ArmExit::Out { v }) => {
                        let x = chart.x_of_t(t_exit);
                        y = bulk.state(x, v, arm.inward())?;
                    }
                    Ok(ArmExit::Escape { v_arm }) => {
                        return Ok(finish(
                            tr,
                            Outcome::ArmEscape { arm, binary: arm.binary_index(), v_at_arm: v_arm, v_escape_sign: 1 },
                        ));
                    }
                    Ok(ArmExit::Stop) => return Ok(finish(tr, Outcome::Stopped)),
                    Err(Error::NoConvergence(reason)) => return Ok(finish(tr, Outcome::Undecided { reason })),
                    Err(e) => return Err(e),
                }
            }
            Some(i) if i >= n_cc => {
                let (label, positive, saddle) = capture_targets[i - n_cc].clone();
                let node = format!("{label}{}", if positive { '+' } else { '-' });
                tr.note(sol.t, format!("capture {node}"));
                return Ok(finish(tr, Outcome::RestpointCapture { label: node, saddle }));
            }
            _ => {
                return Ok(finish(tr, Outcome::Undecided { reason: format!("leg horizon {} exhausted", opts.leg_horizon) }));
            }
        }
    }
}

/// Trace a branch from its eps-seed.
///
/// Stable branches are traced through the reversing symmetry
/// (x, v, u, time) -> (x, -v, -u, -time): the image of the corresponding
/// unstable branch of the opposite restpoint. Their logs carry the sign
/// flipped v values in forward-time order of the image.
pub fn trace_branch(h: Homogeneity, branch: &Branch, opts: &TraceOptions) -> Result<BranchOutcome> {
    match branch.stability {
        Stability::Unstable => {
            let seed = seed_branch(h, branch, opts.eps, opts.drift)?;
            if opts.eps == 0.0 {
                return stationary(h, branch, seed, opts);
            }
            trace_from(h, branch.section, (branch.cc.clone(), branch.vbar_positive), seed, opts)
        }
        Stability::Stable => {
            let dual = Branch { vbar_positive: !branch.vbar_positive, stability: Stability::Unstable, ..branch.clone() };
            let mut out = trace_branch(h, &dual, opts)?;
            for e in &mut out.log {
                match e {
                    TraceEvent::ArmCrossing { v, .. } | TraceEvent::CcAngle { v, .. } | TraceEvent::Turning { v, .. } => *v = -*v,
                    TraceEvent::ZeroV { .. } => {}
                }
            }
            out.outcome = match out.outcome {
                Outcome::RestpointCapture { label, saddle } => {
                    let (cc, pos) = parse_node(&label)?;
                    Outcome::RestpointCapture { label: format!("{cc}{}", if pos { '-' } else { '+' }), saddle }
                }
                Outcome::ArmEscape { arm, binary, v_at_arm, .. } => {
                    Outcome::ArmEscape { arm, binary, v_at_arm: -v_at_arm, v_escape_sign: -1 }
                }
                o => o,
            };
            Ok(out)
        }
    }
}

/// Trace from an arbitrary manifold state.
pub fn trace_from(h: Homogeneity, section: Section, source: (String, bool), start: SectionState, opts: &TraceOptions) -> Result<BranchOutcome> {
    let b = opts.drift.b(h);
    match opts.tracer {
        TracerKind::Projected => {
            let bulk = PsiBulk { section, h, b, window: opts.window };
            run_trace(&bulk, section, h, source, start, opts)
        }
        TracerKind::Sigma => {
            let bulk = SigmaBulk { field: RegularizedField { section, h, b }, band: opts.sigma_band };
            run_trace(&bulk, section, h, source, start, opts)
        }
    }
}

// A zero seed offset starts on the restpoint itself: the field must vanish
// there and the trajectory is constant.
fn stationary(h: Homogeneity, branch: &Branch, seed: SectionState, opts: &TraceOptions) -> Result<BranchOutcome> {
    let field = RegularizedField { section: branch.section, h, b: opts.drift.b(h) }.collision_manifold();
    let d = field(0.0, &[seed.x, seed.v, seed.u])?;
    let speed = d.iter().map(|c| c * c).sum::<f64>().sqrt();
    if speed > 1e-10 {
        return Err(Error::Domain(format!("seed of {} is not a restpoint (|field| = {speed:e})", branch.name())));
    }
    let mut trajectory = SectionTrajectory { time_label: "sigma", ..Default::default() };
    if opts.record {
        for k in 0..=10 {
            trajectory.samples.push(SectionSample { time: k as f64, x: seed.x, v: seed.v, u: seed.u, energy_residual: 0.0 });
        }
    }
    Ok(BranchOutcome { outcome: Outcome::RestpointCapture { label: branch.node(), saddle: true }, log: Vec::new(), trajectory })
}

/// Node label of a binary escape set, e.g. "B3s-".
pub fn binary_node(j: u8, stable: bool, sign: i8) -> String {
    format!("B{j}{}{}", if stable { 's' } else { 'u' }, if sign > 0 { '+' } else { '-' })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConnectionEdge {
    pub from: String,
    pub to: String,
    pub branch: String,
    /// alpha in units of 1e-12, to keep edges hashable
    #[serde(skip)]
    alpha_key: i64,
    pub alpha: OrderedF64,
    pub v_at_arms: Vec<OrderedF64>,
    pub saddle: bool,
}

/// f64 with a total order for set membership.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OrderedF64(pub f64);

impl PartialEq for OrderedF64 {
    fn eq(&self, o: &Self) -> bool {
        self.0.total_cmp(&o.0).is_eq()
    }
}
impl Eq for OrderedF64 {}
impl PartialOrd for OrderedF64 {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for OrderedF64 {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}
impl std::hash::Hash for OrderedF64 {
    fn hash<H: std::hash::Hasher>(&self, s: &mut H) {
        self.0.to_bits().hash(s)
    }
}

impl ConnectionEdge {
    pub fn new(from: String, to: String, branch: String, alpha: f64, v_at_arms: Vec<f64>, saddle: bool) -> Self {
        ConnectionEdge {
            from,
            to,
            branch,
            alpha_key: (alpha * 1e12).round() as i64,
            alpha: OrderedF64(alpha),
            v_at_arms: v_at_arms.into_iter().map(OrderedF64).collect(),
            saddle,
        }
    }

    pub fn endpoints(&self) -> (&str, &str) {
        (&self.from, &self.to)
    }
}

fn flip_node(label: &str) -> String {
    if let Some(rest) = label.strip_prefix('B') {
        // B{j}{s|u}{sign}: swap s and u, keep the coordinate sign
        let mut c: Vec<char> = rest.chars().collect();
        if c.len() == 3 {
            c[1] = if c[1] == 's' { 'u' } else { 's' };
            return format!("B{}", c.into_iter().collect::<String>());
        }
        return label.to_string();
    }
    match parse_node(label) {
        Ok((cc, pos)) => format!("{cc}{}", if pos { '-' } else { '+' }),
        Err(_) => label.to_string(),
    }
}

/// Image of an edge under (v, s, w) -> (-v, s, -w) with time reversed.
pub fn dual_edge(e: &ConnectionEdge) -> ConnectionEdge {
    let rev: Vec<f64> = e.v_at_arms.iter().rev().map(|v| -v.0).collect();
    ConnectionEdge::new(flip_node(&e.to), flip_node(&e.from), format!("dual of {}", e.branch), e.alpha.0, rev, e.saddle)
}

fn cc_unit(ccs: &[CentralConfiguration], label: &str) -> Option<[f64; 3]> {
    ccs.iter().find(|c| c.label == label).map(|c| c.angles.to_unit())
}

fn cc_by_unit(ccs: &[CentralConfiguration], s: [f64; 3]) -> Option<String> {
    ccs.iter()
        .find(|c| {
            let t = c.angles.to_unit();
            (0..3).all(|k| (t[k] - s[k]).abs() < 1e-9)
        })
        .map(|c| c.label.clone())
}

const PERMUTATIONS: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];

// Image of a node under the coordinate permutation s'_k = s_{perm[k]}.
fn permute_node(ccs: &[CentralConfiguration], label: &str, perm: [usize; 3]) -> Option<String> {
    if let Some(rest) = label.strip_prefix('B') {
        let c: Vec<char> = rest.chars().collect();
        let j = c.first()?.to_digit(10)? as usize - 1;
        let k = perm.iter().position(|&p| p == j)?;
        return Some(format!("B{}{}{}", k + 1, c[1], c[2]));
    }
    let (cc, pos) = parse_node(label).ok()?;
    let s = cc_unit(ccs, &cc)?;
    let t = [s[perm[0]], s[perm[1]], s[perm[2]]];
    Some(format!("{}{}", cc_by_unit(ccs, t)?, if pos { '+' } else { '-' }))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TracedBranch {
    pub branch: Branch,
    pub outcome: BranchOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub alpha: f64,
    pub drift: Drift,
    pub traced: Vec<TracedBranch>,
    pub edges: Vec<ConnectionEdge>,
    pub warnings: Vec<String>,
}

/// Unstable branches of every section saddle, both signs and sides.
pub fn saddle_branches(h: Homogeneity) -> Result<Vec<Branch>> {
    let mut out = Vec::new();
    for section in [Section::Planar, Section::Tetra] {
        for rp in section_restpoints(section, h)? {
            if rp.lambda <= 0.0 {
                continue;
            }
            for positive in [false, true] {
                for side in [Side::Left, Side::Right] {
                    out.push(Branch::unstable(section, &rp.label, positive, side));
                }
            }
        }
    }
    Ok(out)
}

/// Trace every saddle branch and turn the fates into edges, closed under
/// duality and the coordinate permutations.
///
/// `critical` lists known critical exponents; within 1e-8 of one, restpoint
/// edges are marked as saddle connections.
pub fn classify_connections(h: Homogeneity, opts: &TraceOptions, critical: &[f64]) -> Result<Classification> {
    let branches = saddle_branches(h)?;
    let traced: Vec<Result<TracedBranch>> = branches
        .par_iter()
        .map(|b| Ok(TracedBranch { branch: b.clone(), outcome: trace_branch(h, b, opts)? }))
        .collect();
    let traced: Vec<TracedBranch> = traced.into_iter().collect::<Result<_>>()?;
    let near_critical = critical.iter().any(|c| (c - h.alpha).abs() < 1e-8);
    let mut base = Vec::new();
    let mut warnings = Vec::new();
    for tb in &traced {
        let arms = tb.outcome.arm_v();
        let to = match &tb.outcome.outcome {
            Outcome::RestpointCapture { label, saddle } => {
                if *saddle && !near_critical {
                    warnings.push(format!("{}: reached saddle {label} away from a critical exponent", tb.branch.name()));
                }
                label.clone()
            }
            Outcome::ArmEscape { binary, .. } => binary_node(binary.0, true, binary.1),
            Outcome::Stopped => continue,
            Outcome::Undecided { reason } => {
                warnings.push(format!("{}: undecided ({reason})", tb.branch.name()));
                continue;
            }
        };
        let saddle = matches!(tb.outcome.outcome, Outcome::RestpointCapture { saddle: true, .. });
        base.push(ConnectionEdge::new(tb.branch.node(), to, tb.branch.name(), h.alpha, arms, saddle && near_critical));
    }
    let ccs = enumerate_ccs(h)?;
    let mut set: BTreeSet<ConnectionEdge> = BTreeSet::new();
    for e in &base {
        for perm in PERMUTATIONS {
            let (Some(f), Some(t)) = (permute_node(&ccs, &e.from, perm), permute_node(&ccs, &e.to, perm)) else {
                continue;
            };
            let img = ConnectionEdge::new(f, t, e.branch.clone(), e.alpha.0, e.v_at_arms.iter().map(|v| v.0).collect(), e.saddle);
            set.insert(dual_edge(&img));
            set.insert(img);
        }
    }
    // keep one witness per (from, to)
    let mut by_pair: BTreeMap<(String, String), ConnectionEdge> = BTreeMap::new();
    for e in set {
        by_pair.entry((e.from.clone(), e.to.clone())).or_insert(e);
    }
    Ok(Classification { alpha: h.alpha, drift: opts.drift, traced, edges: by_pair.into_values().collect(), warnings })
}

/// Nodes of the fundamental-domain graph.
pub fn graph_nodes() -> Vec<String> {
    let mut nodes = Vec::new();
    for cc in ["e11", "e12", "p11", "p21", "p31"] {
        for s in ['+', '-'] {
            nodes.push(format!("{cc}{s}"));
        }
    }
    for j in 1..=3u8 {
        for stable in [true, false] {
            for sign in [1i8, -1] {
                nodes.push(binary_node(j, stable, sign));
            }
        }
    }
    nodes
}

/// Grouping of the graph nodes into the boxes of the published diagram:
/// restpoints up to the e11/e12 and p21/p31 pairings, and binary escape
/// sets up to the index j.
pub fn figure_box(node: &str) -> String {
    if let Some(rest) = node.strip_prefix('B') {
        return format!("B{}", &rest[1..]);
    }
    match node {
        "e11+" | "e12+" => "e1j+".into(),
        "e11-" | "e12-" => "e1j-".into(),
        "p21+" | "p31+" => "pj1+".into(),
        "p21-" | "p31-" => "pj1-".into(),
        other => other.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: String,
    pub to: String,
    pub branch: String,
    pub v_at_arms: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGraph {
    pub alpha: f64,
    pub nodes: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

impl ConnectionGraph {
    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        self.edges.iter().any(|e| e.from == from && e.to == to)
    }

    pub fn out_degree(&self, node: &str) -> usize {
        self.edges.iter().filter(|e| e.from == node).count()
    }

    pub fn in_degree(&self, node: &str) -> usize {
        self.edges.iter().filter(|e| e.to == node).count()
    }

    pub fn boxes(&self) -> BTreeSet<String> {
        self.nodes.iter().map(|n| figure_box(n)).collect()
    }
}

pub fn connection_graph(c: &Classification) -> ConnectionGraph {
    let nodes = graph_nodes();
    let keep: BTreeSet<&String> = nodes.iter().collect();
    let edges = c
        .edges
        .iter()
        .filter(|e| keep.contains(&e.from) && keep.contains(&e.to))
        .map(|e| GraphEdge {
            from: e.from.clone(),
            to: e.to.clone(),
            branch: e.branch.clone(),
            v_at_arms: e.v_at_arms.iter().map(|v| v.0).collect(),
        })
        .collect();
    ConnectionGraph { alpha: c.alpha, nodes, edges }
}

/// Quantity whose sign change defines a critical exponent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CriticalTarget {
    /// v of the right unstable branch of the negative restpoint at its
    /// first arm crossing (alpha_*).
    FirstArm,
    /// v of the same branch at its first return to the restpoint angle
    /// after one arm crossing (alpha_0*).
    ReturnAfterArm,
}

fn critical_branch(section: Section) -> Branch {
    let cc = match section {
        Section::Planar => "p11",
        Section::Tetra => "e11",
    };
    Branch::unstable(section, cc, false, Side::Right)
}

/// V(alpha) for the one-parameter family.
pub fn critical_value(alpha: f64, section: Section, target: CriticalTarget, opts: &TraceOptions) -> Result<f64> {
    let h = Homogeneity::new(alpha)?;
    let stop = match target {
        CriticalTarget::FirstArm => StopRule::ArmCrossings(1),
        CriticalTarget::ReturnAfterArm => StopRule::CcReturn { after_arms: 1 },
    };
    let o = trace_branch(h, &critical_branch(section), &TraceOptions { stop, record: false, ..*opts })?;
    let branch = critical_branch(section);
    match target {
        CriticalTarget::FirstArm => o
            .arm_v()
            .first()
            .copied()
            .ok_or_else(|| Error::NoConvergence(format!("no arm crossing at alpha = {alpha}: {:?}", o.outcome))),
        CriticalTarget::ReturnAfterArm => o
            .cc_crossings(&branch.cc)
            .into_iter()
            .find(|c| c.2 >= 1)
            .map(|c| c.1)
            .ok_or_else(|| Error::NoConvergence(format!("no return to the restpoint angle at alpha = {alpha}: {:?}", o.outcome))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStar {
    pub alpha: f64,
    pub bracket: (f64, f64),
    pub samples: Vec<(f64, f64)>,
    pub monotone: bool,
}

/// Bisection for the sign change of V on `bracket`, to `tol` in alpha,
/// plus a `grid`-point monotonicity check of V across the bracket.
pub fn find_alpha_star(section: Section, bracket: (f64, f64), target: CriticalTarget, opts: &TraceOptions, tol: f64, grid: usize) -> Result<AlphaStar> {
    let (mut lo, mut hi) = bracket;
    let v_lo = critical_value(lo, section, target, opts)?;
    let v_hi = critical_value(hi, section, target, opts)?;
    if v_lo.signum() == v_hi.signum() {
        return Err(Error::NoSignChange { lo, hi, v_lo, v_hi });
    }
    let samples: Vec<(f64, f64)> = (0..grid)
        .into_par_iter()
        .map(|i| {
            let a = bracket.0 + (bracket.1 - bracket.0) * i as f64 / (grid.max(2) - 1) as f64;
            critical_value(a, section, target, opts).map(|v| (a, v))
        })
        .collect::<Result<_>>()?;
    let monotone = samples.windows(2).all(|w| w[1].1 > w[0].1);
    let s_lo = v_lo.signum();
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = critical_value(mid, section, target, opts)?;
        if v.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(AlphaStar { alpha: 0.5 * (lo + hi), bracket, samples, monotone })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaStarReport {
    pub section: Section,
    pub drift: Drift,
    pub alpha0_star: f64,
    pub alpha_star: f64,
    pub bracket0: (f64, f64),
    pub bracket: (f64, f64),
    #[serde(rename = "V0_samples")]
    pub v0_samples: Vec<(f64, f64)>,
    #[serde(rename = "V_samples")]
    pub v_samples: Vec<(f64, f64)>,
    pub monotone: bool,
}

/// Both critical exponents of the frozen-drift family.
pub fn alpha_star_report(section: Section, bracket0: (f64, f64), bracket: (f64, f64), opts: &TraceOptions, grid: usize) -> Result<AlphaStarReport> {
    let opts = TraceOptions { drift: Drift::Frozen, ..*opts };
    let a0 = find_alpha_star(section, bracket0, CriticalTarget::ReturnAfterArm, &opts, 1e-8, grid)?;
    let a1 = find_alpha_star(section, bracket, CriticalTarget::FirstArm, &opts, 1e-8, grid)?;
    Ok(AlphaStarReport {
        section,
        drift: Drift::Frozen,
        alpha0_star: a0.alpha,
        alpha_star: a1.alpha,
        bracket0,
        bracket,
        v0_samples: a0.samples,
        v_samples: a1.samples,
        monotone: a0.monotone && a1.monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_on_constraint() {
        let h = Homogeneity::newtonian();
        let br = Branch::unstable(Section::Planar, "p11", false, Side::Right);
        let s = seed_branch(h, &br, 1e-6, Drift::Exact).unwrap();
        assert!(s.x > std::f64::consts::FRAC_PI_4 && s.u > 0.0);
        assert!(energy_residual(Section::Planar, h, &s, 0.0, 0.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn node_flip() {
        assert_eq!(flip_node("B3s-"), "B3u-");
        assert_eq!(flip_node("p11+"), "p11-");
    }
}
