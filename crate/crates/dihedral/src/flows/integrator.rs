//! Dormand-Prince 5(4) with PI step control, dense output and events.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Width of the bracket left by event bisection.
    pub event_tol: f64,
    pub record: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            initial_step: None,
            max_steps: 200_000,
            event_tol: 1e-13,
            record: false,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        IntegratorConfig { rel_tol, abs_tol, ..Default::default() }
    }

    pub fn recording(mut self) -> Self {
        self.record = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0 && self.max_step > 0.0) {
            return Err(Error::Domain(format!(
                "tolerances must be positive (rel {}, abs {}, max step {})",
                self.rel_tol, self.abs_tol, self.max_step
            )));
        }
        Ok(())
    }
}

/// Zero-crossing condition g(t, y) = 0.
pub struct Event<'a, const N: usize> {
    pub label: &'static str,
    pub g: Box<dyn Fn(f64, &[f64; N]) -> f64 + 'a>,
    /// +1 only rising, -1 only falling, 0 both.
    pub direction: i8,
    pub terminal: bool,
}

impl<'a, const N: usize> Event<'a, N> {
    pub fn new(label: &'static str, g: impl Fn(f64, &[f64; N]) -> f64 + 'a) -> Self {
        Event { label, g: Box::new(g), direction: 0, terminal: false }
    }

    pub fn terminal(mut self) -> Self {
        self.terminal = true;
        self
    }

    pub fn rising(mut self) -> Self {
        self.direction = 1;
        self
    }

    pub fn falling(mut self) -> Self {
        self.direction = -1;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit<const N: usize> {
    pub index: usize,
    pub label: &'static str,
    pub t: f64,
    pub y: [f64; N],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution<const N: usize> {
    pub ts: Vec<f64>,
    pub ys: Vec<[f64; N]>,
    pub events: Vec<EventHit<N>>,
    pub t: f64,
    pub y: [f64; N],
    /// Index of the terminal event that stopped the run.
    pub stopped_by: Option<usize>,
    pub steps: usize,
    pub rejected: usize,
}

/// Quartic continuous extension of one accepted step.
#[derive(Debug, Clone, Copy)]
pub struct DenseStep<const N: usize> {
    t0: f64,
    h: f64,
    r: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn eval(&self, t: f64) -> [f64; N] {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let mut out = [0.0; N];
        for i in 0..N {
            let r = &self.r;
            out[i] = r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])));
        }
        out
    }
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for i in 0..N {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn finite<const N: usize>(y: &[f64; N]) -> bool {
    y.iter().all(|v| v.is_finite())
}

struct Step<const N: usize> {
    y1: [f64; N],
    k7: [f64; N],
    err: f64,
    dense: DenseStep<N>,
}

fn try_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], k1: &[f64; N], h: f64, cfg: &IntegratorConfig) -> Result<Step<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, k1)]))?;
    let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, k1), (A32, &k2)]))?;
    let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, k1), (A42, &k2), (A43, &k3)]))?;
    let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
    let k6 = f(t + h, &axpy(y, h, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]))?;
    let y1 = axpy(y, h, &[(A71, k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
    if !finite(&y1) {
        return Err(Error::Domain("non-finite state".into()));
    }
    let k7 = f(t + h, &y1)?;
    let mut err = 0.0;
    for i in 0..N {
        let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let sc = cfg.abs_tol + cfg.rel_tol * y[i].abs().max(y1[i].abs());
        err += (e / sc).powi(2);
    }
    let err = (err / N as f64).sqrt();
    let mut r = [[0.0; N]; 5];
    for i in 0..N {
        let dy = y1[i] - y[i];
        let bspl = h * k1[i] - dy;
        r[0][i] = y[i];
        r[1][i] = dy;
        r[2][i] = bspl;
        r[3][i] = dy - h * k7[i] - bspl;
        r[4][i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
    }
    Ok(Step { y1, k7, err, dense: DenseStep { t0: t, h, r } })
}

fn initial_step<const N: usize, F>(f: &F, t0: f64, y0: &[f64; N], k1: &[f64; N], dir: f64, cfg: &IntegratorConfig) -> f64
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let (mut dnf, mut dny) = (0.0, 0.0);
    for i in 0..N {
        let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
        dnf += (k1[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { (dny / dnf).sqrt() * 0.01 };
    h = h.min(cfg.max_step);
    let y1 = axpy(y0, dir * h, &[(1.0, k1)]);
    if let Ok(k2) = f(t0 + dir * h, &y1) {
        let mut der2 = 0.0;
        for i in 0..N {
            let sk = cfg.abs_tol + cfg.rel_tol * y0[i].abs();
            der2 += ((k2[i] - k1[i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(0.2) };
        h = (100.0 * h).min(h1).min(cfg.max_step);
    }
    h
}

// Bisection on the dense output between ta (g = ga) and tb.
fn locate<const N: usize>(ev: &Event<N>, d: &DenseStep<N>, mut ta: f64, mut tb: f64, ga: f64, tol: f64) -> (f64, [f64; N]) {
    let sa = ga.signum();
    for _ in 0..200 {
        if (tb - ta).abs() <= tol {
            break;
        }
        let tm = 0.5 * (ta + tb);
        let gm = (ev.g)(tm, &d.eval(tm));
        if gm == 0.0 {
            return (tm, d.eval(tm));
        }
        if gm.signum() == sa {
            ta = tm;
        } else {
            tb = tm;
        }
    }
    (tb, d.eval(tb))
}

fn crossed(g0: f64, g1: f64, direction: i8) -> bool {
    if g0 == 0.0 || g0.is_nan() || g1.is_nan() {
        return false;
    }
    let changed = g1 == 0.0 || g0.signum() != g1.signum();
    changed
        && match direction {
            1 => g0 < 0.0,
            -1 => g0 > 0.0,
            _ => true,
        }
}

/// Integrate y' = f(t, y) from t0 to t_end (either direction).
///
/// A field error at a trial stage is treated like a rejected step; the run
/// fails with `StepUnderflow` once the step drops below roundoff.
pub fn integrate<const N: usize, F>(
    f: F,
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    cfg: &IntegratorConfig,
    events: &[Event<N>],
) -> Result<Solution<N>>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    cfg.validate()?;
    let mut sol = Solution {
        ts: vec![t0],
        ys: vec![y0],
        events: Vec::new(),
        t: t0,
        y: y0,
        stopped_by: None,
        steps: 0,
        rejected: 0,
    };
    if !cfg.record {
        sol.ts.clear();
        sol.ys.clear();
    }
    if t_end == t0 {
        return Ok(sol);
    }
    let dir = (t_end - t0).signum();
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = cfg.initial_step.unwrap_or_else(|| initial_step(&f, t0, &y0, &k1, dir, cfg)).abs();
    let mut g_prev: Vec<f64> = events.iter().map(|e| (e.g)(t, &y)).collect();
    let mut errold: f64 = 1e-4;
    let mut last_err = String::new();
    let mut rejected_last = false;
    loop {
        if sol.steps >= cfg.max_steps {
            return Err(Error::MaxSteps(cfg.max_steps));
        }
        let hmin = 1e-15 * t.abs().max(1.0);
        let remaining = (t_end - t).abs();
        let mut hs = h.min(cfg.max_step);
        let last = hs >= remaining;
        if last {
            hs = remaining;
        }
        if hs < hmin && !last {
            return Err(Error::StepUnderflow { t, h: hs, near: last_err });
        }
        let step = match try_step(&f, t, &y, &k1, dir * hs, cfg) {
            Ok(s) => s,
            Err(e) => {
                last_err = e.to_string();
                sol.rejected += 1;
                h = hs * 0.25;
                if h < hmin {
                    return Err(Error::StepUnderflow { t, h, near: last_err });
                }
                rejected_last = true;
                continue;
            }
        };
        let err = step.err;
        if err > 1.0 || !err.is_finite() {
            sol.rejected += 1;
            let fac = if err.is_finite() { (err.powf(0.17) / 0.9).clamp(1.0, 10.0) } else { 10.0 };
            h = hs / fac;
            rejected_last = true;
            continue;
        }
        sol.steps += 1;
        let t1 = if last { t_end } else { t + dir * hs };
        let mut stop: Option<(usize, f64, [f64; N])> = None;
        for (i, ev) in events.iter().enumerate() {
            let g1 = (ev.g)(t1, &step.y1);
            if crossed(g_prev[i], g1, ev.direction) {
                let (te, ye) = locate(ev, &step.dense, t, t1, g_prev[i], cfg.event_tol);
                if ev.terminal {
                    let earlier = match stop {
                        Some((_, ts, _)) => (te - t).abs() < (ts - t).abs(),
                        None => true,
                    };
                    if earlier {
                        stop = Some((i, te, ye));
                    }
                } else {
                    sol.events.push(EventHit { index: i, label: ev.label, t: te, y: ye });
                }
            }
            g_prev[i] = g1;
        }
        if let Some((i, te, ye)) = stop {
            // drop non-terminal hits located beyond the terminal one
            sol.events.retain(|e| (e.t - t0).abs() <= (te - t0).abs());
            sol.events.push(EventHit { index: i, label: events[i].label, t: te, y: ye });
            sol.t = te;
            sol.y = ye;
            sol.stopped_by = Some(i);
            if cfg.record {
                sol.ts.push(te);
                sol.ys.push(ye);
            }
            return Ok(sol);
        }
        t = t1;
        y = step.y1;
        k1 = step.k7;
        if cfg.record {
            sol.ts.push(t);
            sol.ys.push(y);
        }
        if last {
            sol.t = t;
            sol.y = y;
            return Ok(sol);
        }
        let fac11 = err.max(1e-16).powf(0.17);
        let mut fac = (fac11 / errold.powf(0.04) / 0.9).clamp(0.2, 10.0);
        if rejected_last {
            fac = fac.max(1.0);
        }
        errold = err.max(1e-4);
        rejected_last = false;
        h = hs / fac;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let cfg = IntegratorConfig::default();
        let sol = integrate(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 2.0, &cfg, &[]).unwrap();
        assert!((sol.y[0] - 2f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn backward_harmonic() {
        let cfg = IntegratorConfig::default();
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let sol = integrate(f, 0.0, [0.0, 1.0], -1.0, &cfg, &[]).unwrap();
        assert!((sol.y[0] + 1f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn dense_output_locates_zero() {
        let cfg = IntegratorConfig::default();
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let ev = [Event::new("x=0", |_, y: &[f64; 2]| y[0]).falling().terminal()];
        let sol = integrate(f, 0.0, [0.0, 1.0], 10.0, &cfg, &ev).unwrap();
        assert!((sol.t - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn field_error_shrinks_step() {
        let cfg = IntegratorConfig::default();
        // field undefined beyond t = 1; the run should stop cleanly at 1
        let f = |t: f64, _: &[f64; 1]| if t > 1.0 { Err(Error::Domain("t".into())) } else { Ok([1.0]) };
        let sol = integrate(f, 0.0, [0.0], 1.0, &cfg, &[]).unwrap();
        assert!((sol.y[0] - 1.0).abs() < 1e-12);
    }
}
