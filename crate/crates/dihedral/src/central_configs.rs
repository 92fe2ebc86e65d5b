//! Central configurations, restpoint velocities and linearization data.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use crate::error::{Error, Result};
use crate::potentials::{
    covariant_gradient, potential_derivatives, potential_sphere, Homogeneity, Section,
    SphereAngles,
};

pub const ANGLE_TOL: f64 = 1e-12;

/// Latitude of the tetrahedral configurations, arctan(1/sqrt 2).
pub fn phi1() -> f64 {
    (1.0 / 2f64.sqrt()).atan()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CcKind {
    /// Rectangular (square) configurations, 12 in all.
    Planar,
    Tetrahedral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentralConfiguration {
    pub kind: CcKind,
    pub label: String,
    pub angles: SphereAngles,
    pub u_value: f64,
    pub vbar_pos: f64,
}

impl CentralConfiguration {
    /// Section whose one-dimensional flow linearizes this configuration.
    pub fn section(&self) -> Section {
        match self.kind {
            CcKind::Planar => Section::Planar,
            CcKind::Tetrahedral => Section::Tetra,
        }
    }
}

/// Bracketed bisection followed by Newton polishing.
pub fn bracketed_root<F, G>(f: F, fp: G, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    G: Fn(f64) -> Result<f64>,
{
    let mut flo = f(lo)?;
    let fhi = f(hi)?;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::NoConvergence(format!("no bracket on [{lo}, {hi}]")));
    }
    for _ in 0..200 {
        if hi - lo < 1e-6 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid)?;
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..50 {
        let step = f(x)? / fp(x)?;
        let next = (x - step).clamp(lo, hi);
        if (next - x).abs() < tol {
            return Ok(next);
        }
        x = next;
    }
    Err(Error::NoConvergence(format!("Newton stalled near {x}")))
}

/// Critical point of a section potential on its fundamental interval.
pub fn section_critical_point(section: Section, h: Homogeneity) -> Result<f64> {
    let f = |x| potential_derivatives(section, h, x, 1);
    let fp = |x| potential_derivatives(section, h, x, 2);
    match section {
        Section::Planar => bracketed_root(f, fp, 1e-3, FRAC_PI_2 - 1e-3, ANGLE_TOL),
        Section::Tetra => bracketed_root(f, fp, 1e-3, FRAC_PI_2 - 1e-3, ANGLE_TOL),
    }
}

/// All 20 central configurations.
///
/// Labels: p1k are the squares on the equator at theta = (2k-1)pi/4, p2k
/// the squares on the meridians theta in {pi/2, 3pi/2} at phi = +/- pi/4,
/// p3k the same on theta in {0, pi}; ek1 / ek2 are the tetrahedra at
/// theta = (2k-1)pi/4, phi = +/- phi1.
pub fn enumerate_ccs(h: Homogeneity) -> Result<Vec<CentralConfiguration>> {
    let phi_t = section_critical_point(Section::Tetra, h)?;
    // meridian squares are coordinate permutations of the equatorial ones
    let phi_m = FRAC_PI_4;
    let mut out = Vec::with_capacity(20);
    let mut push = |kind, label: String, theta: f64, phi: f64| -> Result<()> {
        let angles = SphereAngles::new(theta, phi);
        let u = potential_sphere(h, angles)?;
        out.push(CentralConfiguration { kind, label, angles, u_value: u, vbar_pos: (2.0 * u).sqrt() });
        Ok(())
    };
    for k in 1..=4 {
        let th = (2 * k - 1) as f64 * FRAC_PI_4;
        push(CcKind::Planar, format!("p1{k}"), th, 0.0)?;
    }
    for (k, (th, ph)) in meridian_square(FRAC_PI_2, phi_m).into_iter().enumerate() {
        push(CcKind::Planar, format!("p2{}", k + 1), th, ph)?;
    }
    for (k, (th, ph)) in meridian_square(0.0, phi_m).into_iter().enumerate() {
        push(CcKind::Planar, format!("p3{}", k + 1), th, ph)?;
    }
    for k in 1..=4 {
        let th = (2 * k - 1) as f64 * FRAC_PI_4;
        push(CcKind::Tetrahedral, format!("e{k}1"), th, phi_t)?;
        push(CcKind::Tetrahedral, format!("e{k}2"), th, -phi_t)?;
    }
    Ok(out)
}

// Squares on the meridian pair theta0, theta0 + pi at latitude +/- phi.
fn meridian_square(theta0: f64, phi: f64) -> [(f64, f64); 4] {
    [(theta0, phi), (theta0, -phi), (theta0 + PI, phi), (theta0 + PI, -phi)]
}

pub fn find_cc<'a>(ccs: &'a [CentralConfiguration], label: &str) -> Option<&'a CentralConfiguration> {
    ccs.iter().find(|c| c.label == label)
}

/// (+sqrt(2U), -sqrt(2U)).
pub fn vbar(h: Homogeneity, cc: &CentralConfiguration) -> Result<(f64, f64)> {
    let u = potential_sphere(h, cc.angles)?;
    let v = (2.0 * u).sqrt();
    Ok((v, -v))
}

/// Closed forms of v+ for the square and the tetrahedron.
pub fn vbar_closed_form(kind: CcKind, alpha: f64) -> f64 {
    let a = alpha;
    match kind {
        CcKind::Planar => (2f64.powf(1.0 - a) + 2f64.powf(2.0 - a / 2.0)).sqrt(),
        CcKind::Tetrahedral => (6.0 * 0.375f64.powf(a / 2.0)).sqrt(),
    }
}

/// Gap between the square and tetrahedral restpoint velocities.
pub fn vl_gap(alpha: f64) -> Result<f64> {
    if !(0.0..2.0).contains(&alpha) {
        return Err(Error::Exponent(alpha));
    }
    Ok(vbar_closed_form(CcKind::Planar, alpha) - vbar_closed_form(CcKind::Tetrahedral, alpha))
}

/// Roots of mu^2 + (1 - beta) vbar mu - lambda = 0.
pub fn characteristic_exponents(h: Homogeneity, lambda: f64, vbar: f64) -> (Complex64, Complex64) {
    let b = (h.beta - 1.0) * vbar;
    let disc = Complex64::new(b * b + 4.0 * lambda, 0.0).sqrt();
    let r1 = (b + disc) / 2.0;
    let r2 = (b - disc) / 2.0;
    // Recompute the smaller-magnitude root from the product to avoid
    // cancellation when lambda is tiny.
    let prod = Complex64::new(-lambda, 0.0);
    if r1.norm() >= r2.norm() && r1.norm() > 0.0 {
        (r1, prod / r1)
    } else if r2.norm() > 0.0 {
        (prod / r2, r2)
    } else {
        (r1, r2)
    }
}

pub fn exponent_residual(h: Homogeneity, lambda: f64, vbar: f64, mu: Complex64) -> f64 {
    (mu * mu + (1.0 - h.beta) * vbar * mu - lambda).norm()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dims {
    pub stable: u8,
    pub unstable: u8,
    pub stable_parabolic: u8,
    pub unstable_parabolic: u8,
}

/// Stable/unstable dimensions read from the published table.
///
/// The last two entries are the dimensions of the intersections with the
/// parabolic manifold, taken verbatim from the table.
pub fn manifold_dimensions(kind: CcKind, vbar_positive: bool) -> Dims {
    let d = |s, u, sp, up| Dims { stable: s, unstable: u, stable_parabolic: sp, unstable_parabolic: up };
    match (kind, vbar_positive) {
        (CcKind::Planar, true) => d(3, 2, 3, 1),
        (CcKind::Planar, false) => d(2, 3, 1, 3),
        (CcKind::Tetrahedral, true) => d(2, 3, 2, 2),
        (CcKind::Tetrahedral, false) => d(3, 2, 2, 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearizationReport {
    pub lambda: f64,
    pub vbar: f64,
    pub mu: [Complex64; 2],
    pub dims: Dims,
}

/// Second derivative of the section potential at the configuration.
pub fn section_lambda(h: Homogeneity, section: Section, x: f64) -> Result<f64> {
    potential_derivatives(section, h, x, 2)
}

pub fn linearize(h: Homogeneity, cc: &CentralConfiguration, vbar_positive: bool) -> Result<LinearizationReport> {
    let lambda = match cc.kind {
        CcKind::Planar => section_lambda(h, Section::Planar, section_critical_point(Section::Planar, h)?)?,
        CcKind::Tetrahedral => section_lambda(h, Section::Tetra, cc.angles.phi.abs())?,
    };
    let vbar = if vbar_positive { cc.vbar_pos } else { -cc.vbar_pos };
    let (m1, m2) = characteristic_exponents(h, lambda, vbar);
    Ok(LinearizationReport { lambda, vbar, mu: [m1, m2], dims: manifold_dimensions(cc.kind, vbar_positive) })
}

/// Norm of the tangential gradient at a configuration.
pub fn gradient_norm(h: Homogeneity, cc: &CentralConfiguration) -> Result<f64> {
    let g = covariant_gradient(h, cc.angles.to_unit())?;
    Ok((g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt())
}

/// Serializable row of the configuration report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CcReportRow {
    pub label: String,
    pub kind: CcKind,
    pub theta: f64,
    pub phi: f64,
    #[serde(rename = "U")]
    pub u: f64,
    pub vbar: f64,
    pub lambda: f64,
    pub mu: [[f64; 2]; 2],
    pub dims: Dims,
}

/// One row per configuration and sign of vbar (40 rows).
pub fn cc_report(h: Homogeneity) -> Result<Vec<CcReportRow>> {
    let mut rows = Vec::new();
    for cc in enumerate_ccs(h)? {
        for positive in [true, false] {
            let lin = linearize(h, &cc, positive)?;
            let sign = if positive { "+" } else { "-" };
            rows.push(CcReportRow {
                label: format!("{}{}", cc.label, sign),
                kind: cc.kind,
                theta: cc.angles.theta,
                phi: cc.angles.phi,
                u: cc.u_value,
                vbar: lin.vbar,
                lambda: lin.lambda,
                mu: [[lin.mu[0].re, lin.mu[0].im], [lin.mu[1].re, lin.mu[1].im]],
                dims: lin.dims,
            });
        }
    }
    Ok(rows)
}
