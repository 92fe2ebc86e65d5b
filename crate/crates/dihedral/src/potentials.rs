//! The D2-symmetric homogeneous potential in its four representations.
//!
//! Reduced space coordinates are q = (x1, x2, x3) with z = x1 + i x2 and
//! y = x3. The unit mass metric is used throughout.

use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use crate::error::{Error, Result};

/// Distance below which a point counts as a collision ray.
pub const COLLISION_TOL: f64 = 1e-10;

/// The exponent pair (alpha, beta = alpha / 2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Homogeneity {
    pub alpha: f64,
    pub beta: f64,
}

impl Homogeneity {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::Exponent(alpha));
        }
        Ok(Self { alpha, beta: alpha / 2.0 })
    }

    /// Newtonian case alpha = 1.
    pub fn newtonian() -> Self {
        Self { alpha: 1.0, beta: 0.5 }
    }
}

/// Longitude theta and latitude phi on the shape sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereAngles {
    pub theta: f64,
    pub phi: f64,
}

impl SphereAngles {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Unit vector (cos phi cos theta, cos phi sin theta, sin phi).
    pub fn to_unit(self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [cp * ct, cp * st, sp]
    }

    pub fn from_unit(s: [f64; 3]) -> Self {
        let r = norm(s);
        let phi = (s[2] / r).clamp(-1.0, 1.0).asin();
        let mut theta = s[1].atan2(s[0]);
        if theta < 0.0 {
            theta += std::f64::consts::TAU;
        }
        Self { theta, phi }
    }
}

/// The two invariant one-degree-of-freedom sections.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Section {
    /// phi = 0, coordinate theta in [0, pi/2].
    Planar,
    /// theta = pi/4, coordinate phi in [-pi/2, pi/2].
    Tetra,
}

impl Section {
    /// Closed coordinate interval; both ends are arms.
    pub fn domain(self) -> (f64, f64) {
        match self {
            Section::Planar => (0.0, FRAC_PI_2),
            Section::Tetra => (-FRAC_PI_2, FRAC_PI_2),
        }
    }

    /// Embedding of a section coordinate in the shape sphere.
    pub fn angles(self, x: f64) -> SphereAngles {
        match self {
            Section::Planar => SphereAngles::new(x, 0.0),
            Section::Tetra => SphereAngles::new(FRAC_PI_4, x),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Section::Planar => "planar",
            Section::Tetra => "tetra",
        }
    }
}

impl std::str::FromStr for Section {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "planar" => Ok(Section::Planar),
            "tetra" | "tetrahedral" => Ok(Section::Tetra),
            _ => Err(Error::Domain(format!("unknown section {s}"))),
        }
    }
}

pub(crate) fn norm(q: [f64; 3]) -> f64 {
    (q[0] * q[0] + q[1] * q[1] + q[2] * q[2]).sqrt()
}

// Half-distances |q - gq| / 2 for g = zeta2, kappa, zeta2 kappa, with the
// coordinate mask of q - gq.
fn orbit_terms(q: [f64; 3]) -> [(f64, [f64; 3]); 3] {
    let [x1, x2, x3] = q;
    [
        ((x1 * x1 + x2 * x2).sqrt(), [x1, x2, 0.0]),
        ((x2 * x2 + x3 * x3).sqrt(), [0.0, x2, x3]),
        ((x1 * x1 + x3 * x3).sqrt(), [x1, 0.0, x3]),
    ]
}

fn check_collision(q: [f64; 3]) -> Result<[(f64, [f64; 3]); 3]> {
    let terms = orbit_terms(q);
    let scale = norm(q).max(f64::MIN_POSITIVE);
    for (d, _) in &terms {
        if 2.0 * d < COLLISION_TOL * scale {
            return Err(Error::Collision { distance: 2.0 * d });
        }
    }
    Ok(terms)
}

/// Sum over the nontrivial D2 elements of |q - gq|^(-alpha).
pub fn potential_cartesian(h: Homogeneity, q: [f64; 3]) -> Result<f64> {
    let terms = check_collision(q)?;
    Ok(terms.iter().map(|(d, _)| (2.0 * d).powf(-h.alpha)).sum())
}

/// Euclidean gradient dU/dq.
pub fn gradient_cartesian(h: Homogeneity, q: [f64; 3]) -> Result<[f64; 3]> {
    let terms = check_collision(q)?;
    let mut g = [0.0; 3];
    for (d, m) in &terms {
        // d/dq (2|Pq|)^-a = -a (2|Pq|)^-a Pq / |Pq|^2
        let c = -h.alpha * (2.0 * d).powf(-h.alpha) / (d * d);
        for k in 0..3 {
            g[k] += c * m[k];
        }
    }
    Ok(g)
}

/// Tangential gradient on the unit sphere, dU/dq + alpha U s.
pub fn covariant_gradient(h: Homogeneity, s: [f64; 3]) -> Result<[f64; 3]> {
    let u = potential_cartesian(h, s)?;
    let g = gradient_cartesian(h, s)?;
    Ok([
        g[0] + h.alpha * u * s[0],
        g[1] + h.alpha * u * s[1],
        g[2] + h.alpha * u * s[2],
    ])
}

/// Potential restricted to the shape sphere.
pub fn potential_sphere(h: Homogeneity, a: SphereAngles) -> Result<f64> {
    let (st, ct) = a.theta.sin_cos();
    let (sp, cp) = a.phi.sin_cos();
    if cp < COLLISION_TOL {
        return Err(Error::Singular { coord: "phi", value: a.phi });
    }
    let t2 = (sp / cp).powi(2);
    let r1 = ct * ct + t2;
    let r2 = st * st + t2;
    if cp * r1.sqrt() < COLLISION_TOL || cp * r2.sqrt() < COLLISION_TOL {
        return Err(Error::Singular { coord: "theta", value: a.theta });
    }
    let ha = -h.alpha / 2.0;
    Ok((2.0 * cp).powf(-h.alpha) * (1.0 + r1.powf(ha) + r2.powf(ha)))
}

fn planar_trig(theta: f64) -> Result<(f64, f64)> {
    let (s, c) = theta.sin_cos();
    let (s, c) = (s.abs(), c.abs());
    if s < COLLISION_TOL || c < COLLISION_TOL {
        return Err(Error::Singular { coord: "theta", value: theta });
    }
    Ok((s, c))
}

/// Planar section potential 2^-a (1 + sin^-a + cos^-a).
pub fn potential_planar(h: Homogeneity, theta: f64) -> Result<f64> {
    let (s, c) = planar_trig(theta)?;
    let a = h.alpha;
    Ok(2f64.powf(-a) * (1.0 + s.powf(-a) + c.powf(-a)))
}

/// Tetrahedral section potential (2 cos)^-a + 2^(1-a/2) (1 + sin^2)^(-a/2).
pub fn potential_tetra(h: Homogeneity, phi: f64) -> Result<f64> {
    let (s, c) = phi.sin_cos();
    if c < COLLISION_TOL {
        return Err(Error::Singular { coord: "phi", value: phi });
    }
    let a = h.alpha;
    Ok((2.0 * c).powf(-a) + 2f64.powf(1.0 - a / 2.0) * (1.0 + s * s).powf(-a / 2.0))
}

pub fn section_potential(section: Section, h: Homogeneity, x: f64) -> Result<f64> {
    match section {
        Section::Planar => potential_planar(h, x),
        Section::Tetra => potential_tetra(h, x),
    }
}

/// Analytic first or second derivative of a section potential.
pub fn potential_derivatives(section: Section, h: Homogeneity, x: f64, order: u8) -> Result<f64> {
    let a = h.alpha;
    match (section, order) {
        (Section::Planar, 1) => {
            let (s, c) = planar_trig(x)?;
            Ok(2f64.powf(-a) * a * (-s.powf(-a - 1.0) * c + c.powf(-a - 1.0) * s))
        }
        (Section::Planar, 2) => {
            let (s, c) = planar_trig(x)?;
            Ok(2f64.powf(-a)
                * a
                * ((a + 1.0) * s.powf(-a - 2.0) * c * c
                    + s.powf(-a)
                    + (a + 1.0) * c.powf(-a - 2.0) * s * s
                    + c.powf(-a)))
        }
        (Section::Tetra, 1) => {
            let (s, c) = x.sin_cos();
            if c < COLLISION_TOL {
                return Err(Error::Singular { coord: "phi", value: x });
            }
            let p = 1.0 + s * s;
            Ok(a * (s / c) * (2.0 * c).powf(-a)
                - 2f64.powf(1.0 - a / 2.0) * a * s * c * p.powf(-a / 2.0 - 1.0))
        }
        (Section::Tetra, 2) => {
            let (s, c) = x.sin_cos();
            if c < COLLISION_TOL {
                return Err(Error::Singular { coord: "phi", value: x });
            }
            let p = 1.0 + s * s;
            let t = s / c;
            Ok(a * (2.0 * c).powf(-a) * (1.0 / (c * c) + a * t * t)
                - 2f64.powf(1.0 - a / 2.0)
                    * a
                    * p.powf(-a / 2.0 - 2.0)
                    * ((c * c - s * s) * p - (a + 2.0) * s * s * c * c))
        }
        _ => Err(Error::Domain(format!("derivative order {order}"))),
    }
}

/// Regularized potential with its derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularized {
    pub w: f64,
    pub dw: f64,
}

/// W = sin^a(2x) U_pl = sin^a cos^a + sin^a + cos^a on [0, pi/2].
///
/// The derivative is obtained by differentiating the closed form; it is
/// infinite at the arms when alpha < 1.
pub fn regularized_potential_planar(h: Homogeneity, theta: f64) -> Result<Regularized> {
    if !(-1e-12..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::Domain(format!("theta = {theta} outside [0, pi/2]")));
    }
    let a = h.alpha;
    // cos through the distance to the arm, so that it vanishes exactly there
    let (s, c) = (theta.sin().max(0.0), (FRAC_PI_2 - theta).sin().max(0.0));
    let (sa, ca) = (s.powf(a), c.powf(a));
    let w = sa * ca + sa + ca;
    // d/dx (s c)^a = a (s c)^a (c/s - s/c) and d/dx s^a = a s^(a-1) c.
    let dsa = a * s.powf(a - 1.0) * c;
    let dca = -a * c.powf(a - 1.0) * s;
    let dw = dsa * ca + sa * dca + dsa + dca;
    Ok(Regularized { w, dw })
}

/// W = (2 cos)^a U_tet = 1 + 2^(1+b) cos^a / (1 + sin^2)^b on [-pi/2, pi/2].
pub fn regularized_potential_tetra(h: Homogeneity, phi: f64) -> Result<Regularized> {
    if !(-FRAC_PI_2 - 1e-12..=FRAC_PI_2 + 1e-12).contains(&phi) {
        return Err(Error::Domain(format!("phi = {phi} outside [-pi/2, pi/2]")));
    }
    let (a, b) = (h.alpha, h.beta);
    let s = phi.sin();
    let c = (FRAC_PI_2 - phi.abs()).sin().max(0.0);
    let p = 1.0 + s * s;
    let w = 1.0 + 2f64.powf(1.0 + b) * c.powf(a) / p.powf(b);
    let dw = -2f64.powf(2.0 + b) * a * s * c.powf(a - 1.0) / p.powf(b + 1.0);
    Ok(Regularized { w, dw })
}

pub fn regularized_potential(section: Section, h: Homogeneity, x: f64) -> Result<Regularized> {
    match section {
        Section::Planar => regularized_potential_planar(h, x),
        Section::Tetra => regularized_potential_tetra(h, x),
    }
}

/// Regularizing factor R with R = W / U: sin^a(2 theta) or (2 cos phi)^a.
pub fn regularizing_factor(section: Section, h: Homogeneity, x: f64) -> f64 {
    match section {
        Section::Planar => (2.0 * x).sin().max(0.0).powf(h.alpha),
        Section::Tetra => (2.0 * (FRAC_PI_2 - x.abs()).sin()).max(0.0).powf(h.alpha),
    }
}

/// Logarithmic derivative R'/R.
pub fn regularizing_log_derivative(section: Section, h: Homogeneity, x: f64) -> f64 {
    match section {
        Section::Planar => 2.0 * h.alpha / (2.0 * x).tan(),
        Section::Tetra => -h.alpha * x.tan(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planar_value_at_square() {
        let h = Homogeneity::newtonian();
        let u = potential_planar(h, FRAC_PI_4).unwrap();
        assert!((u - (0.5 + 2f64.sqrt())).abs() < 1e-14);
    }

    #[test]
    fn tetra_second_derivative_newtonian() {
        // (9/16) sqrt 6 at phi1, frozen from an independent evaluation
        let h = Homogeneity::newtonian();
        let phi1 = (1.0 / 2f64.sqrt()).atan();
        let d2 = potential_derivatives(Section::Tetra, h, phi1, 2).unwrap();
        assert!((d2 - 9.0 / 16.0 * 6f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn rejects_collision_rays() {
        let h = Homogeneity::newtonian();
        assert!(potential_planar(h, 0.0).is_err());
        assert!(potential_cartesian(h, [1.0, 0.0, 0.0]).is_err());
        assert!(potential_tetra(h, FRAC_PI_2).is_err());
    }

    #[test]
    fn exponent_range() {
        assert!(Homogeneity::new(0.0).is_err());
        assert!(Homogeneity::new(2.0).is_err());
        assert!(Homogeneity::new(1.3).is_ok());
    }
}
