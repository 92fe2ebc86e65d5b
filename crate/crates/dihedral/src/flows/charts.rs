//! Charts used to follow projected trajectories through turning points and
//! binary-collision arms.
//!
//! Angle chart: v = sqrt(2U) sin(psi), w = sqrt(2U) cos(psi), time s with
//! ds = sqrt(2U) dtau. Turning points (w = 0) are regular points of this
//! chart.
//!
//! Arm chart: near an arm write the distance as Phi = t^p with
//! p = 1 / (1 - alpha/2). Along a monotone leg the one-form becomes
//! dv/dt = +-(1 - b) p (c sin(k Phi) / Phi)^(-alpha/2) sqrt(2W - v^2 R),
//! which is finite at t = 0.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::potentials::{potential_derivatives, section_potential, Homogeneity, Section};

use super::reg_terms;

/// Field of the angle chart, state [x, psi].
pub fn psi_field(section: Section, h: Homogeneity, b: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
    let [x, psi] = *y;
    let u = section_potential(section, h, x)?;
    let du = potential_derivatives(section, h, x, 1)?;
    let (s, c) = psi.sin_cos();
    Ok([c, (1.0 - b) * c - du / (2.0 * u) * s])
}

pub fn psi_from(v: f64, w: f64) -> f64 {
    v.atan2(w)
}

pub fn v_from_psi(section: Section, h: Homogeneity, x: f64, psi: f64) -> Result<f64> {
    Ok((2.0 * section_potential(section, h, x)?).sqrt() * psi.sin())
}

pub fn w_from_psi(section: Section, h: Homogeneity, x: f64, psi: f64) -> Result<f64> {
    Ok((2.0 * section_potential(section, h, x)?).sqrt() * psi.cos())
}

/// One of the binary-collision arms of a section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Arm {
    /// theta = 0
    PlanarLow,
    /// theta = pi/2
    PlanarHigh,
    /// phi = -pi/2
    TetraSouth,
    /// phi = pi/2
    TetraNorth,
}

impl Arm {
    pub fn of(section: Section) -> [Arm; 2] {
        match section {
            Section::Planar => [Arm::PlanarLow, Arm::PlanarHigh],
            Section::Tetra => [Arm::TetraSouth, Arm::TetraNorth],
        }
    }

    pub fn section(self) -> Section {
        match self {
            Arm::PlanarLow | Arm::PlanarHigh => Section::Planar,
            Arm::TetraSouth | Arm::TetraNorth => Section::Tetra,
        }
    }

    pub fn position(self) -> f64 {
        match self {
            Arm::PlanarLow => 0.0,
            Arm::PlanarHigh => FRAC_PI_2,
            Arm::TetraSouth => -FRAC_PI_2,
            Arm::TetraNorth => FRAC_PI_2,
        }
    }

    /// Direction from the arm into the section domain.
    pub fn inward(self) -> f64 {
        match self {
            Arm::PlanarLow | Arm::TetraSouth => 1.0,
            Arm::PlanarHigh | Arm::TetraNorth => -1.0,
        }
    }

    pub fn distance(self, x: f64) -> f64 {
        (x - self.position()) * self.inward()
    }

    /// Binary escape index (j, sign): the shape coordinate s_j tends to
    /// sign * 1 on the arm.
    ///
    /// theta = 0 embeds as (1, 0, 0) and theta = pi/2 as (0, 1, 0); the tetra
    /// section theta = pi/4 meets the poles (0, 0, +-1).
    pub fn binary_index(self) -> (u8, i8) {
        let s = self.section().angles(self.position()).to_unit();
        let (j, v) = s
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(j, v)| (j, *v))
            .unwrap_or((0, 1.0));
        (j as u8 + 1, if v > 0.0 { 1 } else { -1 })
    }

    pub fn name(self) -> &'static str {
        match self {
            Arm::PlanarLow => "theta=0",
            Arm::PlanarHigh => "theta=pi/2",
            Arm::TetraSouth => "phi=-pi/2",
            Arm::TetraNorth => "phi=pi/2",
        }
    }
}

/// Regular chart at an arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmChart {
    pub section: Section,
    pub h: Homogeneity,
    pub b: f64,
    pub arm: Arm,
    pub p: f64,
    c: f64,
    k: f64,
}

impl ArmChart {
    pub fn new(h: Homogeneity, b: f64, arm: Arm) -> Self {
        let (c, k) = match arm.section() {
            Section::Planar => (1.0, 2.0),
            Section::Tetra => (2.0, 1.0),
        };
        ArmChart { section: arm.section(), h, b, arm, p: 1.0 / (1.0 - h.alpha / 2.0), c, k }
    }

    pub fn phi_of_t(&self, t: f64) -> f64 {
        t.max(0.0).powf(self.p)
    }

    pub fn t_of_phi(&self, phi: f64) -> f64 {
        phi.max(0.0).powf(1.0 / self.p)
    }

    pub fn x_of_t(&self, t: f64) -> f64 {
        self.arm.position() + self.arm.inward() * self.phi_of_t(t)
    }

    // (c sin(k Phi) / Phi)^(-alpha/2), with its limit at Phi = 0
    fn factor(&self, phi: f64) -> f64 {
        let ratio = if phi < 1e-8 { self.c * self.k * (1.0 - (self.k * phi).powi(2) / 6.0) } else { self.c * (self.k * phi).sin() / phi };
        ratio.powf(-self.h.alpha / 2.0)
    }

    /// 2W - v^2 R at parameter t.
    pub fn radicand(&self, t: f64, v: f64) -> Result<f64> {
        let rt = reg_terms(self.section, self.h, self.x_of_t(t))?;
        Ok(2.0 * rt.w - v * v * rt.r)
    }

    /// dv/dt on a leg moving toward (t decreasing) or away from the arm.
    pub fn dv_dt(&self, t: f64, v: f64, toward: bool) -> Result<f64> {
        let r = self.radicand(t, v)?;
        let sign = if toward { -1.0 } else { 1.0 };
        Ok(sign * (1.0 - self.b) * self.p * self.factor(self.phi_of_t(t)) * r.max(0.0).sqrt())
    }

    /// Regularized time along the leg, dsigma/dt (always positive).
    pub fn dsigma_dt(&self, t: f64, v: f64) -> Result<f64> {
        let rt = reg_terms(self.section, self.h, self.x_of_t(t))?;
        let r = 2.0 * rt.w - v * v * rt.r;
        if r <= 0.0 {
            return Err(Error::Domain(format!("turning point inside arm chart at t = {t}")));
        }
        Ok(self.p * rt.w.sqrt() * self.factor(self.phi_of_t(t)) / r.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::Homogeneity;

    #[test]
    fn binary_indices() {
        assert_eq!(Arm::PlanarLow.binary_index(), (1, 1));
        assert_eq!(Arm::PlanarHigh.binary_index(), (2, 1));
        assert_eq!(Arm::TetraNorth.binary_index(), (3, 1));
        assert_eq!(Arm::TetraSouth.binary_index(), (3, -1));
    }

    #[test]
    fn arm_chart_matches_one_form_away_from_arm() {
        // dv/dx = (1 - b) sqrt(2U - v^2), dx = p t^(p-1) dt
        let h = Homogeneity::new(1.3).unwrap();
        let ch = ArmChart::new(h, 0.5, Arm::PlanarHigh);
        let t = 0.4;
        let x = ch.x_of_t(t);
        let v = -0.7;
        let u = section_potential(Section::Planar, h, x).unwrap();
        let direct = 0.5 * (2.0 * u - v * v).sqrt() * ch.p * t.powf(ch.p - 1.0);
        let chart = ch.dv_dt(t, v, false).unwrap();
        assert!((direct - chart).abs() < 1e-12 * direct.abs());
    }
}
