use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use dihedral::central_configs::phi1;
use dihedral::potentials::*;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

#[test]
fn newtonian_values() {
    let h = Homogeneity::newtonian();
    let sq = 0.5 + SQRT_2;
    assert!(close(potential_planar(h, FRAC_PI_4).unwrap(), sq, 1e-14));
    assert!(close(potential_tetra(h, 0.0).unwrap(), sq, 1e-14));
    assert!(close(potential_sphere(h, SphereAngles::new(FRAC_PI_4, 0.0)).unwrap(), sq, 1e-14));
    let t = 0.75 * 6f64.sqrt();
    assert!(close(potential_tetra(h, phi1()).unwrap(), t, 1e-14));
    let q = SphereAngles::new(FRAC_PI_4, phi1()).to_unit();
    assert!(close(potential_cartesian(h, q).unwrap(), t, 1e-14));
}

#[test]
fn regularized_closed_forms() {
    let h = Homogeneity::newtonian();
    assert!(close(regularized_potential_planar(h, FRAC_PI_4).unwrap().w, 0.5 + SQRT_2, 1e-14));
    assert!(regularized_potential_planar(h, FRAC_PI_4).unwrap().dw.abs() < 1e-13);
    assert!(close(regularized_potential_tetra(h, 0.0).unwrap().w, 1.0 + 2.0 * SQRT_2, 1e-14));
    for a in [0.3, 1.0, 1.7] {
        let h = Homogeneity::new(a).unwrap();
        assert!(close(regularized_potential_planar(h, 0.0).unwrap().w, 1.0, 1e-14));
        assert!(close(regularized_potential_planar(h, FRAC_PI_2).unwrap().w, 1.0, 1e-14));
        assert!(close(regularized_potential_tetra(h, FRAC_PI_2).unwrap().w, 1.0, 1e-12));
        assert!(close(regularized_potential_tetra(h, -FRAC_PI_2).unwrap().w, 1.0, 1e-12));
        assert!(regularized_potential_tetra(h, 0.0).unwrap().dw.abs() < 1e-14);
    }
}

#[test]
fn derivatives_at_critical_points() {
    let h = Homogeneity::newtonian();
    assert!(potential_derivatives(Section::Planar, h, FRAC_PI_4, 1).unwrap().abs() < 1e-13);
    assert!(close(potential_derivatives(Section::Planar, h, FRAC_PI_4, 2).unwrap(), 3.0 * SQRT_2, 1e-12));
    assert!(potential_derivatives(Section::Tetra, h, phi1(), 1).unwrap().abs() < 1e-13);
}

#[test]
fn collision_rays_rejected() {
    let h = Homogeneity::newtonian();
    assert!(potential_planar(h, 0.0).is_err());
    assert!(potential_tetra(h, FRAC_PI_2).is_err());
    assert!(potential_cartesian(h, [1.0, 0.0, 0.0]).is_err());
    assert!(Homogeneity::new(2.0).is_err() && Homogeneity::new(0.0).is_err());
}

// 5-point central difference with one Richardson step.
fn fd(f: impl Fn(f64) -> f64, x: f64, order: u8) -> f64 {
    let d = |h: f64| match order {
        1 => (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h),
        _ => (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h),
    };
    let h = 1e-3;
    (16.0 * d(h / 2.0) - d(h)) / 15.0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sphere_matches_cartesian(a in 0.05f64..1.95, th in 0.05f64..6.2, ph in -1.5f64..1.5) {
        let h = Homogeneity::new(a).unwrap();
        let s = SphereAngles::new(th, ph);
        if let (Ok(u1), Ok(u2)) = (potential_sphere(h, s), potential_cartesian(h, s.to_unit())) {
            prop_assert!(close(u1, u2, 1e-12));
        }
    }

    #[test]
    fn homogeneity(a in 0.05f64..1.95, th in 0.1f64..1.4, ph in -1.4f64..1.4) {
        let h = Homogeneity::new(a).unwrap();
        let q = SphereAngles::new(th, ph).to_unit();
        let u = potential_cartesian(h, q).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let uc = potential_cartesian(h, [c * q[0], c * q[1], c * q[2]]).unwrap();
            prop_assert!(close(uc, c.powf(-a) * u, 1e-12));
        }
    }

    #[test]
    fn reflections(a in 0.05f64..1.95, th in 0.1f64..1.4, ph in -1.4f64..1.4) {
        let h = Homogeneity::new(a).unwrap();
        let u = potential_sphere(h, SphereAngles::new(th, ph)).unwrap();
        for (t, p) in [(th, -ph), (-th, ph), (FRAC_PI_2 - th, ph)] {
            prop_assert!(close(potential_sphere(h, SphereAngles::new(t, p)).unwrap(), u, 1e-12));
        }
    }

    #[test]
    fn sections_restrict_sphere(a in 0.05f64..1.95, x in 0.05f64..1.5) {
        let h = Homogeneity::new(a).unwrap();
        let pl = potential_planar(h, x).unwrap();
        prop_assert!(close(pl, potential_sphere(h, SphereAngles::new(x, 0.0)).unwrap(), 1e-12));
        let y = x - FRAC_PI_4;
        let te = potential_tetra(h, y).unwrap();
        prop_assert!(close(te, potential_sphere(h, Section::Tetra.angles(y)).unwrap(), 1e-12));
    }

    #[test]
    fn regularized_products(a in 0.05f64..1.95, x in 0.01f64..1.56) {
        let h = Homogeneity::new(a).unwrap();
        let w = regularized_potential_planar(h, x).unwrap().w;
        prop_assert!(close(w, (2.0 * x).sin().powf(a) * potential_planar(h, x).unwrap(), 1e-12));
        let y = x - FRAC_PI_4;
        let wt = regularized_potential_tetra(h, y).unwrap().w;
        prop_assert!(close(wt, (2.0 * y.cos()).powf(a) * potential_tetra(h, y).unwrap(), 1e-12));
    }

    #[test]
    fn analytic_derivatives(a in 0.05f64..1.95, x in 0.2f64..1.37) {
        let h = Homogeneity::new(a).unwrap();
        for (sec, y) in [(Section::Planar, x), (Section::Tetra, x - FRAC_PI_4)] {
            let f = |z: f64| section_potential(sec, h, z).unwrap();
            for order in [1u8, 2] {
                let an = potential_derivatives(sec, h, y, order).unwrap();
                prop_assert!(close(an, fd(f, y, order), 1e-6), "{sec:?} order {order}");
            }
        }
        let dw = regularized_potential_planar(h, x).unwrap().dw;
        prop_assert!(close(dw, fd(|z| regularized_potential_planar(h, z).unwrap().w, x, 1), 1e-6));
    }
}
