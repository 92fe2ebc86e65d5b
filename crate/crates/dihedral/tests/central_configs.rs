use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, SQRT_2};

use dihedral::central_configs::*;
use dihedral::potentials::Homogeneity;
use proptest::prelude::*;

fn grid() -> Vec<f64> {
    (1..=10).map(|k| 0.19 * k as f64 - 0.09).collect()
}

#[test]
fn twenty_configurations_on_grid() {
    for a in grid() {
        let h = Homogeneity::new(a).unwrap();
        let ccs = enumerate_ccs(h).unwrap();
        assert_eq!(ccs.len(), 20, "alpha = {a}");
        assert_eq!(ccs.iter().filter(|c| c.kind == CcKind::Planar).count(), 12);
        for c in &ccs {
            assert!(gradient_norm(h, c).unwrap() < 1e-10, "{} at alpha {a}", c.label);
            assert!(c.vbar_pos > 0.0);
            match c.kind {
                CcKind::Tetrahedral => assert!((c.angles.phi.sin().powi(2) - 1.0 / 3.0).abs() < 1e-10),
                CcKind::Planar => {
                    // equator at odd multiples of pi/4, or a meridian at latitude pi/4
                    let eq = c.angles.phi.abs() < 1e-12 && ((c.angles.theta / FRAC_PI_4).round() as i64) % 2 == 1;
                    let mer = (c.angles.phi.abs() - FRAC_PI_4).abs() < 1e-12 && (c.angles.theta / FRAC_PI_2 - (c.angles.theta / FRAC_PI_2).round()).abs() < 1e-12;
                    assert!(eq || mer, "{} at {:?}", c.label, c.angles);
                }
            }
        }
    }
}

#[test]
fn newtonian_restpoint_velocities() {
    let h = Homogeneity::newtonian();
    let ccs = enumerate_ccs(h).unwrap();
    let p = find_cc(&ccs, "p11").unwrap();
    assert!((p.vbar_pos - (1.0 + 2.0 * SQRT_2).sqrt()).abs() < 1e-12);
    let (vp, vm) = vbar(h, find_cc(&ccs, "e11").unwrap()).unwrap();
    assert!((vp - (6.0 * 6f64.sqrt()).sqrt() / 2.0).abs() < 1e-12 && vm == -vp);
    // high-precision evaluation of the two radicals
    assert!((vl_gap(1.0).unwrap() - 0.039807374218214).abs() < 1e-12);
}

#[test]
fn gap_function() {
    assert!(vl_gap(0.0).unwrap().abs() < 1e-12);
    let g: Vec<f64> = (1..=19).map(|k| vl_gap(0.1 * k as f64).unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert!(vl_gap(2.0).is_err());
    for a in grid() {
        let h = Homogeneity::new(a).unwrap();
        let ccs = enumerate_ccs(h).unwrap();
        let pl = find_cc(&ccs, "p11").unwrap().vbar_pos;
        let te = find_cc(&ccs, "e11").unwrap().vbar_pos;
        assert!(pl > te && te > 0.0);
        assert!((pl - vbar_closed_form(CcKind::Planar, a)).abs() < 1e-12);
        assert!((te - vbar_closed_form(CcKind::Tetrahedral, a)).abs() < 1e-12);
    }
}

#[test]
fn planar_exponents_newtonian() {
    let h = Homogeneity::newtonian();
    let (m1, m2) = characteristic_exponents(h, 3.0 * SQRT_2, (1.0 + 2.0 * SQRT_2).sqrt());
    assert!((m1.re - 1.6279).abs() < 5e-5 && (m2.re - -2.6062).abs() < 5e-5);
    let (z, n) = characteristic_exponents(h, 0.0, 2.0);
    assert!(z.norm() < 1e-15 && (n.re + 1.0).abs() < 1e-15);
    // spiral case
    let (c1, c2) = characteristic_exponents(h, -2.0, 1.0);
    assert!(c1.im != 0.0 && (c1.re - (-0.25)).abs() < 1e-15 && (c1 - c2.conj()).norm() < 1e-15);
}

#[test]
fn linearization_and_table() {
    for a in grid() {
        let h = Homogeneity::new(a).unwrap();
        for c in enumerate_ccs(h).unwrap() {
            for pos in [true, false] {
                let l = linearize(h, &c, pos).unwrap();
                for mu in l.mu {
                    assert!(exponent_residual(h, l.lambda, l.vbar, mu) < 1e-12);
                    assert!(mu.re.abs() > 1e-8, "{} alpha {a}", c.label);
                }
            }
        }
    }
    let d = manifold_dimensions(CcKind::Planar, true);
    assert_eq!((d.stable, d.unstable, d.stable_parabolic, d.unstable_parabolic), (3, 2, 3, 1));
    let d = manifold_dimensions(CcKind::Tetrahedral, false);
    assert_eq!((d.stable, d.unstable, d.stable_parabolic, d.unstable_parabolic), (3, 2, 2, 2));
    for k in [CcKind::Planar, CcKind::Tetrahedral] {
        let (p, m) = (manifold_dimensions(k, true), manifold_dimensions(k, false));
        assert_eq!((p.stable, p.unstable), (m.unstable, m.stable));
        assert_eq!((p.stable_parabolic, p.unstable_parabolic), (m.unstable_parabolic, m.stable_parabolic));
    }
}

#[test]
fn report_rows() {
    let rows = cc_report(Homogeneity::newtonian()).unwrap();
    assert_eq!(rows.len(), 40);
    assert!(rows.iter().any(|r| r.label == "p11-" && r.vbar < 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn tetra_latitude_any_alpha(a in 0.02f64..1.98) {
        let h = Homogeneity::new(a).unwrap();
        let ccs = enumerate_ccs(h).unwrap();
        let e = find_cc(&ccs, "e11").unwrap();
        prop_assert!((e.angles.phi - phi1()).abs() < 1e-12);
        prop_assert!(gradient_norm(h, e).unwrap() < 1e-10);
    }
}
