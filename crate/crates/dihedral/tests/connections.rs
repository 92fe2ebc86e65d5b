use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_4;

use dihedral::central_configs::{enumerate_ccs, find_cc};
use dihedral::connections::*;
use dihedral::flows::charts::Arm;
use dihedral::flows::{energy_residual, Drift, IntegratorConfig};
use dihedral::potentials::{Homogeneity, Section};

fn opts() -> TraceOptions {
    TraceOptions::default()
}

fn right_branch(section: Section) -> Branch {
    let cc = if section == Section::Planar { "p11" } else { "e11" };
    Branch::unstable(section, cc, false, Side::Right)
}

#[test]
fn seeds() {
    for a in [0.5, 1.0, 1.5] {
        let h = Homogeneity::new(a).unwrap();
        for br in saddle_branches(h).unwrap() {
            for drift in [Drift::Exact, Drift::Frozen] {
                assert!(seed_eigen_residual(h, &br, drift).unwrap() < 1e-10);
            }
            let s = seed_branch(h, &br, 1e-6, Drift::Exact).unwrap();
            assert!(energy_residual(br.section, h, &s, 0.0, 0.0).unwrap().abs() < 1e-12, "{}", br.name());
        }
    }
    let h = Homogeneity::newtonian();
    let s = seed_branch(h, &right_branch(Section::Planar), 1e-6, Drift::Exact).unwrap();
    assert!(s.x > FRAC_PI_4 && s.u > 0.0 && s.v < 0.0);
    // the reversing symmetry carries the seed to the stable seed of the opposite restpoint
    let stable = Branch { vbar_positive: true, stability: Stability::Stable, ..right_branch(Section::Planar) };
    let d = seed_branch(h, &stable, 1e-6, Drift::Exact).unwrap();
    assert!((d.x - s.x).abs() < 1e-15 && (d.v + s.v).abs() < 1e-12 && (d.u + s.u).abs() < 1e-12);
    // zero offset is the restpoint itself
    let z = seed_branch(h, &right_branch(Section::Planar), 0.0, Drift::Exact).unwrap();
    assert!((z.x - FRAC_PI_4).abs() < 1e-15 && z.u == 0.0);
    assert!(seed_branch(h, &right_branch(Section::Planar), 1e-3, Drift::Exact).is_err());
    // the tetra p11 is a sink of the section flow, not a saddle
    assert!(seed_branch(h, &Branch::unstable(Section::Tetra, "p11", false, Side::Left), 1e-6, Drift::Exact).is_err());
}

#[test]
fn zero_offset_gives_constant_trajectory() {
    let h = Homogeneity::newtonian();
    let o = trace_branch(h, &right_branch(Section::Planar), &TraceOptions { eps: 0.0, record: true, ..opts() }).unwrap();
    assert_eq!(o.outcome, Outcome::RestpointCapture { label: "p11-".into(), saddle: true });
    let s = &o.trajectory.samples;
    assert!(s.len() > 1 && s.iter().all(|p| p.x == s[0].x && p.v == s[0].v && p.u == s[0].u));
}

#[test]
fn planar_right_branch_newtonian() {
    let h = Homogeneity::newtonian();
    let o = trace_branch(h, &right_branch(Section::Planar), &opts()).unwrap();
    let arms = o.arm_crossings();
    assert_eq!(arms[0].0, Arm::PlanarHigh);
    let v = arms[0].1;
    assert!((-1.4164..=-0.8014).contains(&v), "v(pi/2) = {v}");
    assert!((v - -1.2649188).abs() < 1e-6);
    // after the reflection the branch crosses v = 0 left of the restpoint
    let z = o.zero_v_angles();
    assert!(!z.is_empty() && z[0] > 0.0 && z[0] < FRAC_PI_4, "{z:?}");
    let all: Vec<f64> = arms.iter().map(|a| a.1).collect();
    let expect = [-1.2649188, 0.8988252, 2.4512443, 3.1078646];
    assert_eq!(all.len(), expect.len());
    for (a, b) in all.iter().zip(expect) {
        assert!((a - b).abs() < 1e-6);
    }
    assert!(matches!(o.outcome, Outcome::ArmEscape { .. }));
}

#[test]
fn half_exponent_window() {
    let h = Homogeneity::new(0.5).unwrap();
    let o = trace_branch(h, &right_branch(Section::Planar), &opts()).unwrap();
    let v = o.arm_v()[0];
    assert!((-1.6267..=-0.8013).contains(&v) && (v - -1.5033688).abs() < 1e-6);
    let z = o.zero_v_angles();
    assert!(z[0] > 0.0 && z[0] < FRAC_PI_4);
    let o = trace_branch(h, &right_branch(Section::Tetra), &opts()).unwrap();
    assert!((o.arm_v()[0] - -1.3352938).abs() < 1e-6);
}

#[test]
fn tetra_branches_newtonian() {
    let h = Homogeneity::newtonian();
    let o = trace_branch(h, &right_branch(Section::Tetra), &opts()).unwrap();
    let (arm, v) = o.arm_crossings()[0];
    assert_eq!(arm, Arm::TetraNorth);
    assert!((-1.4994..=-0.5727).contains(&v) && (v - -1.1528750).abs() < 1e-6);
    let left = trace_branch(h, &Branch::unstable(Section::Tetra, "e11", false, Side::Left), &opts()).unwrap();
    let (arm, v) = left.arm_crossings()[0];
    assert_eq!(arm, Arm::TetraSouth);
    assert!(v < 0.0);
}

#[test]
fn tracers_agree() {
    for a in [0.5, 1.0, 1.3] {
        let h = Homogeneity::new(a).unwrap();
        for section in [Section::Planar, Section::Tetra] {
            let stop = StopRule::ArmCrossings(2);
            let p = trace_branch(h, &right_branch(section), &TraceOptions { stop, ..opts() }).unwrap();
            let s = trace_branch(h, &right_branch(section), &TraceOptions { stop, tracer: TracerKind::Sigma, ..opts() }).unwrap();
            for (x, y) in p.arm_v().iter().zip(s.arm_v()) {
                assert!((x - y).abs() < 1e-6, "{section:?} alpha {a}: {x} vs {y}");
            }
        }
    }
}

#[test]
fn seeding_robustness() {
    for a in [0.5, 1.0, 1.5] {
        let h = Homogeneity::new(a).unwrap();
        for br in saddle_branches(h).unwrap() {
            let runs: Vec<BranchOutcome> =
                [1e-5, 1e-6, 1e-7].iter().map(|&eps| trace_branch(h, &br, &TraceOptions { eps, ..opts() }).unwrap()).collect();
            for r in &runs[1..] {
                assert_eq!(std::mem::discriminant(&r.outcome), std::mem::discriminant(&runs[0].outcome), "{}", br.name());
                match (&r.outcome, &runs[0].outcome) {
                    (Outcome::RestpointCapture { label: a, .. }, Outcome::RestpointCapture { label: b, .. }) => assert_eq!(a, b),
                    (Outcome::ArmEscape { arm: a, .. }, Outcome::ArmEscape { arm: b, .. }) => assert_eq!(a, b),
                    _ => {}
                }
                let (v, w) = (r.arm_v(), runs[0].arm_v());
                assert_eq!(v.len(), w.len(), "{}", br.name());
                for (x, y) in v.iter().zip(&w) {
                    assert!((x - y).abs() < 1e-5, "{} alpha {a}: {x} vs {y}", br.name());
                }
            }
        }
    }
}

fn signed_vbar(h: Homogeneity, node: &str) -> Option<f64> {
    let (cc, pos) = parse_node(node).ok()?;
    let ccs = enumerate_ccs(h).ok()?;
    let v = find_cc(&ccs, &cc)?.vbar_pos;
    Some(if pos { v } else { -v })
}

#[test]
fn classification_newtonian() {
    let h = Homogeneity::newtonian();
    let c = classify_connections(h, &opts(), &[]).unwrap();
    assert!(c.warnings.is_empty(), "{:?}", c.warnings);
    let edges: BTreeSet<(String, String)> = c.edges.iter().map(|e| (e.from.clone(), e.to.clone())).collect();
    // closed under duality
    for e in &c.edges {
        let d = dual_edge(e);
        assert!(edges.contains(&(d.from.clone(), d.to.clone())), "dual of {} -> {} missing", e.from, e.to);
    }
    // v increases along restpoint-to-restpoint connections
    for e in &c.edges {
        if let (Some(a), Some(b)) = (signed_vbar(h, &e.from), signed_vbar(h, &e.to)) {
            assert!(b > a, "{} -> {}", e.from, e.to);
        }
    }
    // no planar saddle connection p- to p+ away from the critical exponents
    for e in &c.edges {
        let planar = |n: &str| n.starts_with('p');
        assert!(!(planar(&e.from) && planar(&e.to) && e.from.ends_with('-') && e.to.ends_with('+')), "{} -> {}", e.from, e.to);
        assert!(!e.saddle);
    }
    let g = connection_graph(&c);
    for to in ["p11+", "p21+", "p31+"] {
        assert!(g.has_edge("e11+", to), "e11+ -> {to}");
    }
    for n in &g.nodes {
        if n.starts_with('B') && n.contains('u') {
            assert_eq!(g.in_degree(n), 0, "{n}");
        }
        if n.starts_with('B') && n.contains('s') {
            assert_eq!(g.out_degree(n), 0, "{n}");
        }
    }
    assert!(g.out_degree("p11+") > 0);
    assert!(g.has_edge("p11+", "B1s+") || g.has_edge("p11+", "B2s+"));
    assert!(serde_json::to_string(&g).unwrap().contains("\"v_at_arms\""));
}

#[test]
fn graph_nodes_and_boxes() {
    let n = graph_nodes();
    assert_eq!(n.len(), 22);
    let boxes: BTreeSet<String> = n.iter().map(|s| figure_box(s)).collect();
    // the published diagram draws ten distinct boxes
    assert_eq!(boxes.len(), 10, "{boxes:?}");
    assert_eq!(figure_box("B2u-"), "Bu-");
    assert_eq!(figure_box("e12+"), "e1j+");
}

fn frozen() -> TraceOptions {
    TraceOptions { drift: Drift::Frozen, cfg: IntegratorConfig::with_tol(1e-11, 1e-13), ..opts() }
}

#[test]
fn bracket_facts() {
    let o = frozen();
    assert!(critical_value(1.46136, Section::Planar, CriticalTarget::FirstArm, &o).unwrap() < 0.0);
    assert!(critical_value(1.7, Section::Planar, CriticalTarget::FirstArm, &o).unwrap() > 0.0);
    assert!((critical_value(1.1, Section::Planar, CriticalTarget::FirstArm, &o).unwrap() - -1.1369206).abs() < 1e-6);
    assert!((critical_value(1.7, Section::Planar, CriticalTarget::FirstArm, &o).unwrap() - 0.6996599).abs() < 1e-6);
    // frozen drift at alpha = 1 is the exact drift
    let v1 = critical_value(1.0, Section::Planar, CriticalTarget::FirstArm, &o).unwrap();
    assert!((v1 - -1.2649188).abs() < 1e-6);
    assert!(find_alpha_star(Section::Planar, (1.0, 1.2), CriticalTarget::FirstArm, &o, 1e-8, 3).is_err());
}

#[test]
fn critical_exponents() {
    let mut found = Vec::new();
    for tracer in [TracerKind::Projected, TracerKind::Sigma] {
        let r = alpha_star_report(Section::Planar, (1.0, 1.46136), (1.46136, 1.7), &TraceOptions { tracer, ..frozen() }, 20).unwrap();
        assert!(r.monotone);
        assert!(1.0 < r.alpha0_star && r.alpha0_star < r.alpha_star && r.alpha_star < 2.0);
        assert!((r.alpha0_star - 1.09380209).abs() < 1e-6, "{}", r.alpha0_star);
        assert!((r.alpha_star - 1.58513188).abs() < 1e-6, "{}", r.alpha_star);
        assert_eq!(r.v_samples.len(), 20);
        found.push((r.alpha0_star, r.alpha_star));
    }
    assert!((found[0].0 - found[1].0).abs() < 1e-6 && (found[0].1 - found[1].1).abs() < 1e-6);
}

#[test]
fn branch_meets_arm_at_rest_at_critical_exponent() {
    let v = critical_value(1.585131883, Section::Planar, CriticalTarget::FirstArm, &frozen()).unwrap();
    assert!(v.abs() < 1e-6, "{v}");
    let v0 = critical_value(1.093802088, Section::Planar, CriticalTarget::ReturnAfterArm, &frozen()).unwrap();
    assert!(v0.abs() < 1e-6, "{v0}");
}

#[test]
fn node_labels() {
    assert_eq!(parse_node("e11+").unwrap(), ("e11".to_string(), true));
    assert!(parse_node("e11").is_err());
    assert_eq!(binary_node(3, true, -1), "B3s-");
    assert_eq!(Branch::unstable(Section::Tetra, "e11", false, Side::Left).name(), "Wu(e11-) left [tetra]");
}
