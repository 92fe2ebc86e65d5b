//! Hand-rolled SVG phase portraits in the (x, v) projection.

use std::fmt::Write as _;

use dihedral::connections::section_restpoints;
use dihedral::flows::output::fmt_sig;
use dihedral::potentials::{Homogeneity, Section};
use dihedral::Result;

const W: f64 = 800.0;
const H: f64 = 500.0;
const PAD: f64 = 60.0;

struct Frame {
    x0: f64,
    x1: f64,
    v0: f64,
    v1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        PAD + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * PAD)
    }
    fn py(&self, v: f64) -> f64 {
        H - PAD - (v - self.v0) / (self.v1 - self.v0) * (H - 2.0 * PAD)
    }
}

fn n(x: f64) -> String {
    format!("{x:.2}")
}

/// Rows are (time, x, v). Arms are drawn as dashed verticals at the ends of
/// the section interval, restpoints as dots at (x, +-vbar).
pub fn portrait(rows: &[[f64; 3]], section: Section, h: Homogeneity) -> Result<String> {
    let (x0, x1) = section.domain();
    let rps = section_restpoints(section, h)?;
    let vmax = rows
        .iter()
        .map(|r| r[2].abs())
        .chain(rps.iter().map(|r| r.vbar))
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-3)
        * 1.1;
    let f = Frame { x0, x1, v0: -vmax, v1: vmax };
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    // axes
    let _ = writeln!(
        s,
        r##"<g stroke="#444" stroke-width="1"><line x1="{}" y1="{}" x2="{}" y2="{}"/><line x1="{}" y1="{}" x2="{}" y2="{}"/></g>"##,
        n(f.px(x0)),
        n(f.py(0.0)),
        n(f.px(x1)),
        n(f.py(0.0)),
        n(f.px(x0)),
        n(f.py(-vmax)),
        n(f.px(x0)),
        n(f.py(vmax))
    );
    let xname = match section {
        Section::Planar => "theta",
        Section::Tetra => "phi",
    };
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="14" text-anchor="middle">{xname}</text>"#, n(W / 2.0), n(H - 15.0));
    let _ = writeln!(s, r#"<text x="15" y="{}" font-size="14">v</text>"#, n(H / 2.0));
    for k in 0..=4 {
        let v = -vmax + 2.0 * vmax * k as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="10" text-anchor="end">{}</text>"#,
            n(PAD - 6.0),
            n(f.py(v) + 3.0),
            fmt_sig((v * 1000.0).round() / 1000.0)
        );
    }
    // arms
    for (x, label) in [(x0, "arm"), (x1, "arm")] {
        let _ = writeln!(
            s,
            r##"<line class="arm" x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="#c33" stroke-dasharray="6,4"/><text x="{0}" y="{3}" font-size="11" fill="#c33" text-anchor="middle">{label} {4}</text>"##,
            n(f.px(x)),
            n(f.py(vmax)),
            n(f.py(-vmax)),
            n(PAD - 10.0),
            fmt_sig((x * 1e4).round() / 1e4)
        );
    }
    // trajectory
    if !rows.is_empty() {
        let mut d = String::new();
        for (i, r) in rows.iter().enumerate() {
            let _ = write!(d, "{}{},{} ", if i == 0 { "M" } else { "L" }, n(f.px(r[1])), n(f.py(r[2])));
        }
        let _ = writeln!(s, r##"<path class="trajectory" d="{}" fill="none" stroke="#1f5fbf" stroke-width="1.5"/>"##, d.trim_end());
    }
    // restpoints
    for rp in &rps {
        for (v, sign) in [(rp.vbar, "+"), (-rp.vbar, "-")] {
            let _ = writeln!(
                s,
                r##"<circle class="restpoint" cx="{}" cy="{}" r="4" fill="black"/><text x="{}" y="{}" font-size="11">{}{}</text>"##,
                n(f.px(rp.x)),
                n(f.py(v)),
                n(f.px(rp.x) + 6.0),
                n(f.py(v) - 6.0),
                rp.label,
                sign
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}
