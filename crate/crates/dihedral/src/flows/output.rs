//! Trajectory containers and CSV writers.

use std::io::{self, Write};

use super::FullState;

/// Format with 12 significant digits, %g style.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..12).contains(&e) {
        let prec = (11 - e).max(0) as usize;
        let s = format!("{:.*}", prec, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{:.11e}", x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionSample {
    pub time: f64,
    pub x: f64,
    pub v: f64,
    pub u: f64,
    pub energy_residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub kind: String,
}

/// Samples of a section run. `time_label` names the first column: "sigma"
/// for regularized runs, "s" for the angle-chart tracer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SectionTrajectory {
    pub time_label: &'static str,
    pub samples: Vec<SectionSample>,
    pub events: Vec<TrajectoryEvent>,
}

impl SectionTrajectory {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let label = if self.time_label.is_empty() { "sigma" } else { self.time_label };
        writeln!(out, "{label},x,v,u,energy_residual")?;
        for s in &self.samples {
            writeln!(
                out,
                "{},{},{},{},{}",
                fmt_sig(s.time),
                fmt_sig(s.x),
                fmt_sig(s.v),
                fmt_sig(s.u),
                fmt_sig(s.energy_residual)
            )?;
        }
        for e in &self.events {
            writeln!(out, "# event,{},{}", fmt_sig(e.time), e.kind)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FullTrajectory {
    pub samples: Vec<(f64, FullState, f64)>,
    pub events: Vec<TrajectoryEvent>,
}

impl FullTrajectory {
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "sigma,rho,v,sx,sy,sz,wx,wy,wz,energy_residual")?;
        for (t, st, res) in &self.samples {
            let cols = [*t, st.rho, st.v, st.s[0], st.s[1], st.s[2], st.w[0], st.w[1], st.w[2], *res];
            let line: Vec<String> = cols.iter().map(|c| fmt_sig(*c)).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        for e in &self.events {
            writeln!(out, "# event,{},{}", fmt_sig(e.time), e.kind)?;
        }
        Ok(())
    }
}

/// Parse a section CSV back into (time, x, v) rows; comment lines skipped.
pub fn read_section_csv(text: &str) -> Result<Vec<[f64; 3]>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() < 3 {
            return Err(format!("line {}: expected at least 3 columns", i + 1));
        }
        let mut r = [0.0; 3];
        for k in 0..3 {
            r[k] = cols[k].trim().parse().map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        rows.push(r);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt_sig(std::f64::consts::PI), "3.14159265359");
        assert_eq!(fmt_sig(-0.5), "-0.5");
        assert_eq!(fmt_sig(1.5e-9), "1.50000000000e-9");
    }
}
