//! Adaptive Gauss-Kronrod quadrature and the closed form for sqrt(a/x + b).

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

const MAX_INTERVALS: usize = 4000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d) + f(c + d);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive G7-K15 on [a, b] to absolute tolerance `tol`.
pub fn gauss_kronrod<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![{
        let (v, e) = gk15(&f, a, b);
        (a, b, v, e)
    }];
    loop {
        let total: f64 = parts.iter().map(|p| p.2).sum();
        let err: f64 = parts.iter().map(|p| p.3).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        if err <= tol {
            return Ok(total);
        }
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!("error estimate {err:e} above {tol:e} after {MAX_INTERVALS} intervals")));
        }
        let (i, _) = parts.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).unwrap_or((0, &parts[0]));
        let (lo, hi, _, _) = parts.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Err(Error::Quadrature(format!("interval collapsed near {mid}")));
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
    }
}

/// Integral over [0, len] of f, where f(x) ~ x^(-gamma) at 0 with gamma < 1.
/// Substitutes x = t^k so that the transformed integrand vanishes at 0.
pub fn integrate_from_singular<F: Fn(f64) -> f64>(f: F, len: f64, gamma: f64, tol: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&gamma) {
        return Err(Error::Domain(format!("endpoint exponent {gamma} not integrable")));
    }
    let k = 2.0 / (1.0 - gamma);
    let tmax = len.powf(1.0 / k);
    gauss_kronrod(|t| if t <= 0.0 { 0.0 } else { f(t.powf(k)) * k * t.powf(k - 1.0) }, 0.0, tmax, tol)
}

/// Antiderivative of sqrt(a/x + b):
/// sqrt(x(a + bx)) + a/(2 sqrt b) log(2 sqrt b sqrt(x(a + bx)) + 2bx + a).
pub fn sqrt_affine_quadrature(a: f64, b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 {
        return Err(Error::Domain(format!("sqrt(a/x + b) quadrature needs b > 0, got {b}")));
    }
    if a < 0.0 || x < 0.0 {
        return Err(Error::Domain(format!("sqrt(a/x + b) quadrature needs a, x >= 0 (a = {a}, x = {x})")));
    }
    let r = (x * (a + b * x)).sqrt();
    let sb = b.sqrt();
    let log = if a == 0.0 { 0.0 } else { a / (2.0 * sb) * (2.0 * sb * r + 2.0 * b * x + a).ln() };
    Ok(r + log)
}

/// Definite integral of sqrt(a/x + b) over [0, x].
pub fn sqrt_affine_integral(a: f64, b: f64, x: f64) -> Result<f64> {
    Ok(sqrt_affine_quadrature(a, b, x)? - sqrt_affine_quadrature(a, b, 0.0)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = gauss_kronrod(|x| x * x * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-13);
    }

    #[test]
    fn closed_form_matches_numeric() {
        let (a, b, x) = (1.3, 0.7, 0.9);
        let closed = sqrt_affine_integral(a, b, x).unwrap();
        let num = integrate_from_singular(|t| (a / t + b).sqrt(), x, 0.5, 1e-12).unwrap();
        assert!((closed - num).abs() < 1e-10);
    }
}
