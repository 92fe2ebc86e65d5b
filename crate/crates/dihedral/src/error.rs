use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("homogeneity exponent alpha = {0} outside (0, 2)")]
    Exponent(f64),
    #[error("collision configuration: |q - gq| = {distance:e} below tolerance")]
    Collision { distance: f64 },
    #[error("singular direction at {coord} = {value}")]
    Singular { coord: &'static str, value: f64 },
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("root finder did not converge: {0}")]
    NoConvergence(String),
    #[error("constraint residual {residual:e} exceeds {limit:e}")]
    Constraint { residual: f64, limit: f64 },
    #[error("step size underflow at t = {t} (h = {h:e}); {near}")]
    StepUnderflow { t: f64, h: f64, near: String },
    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),
    #[error("no sign change of V on [{lo}, {hi}] (V = {v_lo}, {v_hi})")]
    NoSignChange { lo: f64, hi: f64, v_lo: f64, v_hi: f64 },
    #[error("arcsin argument {0} outside [-1, 1]")]
    ArcsinDomain(f64),
    #[error("quadrature failed: {0}")]
    Quadrature(String),
}

pub type Result<T> = std::result::Result<T, Error>;
