//! Adaptive Gauss–Kronrod (7/15) integration with isolated singularities at 0.

use thiserror::Error;

/// Absolute tolerance used throughout the oracle.
pub const ORACLE_TOL: f64 = 1e-12;

const MAX_DEPTH: u32 = 60;

/// Singular weight attached to the integrand.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Singularity {
    /// `∫ f(t) dt`, `f` smooth.
    None,
    /// `∫ ln|t| f(t) dt`.
    LogAt0,
    /// `PV ∫ f(t)/t dt`.
    CauchyAt0,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("adaptive quadrature did not converge: estimate {estimate}, error bound {error:.3e}")]
    NotConverged { estimate: f64, error: f64 },
    #[error("non-finite integrand at t = {0}")]
    NonFinite(f64),
    #[error("singular system at pivot {0}")]
    Singular(usize),
    #[error("{0}")]
    Invalid(String),
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
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
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Kronrod estimate and `|K − G|` on `[a, b]`.
fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<(f64, f64), OracleError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let eval = |t: f64| {
        let v = f(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OracleError::NonFinite(t))
        }
    };
    let fc = eval(c)?;
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = eval(c - dx)? + eval(c + dx)?;
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    Ok((k * h, ((k - g) * h).abs()))
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> Result<(f64, f64), OracleError> {
    let (v, e) = gk15(f, a, b)?;
    if e <= tol || (b - a).abs() < 1e-15 * (a.abs() + b.abs()).max(1e-300) {
        return Ok((v, e));
    }
    if depth >= MAX_DEPTH {
        return Err(OracleError::NotConverged { estimate: v, error: e });
    }
    let m = 0.5 * (a + b);
    let (v1, e1) = adapt(f, a, m, 0.5 * tol, depth + 1)?;
    let (v2, e2) = adapt(f, m, b, 0.5 * tol, depth + 1)?;
    Ok((v1 + v2, e1 + e2))
}

/// `∫_a^b f` with absolute tolerance [`ORACLE_TOL`].
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64) -> Result<f64, OracleError> {
    adaptive_tol(f, a, b, ORACLE_TOL)
}

pub fn adaptive_tol(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64, OracleError> {
    if a == b {
        return Ok(0.0);
    }
    Ok(adapt(&f, a, b, tol, 0)?.0)
}

/// `∫_0^b ln t · f(t) dt` for `b > 0` by subtracting `f(0)`.
fn log_half(f: &dyn Fn(f64) -> f64, b: f64, tol: f64) -> Result<f64, OracleError> {
    let f0 = f(0.0);
    let rem = adaptive_tol(|t| t.ln() * (f(t) - f0), 0.0, b, tol)?;
    Ok(rem + f0 * (b * b.ln() - b))
}

/// Integral of `f` over `[a, b]` against the weight named by `kind`,
/// singular point at `t = 0`.
pub fn adaptive_integral(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    kind: Singularity,
) -> Result<f64, OracleError> {
    if !(a < b) {
        return Err(OracleError::Invalid(format!("empty interval [{a}, {b}]")));
    }
    let contains = a <= 0.0 && b >= 0.0;
    match kind {
        Singularity::None => adaptive(f, a, b),
        _ if !contains => match kind {
            Singularity::LogAt0 => adaptive(|t| t.abs().ln() * f(t), a, b),
            _ => adaptive(|t| f(t) / t, a, b),
        },
        Singularity::LogAt0 => {
            let tol = 0.5 * ORACLE_TOL;
            let right = if b > 0.0 { log_half(&f, b, tol)? } else { 0.0 };
            let left = if a < 0.0 { log_half(&|t| f(-t), -a, tol)? } else { 0.0 };
            Ok(left + right)
        }
        Singularity::CauchyAt0 => {
            if a == 0.0 || b == 0.0 {
                return Err(OracleError::Invalid("principal value needs 0 inside the interval".into()));
            }
            let c = b.min(-a);
            let sym = adaptive_tol(|t| (f(t) - f(-t)) / t, 0.0, c, 0.5 * ORACLE_TOL)?;
            let rest = if b > c {
                adaptive_tol(|t| f(t) / t, c, b, 0.5 * ORACLE_TOL)?
            } else if -a > c {
                adaptive_tol(|t| f(t) / t, a, -c, 0.5 * ORACLE_TOL)?
            } else {
                0.0
            };
            Ok(sym + rest)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_closed_form() {
        // ∫_0^1 ln(1/η) dη = 1
        let v = adaptive_integral(|_| -1.0, 0.0, 1.0, Singularity::LogAt0).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn odd_principal_value_vanishes() {
        let v = adaptive_integral(|_| 1.0, -1.0, 1.0, Singularity::CauchyAt0).unwrap();
        assert!(v.abs() < 1e-14);
    }

    #[test]
    fn smooth_integrals() {
        let v = adaptive(|t| t.exp(), 0.0, 1.0).unwrap();
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-13);
        let v = adaptive(|t| t.sqrt(), 0.0, 1.0).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_principal_value() {
        // PV ∫_{-1}^{2} dt/t = ln 2
        let v = adaptive_integral(|_| 1.0, -1.0, 2.0, Singularity::CauchyAt0).unwrap();
        assert!((v - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn non_finite_reported() {
        assert!(matches!(adaptive(|t| 1.0 / (t - 0.5), 0.0, 1.0), Err(OracleError::NonFinite(_))));
    }
}
