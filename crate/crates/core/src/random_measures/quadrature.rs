//! Adaptive Simpson quadrature on a bounded interval.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 60;
const INITIAL_PANELS: usize = 1024;

/// ∫_a^b f with absolute error target `abs_tol`, starting from a uniform
/// split into panels so that narrow features are not missed.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) || b < a {
        return Err(Error::InvalidArgument(format!("bad quadrature interval [{a}, {b}]")));
    }
    if a == b {
        return Ok(0.0);
    }
    let h = (b - a) / INITIAL_PANELS as f64;
    let floor = 1e-15 * (b - a);
    let eps = abs_tol.max(floor) / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut fa = f(a);
    for i in 0..INITIAL_PANELS {
        let lo = a + h * i as f64;
        let hi = if i + 1 == INITIAL_PANELS { b } else { a + h * (i + 1) as f64 };
        let mid = 0.5 * (lo + hi);
        let (fm, fb) = (f(mid), f(hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += refine(f, lo, hi, fa, fm, fb, whole, eps, 0)?;
        fa = fb;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    eps: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * eps || m <= a || b <= m {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH {
        return Err(Error::Quadrature { lo: a, hi: b, depth });
    }
    Ok(refine(f, a, m, fa, flm, fm, left, eps / 2.0, depth + 1)?
        + refine(f, m, b, fm, frm, fb, right, eps / 2.0, depth + 1)?)
}
