use alloc::format;


use crate::error::{contract, Result};

const MAX_NEWTON: usize = 100;
const MAX_BISECT: usize = 200;

/// Nonnegative root of `c3 w^3 + c2 w^2 + c0 = 0` with `c3 > 0`, `c2 >= 0`, `c0 <= 0`.
///
/// The polynomial is increasing and convex on `w >= 0` and starts at `c0 <= 0`,
/// so the root is unique. Newton's method from `w0 = (-c0/c3)^(1/3)` approaches
/// it from above; bisection on `[0, 2 w0 + 1]` takes over if Newton stalls.
pub fn cubic_positive_root(c3: f64, c2: f64, c0: f64) -> Result<f64> {
    if !(c3 > 0.0) || !c3.is_finite() {
        return Err(contract(format!("cubic leading coefficient must be positive, got {c3}")));
    }
    if !(c2 >= 0.0) || !c2.is_finite() {
        return Err(contract(format!("cubic quadratic coefficient must be nonnegative, got {c2}")));
    }
    if !(c0 <= 0.0) || !c0.is_finite() {
        return Err(contract(format!("cubic constant term must be nonpositive, got {c0}")));
    }
    if c0 == 0.0 {
        return Ok(0.0);
    }

    let poly = |w: f64| (c3 * w + c2) * w * w + c0;
    let tol = 1e-12 * (-c0).max(c3);
    let w0 = (-c0 / c3).cbrt();

    // Newton iterates decrease monotonically towards the root from w0.
    let mut w = w0;
    for _ in 0..MAX_NEWTON {
        let f = poly(w);
        if f.abs() <= tol {
            return Ok(w);
        }
        let df = (3.0 * c3 * w + 2.0 * c2) * w;
        if df <= 0.0 {
            break;
        }
        let next = w - f / df;
        if next >= w {
            // no further progress: rounding floor reached
            return Ok(w);
        }
        if !(next > 0.0) {
            break;
        }
        w = next;
    }

    let (mut lo, mut hi) = (0.0, 2.0 * w0 + 1.0);
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        let f = poly(mid);
        if f.abs() <= tol || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if f < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
