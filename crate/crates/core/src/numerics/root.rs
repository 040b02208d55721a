use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket until `|hi - lo| < tol`.
pub fn find_root_bracketed(g: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> Result<f64> {
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let (mut g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo * g_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    // 2000 halvings exhaust any f64 interval
    for _ in 0..2000 {
        if hi - lo < tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let g_mid = g(mid);
        if g_mid == 0.0 {
            return Ok(mid);
        }
        if (g_mid < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = g_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton iteration kept inside a sign-changing bracket; falls back to a
/// bisection step whenever the Newton step leaves the bracket.
pub fn newton_bracketed(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo * g_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    let increasing = g_hi > 0.0;
    let mut x = 0.5 * (lo + hi);
    let mut history = Vec::new();
    for _ in 0..200 {
        let gx = g(x);
        if gx == 0.0 {
            return Ok(x);
        }
        if (gx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let slope = dg(x);
        let newton = x - gx / slope;
        let next = if slope != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        history.push(next);
        if (next - x).abs() <= tol || hi - lo <= tol {
            return Ok(next);
        }
        x = next;
    }
    let tail = history.len().saturating_sub(5);
    Err(Error::NoConvergence { iterations: history.len(), history: history.split_off(tail) })
}
