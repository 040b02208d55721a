use crate::error::{Error, Result};

fn rk4_step<const D: usize>(
    rate: &impl Fn(f64, &[f64; D]) -> [f64; D],
    t: f64,
    y: &[f64; D],
    h: f64,
) -> [f64; D] {
    let shift = |base: &[f64; D], k: &[f64; D], s: f64| {
        let mut out = *base;
        for (o, k) in out.iter_mut().zip(k) {
            *o += s * k;
        }
        out
    };
    let k1 = rate(t, y);
    let k2 = rate(t + 0.5 * h, &shift(y, &k1, 0.5 * h));
    let k3 = rate(t + 0.5 * h, &shift(y, &k2, 0.5 * h));
    let k4 = rate(t + h, &shift(y, &k3, h));
    let mut out = *y;
    for d in 0..D {
        out[d] += h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]);
    }
    out
}

fn check_finite<const D: usize>(y: &[f64; D], t: f64) -> Result<()> {
    if y.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { t })
    }
}

/// Classical fourth-order Runge–Kutta over `grid`, one step per grid interval.
/// Returns the state at every grid point.
pub fn integrate_ode<const D: usize>(
    rate: impl Fn(f64, &[f64; D]) -> [f64; D],
    y0: [f64; D],
    grid: &[f64],
) -> Result<Vec<[f64; D]>> {
    integrate_ode_refined(rate, y0, grid, 1)
}

/// As [`integrate_ode`], taking `substeps` equal RK4 steps per grid interval.
pub fn integrate_ode_refined<const D: usize>(
    rate: impl Fn(f64, &[f64; D]) -> [f64; D],
    y0: [f64; D],
    grid: &[f64],
    substeps: usize,
) -> Result<Vec<[f64; D]>> {
    let substeps = substeps.max(1);
    let mut out = Vec::with_capacity(grid.len());
    check_finite(&y0, grid.first().copied().unwrap_or(0.0))?;
    let mut y = y0;
    out.push(y);
    for w in grid.windows(2) {
        let h = (w[1] - w[0]) / substeps as f64;
        for s in 0..substeps {
            let t = w[0] + s as f64 * h;
            y = rk4_step(&rate, t, &y, h);
            check_finite(&y, t + h)?;
        }
        out.push(y);
    }
    Ok(out)
}

/// RK4 for right-hand sides with kinks where `switching(t, y)` changes sign.
/// A step that straddles a sign change is split at the located crossing so
/// that each piece integrates a smooth right-hand side.
pub fn integrate_ode_piecewise<const D: usize>(
    rate: impl Fn(f64, &[f64; D]) -> [f64; D],
    switching: impl Fn(f64, &[f64; D]) -> f64,
    y0: [f64; D],
    grid: &[f64],
) -> Result<Vec<[f64; D]>> {
    let mut out = Vec::with_capacity(grid.len());
    check_finite(&y0, grid.first().copied().unwrap_or(0.0))?;
    let mut y = y0;
    out.push(y);
    for w in grid.windows(2) {
        let (mut t, t_end) = (w[0], w[1]);
        // at most a few regime changes per interval
        for _ in 0..4 {
            let h = t_end - t;
            if h <= 0.0 {
                break;
            }
            let trial = rk4_step(&rate, t, &y, h);
            let (s0, s1) = (switching(t, &y), switching(t_end, &trial));
            if s0 == 0.0 || (s0 > 0.0) == (s1 > 0.0) {
                y = trial;
                t = t_end;
                break;
            }
            let (mut lo, mut hi) = (0.0, h);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                let s_mid = switching(t + mid, &rk4_step(&rate, t, &y, mid));
                if (s_mid > 0.0) == (s0 > 0.0) && s_mid != 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            y = rk4_step(&rate, t, &y, hi);
            t += hi;
        }
        if t < t_end {
            y = rk4_step(&rate, t, &y, t_end - t);
        }
        check_finite(&y, t_end)?;
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::uniform_grid;

    #[test]
    fn exponential_decay() {
        let grid = uniform_grid(0.0, 1.0, 1001);
        let y = integrate_ode(|_, y: &[f64; 1]| [-y[0]], [1.0], &grid).unwrap();
        assert!((y[1000][0] - (-1.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn constant_voltage_linear_memristor() {
        // q' = V / (a + b q) has q(t) = (-a + sqrt(R_i^2 + 2 b V t)) / b
        // R_i = 1 -> R_f = 10 over one microsecond
        let (a, b, v) = (1.0, 1.0, 49.5);
        let grid = uniform_grid(0.0, 1.0, 2001);
        let y = integrate_ode(|_, q: &[f64; 1]| [v / (a + b * q[0])], [0.0], &grid).unwrap();
        let sup = grid
            .iter()
            .zip(&y)
            .map(|(t, q)| (q[0] - (-a + (1.0 + 2.0 * b * v * t).sqrt()) / b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-8, "sup error {sup}");
    }

    #[test]
    fn non_finite_rate_is_reported() {
        let grid = uniform_grid(0.0, 1.0, 11);
        let res = integrate_ode(|t, _: &[f64; 1]| [if t > 0.45 { f64::NAN } else { 1.0 }], [0.0], &grid);
        assert!(matches!(res, Err(Error::NonFinite { t }) if t > 0.4 && t < 0.6));
    }

    #[test]
    fn piecewise_kink_is_resolved() {
        // y' = max(1 - t, 0), kink at t = 1 between grid points 0.8 and 1.2
        let grid = uniform_grid(0.0, 2.0, 6);
        let rate = |t: f64, _: &[f64; 1]| [(1.0 - t).max(0.0)];
        let y = integrate_ode_piecewise(rate, |t, _| 1.0 - t, [0.0], &grid).unwrap();
        assert!((y[5][0] - 0.5).abs() < 1e-12);
        let coarse = integrate_ode(rate, [0.0], &grid).unwrap();
        assert!((coarse[5][0] - 0.5).abs() > 1e-6);
    }
}
