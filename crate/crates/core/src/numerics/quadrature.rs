use crate::error::{Error, Result};

/// Composite Simpson rule over uniformly spaced samples.
///
/// An even sample count integrates all but the last panel with Simpson and
/// closes with the trapezoid rule.
pub fn simpson(f: &[f64], dt: f64) -> Result<f64> {
    let n = f.len();
    if n < 3 {
        return Err(Error::Input(format!("quadrature needs at least 3 samples, got {n}")));
    }
    let m = if n % 2 == 1 { n } else { n - 1 };
    let mut odd = 0.0;
    let mut even = 0.0;
    for (j, v) in f.iter().enumerate().take(m - 1).skip(1) {
        if j % 2 == 1 {
            odd += v;
        } else {
            even += v;
        }
    }
    let mut total = dt / 3.0 * (f[0] + 4.0 * odd + 2.0 * even + f[m - 1]);
    if m != n {
        total += 0.5 * dt * (f[n - 2] + f[n - 1]);
    }
    Ok(total)
}

/// Adaptive Simpson quadrature of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    adaptive_step(f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + adaptive_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::uniform_grid;

    #[test]
    fn constant_integrand() {
        assert_eq!(simpson(&vec![1.0; 1001], 1.0 / 1000.0).unwrap(), 1.0);
    }

    #[test]
    fn exact_for_cubic_polynomials() {
        let t = uniform_grid(0.0, 1.0, 5);
        let sq: Vec<f64> = t.iter().map(|t| t * t).collect();
        assert!((simpson(&sq, 0.25).unwrap() - 1.0 / 3.0).abs() < 1e-16);
        let cube: Vec<f64> = t.iter().map(|t| t * t * t).collect();
        assert!((simpson(&cube, 0.25).unwrap() - 0.25).abs() < 1e-16);
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = std::f64::consts::E - 1.0;
        let err = |n: usize| {
            let t = uniform_grid(0.0, 1.0, n);
            let f: Vec<f64> = t.iter().map(|t| t.exp()).collect();
            (simpson(&f, 1.0 / (n - 1) as f64).unwrap() - exact).abs()
        };
        let ratio = err(11) / err(21);
        assert!((ratio - 16.0).abs() < 0.5, "ratio {ratio}");
    }

    #[test]
    fn even_count_falls_back_to_trapezoid() {
        let f = vec![1.0, 1.0, 1.0, 1.0];
        assert!((simpson(&f, 0.5).unwrap() - 1.5).abs() < 1e-15);
        assert!(simpson(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let v = adaptive_simpson(&|q: f64| (1.0 + q).sqrt(), 0.0, 3.0, 1e-12);
        let exact = 2.0 / 3.0 * (8.0 - 1.0);
        assert!((v - exact).abs() < 1e-10);
        assert_eq!(adaptive_simpson(&|q: f64| q, 2.0, 2.0, 1e-9), 0.0);
    }
}
