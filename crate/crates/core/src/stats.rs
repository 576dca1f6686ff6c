//! Small statistics kernels shared by the analytics and evaluation code.

use crate::Scalar;

/// Pearson correlation coefficient of two equal-length series.
///
/// `None` when fewer than two points or either series has zero variance.
pub fn pearson_r<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = F::from_usize(xs.len())?;
    let mean = |vs: &[F]| vs.iter().fold(F::zero(), |acc, &v| acc + v) / n;
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    let mut syy = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy = sxy + dx * dy;
        sxx = sxx + dx * dx;
        syy = syy + dy * dy;
    }
    if sxx <= F::zero() || syy <= F::zero() {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Least-squares slope of `y = beta * x` (regression through the origin).
///
/// `None` when all `x` are zero.
pub fn slope_through_origin<F: Scalar>(xs: &[F], ys: &[F]) -> Option<F> {
    if xs.len() != ys.len() || xs.is_empty() {
        return None;
    }
    let mut sxy = F::zero();
    let mut sxx = F::zero();
    for (&x, &y) in xs.iter().zip(ys) {
        sxy = sxy + x * y;
        sxx = sxx + x * x;
    }
    if sxx <= F::zero() {
        return None;
    }
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_unit_correlation() {
        let xs = [1.0f64, 2.0, 3.0, 4.0];
        let ys = [10.0f64, 20.0, 30.0, 40.0];
        let r = pearson_r(&xs, &ys).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let inv: Vec<f64> = ys.iter().map(|y| -y).collect();
        let r = pearson_r(&xs, &inv).unwrap();
        assert!((r + 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_series_has_no_correlation() {
        assert_eq!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), None);
        assert_eq!(pearson_r(&[1.0], &[1.0]), None);
    }

    #[test]
    fn slope_recovers_exact_proportionality() {
        let xs = [1.0f64, 5.0, 2.0];
        let ys = [10.0f64, 50.0, 20.0];
        assert!((slope_through_origin(&xs, &ys).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn slope_minimizes_residuals() {
        // brute-force scan confirms the closed form is the minimizer
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys = [11.0, 19.0, 32.0, 41.0];
        let beta = slope_through_origin(&xs, &ys).unwrap();
        let rss = |b: f64| -> f64 {
            xs.iter().zip(&ys).map(|(&x, &y)| (y - b * x) * (y - b * x)).sum()
        };
        let mut b = 5.0;
        while b < 15.0 {
            assert!(rss(beta) <= rss(b) + 1e-9, "beta {beta} beaten by {b}");
            b += 0.01;
        }
    }

    #[test]
    fn slope_undefined_for_all_zero_x() {
        assert_eq!(slope_through_origin(&[0.0, 0.0], &[1.0, 2.0]), None);
    }
}
