//! Least-squares Hill curve fit for dose-response data.

/// `y = ymax * x^n / (k^n + x^n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HillFit {
    pub ymax: f64,
    pub k: f64,
    pub n: f64,
    pub sse: f64,
}

impl HillFit {
    pub fn eval(&self, x: f64) -> f64 {
        hill(x, self.k, self.n) * self.ymax
    }
}

fn hill(x: f64, k: f64, n: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    1.0 / (1.0 + (k / x).powf(n))
}

/// Best `ymax` for fixed `(k, n)` and the resulting squared error.
fn profile(xs: &[f64], ys: &[f64], k: f64, n: f64) -> (f64, f64) {
    let g: Vec<f64> = xs.iter().map(|&x| hill(x, k, n)).collect();
    let gg: f64 = g.iter().map(|v| v * v).sum();
    let ymax = if gg > 0.0 { g.iter().zip(ys).map(|(a, b)| a * b).sum::<f64>() / gg } else { 0.0 };
    let sse = g.iter().zip(ys).map(|(a, y)| (ymax * a - y).powi(2)).sum();
    (ymax, sse)
}

/// Fits a Hill curve to points with positive `x`. Returns `None` with fewer
/// than three points or no positive doses.
///
/// Grid search over `log k` and `n`, then a shrinking pattern search.
pub fn fit_hill(xs: &[f64], ys: &[f64]) -> Option<HillFit> {
    let pts: Vec<(f64, f64)> = xs.iter().zip(ys).filter(|(x, _)| **x > 0.0).map(|(x, y)| (*x, *y)).collect();
    if pts.len() < 3 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min).ln() - 2.0;
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max).ln() + 2.0;
    let (n_min, n_max): (f64, f64) = (0.05, 30.0);
    let cost = |lk: f64, n: f64| profile(&xs, &ys, lk.exp(), n).1;

    let mut best = (f64::INFINITY, lo, 1.0);
    for i in 0..=80 {
        let lk = lo + (hi - lo) * i as f64 / 80.0;
        for j in 0..=80 {
            let n = n_min.ln() + (n_max.ln() - n_min.ln()) * j as f64 / 80.0;
            let n = n.exp();
            let c = cost(lk, n);
            if c < best.0 {
                best = (c, lk, n);
            }
        }
    }
    let (mut c, mut lk, mut n) = best;
    let (mut dk, mut dn) = ((hi - lo) / 80.0, 0.1);
    while dk > 1e-10 || dn > 1e-10 {
        let mut moved = false;
        for (a, b) in [(dk, 0.0), (-dk, 0.0), (0.0, dn), (0.0, -dn)] {
            let (lk2, n2) = (lk + a, (n * (1.0 + b)).clamp(n_min, n_max));
            let c2 = cost(lk2, n2);
            if c2 < c {
                (c, lk, n) = (c2, lk2, n2);
                moved = true;
            }
        }
        if !moved {
            dk *= 0.5;
            dn *= 0.5;
        }
    }
    let k = lk.exp();
    let (ymax, sse) = profile(&xs, &ys, k, n);
    Some(HillFit { ymax, k, n, sse })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_exact_curves() {
        for &(ymax, k, n) in &[(1.0, 5.0, 1.0), (0.8, 12.0, 3.5), (2.0, 0.5, 0.7)] {
            let truth = HillFit { ymax, k, n, sse: 0.0 };
            let xs: Vec<f64> = (1..=30).map(|i| k * 0.1 * i as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|&x| truth.eval(x)).collect();
            let f = fit_hill(&xs, &ys).unwrap();
            assert!((f.n - n).abs() < 1e-3 * n, "{f:?}");
            assert!((f.k - k).abs() < 1e-3 * k, "{f:?}");
            assert!((f.ymax - ymax).abs() < 1e-3, "{f:?}");
        }
    }

    #[test]
    fn steeper_data_gives_larger_exponent() {
        let xs: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let soft: Vec<f64> = xs.iter().map(|&x| x / (4.0 + x)).collect();
        let sharp: Vec<f64> = xs.iter().map(|&x| x.powi(4) / (625.0 + x.powi(4))).collect();
        assert!(fit_hill(&xs, &sharp).unwrap().n > fit_hill(&xs, &soft).unwrap().n);
    }

    #[test]
    fn too_few_points() {
        assert!(fit_hill(&[0.0, 1.0, 2.0], &[0.0, 0.1, 0.2]).is_none());
    }
}
