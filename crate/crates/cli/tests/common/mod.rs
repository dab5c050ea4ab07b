//! Dense continuous-time Markov chain solver used as an independent oracle
//! for small simulations.

/// Generator matrix `q[i][j]` (rate i -> j for i != j); the diagonal is
/// filled in by the solvers.
pub struct Ctmc {
    pub q: Vec<Vec<f64>>,
}

impl Ctmc {
    pub fn new(n: usize) -> Ctmc {
        Ctmc { q: vec![vec![0.0; n]; n] }
    }

    pub fn add(&mut self, from: usize, to: usize, rate: f64) {
        if from != to && rate > 0.0 {
            self.q[from][to] += rate;
        }
    }

    fn len(&self) -> usize {
        self.q.len()
    }

    fn exit(&self, i: usize) -> f64 {
        self.q[i].iter().enumerate().filter(|(j, _)| *j != i).map(|(_, r)| r).sum()
    }

    /// Solves `pi Q = 0`, `sum pi = 1` by Gaussian elimination with partial
    /// pivoting on the transposed system.
    pub fn stationary(&self) -> Vec<f64> {
        let n = self.len();
        let mut a = vec![vec![0.0; n + 1]; n];
        for i in 0..n {
            for j in 0..n {
                a[j][i] = if i == j { -self.exit(i) } else { self.q[i][j] };
            }
        }
        for j in 0..=n {
            a[n - 1][j] = 1.0;
        }
        for col in 0..n {
            let piv = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs())).unwrap();
            a.swap(col, piv);
            let p = a[col][col];
            for j in col..=n {
                a[col][j] /= p;
            }
            for r in 0..n {
                if r != col && a[r][col] != 0.0 {
                    let f = a[r][col];
                    for j in col..=n {
                        a[r][j] -= f * a[col][j];
                    }
                }
            }
        }
        (0..n).map(|i| a[i][n]).collect()
    }

    /// Distribution at time `t` from `p0`, by uniformization.
    pub fn transient(&self, p0: &[f64], t: f64) -> Vec<f64> {
        let n = self.len();
        let lambda = (0..n).map(|i| self.exit(i)).fold(0.0, f64::max).max(1e-12);
        let step = |p: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for i in 0..n {
                out[i] += p[i] * (1.0 - self.exit(i) / lambda);
                for j in 0..n {
                    if j != i {
                        out[j] += p[i] * self.q[i][j] / lambda;
                    }
                }
            }
            out
        };
        let lt = lambda * t;
        let mut weight = (-lt).exp();
        let mut p = p0.to_vec();
        let mut acc: Vec<f64> = p.iter().map(|x| x * weight).collect();
        let mut mass = weight;
        let mut k = 0.0;
        while 1.0 - mass > 1e-13 && k < 100_000.0 {
            k += 1.0;
            p = step(&p);
            weight *= lt / k;
            mass += weight;
            for i in 0..n {
                acc[i] += weight * p[i];
            }
        }
        acc
    }
}

/// Upper critical values of the chi-squared distribution at alpha = 0.001.
pub fn chi2_critical_001(df: usize) -> f64 {
    [10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877, 29.588][df - 1]
}
