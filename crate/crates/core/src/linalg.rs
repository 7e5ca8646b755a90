/// Solve a tridiagonal system in place. `sub[i]` couples row i to i-1,
/// `sup[i]` couples row i to i+1; `rhs` is overwritten with the solution.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = diag.len();
    if n == 0 {
        return;
    }
    scratch.clear();
    scratch.resize(n, 0.0);
    let mut beta = diag[0];
    rhs[0] /= beta;
    for i in 1..n {
        scratch[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * scratch[i];
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
    }
}

/// Cholesky factor of a symmetric positive definite band matrix, stored by
/// rows as `band[i][d] = A[i][i - d]` for `d <= b`.
#[derive(Clone, Debug)]
pub struct BandCholesky {
    b: usize,
    l: Vec<Vec<f64>>,
}

impl BandCholesky {
    pub fn new(mut band: Vec<Vec<f64>>) -> Option<Self> {
        let n = band.len();
        let b = band.first().map_or(0, |r| r.len() - 1);
        for i in 0..n {
            for d in (1..=b.min(i)).rev() {
                let j = i - d;
                let mut s = band[i][d];
                for e in 1..=(b - d).min(j) {
                    s -= band[i][d + e] * band[j][e];
                }
                band[i][d] = s / band[j][0];
            }
            let mut s = band[i][0];
            for d in 1..=b.min(i) {
                s -= band[i][d] * band[i][d];
            }
            if !(s > 0.0) {
                return None;
            }
            band[i][0] = s.sqrt();
        }
        Some(Self { b, l: band })
    }

    pub fn solve(&self, x: &mut [f64]) {
        let n = self.l.len();
        for i in 0..n {
            let mut s = x[i];
            for d in 1..=self.b.min(i) {
                s -= self.l[i][d] * x[i - d];
            }
            x[i] = s / self.l[i][0];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for d in 1..=self.b.min(n - 1 - i) {
                s -= self.l[i + d][d] * x[i + d];
            }
            x[i] = s / self.l[i][0];
        }
    }
}
