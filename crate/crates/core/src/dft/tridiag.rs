//! Symmetric tridiagonal linear algebra: solves, Sturm counts, eigenpairs.

/// Symmetric tridiagonal matrix with diagonal `d` and off-diagonal `e`
/// (`e[i]` couples rows `i` and `i + 1`).
#[derive(Debug, Clone)]
pub struct SymTridiag {
    pub d: Vec<f64>,
    pub e: Vec<f64>,
}

impl SymTridiag {
    pub fn new(d: Vec<f64>, e: Vec<f64>) -> Self {
        assert_eq!(e.len() + 1, d.len(), "off-diagonal must be one shorter");
        Self { d, e }
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.d[i] * x[i];
            if i > 0 {
                s += self.e[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.e[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn sturm_count(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = self.d[0] - x;
        if q < 0.0 {
            count += 1;
        }
        for i in 1..self.len() {
            let denom = if q == 0.0 { f64::EPSILON * (self.e[i - 1].abs() + 1e-300) } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / denom;
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing every eigenvalue.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let mut r = 0.0;
            if i > 0 {
                r += self.e[i - 1].abs();
            }
            if i + 1 < n {
                r += self.e[i].abs();
            }
            lo = lo.min(self.d[i] - r);
            hi = hi.max(self.d[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn eigenvalue(&self, k: usize) -> f64 {
        let (lo, hi) = self.gershgorin();
        self.eigenvalue_in(k, lo, hi)
    }

    /// Bisection restricted to `[lo, hi]`; the bracket is widened if it does
    /// not contain eigenvalue `k`.
    pub fn eigenvalue_in(&self, k: usize, mut lo: f64, mut hi: f64) -> f64 {
        let (glo, ghi) = self.gershgorin();
        if self.sturm_count(lo) > k {
            lo = glo;
        }
        if self.sturm_count(hi) <= k {
            hi = ghi;
        }
        let scale = glo.abs().max(ghi.abs()).max(1e-300);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo < 4.0 * f64::EPSILON * scale {
                break;
            }
            if self.sturm_count(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenpair `k` with a unit-norm (Euclidean) eigenvector. `guess` seeds
    /// the inverse iteration when available.
    pub fn eigenpair(&self, k: usize, guess: Option<(f64, &[f64])>) -> (f64, Vec<f64>) {
        let lambda = match guess {
            Some((e, _)) => {
                let w = 1e-3 * (1.0 + e.abs());
                self.eigenvalue_in(k, e - w, e + w)
            }
            None => self.eigenvalue(k),
        };
        let n = self.len();
        let mut x: Vec<f64> = match guess {
            Some((_, v)) if v.len() == n => v.to_vec(),
            _ => (0..n).map(|i| 1.0 + 0.1 * ((i * 7919) % 13) as f64).collect(),
        };
        normalize(&mut x);
        let (glo, ghi) = self.gershgorin();
        let shift = lambda - 1e-13 * (ghi - glo).max(1.0);
        for _ in 0..3 {
            x = solve_shifted(self, shift, &x);
            normalize(&mut x);
        }
        let hx = self.mul_vec(&x);
        let rq: f64 = x.iter().zip(&hx).map(|(a, b)| a * b).sum();
        // sign convention: first significant sample positive
        if let Some(first) = x.iter().find(|v| v.abs() > 1e-8) {
            if *first < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
        }
        (rq, x)
    }
}

pub fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Solve `(T - shift·I) x = b` by Gaussian elimination with partial pivoting.
pub fn solve_shifted(t: &SymTridiag, shift: f64, b: &[f64]) -> Vec<f64> {
    let n = t.len();
    let sub: Vec<f64> = t.e.clone();
    let diag: Vec<f64> = t.d.iter().map(|d| d - shift).collect();
    let sup: Vec<f64> = t.e.clone();
    solve_general(&sub, &diag, &sup, b, n)
}

/// General tridiagonal solve with partial pivoting (the LAPACK `gtsv` scheme).
/// `sub[i]` sits at (i+1, i), `sup[i]` at (i, i+1).
pub fn solve_general(sub: &[f64], diag: &[f64], sup: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    let mut x = b.to_vec();
    let tiny = 1e-300;
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let f = dl[i] / d[i];
            d[i + 1] -= f * du[i];
            x[i + 1] -= f * x[i];
            dl[i] = 0.0;
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - f * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] *= -f;
            }
            du[i] = tmp;
            x.swap(i, i + 1);
            x[i + 1] -= f * x[i];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    x
}

/// Thomas algorithm for a symmetric positive definite tridiagonal system.
pub fn solve_spd(d: &[f64], e: &[f64], b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut denom = d[0];
    c[0] = if n > 1 { e[0] / denom } else { 0.0 };
    x[0] = b[0] / denom;
    for i in 1..n {
        denom = d[i] - e[i - 1] * c[i - 1];
        if i + 1 < n {
            c[i] = e[i] / denom;
        }
        x[i] = (b[i] - e[i - 1] * x[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x
}
