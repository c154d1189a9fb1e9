//! Small dense-vector helpers over `&[f64]`.
//!
//! The state vectors in this crate are short (a few hundred entries at most),
//! so plain slices are used instead of a matrix library.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0, |acc, (x, y)| acc + x * y)
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// Mean of `n` stacked blocks of size `d`.
pub fn block_mean(x: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mut mean = vec![0.0; d];
    if n == 0 {
        return mean;
    }
    for block in x.chunks_exact(d.max(1)).take(n) {
        for (m, v) in mean.iter_mut().zip(block) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    mean
}

/// `(M ⊗ I_d) x`: every block replaced by the block mean.
pub fn mean_stack(x: &[f64], n: usize, d: usize) -> Vec<f64> {
    let mean = block_mean(x, n, d);
    let mut out = Vec::with_capacity(n * d);
    for _ in 0..n {
        out.extend_from_slice(&mean);
    }
    out
}

/// Maximizer of a unimodal function on `[lo, hi]` by golden-section search.
///
/// Returns the best of the final bracket midpoint and the two endpoints, so
/// boundary maxima are found exactly.
pub fn golden_section_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if b - a <= f64::EPSILON * (a.abs() + b.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let mid = 0.5 * (a + b);
    [(mid, f(mid)), (lo, f(lo)), (hi, f(hi))].into_iter().fold(
        (mid, f64::NEG_INFINITY),
        |best, cand| if cand.1 > best.1 { cand } else { best },
    )
}

/// Row-major dense square matrix, used for Laplacians and their spectra.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SquareMatrix {
    pub fn zeros(n: usize) -> Self {
        SquareMatrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "matrix must be square");
            data.extend_from_slice(r);
        }
        SquareMatrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }

    pub fn transpose_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            axpy(x[i], self.row(i), &mut out);
        }
        out
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            axpy(1.0, self.row(i), &mut out);
        }
        out
    }

    /// Largest singular value by power iteration on `AᵀA`.
    ///
    /// Stops once the Rayleigh-quotient residual `‖AᵀA v − λv‖` drops below
    /// `rel_tol · λ`.
    pub fn max_singular_value(&self, rel_tol: f64, max_iter: usize) -> f64 {
        let n = self.n;
        if n == 0 {
            return 0.0;
        }
        // Deterministic, generic start vector (not orthogonal to any fixed
        // eigenvector of small structured matrices).
        let mut v: Vec<f64> = (0..n)
            .map(|i| 1.0 + ((i as f64 + 1.0) * 0.7548776662).fract())
            .collect();
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);

        let mut lambda = 0.0;
        for _ in 0..max_iter {
            let av = self.mul_vec(&v);
            let w = self.transpose_mul_vec(&av);
            lambda = dot(&v, &w);
            let wn = norm(&w);
            if wn == 0.0 {
                return 0.0;
            }
            let residual: f64 = w
                .iter()
                .zip(&v)
                .map(|(wi, vi)| (wi - lambda * vi).powi(2))
                .sum::<f64>()
                .sqrt();
            v = w.into_iter().map(|x| x / wn).collect();
            if residual <= rel_tol * lambda.abs() {
                break;
            }
        }
        lambda.max(0.0).sqrt()
    }
}
