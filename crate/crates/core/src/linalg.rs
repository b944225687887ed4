//! Tiny dense vector/matrix helpers for dimensions up to 4.
//!
//! Points are `&[f64]` slices; group elements are row-major square matrices.

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Row-major `n x n` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    pub n: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            data[i * n + i] = 1.0;
        }
        Mat { n, data }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n).map(|i| dot(&self.data[i * n..(i + 1) * n], x)).collect()
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.at(i, k) * other.at(k, j);
                }
                data[i * n + j] = s;
            }
        }
        Mat { n, data }
    }

    pub fn transpose(&self) -> Mat {
        let n = self.n;
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[j * n + i] = self.at(i, j);
            }
        }
        Mat { n, data }
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        let n = self.n;
        self.data
            .iter()
            .enumerate()
            .all(|(k, &v)| (v - if k / n == k % n { 1.0 } else { 0.0 }).abs() <= tol)
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Orthogonality defect `max |M^T M - I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        self.transpose().mul(self).max_abs_diff(&Mat::identity(self.n))
    }
}

/// Reflection across the hyperplane orthogonal to `alpha`.
pub fn reflection_matrix(alpha: &[f64]) -> Mat {
    let n = alpha.len();
    let nsq = dot(alpha, alpha);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            data[i * n + j] =
                if i == j { 1.0 } else { 0.0 } - 2.0 * alpha[i] * alpha[j] / nsq;
        }
    }
    Mat { n, data }
}

pub fn reflect(alpha: &[f64], x: &[f64]) -> Vec<f64> {
    let c = 2.0 * dot(alpha, x) / dot(alpha, alpha);
    x.iter().zip(alpha).map(|(xi, ai)| xi - c * ai).collect()
}
