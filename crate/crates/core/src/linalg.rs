//! Dense linear algebra for matrices of order 1 to 3.
//!
//! Eigenvalues come from the characteristic polynomial: closed form for the
//! quadratic, a trigonometric/Cardano real root plus Newton polish and
//! deflation for the cubic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallMatrix {
    pub n: usize,
    pub m: [[f64; 3]; 3],
}

impl SmallMatrix {
    pub fn zeros(n: usize) -> Self {
        assert!((1..=3).contains(&n), "order must be 1, 2 or 3");
        Self { n, m: [[0.0; 3]; 3] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[i][j]
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.m[i][i]).sum()
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        match self.n {
            1 => m[0][0],
            2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
            _ => {
                m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
                    - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                    + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
            }
        }
    }

    /// Sum of principal 2x2 minors.
    fn principal_minor_sum(&self) -> f64 {
        let m = &self.m;
        m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
            + m[1][1] * m[2][2]
            - m[1][2] * m[2][1]
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        match self.n {
            1 => vec![Complex64::new(self.m[0][0], 0.0)],
            2 => quadratic_roots(-self.trace(), self.determinant()).to_vec(),
            _ => cubic_roots(-self.trace(), self.principal_minor_sum(), -self.determinant()).to_vec(),
        }
    }

    /// Solve `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` for a (numerically) singular matrix.
    pub fn solve(&self, b: &[f64]) -> Option<[f64; 3]> {
        let n = self.n;
        let mut a = self.m;
        let mut rhs = [0.0; 3];
        rhs[..n].copy_from_slice(&b[..n]);
        let scale = a
            .iter()
            .take(n)
            .flat_map(|r| r.iter().take(n))
            .fold(0.0_f64, |s, v| s.max(v.abs()));
        if scale == 0.0 {
            return None;
        }
        for col in 0..n {
            let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[piv][col].abs() <= 1e-300_f64.max(scale * 1e-15) {
                return None;
            }
            a.swap(col, piv);
            rhs.swap(col, piv);
            for row in col + 1..n {
                let f = a[row][col] / a[col][col];
                for k in col..n {
                    a[row][k] -= f * a[col][k];
                }
                rhs[row] -= f * rhs[col];
            }
        }
        let mut x = [0.0; 3];
        for row in (0..n).rev() {
            let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
            x[row] = (rhs[row] - s) / a[row][row];
        }
        Some(x)
    }
}

/// Roots of `z^2 + b z + c`.
pub fn quadratic_roots(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        // Avoid cancellation: q = -(b + sign(b) sqrt(disc)) / 2.
        let q = -0.5 * (b + if b >= 0.0 { sq } else { -sq });
        if q == 0.0 {
            return [Complex64::new(0.0, 0.0); 2];
        }
        let (r1, r2) = (q, c / q);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

/// Roots of `z^3 + b z^2 + c z + d`.
pub fn cubic_roots(b: f64, c: f64, d: f64) -> [Complex64; 3] {
    let poly = |z: f64| ((z + b) * z + c) * z + d;
    let dpoly = |z: f64| (3.0 * z + 2.0 * b) * z + c;

    // Depressed cubic t^3 + p t + q with z = t - b/3.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let t = if disc > 0.0 {
        let sq = disc.sqrt();
        (-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt()
    } else if p == 0.0 {
        0.0
    } else {
        let r = (-p / 3.0).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        2.0 * r * (arg.acos() / 3.0).cos()
    };
    let mut z = t - shift;
    for _ in 0..3 {
        let dz = dpoly(z);
        if dz == 0.0 {
            break;
        }
        let next = z - poly(z) / dz;
        if !next.is_finite() || poly(next).abs() >= poly(z).abs() {
            break;
        }
        z = next;
    }
    // Deflate: (w - z)(w^2 + (b + z) w + (c + z (b + z))).
    let [r1, r2] = quadratic_roots(b + z, c + z * (b + z));
    let mut roots = [Complex64::new(z, 0.0), r1, r2];
    roots.sort_by(|u, v| u.re.total_cmp(&v.re).then(u.im.total_cmp(&v.im)));
    roots
}
