//! Small dense LU factorization with partial pivoting.

/// `P A = L U` for a square row-major matrix.
#[derive(Debug, Clone)]
pub(crate) struct Lu {
    size: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Returns `None` when a pivot falls below `pivot_tol` times the largest
    /// entry of its column.
    pub(crate) fn factor(size: usize, mut a: Vec<f64>, pivot_tol: f64) -> Option<Lu> {
        debug_assert_eq!(a.len(), size * size);
        let mut perm: Vec<usize> = (0..size).collect();
        for k in 0..size {
            let (p, piv) = (k..size)
                .map(|r| (r, a[r * size + k].abs()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            let scale = (0..size).map(|r| a[r * size + k].abs()).fold(1.0f64, f64::max);
            if piv <= pivot_tol * scale {
                return None;
            }
            if p != k {
                for c in 0..size {
                    a.swap(k * size + c, p * size + c);
                }
                perm.swap(k, p);
            }
            let d = a[k * size + k];
            for r in k + 1..size {
                let f = a[r * size + k] / d;
                if f == 0.0 {
                    continue;
                }
                a[r * size + k] = f;
                for c in k + 1..size {
                    a[r * size + c] -= f * a[k * size + c];
                }
            }
        }
        Some(Lu { size, lu: a, perm })
    }

    /// Solves `A x = b`.
    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.size;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let mut s = x[r];
            for c in 0..r {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s;
        }
        for r in (0..n).rev() {
            let mut s = x[r];
            for c in r + 1..n {
                s -= self.lu[r * n + c] * x[c];
            }
            x[r] = s / self.lu[r * n + r];
        }
        x
    }

    /// Solves `A' y = c`.
    pub(crate) fn solve_transpose(&self, c: &[f64]) -> Vec<f64> {
        let n = self.size;
        // A' = U' L' P, so solve U' w = c, L' v = w, then y = P' v.
        let mut w = c.to_vec();
        for r in 0..n {
            let mut s = w[r];
            for k in 0..r {
                s -= self.lu[k * n + r] * w[k];
            }
            w[r] = s / self.lu[r * n + r];
        }
        for r in (0..n).rev() {
            let mut s = w[r];
            for k in r + 1..n {
                s -= self.lu[k * n + r] * w[k];
            }
            w[r] = s;
        }
        let mut y = vec![0.0; n];
        for (k, &p) in self.perm.iter().enumerate() {
            y[p] = w[k];
        }
        y
    }
}
