//! Strided matrix multiply on top of `matrixmultiply::dgemm`.

/// Borrowed strided view of a row/column addressed matrix.
#[derive(Clone, Copy)]
pub struct MatRef<'a> {
    pub data: &'a [f64],
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> MatRef<'a> {
    /// Contiguous row-major matrix.
    pub fn rm(data: &'a [f64], rows: usize, cols: usize) -> Self {
        Self {
            data,
            offset: 0,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    pub fn t(self) -> Self {
        Self {
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
            ..self
        }
    }

    pub fn at(self, offset: usize) -> Self {
        Self { offset, ..self }
    }

    pub fn with_strides(self, row_stride: usize, col_stride: usize) -> Self {
        Self {
            row_stride,
            col_stride,
            ..self
        }
    }

    pub fn with_dims(self, rows: usize, cols: usize) -> Self {
        Self { rows, cols, ..self }
    }

    fn check(&self) {
        if self.rows == 0 || self.cols == 0 {
            return;
        }
        let last = self.offset + (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride;
        assert!(last < self.data.len(), "matrix view out of bounds");
    }
}

/// Output view for [`gemm`].
pub struct MatMut<'a> {
    pub data: &'a mut [f64],
    pub offset: usize,
    pub row_stride: usize,
    pub col_stride: usize,
}

impl<'a> MatMut<'a> {
    pub fn rm(data: &'a mut [f64], cols: usize) -> Self {
        Self {
            data,
            offset: 0,
            row_stride: cols,
            col_stride: 1,
        }
    }

    pub fn at(self, offset: usize) -> Self {
        Self { offset, ..self }
    }

    pub fn with_strides(self, row_stride: usize, col_stride: usize) -> Self {
        Self {
            row_stride,
            col_stride,
            ..self
        }
    }
}

/// `c = alpha * a * b + beta * c`.
pub fn gemm(alpha: f64, a: MatRef<'_>, b: MatRef<'_>, beta: f64, c: MatMut<'_>) {
    assert_eq!(a.cols, b.rows, "gemm inner dimensions");
    a.check();
    b.check();
    let (m, k, n) = (a.rows, a.cols, b.cols);
    if m == 0 || n == 0 {
        return;
    }
    let last = c.offset + (m - 1) * c.row_stride + (n - 1) * c.col_stride;
    assert!(last < c.data.len(), "gemm output out of bounds");
    // SAFETY: every index touched by dgemm lies within the slices, checked above; the
    // output slice is uniquely borrowed and cannot alias the inputs.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.data.as_ptr().add(a.offset),
            a.row_stride as isize,
            a.col_stride as isize,
            b.data.as_ptr().add(b.offset),
            b.row_stride as isize,
            b.col_stride as isize,
            beta,
            c.data.as_mut_ptr().add(c.offset),
            c.row_stride as isize,
            c.col_stride as isize,
        );
    }
}

/// Row-major `a (m x k) * b (k x n)` into a fresh buffer.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    gemm(
        1.0,
        MatRef::rm(a, m, k),
        MatRef::rm(b, k, n),
        0.0,
        MatMut::rm(&mut out, n),
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                out[i * n + j] = (0..k).map(|p| a[i * k + p] * b[p * n + j]).sum();
            }
        }
        out
    }

    #[test]
    fn matches_naive_product() {
        let a: Vec<f64> = (0..12).map(|i| i as f64 * 0.5 - 2.0).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sin()).collect();
        let got = matmul(&a, &b, 3, 4, 5);
        let want = naive(&a, &b, 3, 4, 5);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-12);
        }
    }

    #[test]
    fn transposed_views() {
        let a: Vec<f64> = (0..6).map(|i| i as f64).collect(); // 2x3
        let mut out = vec![0.0; 9];
        // a^T (3x2) * a (2x3)
        gemm(
            1.0,
            MatRef::rm(&a, 2, 3).t(),
            MatRef::rm(&a, 2, 3),
            0.0,
            MatMut::rm(&mut out, 3),
        );
        let at: Vec<f64> = vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0];
        assert_eq!(out, naive(&at, &a, 3, 2, 3));
    }
}
