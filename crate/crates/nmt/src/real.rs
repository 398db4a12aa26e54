//! Scalar abstraction so the network runs in `f32` for training and `f64`
//! for finite-difference gradient checks.

use num_traits::Float;

pub trait Real: Float + Default + std::fmt::Debug + std::ops::AddAssign + std::ops::SubAssign + Send + Sync + 'static {
    fn of(x: f64) -> Self;

    /// `C = alpha * A B + beta * C` with arbitrary element strides.
    ///
    /// # Safety
    /// The strides and extents must stay within the backing allocations.
    #[allow(clippy::too_many_arguments)]
    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: Self,
        a: *const Self,
        rsa: isize,
        csa: isize,
        b: *const Self,
        rsb: isize,
        csb: isize,
        beta: Self,
        c: *mut Self,
        rsc: isize,
        csc: isize,
    );
}

impl Real for f32 {
    fn of(x: f64) -> Self {
        x as f32
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f32,
        a: *const f32,
        rsa: isize,
        csa: isize,
        b: *const f32,
        rsb: isize,
        csb: isize,
        beta: f32,
        c: *mut f32,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::sgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    unsafe fn gemm_raw(
        m: usize,
        k: usize,
        n: usize,
        alpha: f64,
        a: *const f64,
        rsa: isize,
        csa: isize,
        b: *const f64,
        rsb: isize,
        csb: isize,
        beta: f64,
        c: *mut f64,
        rsc: isize,
        csc: isize,
    ) {
        matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc);
    }
}

/// A strided matrix view into a slice.
#[derive(Clone, Copy)]
pub struct View<'a, T> {
    pub data: &'a [T],
    pub offset: usize,
    pub rs: usize,
    pub cs: usize,
}

impl<'a, T> View<'a, T> {
    /// Row-major `rows x cols` matrix starting at `offset`.
    pub fn rows(data: &'a [T], offset: usize, cols: usize) -> Self {
        View { data, offset, rs: cols, cs: 1 }
    }

    /// Transpose of a row-major matrix with `cols` columns.
    pub fn t(data: &'a [T], offset: usize, cols: usize) -> Self {
        View { data, offset, rs: 1, cs: cols }
    }

    /// Sub-block with an explicit row stride (e.g. one attention head).
    pub fn strided(data: &'a [T], offset: usize, rs: usize) -> Self {
        View { data, offset, rs, cs: 1 }
    }

    pub fn transposed(self) -> Self {
        View { rs: self.cs, cs: self.rs, ..self }
    }

    fn last(&self, r: usize, c: usize) -> usize {
        if r == 0 || c == 0 {
            self.offset
        } else {
            self.offset + (r - 1) * self.rs + (c - 1) * self.cs
        }
    }
}

/// `C[m x n] (+)= A[m x k] * B[k x n]`, where C is row-major with row
/// stride `rsc` starting at `c_off`.
#[allow(clippy::too_many_arguments)]
pub fn gemm<T: Real>(
    m: usize,
    k: usize,
    n: usize,
    a: View<'_, T>,
    b: View<'_, T>,
    c: &mut [T],
    c_off: usize,
    rsc: usize,
    accumulate: bool,
) {
    if m == 0 || n == 0 {
        return;
    }
    assert!(k == 0 || a.last(m, k) < a.data.len(), "gemm: A out of bounds");
    assert!(k == 0 || b.last(k, n) < b.data.len(), "gemm: B out of bounds");
    assert!(c_off + (m - 1) * rsc + n <= c.len(), "gemm: C out of bounds");
    let beta = if accumulate { T::one() } else { T::zero() };
    if k == 0 {
        if !accumulate {
            for i in 0..m {
                c[c_off + i * rsc..c_off + i * rsc + n].fill(T::zero());
            }
        }
        return;
    }
    // SAFETY: extents were checked against the slice lengths above.
    unsafe {
        T::gemm_raw(
            m,
            k,
            n,
            T::one(),
            a.data.as_ptr().add(a.offset),
            a.rs as isize,
            a.cs as isize,
            b.data.as_ptr().add(b.offset),
            b.rs as isize,
            b.cs as isize,
            beta,
            c.as_mut_ptr().add(c_off),
            rsc as isize,
            1,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gemm_matches_naive_with_transposes() {
        let a: Vec<f64> = (0..6).map(|x| x as f64).collect(); // 2x3
        let b: Vec<f64> = (0..12).map(|x| (x as f64) * 0.5).collect(); // 3x4
        let mut c = vec![0.0; 8];
        gemm(2, 3, 4, View::rows(&a, 0, 3), View::rows(&b, 0, 4), &mut c, 0, 4, false);
        for i in 0..2 {
            for j in 0..4 {
                let s: f64 = (0..3).map(|p| a[i * 3 + p] * b[p * 4 + j]).sum();
                assert_eq!(c[i * 4 + j], s);
            }
        }
        // A^T B where A is 3x2 stored row-major
        let at: Vec<f64> = vec![0.0, 3.0, 1.0, 4.0, 2.0, 5.0];
        let mut c2 = vec![0.0; 8];
        gemm(2, 3, 4, View::t(&at, 0, 2), View::rows(&b, 0, 4), &mut c2, 0, 4, false);
        assert_eq!(c, c2);
    }
}
