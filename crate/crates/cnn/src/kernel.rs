//! Dense vector and matrix routines. Matrices are row-major slices.

use std::fmt::Debug;

use num_traits::Float;

/// Scalar type the model runs on: `f32` for training and scoring, `f64` for
/// gradient checking.
pub trait Real: Float + Send + Sync + Debug + Default + 'static {
    fn of(x: f64) -> Self {
        Self::from(x).expect("finite f64 converts")
    }

    fn f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Dot product with eight independent accumulators so the loop vectorizes.
#[inline]
pub fn dot<F: Real>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [F::zero(); 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..8 {
            acc[l] = acc[l] + x[l] * y[l];
        }
    }
    let mut s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
    for (x, y) in ra.iter().zip(rb) {
        s = s + *x * *y;
    }
    s
}

/// `y += alpha * x`.
#[inline]
pub fn axpy<F: Real>(alpha: F, x: &[F], y: &mut [F]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * *xi;
    }
}

/// `out = W x + b` for `W` of shape `(rows, x.len())`.
pub fn affine<F: Real>(w: &[F], b: &[F], x: &[F], out: &mut [F]) {
    let cols = x.len();
    debug_assert_eq!(w.len(), b.len() * cols);
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&w[r * cols..(r + 1) * cols], x) + b[r];
    }
}

/// Backward of [`affine`]: accumulates `dW += g xᵀ`, `db += g`, and `dx += Wᵀ g`.
pub fn affine_backward<F: Real>(w: &[F], x: &[F], g: &[F], dw: &mut [F], db: &mut [F], dx: Option<&mut [F]>) {
    let cols = x.len();
    for (r, gr) in g.iter().enumerate() {
        axpy(*gr, x, &mut dw[r * cols..(r + 1) * cols]);
        db[r] = db[r] + *gr;
    }
    if let Some(dx) = dx {
        for (r, gr) in g.iter().enumerate() {
            axpy(*gr, &w[r * cols..(r + 1) * cols], dx);
        }
    }
}

/// Two-way softmax in double precision.
pub fn softmax2(l0: f64, l1: f64) -> [f64; 2] {
    let m = l0.max(l1);
    let (e0, e1) = ((l0 - m).exp(), (l1 - m).exp());
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dot_matches_naive() {
        let a: Vec<f64> = (0..19).map(|i| i as f64 * 0.5 - 3.0).collect();
        let b: Vec<f64> = (0..19).map(|i| (i as f64).sin()).collect();
        let naive: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - naive).abs() < 1e-12);
        assert_eq!(dot::<f32>(&[], &[]), 0.0);
    }

    #[test]
    fn affine_and_backward() {
        let w = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let mut out = [0.0; 2];
        affine(&w, &[0.5, -1.0], &[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, [-1.5, -3.0]);
        let (mut dw, mut db, mut dx) = ([0.0; 6], [0.0; 2], [0.0; 3]);
        affine_backward(&w, &[1.0, 0.0, -1.0], &[1.0, 2.0], &mut dw, &mut db, Some(&mut dx));
        assert_eq!(dw, [1.0, 0.0, -1.0, 2.0, 0.0, -2.0]);
        assert_eq!(db, [1.0, 2.0]);
        assert_eq!(dx, [9.0, 12.0, 15.0]);
    }

    #[test]
    fn softmax_is_normalized() {
        let p = softmax2(1000.0, -1000.0);
        assert_eq!(p, [1.0, 0.0]);
        let p = softmax2(0.3, 0.3);
        assert_eq!(p, [0.5, 0.5]);
    }
}
