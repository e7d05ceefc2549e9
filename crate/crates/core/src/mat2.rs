//! Dense 2x2 matrices in face charts.
//!
//! All per-face operator algebra (shape operators, transported metrics,
//! bundle morphisms) lives on this type. A traceless symmetric matrix
//! `[[x, y], [y, -x]]` is the chart form of the real part of `t dz^2`
//! with `t = x - iy`.

use crate::scalar::{real, Cplx, Real};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub m: [[T; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn zero() -> Self {
        Mat2::new(T::zero(), T::zero(), T::zero(), T::zero())
    }

    /// Chart rotation by +pi/2 (the complex structure of any conformal metric).
    pub fn rotation_j() -> Self {
        Mat2::new(T::zero(), -T::one(), T::one(), T::zero())
    }

    /// Matrix of Re(t dz^2) in the chart: [[Re t, -Im t], [-Im t, -Re t]].
    pub fn from_quadratic(t: Cplx<T>) -> Self {
        Mat2::new(t.re, -t.im, -t.im, -t.re)
    }

    /// Inverse of `from_quadratic` on traceless symmetric matrices.
    pub fn to_quadratic(&self) -> Cplx<T> {
        Cplx::new(self.m[0][0], -self.m[0][1])
    }

    pub fn scale(&self, s: T) -> Self {
        Mat2::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn add(&self, o: &Self) -> Self {
        Mat2::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }

    pub fn sub(&self, o: &Self) -> Self {
        Mat2::new(
            self.m[0][0] - o.m[0][0],
            self.m[0][1] - o.m[0][1],
            self.m[1][0] - o.m[1][0],
            self.m[1][1] - o.m[1][1],
        )
    }

    pub fn mul(&self, o: &Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> T {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> T {
        self.m[0][0] + self.m[1][1]
    }

    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == T::zero() || !d.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.m[1][1] / d,
            -self.m[0][1] / d,
            -self.m[1][0] / d,
            self.m[0][0] / d,
        ))
    }

    pub fn apply(&self, v: [T; 2]) -> [T; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// v^T M w.
    pub fn pair(&self, v: [T; 2], w: [T; 2]) -> T {
        let mw = self.apply(w);
        v[0] * mw[0] + v[1] * mw[1]
    }

    pub fn max_abs(&self) -> T {
        let mut m = T::zero();
        for r in &self.m {
            for &x in r {
                m = m.max(x.abs());
            }
        }
        m
    }

    pub fn is_symmetric(&self, tol: T) -> bool {
        (self.m[0][1] - self.m[1][0]).abs() <= tol * (T::one() + self.max_abs())
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn sym_eigenvalues(&self) -> [T; 2] {
        let half = real::<T>(0.5);
        let mean = self.trace() * half;
        let d = ((self.m[0][0] - self.m[1][1]) * half).hypot(self.m[0][1]);
        [mean - d, mean + d]
    }

    /// Positive definiteness for a symmetric matrix.
    pub fn is_positive_definite(&self) -> bool {
        self.m[0][0] > T::zero() && self.det() > T::zero()
    }

    /// Complex structure compatible with a positive definite metric:
    /// J = (1/sqrt det G) [[-g12, -g22], [g11, g12]]. Satisfies J^2 = -E and
    /// G(Jx, Jy) = G(x, y), with the chart orientation.
    pub fn metric_complex_structure(&self) -> Option<Self> {
        let d = self.det();
        if d <= T::zero() {
            return None;
        }
        let s = d.sqrt().recip();
        Some(Mat2::new(
            -self.m[0][1] * s,
            -self.m[1][1] * s,
            self.m[0][0] * s,
            self.m[0][1] * s,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(rng: &mut ChaCha8Rng) -> Mat2<f64> {
        let a: f64 = rng.gen_range(-2.0..2.0);
        let b: f64 = rng.gen_range(-2.0..2.0);
        let c: f64 = rng.gen_range(-2.0..2.0);
        Mat2::new(a, b, b, c)
    }

    #[test]
    fn quadratic_round_trip() {
        let t = Cplx::new(0.7, -1.3);
        let m = Mat2::<f64>::from_quadratic(t);
        assert_eq!(m.trace(), 0.0);
        assert_eq!(m.to_quadratic(), t);
        // eigenvalues +-|t|
        let ev = m.sym_eigenvalues();
        let k = (0.7f64.powi(2) + 1.3f64.powi(2)).sqrt();
        assert!((ev[0] + k).abs() < 1e-14 && (ev[1] - k).abs() < 1e-14);
    }

    #[test]
    fn inverse_and_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let m = random_sym(&mut rng);
            if m.det().abs() < 1e-3 {
                continue;
            }
            let inv = m.inverse().unwrap();
            let p = m.mul(&inv);
            assert!((p.m[0][0] - 1.0).abs() < 1e-12);
            assert!((p.m[1][1] - 1.0).abs() < 1e-12);
            assert!(p.m[0][1].abs() < 1e-12 && p.m[1][0].abs() < 1e-12);
        }
    }

    #[test]
    fn complex_structure_of_metric() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(0.5..2.0);
            let b: f64 = rng.gen_range(-0.4..0.4);
            let c: f64 = rng.gen_range(0.5..2.0);
            let g = Mat2::new(a, b, b, c);
            if !g.is_positive_definite() {
                continue;
            }
            let j = g.metric_complex_structure().unwrap();
            let jj = j.mul(&j);
            assert!((jj.m[0][0] + 1.0).abs() < 1e-12 && (jj.m[1][1] + 1.0).abs() < 1e-12);
            // isometry: J^T G J = G
            let gj = j.transpose().mul(&g).mul(&j);
            assert!(gj.sub(&g).max_abs() < 1e-12);
        }
    }
}
