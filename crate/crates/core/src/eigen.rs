//! Smallest generalized eigenvalues of `H x = lambda M x` with `M` a positive
//! diagonal mass. Used for the stability spectrum of solved Gauss problems.
//!
//! Strategy: shift `H` until it factors, then run inverse subspace iteration
//! with mass-orthonormalization and a Rayleigh-Ritz projection solved by
//! cyclic Jacobi. The shift only preconditions the iteration; Ritz values are
//! taken from `H` itself.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use crate::sparse::{EnvelopeCholesky, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Eigenvalues (ascending) of a small dense symmetric matrix, cyclic Jacobi.
pub fn jacobi_eigenvalues<T: Real>(a: &mut Vec<Vec<T>>) -> Vec<T> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let tol = real::<T>(1e-14);
    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[p][q].abs());
            }
        }
        let scale: T = (0..n).map(|i| a[i][i].abs()).fold(T::zero(), |m, x| m.max(x));
        if off <= tol * (T::one() + scale) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq.abs() <= tol * (T::one() + scale) {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (real::<T>(2.0) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = (t * t + T::one()).sqrt().recip();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

fn mass_dot<T: Real>(mass: &[T], x: &[T], y: &[T]) -> T {
    x.iter()
        .zip(y)
        .zip(mass)
        .map(|((&a, &b), &m)| a * b * m)
        .sum()
}

/// `k` smallest eigenvalues of the pencil `(h, diag(mass))`, ascending.
pub fn smallest_generalized<T: Real>(
    h: &SparseOperator<T>,
    mass: &[T],
    k: usize,
) -> Result<Vec<T>> {
    let n = h.n;
    assert_eq!(mass.len(), n);
    if k == 0 {
        return Ok(Vec::new());
    }
    if k > n {
        return Err(Error::Eigen(format!("requested {k} eigenvalues of a {n}-dim pencil")));
    }

    // dense fallback for small problems: M^{-1/2} H M^{-1/2}
    if n <= 96 {
        let mut dense = vec![vec![T::zero(); n]; n];
        for i in 0..n {
            for p in h.row_ptr[i]..h.row_ptr[i + 1] {
                let j = h.col_idx[p];
                dense[i][j] = h.values[p] / (mass[i] * mass[j]).sqrt();
            }
        }
        let ev = jacobi_eigenvalues(&mut dense);
        return Ok(ev[..k].to_vec());
    }

    // shift until the factorization exists
    let scale: T = {
        let d = h.diagonal();
        let mut m: Vec<T> = d.iter().map(|x| x.abs()).collect();
        m.sort_by(|a, b| a.partial_cmp(b).unwrap());
        m[n / 2].max(real::<T>(1e-30))
    };
    let mut shift = T::zero();
    let chol = loop {
        let extra: Vec<T> = mass.iter().map(|&m| m * shift).collect();
        match EnvelopeCholesky::factor(h, Some(&extra)) {
            Ok(c) => break c,
            Err(_) => {
                shift = if shift == T::zero() {
                    real::<T>(1e-10) * scale
                } else {
                    shift * real::<T>(100.0)
                };
                if shift > real::<T>(1e12) * scale {
                    return Err(Error::Eigen("cannot shift Hessian to positive definite".into()));
                }
            }
        }
    };

    let m_sub = (2 * k + 4).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6765_726d);
    let mut basis: Vec<Vec<T>> = (0..m_sub)
        .map(|_| (0..n).map(|_| real::<T>(rng.gen_range(-1.0..1.0))).collect())
        .collect();

    let mut prev: Vec<T> = vec![T::max_value(); k];
    for _iter in 0..200 {
        // inverse step: X <- (H + shift M)^{-1} (M X)
        for col in basis.iter_mut() {
            let rhs: Vec<T> = col.iter().zip(mass).map(|(&x, &m)| x * m).collect();
            *col = chol.solve(&rhs);
        }
        // mass Gram-Schmidt
        for i in 0..m_sub {
            for j in 0..i {
                let projected = basis[j].clone();
                let r = mass_dot(mass, &basis[i], &projected);
                for (x, &p) in basis[i].iter_mut().zip(&projected) {
                    *x -= r * p;
                }
            }
            let nrm = mass_dot(mass, &basis[i], &basis[i]).sqrt();
            if nrm <= T::epsilon() {
                // re-randomize a collapsed direction
                for x in basis[i].iter_mut() {
                    *x = real::<T>(rng.gen_range(-1.0..1.0));
                }
                continue;
            }
            for x in basis[i].iter_mut() {
                *x = *x / nrm;
            }
        }
        // Rayleigh-Ritz on H
        let hy: Vec<Vec<T>> = basis.iter().map(|col| h.apply(col)).collect();
        let mut proj = vec![vec![T::zero(); m_sub]; m_sub];
        for i in 0..m_sub {
            for j in 0..m_sub {
                proj[i][j] = basis[i]
                    .iter()
                    .zip(&hy[j])
                    .map(|(&a, &b)| a * b)
                    .sum();
            }
        }
        // symmetrize against roundoff
        for i in 0..m_sub {
            for j in (i + 1)..m_sub {
                let s = (proj[i][j] + proj[j][i]) * real::<T>(0.5);
                proj[i][j] = s;
                proj[j][i] = s;
            }
        }
        let ritz = jacobi_eigenvalues(&mut proj);
        let current: Vec<T> = ritz[..k].to_vec();
        let close = current
            .iter()
            .zip(&prev)
            .all(|(&a, &b)| (a - b).abs() <= real::<T>(1e-11) * (T::one() + a.abs()));
        prev = current.clone();
        if close {
            return Ok(current);
        }
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_analytic() {
        // [[2,1],[1,2]] -> 1, 3
        let mut a = vec![vec![2.0f64, 1.0], vec![1.0, 2.0]];
        let ev = jacobi_eigenvalues(&mut a);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn pencil_1d_laplacian() {
        // Dirichlet path Laplacian vs identity mass: lambda_j = 2 - 2 cos(pi j/(n+1))
        let n = 150;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0f64));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let h = SparseOperator::from_triplets(n, &trip);
        let mass = vec![1.0; n];
        let ev = smallest_generalized(&h, &mass, 3).unwrap();
        for (j, &lam) in ev.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (j as f64 + 1.0) / (n as f64 + 1.0)).cos();
            assert!(
                (lam - exact).abs() < 1e-8,
                "eigenvalue {j}: {lam} vs {exact}"
            );
        }
    }

    #[test]
    fn dense_path_small() {
        let n = 30;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 2.0f64));
            if i + 1 < n {
                trip.push((i, i + 1, -1.0));
                trip.push((i + 1, i, -1.0));
            }
        }
        let h = SparseOperator::from_triplets(n, &trip);
        let mass = vec![0.5; n];
        let ev = smallest_generalized(&h, &mass, 2).unwrap();
        let exact0 = (2.0 - 2.0 * (std::f64::consts::PI / 31.0).cos()) / 0.5;
        assert!((ev[0] - exact0).abs() < 1e-9);
    }
}
