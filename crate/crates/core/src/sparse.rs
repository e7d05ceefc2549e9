//! Symmetric sparse matrices over vertex indices and an envelope Cholesky
//! factorization.
//!
//! Meshes are relabelled with reverse Cuthill-McKee at construction, so the
//! stiffness envelope stays narrow and a profile factorization is enough.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric sparse matrix in CSR form. Both triangles are stored.
#[derive(Clone, Debug)]
pub struct SparseOperator<T> {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> SparseOperator<T> {
    /// Assemble from (i, j, v) triplets; duplicate entries are summed.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, T)]) -> Self {
        let mut rows: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for &(i, j, v) in triplets {
            rows[i].push((j, v));
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
            let mut last: Option<usize> = None;
            for &(j, v) in row.iter() {
                if last == Some(j) {
                    let k = values.len() - 1;
                    values[k] += v;
                } else {
                    col_idx.push(j);
                    values.push(v);
                    last = Some(j);
                }
            }
            row_ptr.push(col_idx.len());
        }
        SparseOperator { n, row_ptr, col_idx, values }
    }

    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        assert_eq!(x.len(), self.n);
        assert_eq!(y.len(), self.n);
        for i in 0..self.n {
            let mut s = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.values[k] * x[self.col_idx[k]];
            }
            y[i] = s;
        }
    }

    pub fn apply(&self, x: &[T]) -> Vec<T> {
        let mut y = vec![T::zero(); self.n];
        self.matvec(x, &mut y);
        y
    }

    /// x^T A x.
    pub fn quadratic_form(&self, x: &[T]) -> T {
        let mut s = T::zero();
        for i in 0..self.n {
            let mut r = T::zero();
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.values[k] * x[self.col_idx[k]];
            }
            s += x[i] * r;
        }
        s
    }

    pub fn row_sums(&self) -> Vec<T> {
        (0..self.n)
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.values[k])
                    .sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<T> {
        let mut d = vec![T::zero(); self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                if self.col_idx[k] == i {
                    d[i] = self.values[k];
                }
            }
        }
        d
    }

    /// Largest |A_ij - A_ji| over the stored pattern.
    pub fn asymmetry(&self) -> T {
        let mut worst = T::zero();
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[k];
                let mut aji = T::zero();
                for l in self.row_ptr[j]..self.row_ptr[j + 1] {
                    if self.col_idx[l] == i {
                        aji = self.values[l];
                    }
                }
                worst = worst.max((self.values[k] - aji).abs());
            }
        }
        worst
    }
}

/// Cholesky factorization of `A + shift * diag(d)` stored by envelope rows.
pub struct EnvelopeCholesky<T> {
    n: usize,
    first: Vec<usize>,
    offs: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> EnvelopeCholesky<T> {
    /// Factor `A + diag(extra)`. Fails on a non-positive pivot, which is the
    /// signal used for Levenberg shifts on indefinite Hessians.
    pub fn factor(a: &SparseOperator<T>, extra: Option<&[T]>) -> Result<Self> {
        let n = a.n;
        let mut first = vec![0usize; n];
        for i in 0..n {
            let mut f = i;
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                if j < f {
                    f = j;
                }
            }
            first[i] = f;
        }
        // envelope must be monotone for the profile sweep
        for i in 1..n {
            if first[i] > i {
                first[i] = i;
            }
        }
        let mut offs = vec![0usize; n + 1];
        for i in 0..n {
            offs[i + 1] = offs[i] + (i - first[i] + 1);
        }
        let mut vals = vec![T::zero(); offs[n]];

        // scatter A's lower triangle into the envelope
        for i in 0..n {
            for k in a.row_ptr[i]..a.row_ptr[i + 1] {
                let j = a.col_idx[k];
                if j <= i {
                    vals[offs[i] + (j - first[i])] += a.values[k];
                }
            }
            if let Some(d) = extra {
                vals[offs[i] + (i - first[i])] += d[i];
            }
        }

        // profile Cholesky, row by row
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = vals[offs[i] + (j - fi)];
                for k in lo..j {
                    s -= vals[offs[i] + (k - fi)] * vals[offs[j] + (k - fj)];
                }
                if j < i {
                    let d = vals[offs[j] + (j - fj)];
                    vals[offs[i] + (j - fi)] = s / d;
                } else {
                    if s <= T::zero() || !s.is_finite() {
                        return Err(Error::Eigen(format!(
                            "non-positive pivot at row {i}: {:e}",
                            s.to_f64().unwrap_or(f64::NAN)
                        )));
                    }
                    vals[offs[i] + (i - fi)] = s.sqrt();
                }
            }
        }
        Ok(EnvelopeCholesky { n, first, offs, vals })
    }

    /// Solve `L L^T x = b`.
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        assert_eq!(b.len(), self.n);
        let mut x = b.to_vec();
        // forward
        for i in 0..self.n {
            let fi = self.first[i];
            let mut s = x[i];
            for k in fi..i {
                s -= self.vals[self.offs[i] + (k - fi)] * x[k];
            }
            x[i] = s / self.vals[self.offs[i] + (i - fi)];
        }
        // backward
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let mut s = x[i] / self.vals[self.offs[i] + (i - fi)];
            x[i] = s;
            s = x[i];
            for k in fi..i {
                x[k] -= self.vals[self.offs[i] + (k - fi)] * s;
            }
        }
        x
    }
}

/// Reverse Cuthill-McKee ordering of an undirected graph given as adjacency
/// lists. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let deg: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    loop {
        // lowest-degree unvisited seed
        let seed = (0..n)
            .filter(|&v| !visited[v])
            .min_by_key(|&v| (deg[v], v));
        let Some(seed) = seed else { break };
        visited[seed] = true;
        queue.push_back(seed);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nb.sort_by_key(|&w| (deg[w], w));
            for w in nb {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> (SparseOperator<f64>, Vec<Vec<f64>>) {
        // tridiagonal-ish SPD with random off-diagonal couplings
        let mut trip = Vec::new();
        let mut dense = vec![vec![0.0; n]; n];
        for i in 0..n {
            let d = 4.0 + rng.gen_range(0.0..1.0);
            trip.push((i, i, d));
            dense[i][i] = d;
            if i + 1 < n {
                let o = rng.gen_range(-1.0..1.0);
                trip.push((i, i + 1, o));
                trip.push((i + 1, i, o));
                dense[i][i + 1] = o;
                dense[i + 1][i] = o;
            }
            if i + 3 < n {
                let o = rng.gen_range(-0.5..0.5);
                trip.push((i, i + 3, o));
                trip.push((i + 3, i, o));
                dense[i][i + 3] = o;
                dense[i + 3][i] = o;
            }
        }
        (SparseOperator::from_triplets(n, &trip), dense)
    }

    #[test]
    fn cholesky_solves() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (a, dense) = random_spd(40, &mut rng);
        let x_true: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; 40];
        for i in 0..40 {
            b[i] = (0..40).map(|j| dense[i][j] * x_true[j]).sum();
        }
        let chol = EnvelopeCholesky::factor(&a, None).unwrap();
        let x = chol.solve(&b);
        for i in 0..40 {
            assert!((x[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_detected() {
        let trip = vec![(0usize, 0usize, 1.0f64), (1, 1, -2.0)];
        let a = SparseOperator::from_triplets(2, &trip);
        assert!(EnvelopeCholesky::factor(&a, None).is_err());
        // a big enough diagonal shift fixes it
        assert!(EnvelopeCholesky::factor(&a, Some(&[0.0, 3.0])).is_ok());
    }

    #[test]
    fn rcm_reduces_bandwidth() {
        // path graph labelled badly
        let n = 20;
        let mut adj = vec![Vec::new(); n];
        let label = |i: usize| (i * 7) % n;
        for i in 0..n - 1 {
            let (a, b) = (label(i), label(i + 1));
            adj[a].push(b);
            adj[b].push(a);
        }
        let perm = reverse_cuthill_mckee(&adj);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let bw = (0..n)
            .flat_map(|v| adj[v].iter().map(move |&w| inv[v].abs_diff(inv[w])))
            .max()
            .unwrap();
        assert!(bw <= 2, "path graph should relabel to bandwidth <= 2, got {bw}");
    }
}
