//! Dense and banded linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{GameError, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Largest absolute entry, 0 for an empty matrix.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn symmetrize(m: &mut Matrix) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

pub fn asymmetry(m: &Matrix) -> f64 {
    (m - m.transpose()).amax()
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return f64::INFINITY;
    }
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Replace every negative eigenvalue of a symmetric matrix by `floor`.
///
/// Eigenvalues that are already non-negative are left untouched, so PSD
/// input comes back unchanged (bit-for-bit). Returns whether a projection
/// happened.
pub fn project_psd(m: &mut Matrix, floor: f64) -> bool {
    if m.nrows() == 0 {
        return false;
    }
    let scale = max_abs(m).max(1.0);
    let eig = SymmetricEigen::new(m.clone());
    if eig.eigenvalues.iter().all(|&l| l >= -1e-12 * scale) {
        return false;
    }
    let clamped = eig.eigenvalues.map(|l| if l < 0.0 { floor } else { l });
    let v = &eig.eigenvectors;
    *m = v * Matrix::from_diagonal(&clamped) * v.transpose();
    symmetrize(m);
    true
}

/// Two-norm condition number from the singular values.
pub fn condition_estimate(m: &Matrix) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let hi = sv.iter().copied().fold(0.0_f64, f64::max);
    let lo = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if !hi.is_finite() || !lo.is_finite() {
        return f64::INFINITY;
    }
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Square band matrix factorised in place by Gaussian elimination with
/// partial pivoting.
///
/// Row `i` stores columns `i - kl ..= i + ku + kl`; the extra `kl`
/// super-diagonals absorb fill-in from row interchanges.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, data: vec![0.0; n * width] }
    }

    /// Build from `(row, col, value)` triplets; duplicates are summed and the
    /// bandwidths are read off the pattern.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let (mut kl, mut ku) = (0, 0);
        for &(i, j, _) in triplets {
            if i > j {
                kl = kl.max(i - j);
            } else {
                ku = ku.max(j - i);
            }
        }
        let mut band = Self::zeros(n, kl, ku);
        for &(i, j, v) in triplets {
            *band.entry_mut(i, j) += v;
        }
        band
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.ku + self.kl);
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.slot(i, j)]
    }

    #[inline]
    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        let s = self.slot(i, j);
        &mut self.data[s]
    }

    /// `y = A x` using the unfactorised band.
    pub fn mul_vec(&self, x: &Vector) -> Vector {
        let mut y = Vector::zeros(self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            let mut acc = 0.0;
            for j in lo..hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
        y
    }

    pub fn to_dense(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku + 1).min(self.n);
            for j in lo..hi {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    pub fn factor(mut self) -> Result<BandLu> {
        let n = self.n;
        let kl = self.kl;
        let reach = self.ku + kl;
        let scale = self.data.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut pivots = Vec::with_capacity(n);
        let mut multipliers = vec![0.0; n * kl.max(1)];
        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in (k + 1)..=last_row {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if !(best > 1e-300 * scale) || !best.is_finite() {
                return Err(GameError::Domain(format!("band matrix is singular at column {k}")));
            }
            pivots.push(p);
            let last_col = (k + reach).min(n - 1);
            if p != k {
                for j in k..=last_col {
                    let (a, b) = (self.slot(k, j), self.slot(p, j));
                    self.data.swap(a, b);
                }
            }
            let pivot = self.get(k, k);
            for i in (k + 1)..=last_row {
                let l = self.get(i, k) / pivot;
                multipliers[k * kl.max(1) + (i - k - 1)] = l;
                if l != 0.0 {
                    for j in (k + 1)..=last_col {
                        let u = self.get(k, j);
                        if u != 0.0 {
                            *self.entry_mut(i, j) -= l * u;
                        }
                    }
                }
                *self.entry_mut(i, k) = 0.0;
            }
        }
        Ok(BandLu { band: self, pivots, multipliers })
    }
}

/// LU factors of a [`BandMatrix`].
#[derive(Debug, Clone)]
pub struct BandLu {
    band: BandMatrix,
    pivots: Vec<usize>,
    multipliers: Vec<f64>,
}

impl BandLu {
    pub fn solve(&self, rhs: &Vector) -> Vector {
        let n = self.band.n;
        let kl = self.band.kl;
        let reach = self.band.ku + kl;
        let mut b = rhs.clone();
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap_rows(k, p);
            }
            let last_row = (k + kl).min(n - 1);
            for i in (k + 1)..=last_row {
                b[i] -= self.multipliers[k * kl.max(1) + (i - k - 1)] * b[k];
            }
        }
        for i in (0..n).rev() {
            let last_col = (i + reach).min(n - 1);
            let mut acc = b[i];
            for j in (i + 1)..=last_col {
                acc -= self.band.get(i, j) * b[j];
            }
            b[i] = acc / self.band.get(i, i);
        }
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize, f64)> {
        let mut trips = Vec::new();
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                // weak diagonal so pivoting actually happens
                let v: f64 = rng.random_range(-1.0..1.0);
                trips.push((i, j, if i == j { 0.01 * v } else { v }));
            }
        }
        trips
    }

    #[test]
    fn band_solve_matches_dense_lu() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (6, 1, 2), (30, 4, 3), (57, 9, 11)] {
            let trips = random_band(n, kl, ku, &mut rng);
            let band = BandMatrix::from_triplets(n, &trips);
            let dense = band.to_dense();
            let rhs = Vector::from_fn(n, |i, _| (i as f64).sin());
            let x_dense = dense.clone().lu().solve(&rhs).unwrap();
            let x_band = band.factor().unwrap().solve(&rhs);
            assert!((x_dense - &x_band).amax() < 1e-8, "n={n}");
            assert!((dense * x_band - rhs).amax() < 1e-9);
        }
    }

    #[test]
    fn singular_band_is_reported() {
        let band = BandMatrix::from_triplets(3, &[(0, 0, 1.0), (1, 1, 0.0), (2, 2, 1.0), (1, 0, 0.0)]);
        assert!(band.factor().is_err());
    }

    #[test]
    fn psd_projection_clamps_only_negative_eigenvalues() {
        let mut m = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(project_psd(&mut m, 1e-6));
        let eig = SymmetricEigen::new(m).eigenvalues;
        let mut e: Vec<f64> = eig.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        assert!((e[0] - 1e-6).abs() < 1e-15 && (e[1] - 1.0).abs() < 1e-12);

        let psd = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.5]);
        let mut copy = psd.clone();
        assert!(!project_psd(&mut copy, 1e-6));
        assert_eq!(copy, psd);
    }
}
