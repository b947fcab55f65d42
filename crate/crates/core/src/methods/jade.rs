//! JADE blind source separation (joint approximate diagonalization of
//! fourth-order cumulant eigenmatrices) for real signals.
//!
//! Whitening uses the full-rank eigen-decomposition of the sample
//! covariance. The `m(m+1)/2` cumulant matrices are then jointly
//! diagonalized by Givens rotations swept in a fixed `(p, q)` order, so the
//! result is fully deterministic.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 200;

/// Relative eigenvalue floor below which the covariance is treated as
/// singular.
pub const RANK_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct Separation {
    /// `m x m` unmixing matrix applied to the mean-removed input.
    pub unmixing: DMatrix<f64>,
    /// Recovered components, most energetic first (by the column norms of
    /// the estimated mixing matrix).
    pub sources: Vec<Vec<f64>>,
    pub sweeps: usize,
}

/// Separates `rows` (m equally long signals) into m independent components.
pub fn jade(rows: &[Vec<f64>]) -> Result<Separation> {
    let m = rows.len();
    let t = rows.first().map_or(0, Vec::len);
    if m == 0 || t < m + 1 {
        return Err(Error::InsufficientData { len: t, min: m + 1 });
    }
    let mut x = DMatrix::from_fn(m, t, |i, j| rows[i][j]);
    for mut r in x.row_iter_mut() {
        let mu = r.mean();
        r.add_scalar_mut(-mu);
    }

    let cov = (&x * x.transpose()) / t as f64;
    let eig = SymmetricEigen::new(cov);
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    if !(max_ev > 0.0) || min_ev <= RANK_TOLERANCE * max_ev {
        return Err(Error::RankDeficient { min_eigenvalue: min_ev });
    }
    let whitener = DMatrix::from_fn(m, m, |i, j| {
        eig.eigenvectors[(j, i)] / eig.eigenvalues[i].sqrt()
    });
    let z = &whitener * &x;

    let mut cms = cumulant_matrices(&z);
    let (v, sweeps) = joint_diagonalize(&mut cms, t);

    let unmixing = v.transpose() * &whitener;
    let mixing = unmixing
        .clone()
        .try_inverse()
        .ok_or(Error::RankDeficient { min_eigenvalue: 0.0 })?;
    let mut order: Vec<usize> = (0..m).collect();
    let energy: Vec<f64> = (0..m).map(|k| mixing.column(k).norm_squared()).collect();
    order.sort_by(|&a, &b| energy[b].total_cmp(&energy[a]).then(a.cmp(&b)));
    let unmixing = DMatrix::from_fn(m, m, |i, j| unmixing[(order[i], j)]);

    let s = &unmixing * &x;
    let sources = s.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(Separation {
        unmixing,
        sources,
        sweeps,
    })
}

/// Fourth-order cumulant matrices of whitened data `z` (identity
/// covariance), one per unordered index pair.
fn cumulant_matrices(z: &DMatrix<f64>) -> Vec<DMatrix<f64>> {
    let (m, t) = z.shape();
    let scale = 1.0 / t as f64;
    let weighted = |w: &[f64]| -> DMatrix<f64> {
        DMatrix::from_fn(m, m, |a, b| {
            let mut acc = 0.0;
            for k in 0..t {
                acc += w[k] * z[(a, k)] * z[(b, k)];
            }
            acc * scale
        })
    };
    let mut out = Vec::with_capacity(m * (m + 1) / 2);
    for i in 0..m {
        let xi: Vec<f64> = z.row(i).iter().copied().collect();
        let wii: Vec<f64> = xi.iter().map(|v| v * v).collect();
        let mut q = weighted(&wii);
        for d in 0..m {
            q[(d, d)] -= 1.0;
        }
        q[(i, i)] -= 2.0;
        out.push(q);
        for j in 0..i {
            let wij: Vec<f64> = xi.iter().zip(z.row(j).iter()).map(|(a, b)| a * b).collect();
            let mut q = weighted(&wij);
            q[(i, j)] -= 1.0;
            q[(j, i)] -= 1.0;
            out.push(q * std::f64::consts::SQRT_2);
        }
    }
    out
}

/// Jacobi sweeps; returns the accumulated rotation and the sweep count.
fn joint_diagonalize(cms: &mut [DMatrix<f64>], t: usize) -> (DMatrix<f64>, usize) {
    let m = cms[0].nrows();
    let threshold = 1e-6 / (t as f64).sqrt();
    let mut v = DMatrix::<f64>::identity(m, m);
    let mut sweeps = 0;
    loop {
        let mut rotated = false;
        for p in 0..m.saturating_sub(1) {
            for q in p + 1..m {
                let (mut g11, mut g12, mut g22) = (0.0, 0.0, 0.0);
                for c in cms.iter() {
                    let a = c[(p, p)] - c[(q, q)];
                    let b = c[(p, q)] + c[(q, p)];
                    g11 += a * a;
                    g12 += a * b;
                    g22 += b * b;
                }
                let ton = g11 - g22;
                let toff = 2.0 * g12;
                let theta = 0.5 * toff.atan2(ton + (ton * ton + toff * toff).sqrt());
                if theta.abs() <= threshold {
                    continue;
                }
                rotated = true;
                let (s, c) = theta.sin_cos();
                rotate_cols(&mut v, p, q, c, s);
                for cm in cms.iter_mut() {
                    rotate_rows(cm, p, q, c, s);
                    rotate_cols(cm, p, q, c, s);
                }
            }
        }
        sweeps += 1;
        if !rotated || sweeps >= MAX_SWEEPS {
            return (v, sweeps);
        }
    }
}

fn rotate_cols(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for r in 0..a.nrows() {
        let (x, y) = (a[(r, p)], a[(r, q)]);
        a[(r, p)] = c * x + s * y;
        a[(r, q)] = -s * x + c * y;
    }
}

fn rotate_rows(a: &mut DMatrix<f64>, p: usize, q: usize, c: f64, s: f64) {
    for col in 0..a.ncols() {
        let (x, y) = (a[(p, col)], a[(q, col)]);
        a[(p, col)] = c * x + s * y;
        a[(q, col)] = -s * x + c * y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::corr;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn sources(t: usize) -> [Vec<f64>; 3] {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = (0..t).map(|i| (2.0 * PI * 1.3 * i as f64 / 30.0).sin()).collect();
        let b = (0..t).map(|i| ((i as f64 / 30.0 * 0.37) % 1.0) * 2.0 - 1.0).collect();
        let c = (0..t).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        [a, b, c]
    }

    fn best_match(target: &[f64], comps: &[Vec<f64>]) -> f64 {
        comps.iter().map(|c| corr(target, c).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn separates_non_gaussian_mixture() {
        let s = sources(1800);
        let mix = [[0.8, 0.3, 0.2], [0.4, 0.9, -0.3], [-0.2, 0.5, 0.7]];
        let x: Vec<Vec<f64>> = mix
            .iter()
            .map(|row| (0..1800).map(|t| (0..3).map(|j| row[j] * s[j][t]).sum()).collect())
            .collect();
        let sep = jade(&x).unwrap();
        for src in &s {
            assert!(best_match(src, &sep.sources) > 0.99);
        }
        // Components come out white.
        for c in &sep.sources {
            let v = c.iter().map(|v| v * v).sum::<f64>() / c.len() as f64;
            assert!((v - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rank_deficient_rejected() {
        let s = sources(600);
        let x = vec![s[0].clone(), s[1].clone(), s[0].clone()];
        assert!(matches!(jade(&x), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn deterministic() {
        let s = sources(900);
        let x: Vec<Vec<f64>> = (0..3)
            .map(|i| (0..900).map(|t| s[i][t] + 0.3 * s[(i + 1) % 3][t]).collect())
            .collect();
        let a = jade(&x).unwrap();
        let b = jade(&x).unwrap();
        assert_eq!(a.sources, b.sources);
    }
}
