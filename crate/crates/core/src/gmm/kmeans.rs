//! k-means++ seeding followed by a few Lloyd iterations. Used only to
//! produce starting partitions for EM.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sq_dist(x: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, g: usize) -> f64 {
    (0..x.ncols())
        .map(|j| {
            let d = x[(i, j)] - c[(g, j)];
            d * d
        })
        .sum()
}

fn plus_plus(x: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (n, p) = x.shape();
    let mut centers = DMatrix::zeros(k, p);
    let first = rng.random_range(0..n);
    centers.row_mut(0).copy_from(&x.row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(x, i, &centers, 0)).collect();
    for g in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(g).copy_from(&x.row(pick));
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(x, i, &centers, g));
        }
    }
    centers
}

/// Hard labels in `0..k` from one seeded k-means run.
pub(crate) fn kmeans_labels(x: &DMatrix<f64>, k: usize, max_iter: usize, seed: u64) -> Vec<usize> {
    let (n, p) = x.shape();
    if k == 1 {
        return vec![0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = plus_plus(x, k, &mut rng);
    let mut labels = vec![usize::MAX; n];
    let mut dist = vec![0.0; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let (best, d) = (0..k)
                .map(|g| (g, sq_dist(x, i, &centers, g)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            dist[i] = d;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let mut counts = vec![0usize; k];
        centers.fill(0.0);
        for i in 0..n {
            counts[labels[i]] += 1;
            for j in 0..p {
                centers[(labels[i], j)] += x[(i, j)];
            }
        }
        for g in 0..k {
            if counts[g] == 0 {
                // move the empty center onto the worst-fitted point
                let far = (0..n)
                    .max_by(|&a, &b| dist[a].total_cmp(&dist[b]))
                    .unwrap_or(0);
                centers.row_mut(g).copy_from(&x.row(far));
                dist[far] = 0.0;
            } else {
                for j in 0..p {
                    centers[(g, j)] /= counts[g] as f64;
                }
            }
        }
    }
    labels
}

/// Relabels groups in order of first appearance so equal partitions
/// compare equal.
pub(crate) fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<usize> = Vec::new();
    labels
        .iter()
        .map(|&l| {
            if l >= map.len() {
                map.resize(l + 1, usize::MAX);
            }
            if map[l] == usize::MAX {
                map[l] = map.iter().filter(|&&m| m != usize::MAX).count();
            }
            map[l]
        })
        .collect()
}
