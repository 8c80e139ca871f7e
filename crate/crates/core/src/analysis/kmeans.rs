use alloc::vec::Vec;

use rand::Rng;

use crate::random::categorical;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's k-means on the rows of a row-major `n × dim` matrix with
/// k-means++ seeding. Returns zero-based labels; empty clusters are
/// re-seeded at the point farthest from its centre.
pub(crate) fn kmeans_rows<R: Rng + ?Sized>(
    points: &[f64],
    n: usize,
    dim: usize,
    k: usize,
    max_iter: usize,
    rng: &mut R,
) -> Vec<usize> {
    let row = |i: usize| &points[i * dim..(i + 1) * dim];
    let mut centres: Vec<f64> = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centres.extend_from_slice(row(first));
    let mut nearest: Vec<f64> = (0..n).map(|i| sq_dist(row(i), row(first))).collect();
    for _ in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let probs: Vec<f64> = nearest.iter().map(|d| d / total).collect();
            categorical(rng, &probs)
        } else {
            rng.random_range(0..n)
        };
        let c = row(pick).to_vec();
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(sq_dist(row(i), &c));
        }
        centres.extend(c);
    }
    let mut labels = alloc::vec![usize::MAX; n];
    for _ in 0..max_iter.max(1) {
        let mut changed = false;
        for i in 0..n {
            let best = (0..k)
                .map(|j| (j, sq_dist(row(i), &centres[j * dim..(j + 1) * dim])))
                .fold((0, f64::INFINITY), |b, c| if c.1 < b.1 { c } else { b })
                .0;
            if labels[i] != best {
                labels[i] = best;
                changed = true;
            }
        }
        let mut sums = alloc::vec![0.0; k * dim];
        let mut counts = alloc::vec![0usize; k];
        for i in 0..n {
            counts[labels[i]] += 1;
            for (s, x) in sums[labels[i] * dim..(labels[i] + 1) * dim].iter_mut().zip(row(i)) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                for d in 0..dim {
                    centres[j * dim + d] = sums[j * dim + d] / counts[j] as f64;
                }
            } else if n >= k {
                let far = (0..n)
                    .map(|i| (i, sq_dist(row(i), &centres[labels[i] * dim..(labels[i] + 1) * dim])))
                    .fold((0, -1.0), |b, c| if c.1 > b.1 { c } else { b })
                    .0;
                centres[j * dim..(j + 1) * dim].copy_from_slice(row(far));
                labels[far] = j;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::stream_rng;
    use alloc::vec;

    #[test]
    fn separates_obvious_groups() {
        let pts = vec![0.0, 0.0, 0.1, 0.0, 5.0, 5.0, 5.1, 5.0, 0.0, 0.1];
        let mut rng = stream_rng(1, 0);
        let l = kmeans_rows(&pts, 5, 2, 2, 20, &mut rng);
        assert_eq!(l[0], l[1]);
        assert_eq!(l[0], l[4]);
        assert_eq!(l[2], l[3]);
        assert_ne!(l[0], l[2]);
    }
}
