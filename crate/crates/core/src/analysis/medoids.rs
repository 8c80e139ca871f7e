use alloc::vec::Vec;

use rand::Rng;

use super::Matrix;
use crate::error::{invalid, Result};
use crate::random::{categorical, stream_rng};

pub const DEFAULT_RESTARTS: usize = 20;
const MAX_ROUNDS: usize = 200;

/// A single partition summarizing the posterior at a chosen number of blocs.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeClustering {
    pub k_star: usize,
    /// Zero-based bloc label per municipality.
    pub labels: Vec<usize>,
    /// Municipality index of each bloc's medoid.
    pub medoids: Vec<usize>,
    /// `bloc_order[r]` is the bloc shown in position `r`.
    pub bloc_order: Vec<usize>,
    /// Sum of distances from every point to its medoid.
    pub cost: f64,
    /// Cost after each step of the winning restart.
    pub cost_trace: Vec<f64>,
}

fn validate(distance: &Matrix, k_star: usize) -> Result<()> {
    let n = distance.rows();
    if !distance.is_square() || n == 0 {
        return Err(invalid!("distance matrix must be square and non-empty"));
    }
    if k_star == 0 || k_star > n {
        return Err(invalid!("k_star must lie in 1..={n}, got {k_star}"));
    }
    if distance.values().iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(invalid!("distances must be finite and non-negative"));
    }
    if (0..n).any(|i| distance.get(i, i) != 0.0) {
        return Err(invalid!("distance matrix must have a zero diagonal"));
    }
    if distance.asymmetry() > 1e-9 {
        return Err(invalid!("distance matrix must be symmetric"));
    }
    Ok(())
}

/// Assigns every point to its nearest medoid (earliest medoid on ties);
/// each medoid keeps its own label. Returns the total cost.
fn assign(distance: &Matrix, medoids: &[usize], labels: &mut [usize]) -> f64 {
    let mut cost = 0.0;
    for (i, label) in labels.iter_mut().enumerate() {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (b, &m) in medoids.iter().enumerate() {
            let d = distance.get(i, m);
            if d < best_d || m == i {
                best = b;
                best_d = d;
                if m == i {
                    break;
                }
            }
        }
        *label = best;
        cost += best_d;
    }
    cost
}

/// Total distance from each point to the medoid of its label.
pub fn clustering_cost(distance: &Matrix, labels: &[usize], medoids: &[usize]) -> f64 {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| distance.get(i, medoids[l]))
        .sum()
}

fn seed_medoids<R: Rng + ?Sized>(distance: &Matrix, k: usize, rng: &mut R) -> Vec<usize> {
    let n = distance.rows();
    let mut medoids = alloc::vec![rng.random_range(0..n)];
    let mut nearest: Vec<f64> = (0..n).map(|i| distance.get(i, medoids[0])).collect();
    while medoids.len() < k {
        let weights: Vec<f64> = (0..n)
            .map(|i| if medoids.contains(&i) { 0.0 } else { nearest[i] * nearest[i] })
            .collect();
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
            categorical(rng, &probs)
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !medoids.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        for (i, d) in nearest.iter_mut().enumerate() {
            *d = d.min(distance.get(i, pick));
        }
        medoids.push(pick);
    }
    medoids
}

fn refine(distance: &Matrix, medoids: &mut [usize], labels: &mut [usize], trace: &mut Vec<f64>) {
    let n = distance.rows();
    let k = medoids.len();
    let mut cost = assign(distance, medoids, labels);
    trace.push(cost);
    for _ in 0..MAX_ROUNDS {
        // Alternating step: move each medoid to its cluster's best member.
        let mut moved = false;
        for b in 0..k {
            let members: Vec<usize> = (0..n).filter(|&i| labels[i] == b).collect();
            let within = |c: usize| members.iter().map(|&j| distance.get(c, j)).sum::<f64>();
            let mut best = medoids[b];
            let mut best_cost = within(best);
            for &c in &members {
                let v = within(c);
                if v < best_cost {
                    best = c;
                    best_cost = v;
                }
            }
            if best != medoids[b] {
                medoids[b] = best;
                moved = true;
            }
        }
        if moved {
            let next = assign(distance, medoids, labels);
            cost = next.min(cost);
            trace.push(next);
            continue;
        }
        // Swap step: best single medoid/non-medoid exchange.
        let mut best_swap = None;
        let mut best_cost = cost;
        let mut scratch = medoids.to_vec();
        let mut scratch_labels = labels.to_vec();
        for b in 0..k {
            for o in 0..n {
                if medoids.contains(&o) {
                    continue;
                }
                scratch.copy_from_slice(medoids);
                scratch[b] = o;
                let c = assign(distance, &scratch, &mut scratch_labels);
                if c < best_cost - 1e-12 * best_cost.abs().max(1.0) {
                    best_cost = c;
                    best_swap = Some((b, o));
                }
            }
        }
        match best_swap {
            Some((b, o)) => {
                medoids[b] = o;
                cost = assign(distance, medoids, labels);
                trace.push(cost);
            }
            None => break,
        }
    }
}

/// k-medoids with the default number of restarts.
pub fn k_medoids(distance: &Matrix, k_star: usize, seed: u64) -> Result<RepresentativeClustering> {
    k_medoids_with(distance, k_star, seed, DEFAULT_RESTARTS)
}

/// k-medoids by alternating assignment and medoid updates followed by swap
/// refinement, from `restarts` k-means++ style seedings; restart `r` uses
/// stream `r` of `seed`. The lowest-cost restart wins, ties to the earliest.
pub fn k_medoids_with(
    distance: &Matrix,
    k_star: usize,
    seed: u64,
    restarts: usize,
) -> Result<RepresentativeClustering> {
    validate(distance, k_star)?;
    let n = distance.rows();
    let mut best: Option<RepresentativeClustering> = None;
    for r in 0..restarts.max(1) {
        let mut rng = stream_rng(seed, r as u64);
        let mut medoids = seed_medoids(distance, k_star, &mut rng);
        let mut labels = alloc::vec![0; n];
        let mut trace = Vec::new();
        refine(distance, &mut medoids, &mut labels, &mut trace);
        let cost = clustering_cost(distance, &labels, &medoids);
        if best.as_ref().is_none_or(|b| cost < b.cost) {
            best = Some(RepresentativeClustering {
                k_star,
                labels,
                medoids,
                bloc_order: (0..k_star).collect(),
                cost,
                cost_trace: trace,
            });
        }
    }
    Ok(best.expect("at least one restart runs"))
}
