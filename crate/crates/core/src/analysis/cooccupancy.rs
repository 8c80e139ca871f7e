use alloc::vec::Vec;

use super::{CooccupancyMatrix, Matrix, RepresentativeClustering};
use crate::bdmcmc::PosteriorSample;
use crate::error::{invalid, Error, Result};
use crate::math::median_in_place;
use crate::model::Municipality;

fn total_wait(samples: &[PosteriorSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("no posterior samples".into()));
    }
    let total: f64 = samples.iter().map(|s| s.wait_time).sum();
    if !(total > 0.0 && total.is_finite()) {
        return Err(invalid!("sample wait times must sum to a positive value"));
    }
    Ok(total)
}

/// Wait-weighted frequency with which each pair of municipalities shares a
/// bloc. Depends on the samples only through `z_i == z_j`, so relabeling the
/// blocs of any sample leaves the result unchanged.
pub fn cooccupancy(samples: &[PosteriorSample]) -> Result<CooccupancyMatrix> {
    let total = total_wait(samples)?;
    let n = samples[0].state.z.len();
    if samples.iter().any(|s| s.state.z.len() != n) {
        return Err(Error::DimensionMismatch(
            "samples disagree on the number of municipalities".into(),
        ));
    }
    let mut acc = alloc::vec![0.0; n * n];
    for s in samples {
        let z = &s.state.z;
        for i in 0..n {
            let zi = z[i];
            let row = &mut acc[i * n..(i + 1) * n];
            for j in i + 1..n {
                if z[j] == zi {
                    row[j] += s.wait_time;
                }
            }
        }
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        out.set(i, i, 1.0);
        for j in i + 1..n {
            let v = (acc[i * n + j] / total).clamp(0.0, 1.0);
            out.set(i, j, v);
            out.set(j, i, v);
        }
    }
    Ok(out)
}

/// Soft bloc membership: for each municipality and representative bloc, the
/// median co-occupancy with that bloc's members, normalized per row.
pub fn bloc_proportions(cooc: &CooccupancyMatrix, clustering: &RepresentativeClustering) -> Result<Matrix> {
    let n = cooc.rows();
    if !cooc.is_square() || clustering.labels.len() != n {
        return Err(Error::DimensionMismatch(
            "clustering and co-occupancy sizes differ".into(),
        ));
    }
    let k = clustering.k_star;
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); k];
    for (i, &l) in clustering.labels.iter().enumerate() {
        if l >= k {
            return Err(Error::OutOfRange { index: l, bound: k });
        }
        members[l].push(i);
    }
    if let Some(empty) = members.iter().position(Vec::is_empty) {
        return Err(Error::Empty(alloc::format!("representative bloc {empty} has no members")));
    }
    let mut out = Matrix::zeros(n, k);
    let mut buf = Vec::new();
    for i in 0..n {
        let mut sum = 0.0;
        for (b, m) in members.iter().enumerate() {
            buf.clear();
            buf.extend(m.iter().map(|&j| cooc.get(i, j)));
            let med = median_in_place(&mut buf);
            out.set(i, b, med);
            sum += med;
        }
        if sum > 0.0 {
            for b in 0..k {
                out.set(i, b, out.get(i, b) / sum);
            }
        } else {
            out.set(i, clustering.labels[i], 1.0);
        }
    }
    Ok(out)
}

/// Orders blocs south to north by the southernmost municipality whose largest
/// proportion lies in the bloc. Without complete coordinates the identity
/// order is returned. Blocs that are nobody's majority go last.
pub fn bloc_ordering(proportions: &Matrix, municipalities: &[Municipality]) -> Vec<usize> {
    let k = proportions.cols();
    let identity: Vec<usize> = (0..k).collect();
    if municipalities.len() != proportions.rows() || municipalities.iter().any(|m| m.latitude.is_none()) {
        log::warn!("latitude missing for some municipalities; blocs keep their original order");
        return identity;
    }
    let mut southmost = alloc::vec![f64::INFINITY; k];
    for (i, m) in municipalities.iter().enumerate() {
        let row = proportions.row(i);
        let best = (0..k).fold(0, |b, j| if row[j] > row[b] { j } else { b });
        let lat = m.latitude.unwrap_or(f64::INFINITY);
        if lat < southmost[best] {
            southmost[best] = lat;
        }
    }
    let mut order = identity;
    order.sort_by(|&a, &b| southmost[a].total_cmp(&southmost[b]).then(a.cmp(&b)));
    order
}

/// Wait-weighted posterior mean of `α0 / (α0 + α1)`, averaged over each
/// representative bloc's members, as a `K* × Q` matrix.
pub fn bloc_support(
    samples: &[PosteriorSample],
    labels: &[usize],
    k_star: usize,
    n_questions: usize,
) -> Result<Matrix> {
    let total = total_wait(samples)?;
    let n = labels.len();
    let mut counts = alloc::vec![0usize; k_star];
    for &l in labels {
        if l >= k_star {
            return Err(Error::OutOfRange { index: l, bound: k_star });
        }
        counts[l] += 1;
    }
    if let Some(empty) = counts.iter().position(|&c| c == 0) {
        return Err(Error::Empty(alloc::format!("representative bloc {empty} has no members")));
    }
    let mut out = Matrix::zeros(k_star, n_questions);
    for s in samples {
        if s.state.z.len() != n || s.state.alpha.len() != s.state.k * n_questions {
            return Err(Error::DimensionMismatch("sample does not match the data".into()));
        }
        let w = s.wait_time / total;
        for (i, &l) in labels.iter().enumerate() {
            let zi = s.state.z[i];
            let scale = w / counts[l] as f64;
            for q in 0..n_questions {
                let a = s.state.alpha[zi * n_questions + q];
                let v = out.get(l, q) + scale * a[0] / (a[0] + a[1]);
                out.set(l, q, v);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelState;
    use alloc::vec;

    fn sample(z: Vec<usize>, k: usize, wait: f64) -> PosteriorSample {
        let n = z.len();
        PosteriorSample {
            state: ModelState {
                k,
                eta: vec![1.0 / k as f64; k],
                z,
                alpha: vec![[1.0, 1.0]; k],
            },
            wait_time: wait,
            iteration: n,
        }
    }

    fn clustering(labels: Vec<usize>, k: usize) -> RepresentativeClustering {
        RepresentativeClustering {
            k_star: k,
            medoids: (0..k).map(|b| labels.iter().position(|&l| l == b).unwrap()).collect(),
            labels,
            bloc_order: (0..k).collect(),
            cost: 0.0,
            cost_trace: Vec::new(),
        }
    }

    #[test]
    fn single_clustering_is_crisp() {
        let s = [sample(vec![0, 0, 1, 1], 2, 1.0), sample(vec![1, 1, 0, 0], 2, 3.0)];
        let c = cooccupancy(&s).unwrap();
        for v in c.values() {
            assert!(*v == 0.0 || *v == 1.0);
        }
        assert_eq!(c.get(0, 1), 1.0);
        assert_eq!(c.get(1, 2), 0.0);
    }

    #[test]
    fn half_weight_pairing() {
        let s = [sample(vec![0, 0], 2, 1.0), sample(vec![0, 1], 2, 1.0)];
        let c = cooccupancy(&s).unwrap();
        assert_eq!(c.get(0, 1), 0.5);
        assert_eq!(c.get(0, 0), 1.0);
        assert!(cooccupancy(&[]).is_err());
    }

    #[test]
    fn crisp_proportions_are_unit_rows() {
        let s = [sample(vec![0, 0, 1, 1], 2, 1.0)];
        let c = cooccupancy(&s).unwrap();
        let p = bloc_proportions(&c, &clustering(vec![0, 0, 1, 1], 2)).unwrap();
        assert_eq!(p.row(0), &[1.0, 0.0]);
        assert_eq!(p.row(3), &[0.0, 1.0]);
    }

    #[test]
    fn flat_cooccupancy_splits_evenly() {
        let mut c = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                c.set(i, j, if i == j { 1.0 } else { 0.5 });
            }
        }
        // Off-diagonal medians: own bloc {1, 0.5} -> 0.75, other {0.5, 0.5} -> 0.5.
        let p = bloc_proportions(&c, &clustering(vec![0, 0, 1, 1], 2)).unwrap();
        assert!((p.get(0, 0) - 0.6).abs() < 1e-12);
        let mut flat = Matrix::zeros(4, 4);
        for v in 0..16 {
            flat.set(v / 4, v % 4, 0.5);
        }
        let p = bloc_proportions(&flat, &clustering(vec![0, 0, 1, 1], 2)).unwrap();
        assert_eq!(p.row(2), &[0.5, 0.5]);
    }

    #[test]
    fn hand_computed_proportions() {
        let c = Matrix::new(
            4,
            4,
            vec![
                1.0, 0.8, 0.2, 0.4, //
                0.8, 1.0, 0.1, 0.3, //
                0.2, 0.1, 1.0, 0.9, //
                0.4, 0.3, 0.9, 1.0,
            ],
        )
        .unwrap();
        let p = bloc_proportions(&c, &clustering(vec![0, 0, 1, 1], 2)).unwrap();
        // Row 0: medians 0.9 and 0.3.
        assert!((p.get(0, 0) - 0.75).abs() < 1e-12);
        assert!((p.get(0, 1) - 0.25).abs() < 1e-12);
        // Row 3: medians 0.35 and 0.95.
        assert!((p.get(3, 0) - 0.35 / 1.3).abs() < 1e-12);
        for i in 0..4 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_cluster_is_an_error() {
        let c = Matrix::zeros(2, 2);
        let mut cl = clustering(vec![0, 0], 1);
        cl.k_star = 2;
        assert!(bloc_proportions(&c, &cl).is_err());
    }

    fn place(lat: Option<f64>) -> Municipality {
        let mut m = Municipality::new("m", "m");
        m.latitude = lat;
        m.longitude = lat;
        m
    }

    #[test]
    fn ordering_runs_south_to_north() {
        let p = Matrix::new(3, 2, vec![1.0, 0.0, 0.0, 1.0, 0.2, 0.8]).unwrap();
        let south_first = [place(Some(43.0)), place(Some(45.0)), place(Some(44.0))];
        assert_eq!(bloc_ordering(&p, &south_first), vec![0, 1]);
        let north_first = [place(Some(46.0)), place(Some(43.5)), place(Some(44.0))];
        assert_eq!(bloc_ordering(&p, &north_first), vec![1, 0]);
        let tie = [place(Some(44.0)), place(Some(44.0)), place(Some(45.0))];
        assert_eq!(bloc_ordering(&p, &tie), vec![0, 1]);
        let missing = [place(Some(46.0)), place(None), place(Some(44.0))];
        assert_eq!(bloc_ordering(&p, &missing), vec![0, 1]);
    }

    #[test]
    fn support_averages_members() {
        let mut s = sample(vec![0, 1], 2, 1.0);
        s.state.alpha = vec![[3.0, 1.0], [1.0, 1.0]];
        let m = bloc_support(&[s], &[0, 0], 1, 1).unwrap();
        assert!((m.get(0, 0) - 0.625).abs() < 1e-12);
    }
}
