use super::Matrix;
use crate::error::{invalid, Error, Result};
use crate::math::{ln, sqrt};
use crate::model::VoteTable;

fn xlogx_over(p: f64, m: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        p * ln(p / m)
    }
}

/// Jensen-Shannon distance (natural log) between two Bernoulli distributions
/// with success probabilities `p` and `q`.
pub fn js_distance(p: f64, q: f64) -> f64 {
    let m1 = 0.5 * (p + q);
    let m0 = 1.0 - m1;
    let kl = |a: f64| xlogx_over(a, m1) + xlogx_over(1.0 - a, m0);
    sqrt((0.5 * kl(p) + 0.5 * kl(q)).max(0.0))
}

/// Pairwise Jensen-Shannon distances between municipalities' observed yes
/// shares on question `q`.
pub fn js_matrix(data: &VoteTable, q: usize) -> Result<Matrix> {
    if q >= data.n_questions() {
        return Err(Error::OutOfRange {
            index: q,
            bound: data.n_questions(),
        });
    }
    let n = data.n_municipalities();
    let shares: alloc::vec::Vec<f64> = (0..n).map(|i| data.cell(i, q).proportion_yes()).collect();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = js_distance(shares[i], shares[j]);
            out.set(i, j, d);
            out.set(j, i, d);
        }
    }
    Ok(out)
}

/// Euclidean distance between municipalities after a centered log-ratio
/// transform of each question's smoothed yes/no composition, accumulated
/// over questions.
pub fn clr_distance_export(data: &VoteTable, pseudocount: f64) -> Result<Matrix> {
    if !(pseudocount > 0.0 && pseudocount.is_finite()) {
        return Err(invalid!("pseudocount must be positive, got {pseudocount}"));
    }
    let n = data.n_municipalities();
    // With two parts the transform is (h, -h) where h = ln(yes'/no') / 2.
    let half: alloc::vec::Vec<f64> = data
        .counts()
        .iter()
        .map(|c| 0.5 * (ln(c.yes as f64 + pseudocount) - ln(c.no as f64 + pseudocount)))
        .collect();
    let nq = data.n_questions();
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let ss: f64 = (0..nq)
                .map(|q| {
                    let d = half[i * nq + q] - half[j * nq + q];
                    2.0 * d * d
                })
                .sum();
            let d = sqrt(ss);
            out.set(i, j, d);
            out.set(j, i, d);
        }
    }
    Ok(out)
}
