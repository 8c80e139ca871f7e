use alloc::vec::Vec;

use rand::Rng;

use crate::bdmcmc::PosteriorSample;
use crate::error::{invalid, Error, Result};
use crate::math::{mad, median, median_in_place, std_dev};
use crate::model::VoteTable;
use crate::random::{self, stream_rng};

/// Posterior-predictive fit per municipality and question.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionFitTable {
    pub n_municipalities: usize,
    pub n_questions: usize,
    /// Pooled predictive median of the yes share, row-major `N × Q`.
    pub predicted: Vec<f64>,
    /// `predicted - observed`, row-major `N × Q`.
    pub fit: Vec<f64>,
    /// Per question, median of the fits across municipalities.
    pub median: Vec<f64>,
    /// Per question, standard deviation of the fits across municipalities.
    pub sd: Vec<f64>,
    pub threshold: f64,
    /// Indices of questions whose fit SD exceeds `threshold`.
    pub flagged: Vec<usize>,
}

impl QuestionFitTable {
    pub fn fit(&self, i: usize, q: usize) -> f64 {
        self.fit[i * self.n_questions + q]
    }

    pub fn predicted(&self, i: usize, q: usize) -> f64 {
        self.predicted[i * self.n_questions + q]
    }
}

/// Flagging threshold for per-question fit SDs: median plus three
/// (unscaled) median absolute deviations.
pub fn flag_threshold(sds: &[f64]) -> f64 {
    median(sds) + 3.0 * mad(sds)
}

fn weighted_median(pool: &mut [(f64, f64)]) -> f64 {
    pool.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pool.iter().map(|p| p.1).sum();
    let mut acc = 0.0;
    for &(x, w) in pool.iter() {
        acc += w;
        if acc >= 0.5 * total {
            return x;
        }
    }
    pool.last().map_or(f64::NAN, |p| p.0)
}

/// Predictive medians of question `q` for every municipality: each retained
/// sample contributes `draws` Beta draws at its bloc's `α` for that cell.
pub fn predicted_column<R: Rng + ?Sized>(
    data: &VoteTable,
    samples: &[PosteriorSample],
    q: usize,
    draws: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let nq = data.n_questions();
    if q >= nq {
        return Err(Error::OutOfRange { index: q, bound: nq });
    }
    if draws == 0 {
        return Err(invalid!("draws per sample must be at least 1"));
    }
    if samples.is_empty() {
        return Err(Error::Empty("no posterior samples".into()));
    }
    let n = data.n_municipalities();
    for s in samples {
        if s.state.z.len() != n || s.state.alpha.len() != s.state.k * nq {
            return Err(Error::DimensionMismatch("sample does not match the data".into()));
        }
    }
    let equal = samples.iter().all(|s| s.wait_time == samples[0].wait_time);
    let mut plain = Vec::new();
    let mut weighted = Vec::new();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        plain.clear();
        weighted.clear();
        for s in samples {
            let a = s.state.alpha[s.state.z[i] * nq + q];
            for _ in 0..draws {
                let p = random::beta(rng, a[0], a[1]);
                if equal {
                    plain.push(p);
                } else {
                    weighted.push((p, s.wait_time));
                }
            }
        }
        out.push(if equal {
            median_in_place(&mut plain)
        } else {
            weighted_median(&mut weighted)
        });
    }
    Ok(out)
}

/// Assembles a fit table from per-question predictive medians
/// (`columns[q][i]`).
pub fn fit_from_columns(data: &VoteTable, columns: &[Vec<f64>]) -> Result<QuestionFitTable> {
    let n = data.n_municipalities();
    let nq = data.n_questions();
    if columns.len() != nq || columns.iter().any(|c| c.len() != n) {
        return Err(Error::DimensionMismatch("predictive columns do not match the data".into()));
    }
    let mut predicted = alloc::vec![0.0; n * nq];
    let mut fit = alloc::vec![0.0; n * nq];
    let mut median_fit = Vec::with_capacity(nq);
    let mut sd = Vec::with_capacity(nq);
    let mut col = Vec::with_capacity(n);
    for (q, c) in columns.iter().enumerate() {
        col.clear();
        for i in 0..n {
            let cell = data.cell(i, q);
            let f = if cell.total() == 0 {
                f64::NAN
            } else {
                c[i] - cell.proportion_yes()
            };
            predicted[i * nq + q] = c[i];
            fit[i * nq + q] = f;
            if f.is_finite() {
                col.push(f);
            }
        }
        sd.push(std_dev(&col));
        median_fit.push(median_in_place(&mut col));
    }
    let threshold = if sd.is_empty() { f64::NAN } else { flag_threshold(&sd) };
    let flagged = (0..nq).filter(|&q| sd[q] > threshold).collect();
    Ok(QuestionFitTable {
        n_municipalities: n,
        n_questions: nq,
        predicted,
        fit,
        median: median_fit,
        sd,
        threshold,
        flagged,
    })
}

/// Posterior-predictive question fit. Question `q` draws from stream `q` of
/// `seed`, so the result does not depend on evaluation order.
pub fn question_fit(
    data: &VoteTable,
    samples: &[PosteriorSample],
    draws_per_sample: usize,
    seed: u64,
) -> Result<QuestionFitTable> {
    let columns = (0..data.n_questions())
        .map(|q| {
            let mut rng = stream_rng(seed, q as u64);
            predicted_column(data, samples, q, draws_per_sample, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    fit_from_columns(data, &columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelState, VoteCount};
    use alloc::vec;

    fn sample(alpha: Vec<[f64; 2]>, n: usize, wait: f64) -> PosteriorSample {
        PosteriorSample {
            state: ModelState {
                k: 1,
                eta: vec![1.0],
                z: vec![0; n],
                alpha,
            },
            wait_time: wait,
            iteration: 0,
        }
    }

    #[test]
    fn uniform_predictive_median_is_half() {
        let t = VoteTable::from_counts(1, 1, vec![VoteCount::new(7, 3)]).unwrap();
        let table = question_fit(&t, &[sample(vec![[1.0, 1.0]], 1, 1.0)], 20_000, 5).unwrap();
        assert!((table.predicted(0, 0) - 0.5).abs() < 0.01);
        assert!((table.fit(0, 0) + 0.2).abs() < 0.01);
    }

    #[test]
    fn concentrated_posterior_fits_observed() {
        let t = VoteTable::from_counts(2, 1, vec![VoteCount::new(3, 7), VoteCount::new(30, 70)]).unwrap();
        let s = sample(vec![[3e5, 7e5]], 2, 1.0);
        let table = question_fit(&t, &[s], 200, 1).unwrap();
        assert!(table.fit(0, 0).abs() < 0.01);
        assert!(table.fit(1, 0).abs() < 0.01);
    }

    #[test]
    fn replay_and_weights() {
        let t = VoteTable::from_counts(2, 2, vec![VoteCount::new(3, 7); 4]).unwrap();
        let s = [sample(vec![[2.0, 5.0]; 2], 2, 1.0), sample(vec![[5.0, 2.0]; 2], 2, 3.0)];
        let a = question_fit(&t, &s, 50, 9).unwrap();
        assert_eq!(a, question_fit(&t, &s, 50, 9).unwrap());
        // Three quarters of the weight sits on the high-support sample.
        assert!(a.predicted(0, 0) > 0.55);
        assert!(question_fit(&t, &s, 0, 9).is_err());
    }

    #[test]
    fn weighted_median_picks_heavy_side() {
        let mut pool = vec![(0.1, 1.0), (0.9, 3.0), (0.5, 1.0)];
        assert_eq!(weighted_median(&mut pool), 0.9);
    }

    #[test]
    fn outlier_sd_is_flagged() {
        let t = VoteTable::from_counts(1, 1, vec![VoteCount::new(1, 1)]).unwrap();
        let cols: Vec<Vec<f64>> = vec![vec![0.5]];
        let table = fit_from_columns(&t, &cols).unwrap();
        assert_eq!(table.sd, vec![0.0]);
        assert!(table.flagged.is_empty());
        let sds = [0.01, 0.012, 0.011, 0.2, 0.009];
        let th = flag_threshold(&sds);
        assert!(th < 0.2 && th > 0.012);
    }
}
