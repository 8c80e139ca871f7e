use alloc::vec::Vec;

use crate::math::{ln_beta, ln_choose, ln_gamma};
use crate::model::{Alpha, VoteTable};

/// Per-(municipality, bloc) log-likelihood sums `Σ_q ln BB(c_iq | α_kq)`,
/// stored row-major `N × K`. Columns are refreshed when `α` changes and
/// pushed or removed on births and deaths.
#[derive(Debug, Clone)]
pub(crate) struct LogLikCache {
    n: usize,
    q: usize,
    k: usize,
    ln_choose: Vec<f64>,
    values: Vec<f64>,
}

impl LogLikCache {
    pub fn new(data: &VoteTable) -> Self {
        let ln_choose = data
            .counts()
            .iter()
            .map(|c| ln_choose(c.total(), c.yes as u64))
            .collect();
        Self {
            n: data.n_municipalities(),
            q: data.n_questions(),
            k: 0,
            ln_choose,
            values: Vec::new(),
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.values[i * self.k + k]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.k..(i + 1) * self.k]
    }

    fn column(&self, data: &VoteTable, alpha_k: &[Alpha], out: &mut Vec<f64>) {
        out.clear();
        let norms: Vec<(f64, f64)> = alpha_k
            .iter()
            .map(|a| (ln_beta(a[0], a[1]), a[0] + a[1]))
            .collect();
        for i in 0..self.n {
            let mut s = 0.0;
            for (q, c) in data.row(i).iter().enumerate() {
                if c.yes == 0 && c.no == 0 {
                    continue;
                }
                let a = alpha_k[q];
                let (norm, total) = norms[q];
                s += self.ln_choose[i * self.q + q]
                    + ln_gamma(c.yes as f64 + a[0])
                    + ln_gamma(c.no as f64 + a[1])
                    - ln_gamma(c.total() as f64 + total)
                    - norm;
            }
            out.push(s);
        }
    }

    /// Recomputes every column for `k` blocs.
    pub fn refresh(&mut self, data: &VoteTable, alpha: &[Alpha], k: usize) {
        self.k = k;
        self.values.clear();
        self.values.resize(self.n * k, 0.0);
        let mut col = Vec::with_capacity(self.n);
        for j in 0..k {
            self.column(data, &alpha[j * self.q..(j + 1) * self.q], &mut col);
            for (i, v) in col.iter().enumerate() {
                self.values[i * k + j] = *v;
            }
        }
    }

    /// Appends a column for a newly born bloc.
    pub fn push(&mut self, data: &VoteTable, alpha_new: &[Alpha]) {
        let mut col = Vec::with_capacity(self.n);
        self.column(data, alpha_new, &mut col);
        let old_k = self.k;
        let mut values = Vec::with_capacity(self.n * (old_k + 1));
        for i in 0..self.n {
            values.extend_from_slice(&self.values[i * old_k..(i + 1) * old_k]);
            values.push(col[i]);
        }
        self.values = values;
        self.k = old_k + 1;
    }

    /// Drops the column of a dead bloc; later columns shift down.
    pub fn remove(&mut self, dead: usize) {
        let old_k = self.k;
        let mut values = Vec::with_capacity(self.n * (old_k - 1));
        for i in 0..self.n {
            let row = &self.values[i * old_k..(i + 1) * old_k];
            values.extend_from_slice(&row[..dead]);
            values.extend_from_slice(&row[dead + 1..]);
        }
        self.values = values;
        self.k = old_k - 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{row_log_likelihood, VoteCount};

    #[test]
    fn incremental_updates_match_full_refresh() {
        let data = VoteTable::from_counts(
            3,
            2,
            alloc::vec![
                VoteCount::new(5, 2),
                VoteCount::new(0, 9),
                VoteCount::new(40, 11),
                VoteCount::new(3, 3),
                VoteCount::new(1, 0),
                VoteCount::new(7, 8),
            ],
        )
        .unwrap();
        let mut alpha: Vec<Alpha> = alloc::vec![[1.0, 2.0], [0.3, 0.7], [5.0, 5.0], [2.0, 9.0]];
        let mut cache = LogLikCache::new(&data);
        cache.refresh(&data, &alpha, 2);
        let born = [[0.9, 0.2], [12.0, 1.0]];
        cache.push(&data, &born);
        alpha.extend_from_slice(&born);
        cache.remove(0);
        alpha.drain(0..2);
        for i in 0..3 {
            for k in 0..2 {
                let direct = row_log_likelihood(&data, &alpha, i, k);
                assert!((cache.get(i, k) - direct).abs() < 1e-10);
            }
        }
    }
}
