use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};
use crate::math::{mean, std_dev};
use crate::model::VoteTable;

/// How a bloc's support for a question is aggregated from its members.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SupportWeighting {
    /// Pooled yes votes over pooled votes cast.
    #[default]
    VoteWeighted,
    /// Unweighted mean of the members' yes shares.
    MeanOfProportions,
}

/// Mean and SD, across one year's questions, of the support difference
/// between two representative blocs.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationRecord {
    pub year: i32,
    pub pair: (usize, usize),
    pub mean: f64,
    pub sd: f64,
    pub questions: usize,
}

fn bloc_support(data: &VoteTable, labels: &[usize], bloc: usize, q: usize, weighting: SupportWeighting) -> f64 {
    let members = labels.iter().enumerate().filter(|(_, &l)| l == bloc).map(|(i, _)| data.cell(i, q));
    match weighting {
        SupportWeighting::VoteWeighted => {
            let (yes, total) = members.fold((0u64, 0u64), |(y, t), c| (y + c.yes as u64, t + c.total()));
            yes as f64 / total as f64
        }
        SupportWeighting::MeanOfProportions => {
            let shares: Vec<f64> = members.filter(|c| c.total() > 0).map(|c| c.proportion_yes()).collect();
            mean(&shares)
        }
    }
}

/// Per-year support differences `support(a) - support(b)` for each requested
/// bloc pair, ordered by year and then by the order of `pairs`.
pub fn polarization_series(
    data: &VoteTable,
    labels: &[usize],
    k_star: usize,
    pairs: &[(usize, usize)],
    weighting: SupportWeighting,
) -> Result<Vec<PolarizationRecord>> {
    if labels.len() != data.n_municipalities() {
        return Err(Error::DimensionMismatch("labels do not match the data".into()));
    }
    let mut sizes = alloc::vec![0usize; k_star];
    for &l in labels {
        if l >= k_star {
            return Err(Error::OutOfRange { index: l, bound: k_star });
        }
        sizes[l] += 1;
    }
    for &(a, b) in pairs {
        for bloc in [a, b] {
            if bloc >= k_star {
                return Err(Error::OutOfRange { index: bloc, bound: k_star });
            }
            if sizes[bloc] == 0 {
                return Err(invalid!("bloc {bloc} has no members"));
            }
        }
    }
    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (q, question) in data.questions().iter().enumerate() {
        by_year.entry(question.year).or_default().push(q);
    }
    let mut out = Vec::new();
    for (&year, qs) in &by_year {
        for &(a, b) in pairs {
            let diffs: Vec<f64> = qs
                .iter()
                .map(|&q| bloc_support(data, labels, a, q, weighting) - bloc_support(data, labels, b, q, weighting))
                .collect();
            out.push(PolarizationRecord {
                year,
                pair: (a, b),
                mean: mean(&diffs),
                sd: std_dev(&diffs),
                questions: diffs.len(),
            });
        }
    }
    Ok(out)
}
