//! Convergence summaries for scalar traces.

use alloc::vec::Vec;

use crate::error::{invalid, Result};
use crate::math::{mean, sqrt};

fn sq(x: f64) -> f64 {
    x * x
}

/// Potential scale reduction factor of Gelman and Rubin for equal-length chains.
pub fn gelman_rubin(chains: &[&[f64]]) -> Result<f64> {
    if chains.len() < 2 {
        return Err(invalid!("need at least two chains, got {}", chains.len()));
    }
    let n = chains[0].len();
    if n < 2 || chains.iter().any(|c| c.len() != n) {
        return Err(invalid!("chains must share a length of at least two"));
    }
    let m = chains.len() as f64;
    let nf = n as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let grand = mean(&means);
    let between = nf / (m - 1.0) * means.iter().map(|x| sq(x - grand)).sum::<f64>();
    let within = chains
        .iter()
        .zip(&means)
        .map(|(c, mu)| c.iter().map(|x| sq(x - mu)).sum::<f64>() / (nf - 1.0))
        .sum::<f64>()
        / m;
    if within == 0.0 {
        return Ok(if between == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let pooled = (nf - 1.0) / nf * within + between / nf;
    Ok(sqrt(pooled / within))
}

/// Monte Carlo standard error of the trace mean using non-overlapping batch
/// means with `⌊√n⌋` batches.
pub fn batch_means_se(trace: &[f64]) -> Result<f64> {
    let n = trace.len();
    let batches = sqrt(n as f64) as usize;
    if batches < 2 {
        return Err(invalid!("trace of length {n} is too short for batch means"));
    }
    let size = n / batches;
    let bm: Vec<f64> = (0..batches)
        .map(|b| mean(&trace[b * size..(b + 1) * size]))
        .collect();
    let mu = mean(&bm);
    let var = bm.iter().map(|x| sq(x - mu)).sum::<f64>() / (batches as f64 - 1.0);
    Ok(sqrt(var / batches as f64))
}

/// Effective sample size implied by the batch-means standard error.
pub fn effective_sample_size(trace: &[f64]) -> Result<f64> {
    let se = batch_means_se(trace)?;
    let sd = crate::math::std_dev(trace);
    if se == 0.0 {
        return Ok(trace.len() as f64);
    }
    Ok((sd * sd) / (se * se))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{gamma, stream_rng};
    use alloc::vec;

    #[test]
    fn identical_chains_give_unit_rhat() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let r = gelman_rubin(&[&a, &a]).unwrap();
        assert!((r - sqrt(0.75)).abs() < 1e-12);
    }

    #[test]
    fn separated_chains_give_large_rhat() {
        let a = [0.0, 0.1, -0.1, 0.05];
        let b = [10.0, 10.1, 9.9, 10.05];
        assert!(gelman_rubin(&[&a, &b]).unwrap() > 10.0);
    }

    #[test]
    fn batch_se_matches_iid_rate() {
        let mut rng = stream_rng(3, 0);
        let xs: Vec<f64> = (0..40_000).map(|_| gamma(&mut rng, 1.0, 1.0)).collect();
        let se = batch_means_se(&xs).unwrap();
        let expected = 1.0 / sqrt(40_000.0);
        assert!(se > 0.6 * expected && se < 1.6 * expected, "{se}");
    }

    #[test]
    fn short_traces_are_rejected() {
        assert!(batch_means_se(&[1.0, 2.0, 3.0]).is_err());
        assert!(gelman_rubin(&[&[1.0][..]]).is_err());
        let v = vec![1.0; 10];
        assert!(gelman_rubin(&[&v, &v[..5]]).is_err());
    }
}
