//! Synthetic referendum data with known bloc structure, and the recovery
//! experiment that checks whether inference finds the generating `K`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::bdmcmc::{posterior_k, posterior_mode, run_chain, PosteriorSample, RunConfig};
use crate::error::{invalid, Result};
use crate::model::{Alpha, Hyperparams, VoteCount, VoteTable};
use crate::random::{self, stream_rng, ChainRng};
use crate::sampler::SweepConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimSpec {
    pub k_true: usize,
    pub n: usize,
    pub q: usize,
    /// Voters per municipality.
    pub c: u32,
    /// Symmetric Dirichlet concentration of the municipal mixtures.
    pub delta: f64,
    /// Gamma `(shape, scale)` from which every bloc's `α` pair is drawn.
    pub alpha_gen: (f64, f64),
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            k_true: 3,
            n: 200,
            q: 20,
            c: 1000,
            delta: 0.1,
            alpha_gen: (1.0, 20.0),
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_true == 0 || self.n == 0 || self.q == 0 || self.c == 0 {
            return Err(invalid!("K, N, Q and C must all be positive"));
        }
        let positive = |x: f64| x > 0.0 && x.is_finite();
        if !positive(self.delta) {
            return Err(invalid!("delta must be positive, got {}", self.delta));
        }
        if !positive(self.alpha_gen.0) || !positive(self.alpha_gen.1) {
            return Err(invalid!("alpha generator parameters must be positive"));
        }
        Ok(())
    }

    /// Generator for a single dataset from `seed`.
    pub fn rng(&self) -> ChainRng {
        stream_rng(self.seed, 0)
    }
}

/// Parameters that produced a simulated table.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub k: usize,
    /// Municipal mixture weights, row-major `N × K`.
    pub lambda: Vec<f64>,
    /// Bloc parameters, row-major `K × Q`.
    pub alpha: Vec<Alpha>,
}

impl GroundTruth {
    pub fn lambda_row(&self, i: usize) -> &[f64] {
        &self.lambda[i * self.k..(i + 1) * self.k]
    }
}

/// Draws mixtures `λ_i ~ Dir(δ)`, bloc parameters from the `α` generator,
/// then for every (municipality, question, bloc) a support level from the
/// bloc's Beta law and `round(C λ_ik)` votes at that support.
pub fn simulate_dataset<R: Rng + ?Sized>(spec: &SimSpec, rng: &mut R) -> Result<(VoteTable, GroundTruth)> {
    spec.validate()?;
    let (k, n, nq) = (spec.k_true, spec.n, spec.q);
    let conc = alloc::vec![spec.delta; k];
    let mut lambda = Vec::with_capacity(n * k);
    for _ in 0..n {
        lambda.extend(random::dirichlet(rng, &conc));
    }
    let (shape, scale) = spec.alpha_gen;
    let alpha: Vec<Alpha> = (0..k * nq)
        .map(|_| {
            [
                random::gamma(rng, shape, scale).max(f64::MIN_POSITIVE),
                random::gamma(rng, shape, scale).max(f64::MIN_POSITIVE),
            ]
        })
        .collect();
    let mut counts = Vec::with_capacity(n * nq);
    for i in 0..n {
        let voters: Vec<u64> = (0..k)
            .map(|b| libm::round(spec.c as f64 * lambda[i * k + b]) as u64)
            .collect();
        for q in 0..nq {
            let mut cell = VoteCount::default();
            for b in 0..k {
                if voters[b] == 0 {
                    continue;
                }
                let a = alpha[b * nq + q];
                let p = random::beta(rng, a[0], a[1]);
                let yes = Binomial::new(voters[b], p)
                    .map_err(|e| invalid!("binomial draw failed: {e}"))?
                    .sample(rng);
                cell.yes += yes as u32;
                cell.no += (voters[b] - yes) as u32;
            }
            counts.push(cell);
        }
    }
    let (m, q) = (
        (0..n)
            .map(|i| crate::model::Municipality::new(alloc::format!("m{}", i + 1), alloc::format!("sim{}", i + 1)))
            .collect(),
        (0..nq)
            .map(|j| crate::model::Question::new(alloc::format!("q{}", j + 1), 2008))
            .collect(),
    );
    let table = VoteTable::new_allow_empty(m, q, counts)?;
    Ok((table, GroundTruth { k, lambda, alpha }))
}

/// Outcome of one simulated replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateReport {
    pub cell: usize,
    pub replicate: usize,
    pub spec: SimSpec,
    pub posterior: BTreeMap<usize, f64>,
    pub mode: usize,
    pub mass_at_truth: f64,
}

impl ReplicateReport {
    pub fn mode_matches(&self) -> bool {
        self.mode == self.spec.k_true
    }
}

/// Per-cell aggregate of [`ReplicateReport`]s.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: usize,
    pub spec: SimSpec,
    pub replicates: usize,
    pub mode_matches: usize,
    pub mean_mass_at_truth: f64,
}

impl CellSummary {
    pub fn match_rate(&self) -> f64 {
        self.mode_matches as f64 / self.replicates as f64
    }
}

/// Shared inference settings for a recovery experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoverySettings {
    pub hyper: Hyperparams,
    pub sweep: SweepConfig,
    pub run: RunConfig,
    pub min_bloc_size: usize,
}

fn replicate_stream(cell: usize, replicate: usize) -> u64 {
    ((cell as u64) << 32) | replicate as u64
}

/// Simulates replicate `replicate` of grid cell `cell` and runs inference on
/// it. The dataset is drawn from stream `(cell, replicate)` of the cell's
/// seed and chain `c` from stream `(cell, replicate)` of `run.seed + c + 1`,
/// so replicates are independent of evaluation order.
pub fn recovery_replicate(
    spec: &SimSpec,
    cell: usize,
    replicate: usize,
    settings: &RecoverySettings,
) -> Result<ReplicateReport> {
    let stream = replicate_stream(cell, replicate);
    let mut data_rng = stream_rng(spec.seed, stream);
    let (table, _) = simulate_dataset(spec, &mut data_rng)?;
    let mut samples: Vec<PosteriorSample> = Vec::new();
    for c in 0..settings.run.chains {
        let mut rng = stream_rng(settings.run.seed.wrapping_add(c as u64 + 1), stream);
        let out = run_chain(&table, &settings.hyper, &settings.sweep, &settings.run, &mut rng)?;
        samples.extend(out.samples);
    }
    let posterior = posterior_k(&samples, settings.min_bloc_size)?;
    let mode = posterior_mode(&posterior).unwrap_or(0);
    let mass_at_truth = posterior.get(&spec.k_true).copied().unwrap_or(0.0);
    Ok(ReplicateReport {
        cell,
        replicate,
        spec: *spec,
        posterior,
        mode,
        mass_at_truth,
    })
}

/// Runs every replicate of every cell sequentially.
pub fn recovery_grid(cells: &[SimSpec], replicates: usize, settings: &RecoverySettings) -> Result<Vec<ReplicateReport>> {
    let mut out = Vec::with_capacity(cells.len() * replicates);
    for (c, spec) in cells.iter().enumerate() {
        for r in 0..replicates {
            out.push(recovery_replicate(spec, c, r, settings)?);
        }
    }
    Ok(out)
}

/// Mode-match counts and mean posterior mass at the truth per cell.
pub fn summarize(reports: &[ReplicateReport]) -> Vec<CellSummary> {
    let mut by_cell: BTreeMap<usize, CellSummary> = BTreeMap::new();
    for r in reports {
        let s = by_cell.entry(r.cell).or_insert(CellSummary {
            cell: r.cell,
            spec: r.spec,
            replicates: 0,
            mode_matches: 0,
            mean_mass_at_truth: 0.0,
        });
        s.replicates += 1;
        s.mode_matches += r.mode_matches() as usize;
        s.mean_mass_at_truth += r.mass_at_truth;
    }
    by_cell
        .into_values()
        .map(|mut s| {
            s.mean_mass_at_truth /= s.replicates as f64;
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SimSpec {
        SimSpec {
            k_true: 3,
            n: 50,
            q: 10,
            c: 500,
            delta: 0.1,
            alpha_gen: (1.0, 20.0),
            seed: 4,
        }
    }

    #[test]
    fn totals_follow_rounded_allocations() {
        let spec = small();
        let (t, truth) = simulate_dataset(&spec, &mut spec.rng()).unwrap();
        for i in 0..spec.n {
            let row = truth.lambda_row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let expected: u64 = row.iter().map(|l| libm::round(500.0 * l) as u64).sum();
            for q in 0..spec.q {
                let total = t.cell(i, q).total();
                assert_eq!(total, expected);
                assert!(total.abs_diff(500) <= 3);
            }
        }
        assert!(truth.alpha.iter().all(|a| a[0] > 0.0 && a[1] > 0.0));
    }

    #[test]
    fn replays_from_seed() {
        let spec = small();
        let a = simulate_dataset(&spec, &mut spec.rng()).unwrap();
        let b = simulate_dataset(&spec, &mut spec.rng()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_delta_gives_pure_municipalities() {
        let spec = SimSpec {
            delta: 0.001,
            n: 400,
            q: 1,
            ..small()
        };
        let (_, truth) = simulate_dataset(&spec, &mut spec.rng()).unwrap();
        let pure = (0..spec.n)
            .filter(|&i| truth.lambda_row(i).iter().cloned().fold(0.0, f64::max) > 0.99)
            .count();
        assert!(pure as f64 / spec.n as f64 > 0.95, "{pure}");
    }

    #[test]
    fn pure_bloc_support_matches_beta_mean() {
        let spec = SimSpec {
            k_true: 2,
            n: 2000,
            q: 2,
            c: 200,
            delta: 0.001,
            alpha_gen: (5.0, 2.0),
            seed: 8,
        };
        let (t, truth) = simulate_dataset(&spec, &mut spec.rng()).unwrap();
        for b in 0..2 {
            for q in 0..2 {
                let shares: Vec<f64> = (0..spec.n)
                    .filter(|&i| truth.lambda_row(i)[b] > 0.99)
                    .map(|i| t.cell(i, q).proportion_yes())
                    .collect();
                let a = truth.alpha[b * 2 + q];
                let target = a[0] / (a[0] + a[1]);
                let m = crate::math::mean(&shares);
                let se = crate::math::std_dev(&shares) / libm::sqrt(shares.len() as f64);
                assert!((m - target).abs() < 4.0 * se + 1e-3, "{m} vs {target}");
            }
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut rng = small().rng();
        for bad in [
            SimSpec { k_true: 0, ..small() },
            SimSpec { delta: 0.0, ..small() },
            SimSpec { alpha_gen: (1.0, -1.0), ..small() },
        ] {
            assert!(simulate_dataset(&bad, &mut rng).is_err());
        }
    }

    #[test]
    fn summary_counts_matches() {
        let spec = small();
        let mk = |cell, mode| ReplicateReport {
            cell,
            replicate: 0,
            spec,
            posterior: BTreeMap::new(),
            mode,
            mass_at_truth: 0.5,
        };
        let s = summarize(&[mk(0, 3), mk(0, 2), mk(1, 3)]);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].mode_matches, 1);
        assert_eq!(s[0].match_rate(), 0.5);
        assert_eq!(s[1].replicates, 1);
    }
}
