//! Fixed-`K` sweep: Stein–Meng augmentation, the two Metropolis–Hastings
//! updates for the Beta-binomial parameters, and the Gibbs updates for the
//! mixture weights and the assignments.

use alloc::vec::Vec;
use core::str::FromStr;

use rand::Rng;
use rand_distr::Distribution;

use crate::cache::LogLikCache;
use crate::error::{invalid, Error, Result};
use crate::math::{exp, ln, ln_1p, ln_gamma};
use crate::model::{ln_gamma_pdf, Alpha, AugmentedCounts, Hyperparams, ModelState, VoteTable};
use crate::random;

/// Which `α` update a sweep applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerSchedule {
    /// Random-walk update of `α₀ + α₁` followed by a conjugate draw of the share.
    TotalShareOnly,
    /// Independence-proposal update of each component in turn.
    ComponentwiseOnly,
    /// Total/share on even sweeps, componentwise on odd sweeps.
    Alternate,
}

impl SamplerSchedule {
    pub fn uses_total_share(self, sweep_index: usize) -> bool {
        match self {
            Self::TotalShareOnly => true,
            Self::ComponentwiseOnly => false,
            Self::Alternate => sweep_index % 2 == 0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::TotalShareOnly => "sampler1",
            Self::ComponentwiseOnly => "sampler2",
            Self::Alternate => "alternate",
        }
    }
}

impl FromStr for SamplerSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sampler1" | "sampler1-only" | "total-share" => Ok(Self::TotalShareOnly),
            "sampler2" | "sampler2-only" | "componentwise" => Ok(Self::ComponentwiseOnly),
            "alternate" => Ok(Self::Alternate),
            other => Err(invalid!("unknown sampler schedule {other:?}")),
        }
    }
}

/// Proposal settings for the `α` updates; pairs are (shape, scale).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepConfig {
    /// Distribution of the log-scale step size of the `α₀ + α₁` random walk.
    pub alpha_total_proposal: (f64, f64),
    /// Independence proposal for a single component `α_s`.
    pub alpha_component_proposal: (f64, f64),
    pub schedule: SamplerSchedule,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            alpha_total_proposal: (1.0, 1.0 / 20.0),
            alpha_component_proposal: (1.0, 20.0),
            schedule: SamplerSchedule::Alternate,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.alpha_total_proposal;
        let (c, d) = self.alpha_component_proposal;
        if [a, b, c, d].iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(invalid!("proposal shapes and scales must be positive"))
        }
    }
}

/// Draws `η ~ Dirichlet(d + γ)` where `d` counts the assignments per bloc.
pub fn update_eta<R: Rng + ?Sized>(z: &[usize], k: usize, gamma: f64, rng: &mut R) -> Vec<f64> {
    if k == 1 {
        return alloc::vec![1.0];
    }
    let mut conc = alloc::vec![gamma; k];
    for &zi in z {
        conc[zi] += 1.0;
    }
    random::dirichlet(rng, &conc)
}

/// Draws every `z_i` from its full conditional `∝ η_k Π_q BB(c_iq | α_kq)`.
pub fn update_z<R: Rng + ?Sized>(
    data: &VoteTable,
    alpha: &[Alpha],
    eta: &[f64],
    rng: &mut R,
) -> Vec<usize> {
    let k = eta.len();
    let mut cache = LogLikCache::new(data);
    cache.refresh(data, alpha, k);
    let mut z = alloc::vec![0; data.n_municipalities()];
    update_z_cached(&cache, eta, &mut z, rng);
    z
}

pub(crate) fn update_z_cached<R: Rng + ?Sized>(
    cache: &LogLikCache,
    eta: &[f64],
    z: &mut [usize],
    rng: &mut R,
) {
    let k = eta.len();
    if k == 1 {
        z.iter_mut().for_each(|zi| *zi = 0);
        return;
    }
    let ln_eta: Vec<f64> = eta.iter().map(|&e| ln(e)).collect();
    let mut w = alloc::vec![0.0; k];
    for (i, zi) in z.iter_mut().enumerate() {
        for ((wk, le), l) in w.iter_mut().zip(&ln_eta).zip(cache.row(i)) {
            *wk = le + l;
        }
        *zi = random::categorical_log(rng, &w);
    }
}

/// Draws `Σ_{m=1}^{c} Bernoulli(a / (a + m - 1))`.
///
/// The success probabilities decrease in `m`, so whichever of successes or
/// failures is expected to be rarer is simulated by thinning over blocks of
/// geometrically growing length: geometric skips at the block's extreme
/// probability, then a correction coin at each landing position.
pub fn augment_count<R: Rng + ?Sized>(count: u32, a: f64, rng: &mut R) -> u32 {
    if count == 0 {
        return 0;
    }
    let c = count as u64;
    if c <= 16 {
        let mut r = 1u32;
        for m in 1..c {
            if rng.random::<f64>() * (a + m as f64) < a {
                r += 1;
            }
        }
        return r;
    }
    let cf = c as f64;
    let expected = a * ln_1p(cf / a);
    if expected <= cf - expected {
        thin_successes(c, a, rng)
    } else {
        count - thin_failures(c, a, rng)
    }
}

/// Successes among terms `1..c`, term `m` succeeding with `a / (a + m)`;
/// term 0 always succeeds and is included.
fn thin_successes<R: Rng + ?Sized>(c: u64, a: f64, rng: &mut R) -> u32 {
    let mut r = 1u32;
    let mut m = 1u64;
    while m < c {
        let end = (2 * m).min(c);
        let head = a / (a + m as f64);
        let rate = -ln_1p(-head);
        loop {
            let skip = libm::floor(Distribution::<f64>::sample(&rand_distr::Exp1, rng) / rate);
            if skip >= (end - m) as f64 {
                break;
            }
            m += skip as u64;
            if rng.random::<f64>() * head * (a + m as f64) < a {
                r += 1;
            }
            m += 1;
            if m >= end {
                break;
            }
        }
        m = end;
    }
    r
}

/// Failures among terms `1..c`, term `m` failing with `m / (a + m)`; the
/// probabilities grow with `m`, so blocks are walked downward from the top.
fn thin_failures<R: Rng + ?Sized>(c: u64, a: f64, rng: &mut R) -> u32 {
    let mut fails = 0u32;
    let mut hi = c - 1;
    while hi >= 1 {
        let lo = hi / 2 + 1;
        let head = hi as f64 / (a + hi as f64);
        let rate = -ln_1p(-head);
        let mut m = hi;
        loop {
            let skip = libm::floor(Distribution::<f64>::sample(&rand_distr::Exp1, rng) / rate);
            if skip > (m - lo) as f64 {
                break;
            }
            m -= skip as u64;
            if rng.random::<f64>() * head * (a + m as f64) < m as f64 {
                fails += 1;
            }
            if m == lo {
                break;
            }
            m -= 1;
        }
        hi = lo - 1;
    }
    fails
}

/// Redraws the augmentation counts for every cell given the assignments.
pub fn update_augmentation<R: Rng + ?Sized>(
    data: &VoteTable,
    z: &[usize],
    alpha: &[Alpha],
    rng: &mut R,
) -> AugmentedCounts {
    let mut r = AugmentedCounts::zeros(data.n_municipalities(), data.n_questions());
    fill_augmentation(data, z, alpha, &mut r, rng);
    r
}

fn fill_augmentation<R: Rng + ?Sized>(
    data: &VoteTable,
    z: &[usize],
    alpha: &[Alpha],
    r: &mut AugmentedCounts,
    rng: &mut R,
) {
    let nq = data.n_questions();
    for (i, &zi) in z.iter().enumerate() {
        for (q, c) in data.row(i).iter().enumerate() {
            let a = alpha[zi * nq + q];
            r.r[i * nq + q] = [augment_count(c.yes, a[0], rng), augment_count(c.no, a[1], rng)];
        }
    }
}

/// Sufficient statistics of the municipalities assigned to one bloc for one
/// question: summed augmentation counts and each member's vote total.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct BlocQuestionStats {
    pub r_sum: [u64; 2],
    pub totals: Vec<u64>,
}

impl BlocQuestionStats {
    pub fn gather(
        data: &VoteTable,
        z: &[usize],
        r: &AugmentedCounts,
        k: usize,
        q: usize,
    ) -> Self {
        let mut stats = Self::default();
        for (i, &zi) in z.iter().enumerate() {
            if zi == k {
                stats.push(data.cell(i, q).total(), r.get(i, q));
            }
        }
        stats
    }

    fn push(&mut self, total: u64, r: [u32; 2]) {
        self.r_sum[0] += r[0] as u64;
        self.r_sum[1] += r[1] as u64;
        self.totals.push(total);
    }

    /// `Σ_members ln Γ(x) - ln Γ(x + n_i)`.
    fn gamma_ratio(&self, x: f64) -> f64 {
        let lg = ln_gamma(x);
        self.totals
            .iter()
            .filter(|&&n| n > 0)
            .map(|&n| lg - ln_gamma(x + n as f64))
            .sum()
    }
}

/// Unnormalized log-density of `α₀ + α₁` given the augmentation.
pub fn total_log_target(stats: &BlocQuestionStats, hyper: &Hyperparams, total: f64) -> f64 {
    let r_all = (stats.r_sum[0] + stats.r_sum[1]) as f64;
    (2.0 * hyper.kappa - 1.0 + r_all) * ln(total) - total / hyper.theta + stats.gamma_ratio(total)
}

/// Log acceptance ratio for moving `α₀ + α₁` from `current` to `proposed`
/// under the symmetric log-scale random walk.
pub fn total_log_accept(
    stats: &BlocQuestionStats,
    hyper: &Hyperparams,
    current: f64,
    proposed: f64,
) -> f64 {
    total_log_target(stats, hyper, proposed) - total_log_target(stats, hyper, current)
        + ln(proposed)
        - ln(current)
}

/// Total/share update of one `(k, q)` pair. Empty blocs sample from the prior.
pub fn update_alpha_total_share<R: Rng + ?Sized>(
    stats: &BlocQuestionStats,
    current: Alpha,
    hyper: &Hyperparams,
    config: &SweepConfig,
    rng: &mut R,
) -> Alpha {
    let mut total = current[0] + current[1];
    let (shape, scale) = config.alpha_total_proposal;
    let step = random::gamma(rng, shape, scale);
    let step = if rng.random::<bool>() { step } else { -step };
    let proposed = total * exp(step);
    if proposed > 0.0 && proposed.is_finite() {
        let log_a = total_log_accept(stats, hyper, total, proposed);
        if ln(random::open01(rng)) < log_a {
            total = proposed;
        }
    }
    let share = random::beta(
        rng,
        hyper.kappa + stats.r_sum[0] as f64,
        hyper.kappa + stats.r_sum[1] as f64,
    );
    [
        (total * share).max(f64::MIN_POSITIVE),
        (total * (1.0 - share)).max(f64::MIN_POSITIVE),
    ]
}

/// Total/share update of `α_kq` computed from the raw state.
#[allow(clippy::too_many_arguments)]
pub fn update_alpha_sampler1<R: Rng + ?Sized>(
    k: usize,
    q: usize,
    data: &VoteTable,
    z: &[usize],
    r: &AugmentedCounts,
    alpha: &[Alpha],
    hyper: &Hyperparams,
    config: &SweepConfig,
    rng: &mut R,
) -> Alpha {
    let stats = BlocQuestionStats::gather(data, z, r, k, q);
    update_alpha_total_share(&stats, alpha[k * data.n_questions() + q], hyper, config, rng)
}

/// Unnormalized log full conditional of component `s` of `α_kq` at `x`, with
/// the other component held at `other`.
pub fn component_log_target(
    stats: &BlocQuestionStats,
    hyper: &Hyperparams,
    s: usize,
    x: f64,
    other: f64,
) -> f64 {
    (hyper.kappa + stats.r_sum[s] as f64 - 1.0) * ln(x) - x / hyper.theta
        + stats.gamma_ratio(x + other)
}

/// Log acceptance ratio of the independence proposal for component `s`.
pub fn component_log_accept(
    stats: &BlocQuestionStats,
    hyper: &Hyperparams,
    config: &SweepConfig,
    s: usize,
    current: Alpha,
    proposed: f64,
) -> f64 {
    let other = current[1 - s];
    let (shape, scale) = config.alpha_component_proposal;
    component_log_target(stats, hyper, s, proposed, other)
        - component_log_target(stats, hyper, s, current[s], other)
        + ln_gamma_pdf(current[s], shape, scale)
        - ln_gamma_pdf(proposed, shape, scale)
}

/// Componentwise update of `α_kqs` from sufficient statistics.
pub fn update_alpha_component<R: Rng + ?Sized>(
    stats: &BlocQuestionStats,
    current: Alpha,
    s: usize,
    hyper: &Hyperparams,
    config: &SweepConfig,
    rng: &mut R,
) -> f64 {
    let (shape, scale) = config.alpha_component_proposal;
    let proposed = random::gamma(rng, shape, scale);
    if !(proposed > 0.0) {
        return current[s];
    }
    let log_a = component_log_accept(stats, hyper, config, s, current, proposed);
    if ln(random::open01(rng)) < log_a {
        proposed
    } else {
        current[s]
    }
}

/// Componentwise update of `α_kqs` computed from the raw state.
#[allow(clippy::too_many_arguments)]
pub fn update_alpha_sampler2<R: Rng + ?Sized>(
    k: usize,
    q: usize,
    s: usize,
    data: &VoteTable,
    z: &[usize],
    r: &AugmentedCounts,
    alpha: &[Alpha],
    hyper: &Hyperparams,
    config: &SweepConfig,
    rng: &mut R,
) -> f64 {
    let stats = BlocQuestionStats::gather(data, z, r, k, q);
    update_alpha_component(&stats, alpha[k * data.n_questions() + q], s, hyper, config, rng)
}

fn update_all_alpha<R: Rng + ?Sized>(
    data: &VoteTable,
    state: &mut ModelState,
    r: &AugmentedCounts,
    hyper: &Hyperparams,
    config: &SweepConfig,
    total_share: bool,
    rng: &mut R,
) {
    let nq = data.n_questions();
    let mut members: Vec<Vec<usize>> = alloc::vec![Vec::new(); state.k];
    for (i, &zi) in state.z.iter().enumerate() {
        members[zi].push(i);
    }
    let mut stats = BlocQuestionStats::default();
    for (k, group) in members.iter().enumerate() {
        for q in 0..nq {
            stats.r_sum = [0, 0];
            stats.totals.clear();
            for &i in group {
                stats.push(data.cell(i, q).total(), r.get(i, q));
            }
            let slot = k * nq + q;
            if total_share {
                state.alpha[slot] =
                    update_alpha_total_share(&stats, state.alpha[slot], hyper, config, rng);
            } else {
                for s in 0..2 {
                    let v = update_alpha_component(&stats, state.alpha[slot], s, hyper, config, rng);
                    state.alpha[slot][s] = v;
                }
            }
        }
    }
}

/// One sweep at fixed `K`, reusing and refreshing a likelihood cache.
#[allow(clippy::too_many_arguments)]
pub(crate) fn sweep_cached<R: Rng + ?Sized>(
    data: &VoteTable,
    state: &mut ModelState,
    r: &mut AugmentedCounts,
    cache: &mut LogLikCache,
    hyper: &Hyperparams,
    config: &SweepConfig,
    sweep_index: usize,
    rng: &mut R,
) {
    fill_augmentation(data, &state.z, &state.alpha, r, rng);
    let total_share = config.schedule.uses_total_share(sweep_index);
    update_all_alpha(data, state, r, hyper, config, total_share, rng);
    cache.refresh(data, &state.alpha, state.k);
    state.eta = update_eta(&state.z, state.k, hyper.gamma, rng);
    update_z_cached(cache, &state.eta, &mut state.z, rng);
    state.renormalize_eta();
}

/// One fixed-`K` iteration: augmentation, every `α_kq`, `η`, then `z`.
///
/// `sweep_index` selects the `α` update under [`SamplerSchedule::Alternate`].
#[allow(clippy::too_many_arguments)]
pub fn sweep<R: Rng + ?Sized>(
    data: &VoteTable,
    state: &mut ModelState,
    r: &mut AugmentedCounts,
    hyper: &Hyperparams,
    config: &SweepConfig,
    sweep_index: usize,
    rng: &mut R,
) -> Result<()> {
    state.validate(data.n_municipalities(), data.n_questions())?;
    if r.n != data.n_municipalities() || r.q != data.n_questions() {
        return Err(Error::DimensionMismatch("augmentation shape".into()));
    }
    let mut cache = LogLikCache::new(data);
    sweep_cached(data, state, r, &mut cache, hyper, config, sweep_index, rng);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{mean, std_dev};
    use crate::model::VoteCount;
    use crate::random::stream_rng;
    use proptest::prelude::*;

    #[test]
    fn augmentation_edge_counts() {
        let mut rng = stream_rng(1, 0);
        assert_eq!(augment_count(0, 3.0, &mut rng), 0);
        for a in [0.01, 1.0, 1e6] {
            assert_eq!(augment_count(1, a, &mut rng), 1);
        }
        // Huge alpha makes every Bernoulli a near-certain success.
        assert_eq!(augment_count(50, 1e12, &mut rng), 50);
    }

    #[test]
    fn augmentation_mean_matches_harmonic_sum() {
        let mut rng = stream_rng(2, 0);
        let n = 100_000;
        let total: u64 = (0..n).map(|_| augment_count(3, 1.0, &mut rng) as u64).sum();
        let m = total as f64 / n as f64;
        assert!((m - 11.0 / 6.0).abs() < 0.01, "{m}");
    }

    /// Naive Bernoulli sum used as the reference distribution.
    fn naive(count: u32, a: f64, rng: &mut impl rand::Rng) -> u32 {
        (1..=count)
            .filter(|&m| rng.random::<f64>() < a / (a + (m - 1) as f64))
            .count() as u32
    }

    #[test]
    fn thinned_augmentation_matches_naive_distribution() {
        for &(c, a) in &[(40u32, 0.7), (200, 5.0), (25, 30.0), (1000, 20.0), (300, 400.0), (17, 1e4)] {
            let mut r1 = stream_rng(3, 0);
            let mut r2 = stream_rng(3, 1);
            let n = 40_000;
            let xs: Vec<f64> = (0..n).map(|_| augment_count(c, a, &mut r1) as f64).collect();
            let ys: Vec<f64> = (0..n).map(|_| naive(c, a, &mut r2) as f64).collect();
            let exact: f64 = (1..=c).map(|m| a / (a + (m - 1) as f64)).sum();
            let var: f64 = (1..=c)
                .map(|m| {
                    let p = a / (a + (m - 1) as f64);
                    p * (1.0 - p)
                })
                .sum();
            let se = (var / n as f64).sqrt();
            assert!((mean(&xs) - exact).abs() < 4.0 * se, "c={c} a={a}");
            assert!((mean(&ys) - exact).abs() < 4.0 * se);
            let sd_x = std_dev(&xs);
            assert!((sd_x * sd_x - var).abs() < 0.05 * var + 0.01, "variance c={c} a={a}");
        }
    }

    #[test]
    fn eta_update_moments() {
        let mut rng = stream_rng(4, 0);
        let z = [0, 0, 1, 1, 1];
        let n = 100_000;
        let mut s0 = 0.0;
        for _ in 0..n {
            let eta = update_eta(&z, 2, 1.0, &mut rng);
            assert!((eta.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            s0 += eta[0];
        }
        let m = s0 / n as f64;
        // Beta(3, 4): sd = sqrt(12 / (49 * 8))
        let se = (12.0f64 / 392.0).sqrt() / (n as f64).sqrt();
        assert!((m - 3.0 / 7.0).abs() < 4.0 * se, "{m}");
        assert_eq!(update_eta(&z, 1, 1.0, &mut rng), alloc::vec![1.0]);
        let prior = update_eta(&[], 3, 1.0, &mut rng);
        assert_eq!(prior.len(), 3);
    }

    #[test]
    fn z_update_follows_eta_when_blocs_identical() {
        let data = VoteTable::from_counts(1, 2, alloc::vec![VoteCount::new(5, 9), VoteCount::new(30, 2)])
            .unwrap();
        let alpha = alloc::vec![[2.0, 3.0], [1.0, 1.0], [2.0, 3.0], [1.0, 1.0]];
        let eta = [0.2, 0.8];
        let mut rng = stream_rng(5, 0);
        let n = 100_000;
        let hits: usize = (0..n)
            .filter(|_| update_z(&data, &alpha, &eta, &mut rng)[0] == 0)
            .count();
        // Chi-square with one degree of freedom at the 0.999 quantile.
        let e0 = 0.2 * n as f64;
        let e1 = 0.8 * n as f64;
        let o0 = hits as f64;
        let chi2 = (o0 - e0).powi(2) / e0 + ((n as f64 - o0) - e1).powi(2) / e1;
        assert!(chi2 < 10.83, "chi2 {chi2}");
    }

    #[test]
    fn z_update_single_bloc_is_deterministic() {
        let data = VoteTable::from_counts(2, 1, alloc::vec![VoteCount::new(1, 2), VoteCount::new(3, 0)])
            .unwrap();
        let mut rng = stream_rng(6, 0);
        assert_eq!(update_z(&data, &[[1.0, 1.0]], &[1.0], &mut rng), alloc::vec![0, 0]);
    }

    #[test]
    fn z_update_matches_normalized_weights() {
        let counts = alloc::vec![VoteCount::new(8, 2), VoteCount::new(1, 9), VoteCount::new(5, 5)];
        let data = VoteTable::from_counts(3, 1, counts.clone()).unwrap();
        let alpha = alloc::vec![[6.0, 2.0], [1.5, 4.0]];
        let eta = [0.4, 0.6];
        let mut rng = stream_rng(8, 0);
        let n = 100_000;
        let mut hits = [0usize; 3];
        for _ in 0..n {
            for (i, &zi) in update_z(&data, &alpha, &eta, &mut rng).iter().enumerate() {
                if zi == 0 {
                    hits[i] += 1;
                }
            }
        }
        for (i, c) in counts.iter().enumerate() {
            let w0 = 0.4 * crate::model::log_beta_binomial(*c, alpha[0]).unwrap().exp();
            let w1 = 0.6 * crate::model::log_beta_binomial(*c, alpha[1]).unwrap().exp();
            let p0 = w0 / (w0 + w1);
            let f = hits[i] as f64 / n as f64;
            assert!((f - p0).abs() < 0.01, "i={i}: {f} vs {p0}");
        }
    }

    #[test]
    fn share_draw_is_symmetric_beta() {
        let stats = BlocQuestionStats {
            r_sum: [5, 5],
            totals: alloc::vec![20],
        };
        let hyper = Hyperparams::default();
        let config = SweepConfig::default();
        let mut rng = stream_rng(9, 0);
        let n = 50_000;
        let shares: Vec<f64> = (0..n)
            .map(|_| {
                let a = update_alpha_total_share(&stats, [3.0, 3.0], &hyper, &config, &mut rng);
                a[0] / (a[0] + a[1])
            })
            .collect();
        // Beta(6, 6) sd = sqrt(36 / (144 * 13))
        let se = (36.0f64 / (144.0 * 13.0)).sqrt() / (n as f64).sqrt();
        assert!((mean(&shares) - 0.5).abs() < 4.0 * se);
    }

    #[test]
    fn identical_component_proposal_is_accepted() {
        let stats = BlocQuestionStats {
            r_sum: [3, 1],
            totals: alloc::vec![10, 4],
        };
        let hyper = Hyperparams::default();
        let config = SweepConfig::default();
        let cur = [2.5, 4.0];
        assert_eq!(component_log_accept(&stats, &hyper, &config, 0, cur, 2.5), 0.0);
        assert_eq!(total_log_accept(&stats, &hyper, 6.5, 6.5), 0.0);
    }

    #[test]
    fn schedule_parsing() {
        assert_eq!("alternate".parse::<SamplerSchedule>().unwrap(), SamplerSchedule::Alternate);
        assert_eq!(
            "sampler1".parse::<SamplerSchedule>().unwrap(),
            SamplerSchedule::TotalShareOnly
        );
        assert!("gibbs".parse::<SamplerSchedule>().is_err());
        assert!(SamplerSchedule::Alternate.uses_total_share(0));
        assert!(!SamplerSchedule::Alternate.uses_total_share(1));
    }

    #[test]
    fn single_bloc_sweep_keeps_unit_weight() {
        let data = VoteTable::from_counts(2, 1, alloc::vec![VoteCount::new(4, 4), VoteCount::new(4, 4)])
            .unwrap();
        let mut state = ModelState {
            k: 1,
            eta: alloc::vec![1.0],
            z: alloc::vec![0, 0],
            alpha: alloc::vec![[1.0, 1.0]],
        };
        let mut r = AugmentedCounts::zeros(2, 1);
        let mut rng = stream_rng(10, 0);
        for it in 0..50 {
            sweep(&data, &mut state, &mut r, &Hyperparams::default(), &SweepConfig::default(), it, &mut rng)
                .unwrap();
            assert_eq!(state.eta, alloc::vec![1.0]);
            assert!(r.respects_bounds(&data));
        }
    }

    proptest! {
        #[test]
        fn acceptance_ratios_are_antisymmetric(
            r0 in 0u64..200, r1 in 0u64..200,
            totals in proptest::collection::vec(0u64..500, 0..6),
            x in 0.01f64..200.0, y in 0.01f64..200.0, other in 0.01f64..50.0,
            s in 0usize..2,
        ) {
            let stats = BlocQuestionStats { r_sum: [r0, r1], totals };
            let hyper = Hyperparams::default();
            let config = SweepConfig::default();
            let fwd = total_log_accept(&stats, &hyper, x, y);
            let back = total_log_accept(&stats, &hyper, y, x);
            prop_assert!((fwd + back).abs() <= 1e-12 * (1.0 + fwd.abs()));
            let mut cur = [other, other];
            cur[s] = x;
            let mut prop_state = cur;
            prop_state[s] = y;
            let fwd = component_log_accept(&stats, &hyper, &config, s, cur, y);
            let back = component_log_accept(&stats, &hyper, &config, s, prop_state, x);
            prop_assert!((fwd + back).abs() <= 1e-12 * (1.0 + fwd.abs()));
        }

        #[test]
        fn augmentation_respects_bounds(c in 0u32..2000, a in 0.001f64..1e4, seed in 0u64..1000) {
            let mut rng = stream_rng(seed, 0);
            let r = augment_count(c, a, &mut rng);
            prop_assert!(r <= c);
            prop_assert_eq!(r == 0, c == 0);
        }
    }
}
