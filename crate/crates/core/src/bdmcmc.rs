//! Transdimensional inference over the number of blocs.
//!
//! A continuous-time birth-death process moves between mixtures with
//! different `K`; after each interval of virtual time the assignments are
//! redrawn and one fixed-`K` sweep is run. Death rates are computed on the
//! assignment-marginal mixture likelihood, so the process leaves the joint
//! posterior of `(K, η, α)` invariant and the truncated Poisson prior on `K`
//! is recovered exactly when the data carry no information.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;

use crate::cache::LogLikCache;
use crate::error::{invalid, Error, Result};
use crate::math::{exp, ln, ln_gamma, ln_poisson, log_sum_exp};
use crate::model::{sample_alpha_prior, Alpha, AugmentedCounts, Hyperparams, ModelState, VoteTable};
use crate::random;
use crate::sampler::{sweep_cached, update_z_cached, SweepConfig};

/// A retained posterior draw.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSample {
    pub state: ModelState,
    /// Virtual time represented by this draw; the weight used by every
    /// posterior summary.
    pub wait_time: f64,
    pub iteration: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    /// Virtual time of birth-death simulation between fixed-`K` sweeps.
    pub bd_time: f64,
    pub seed: u64,
    pub chains: usize,
    /// Number of blocs in the data-driven starting state; defaults to `round(λ)`.
    pub initial_k: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 10,
            bd_time: 1.0,
            seed: 0,
            chains: 1,
            initial_k: None,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations <= self.burn_in {
            return Err(invalid!(
                "iterations ({}) must exceed burn-in ({})",
                self.iterations,
                self.burn_in
            ));
        }
        if self.thin == 0 {
            return Err(invalid!("thin must be at least 1"));
        }
        if self.chains == 0 {
            return Err(invalid!("chains must be at least 1"));
        }
        if !(self.bd_time > 0.0 && self.bd_time.is_finite()) {
            return Err(invalid!("bd_time must be positive, got {}", self.bd_time));
        }
        if self.initial_k == Some(0) {
            return Err(invalid!("initial_k must be at least 1"));
        }
        Ok(())
    }

    /// Number of samples a chain retains.
    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// `ln [Poisson(K-1 | λ) / (K · Poisson(K | λ))]`, which equals `-ln λ`.
pub fn log_prior_ratio(k: usize, lambda: f64) -> f64 {
    ln_poisson(k - 1, lambda) - ln(k as f64) - ln_poisson(k, lambda)
}

/// Weight-prior and change-of-variables factor for removing a bloc of weight
/// `eta_k` from a `K`-bloc mixture whose remaining weights sum to `rest`,
/// given that births draw the new weight uniformly on `[0, 1]`:
/// `Γ((K-1)γ) Γ(γ) / Γ(Kγ) · η_k^{1-γ} · rest^{-(K-1)(γ-1) - (K-2)}`.
pub fn log_weight_factor(k: usize, eta_k: f64, rest: f64, gamma: f64) -> f64 {
    let kf = k as f64;
    ln_gamma((kf - 1.0) * gamma) + ln_gamma(gamma) - ln_gamma(kf * gamma)
        + (1.0 - gamma) * ln(eta_k)
        - ((kf - 1.0) * (gamma - 1.0) + (kf - 2.0)) * ln(rest)
}

/// `ln ξ_k` for every bloc, using the cached per-(i, k) log-likelihoods.
fn log_death_rates(cache: &LogLikCache, eta: &[f64], hyper: &Hyperparams) -> Vec<f64> {
    let k = eta.len();
    if k == 1 {
        return alloc::vec![f64::NEG_INFINITY];
    }
    let ln_eta: Vec<f64> = eta.iter().map(|&e| ln(e)).collect();
    let total: f64 = eta.iter().sum();
    let rest: Vec<f64> = eta.iter().map(|&e| (total - e).max(f64::MIN_POSITIVE)).collect();
    let mut lr = alloc::vec![0.0; k];
    let n = cache.n();
    let mut terms = alloc::vec![0.0; k];
    let mut prefix = alloc::vec![f64::NEG_INFINITY; k + 1];
    let mut suffix = alloc::vec![f64::NEG_INFINITY; k + 1];
    for i in 0..n {
        for ((t, le), l) in terms.iter_mut().zip(&ln_eta).zip(cache.row(i)) {
            *t = le + l;
        }
        for j in 0..k {
            prefix[j + 1] = lse2(prefix[j], terms[j]);
        }
        for j in (0..k).rev() {
            suffix[j] = lse2(suffix[j + 1], terms[j]);
        }
        let full = prefix[k];
        for j in 0..k {
            lr[j] += lse2(prefix[j], suffix[j + 1]) - full;
        }
    }
    let base = ln(hyper.beta_birth) + log_prior_ratio(k, hyper.lambda);
    (0..k)
        .map(|j| {
            base + lr[j] - n as f64 * ln(rest[j])
                + log_weight_factor(k, eta[j], rest[j], hyper.gamma)
        })
        .collect()
}

#[inline]
fn lse2(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ln(exp(a - m) + exp(b - m))
}

fn exp_clamped(x: f64) -> f64 {
    exp(x.min(700.0))
}

/// Death rate `ξ_k` of bloc `k` (zero-based) in the current state; zero when
/// only one bloc remains.
pub fn death_rate(data: &VoteTable, state: &ModelState, k: usize, hyper: &Hyperparams) -> Result<f64> {
    state.validate(data.n_municipalities(), data.n_questions())?;
    if k >= state.k {
        return Err(Error::OutOfRange {
            index: k,
            bound: state.k,
        });
    }
    if state.k == 1 {
        return Ok(0.0);
    }
    let mut cache = LogLikCache::new(data);
    cache.refresh(data, &state.alpha, state.k);
    Ok(exp_clamped(log_death_rates(&cache, &state.eta, hyper)[k]))
}

/// Adds a bloc drawn from the prior with weight `η' ~ U(0, 1)`; each
/// municipality joins it with probability `1 / (K + 1)`. Returns `false`
/// (leaving the state untouched) when `K` is already at `k_max`.
pub fn birth_move<R: Rng + ?Sized>(state: &mut ModelState, hyper: &Hyperparams, rng: &mut R) -> bool {
    if state.k >= hyper.k_max {
        return false;
    }
    let nq = state.alpha.len() / state.k;
    let fresh: Vec<Alpha> = (0..nq).map(|_| sample_alpha_prior(hyper, rng)).collect();
    apply_birth(state, fresh, rng);
    true
}

fn apply_birth<R: Rng + ?Sized>(state: &mut ModelState, fresh: Vec<Alpha>, rng: &mut R) {
    let w = random::open01(rng);
    for e in state.eta.iter_mut() {
        *e = (*e * (1.0 - w)).max(f64::MIN_POSITIVE);
    }
    state.eta.push(w);
    let new = state.k;
    let p = 1.0 / (state.k + 1) as f64;
    for zi in state.z.iter_mut() {
        if rng.random::<f64>() < p {
            *zi = new;
        }
    }
    state.alpha.extend(fresh);
    state.k += 1;
    state.renormalize_eta();
}

/// Removes bloc `k`, rescales the surviving weights and sends its
/// municipalities to the survivors uniformly at random.
pub fn death_move<R: Rng + ?Sized>(state: &mut ModelState, k: usize, rng: &mut R) -> Result<()> {
    if state.k < 2 {
        return Err(invalid!("cannot remove the last bloc"));
    }
    if k >= state.k {
        return Err(Error::OutOfRange {
            index: k,
            bound: state.k,
        });
    }
    let nq = state.alpha.len() / state.k;
    state.alpha.drain(k * nq..(k + 1) * nq);
    state.eta.remove(k);
    let rest: f64 = state.eta.iter().sum();
    state.eta.iter_mut().for_each(|e| *e /= rest);
    let survivors = state.k - 1;
    for zi in state.z.iter_mut() {
        if *zi == k {
            *zi = rng.random_range(0..survivors);
        } else if *zi > k {
            *zi -= 1;
        }
    }
    state.k = survivors;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BdEventKind {
    Birth,
    /// Birth refused because `K` was at `k_max`.
    RejectedBirth,
    Death(usize),
    /// The interval ran out before the next event.
    End,
}

/// One holding period of the process: `K` was held for `wait` units of
/// virtual time before `kind` happened.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BdEvent {
    pub k: usize,
    pub wait: f64,
    pub kind: BdEventKind,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BdOutcome {
    pub events: Vec<BdEvent>,
    pub births: usize,
    pub deaths: usize,
    pub rejected_births: usize,
    pub capped_waits: usize,
}

impl BdOutcome {
    /// Virtual time spent at each `K`, indexed by `K`.
    pub fn occupancy(&self, k_max: usize) -> Vec<f64> {
        let mut occ = alloc::vec![0.0; k_max + 1];
        for e in &self.events {
            occ[e.k] += e.wait;
        }
        occ
    }

    fn absorb(&mut self, other: &BdOutcome) {
        self.births += other.births;
        self.deaths += other.deaths;
        self.rejected_births += other.rejected_births;
        self.capped_waits += other.capped_waits;
    }
}

const WAIT_CAP_MULTIPLE: f64 = 1e6;

#[allow(clippy::too_many_arguments)]
fn bd_process_cached<R: Rng + ?Sized>(
    data: &VoteTable,
    state: &mut ModelState,
    cache: &mut LogLikCache,
    hyper: &Hyperparams,
    duration: f64,
    outcome: &mut BdOutcome,
    rng: &mut R,
) {
    let nq = data.n_questions();
    let ln_beta = ln(hyper.beta_birth);
    let mut elapsed = 0.0;
    loop {
        let remaining = duration - elapsed;
        let ln_death = log_death_rates(cache, &state.eta, hyper);
        let mut all = ln_death.clone();
        all.push(ln_beta);
        let ln_total = log_sum_exp(&all);
        if ln_total == f64::NEG_INFINITY || ln_total.is_nan() {
            outcome.events.push(BdEvent {
                k: state.k,
                wait: remaining,
                kind: BdEventKind::End,
            });
            return;
        }
        let mean_wait = exp(-ln_total.min(700.0));
        let mut wait = -ln(random::open01(rng)) * mean_wait;
        if wait > WAIT_CAP_MULTIPLE * mean_wait {
            log::warn!("birth-death wait {wait} capped at {WAIT_CAP_MULTIPLE} x mean");
            wait = WAIT_CAP_MULTIPLE * mean_wait;
            outcome.capped_waits += 1;
        }
        if wait >= remaining {
            outcome.events.push(BdEvent {
                k: state.k,
                wait: remaining,
                kind: BdEventKind::End,
            });
            return;
        }
        elapsed += wait;
        let held = state.k;
        let kind = if ln(random::open01(rng)) < ln_beta - ln_total {
            if state.k >= hyper.k_max {
                outcome.rejected_births += 1;
                BdEventKind::RejectedBirth
            } else {
                let fresh: Vec<Alpha> = (0..nq).map(|_| sample_alpha_prior(hyper, rng)).collect();
                cache.push(data, &fresh);
                apply_birth(state, fresh, rng);
                outcome.births += 1;
                BdEventKind::Birth
            }
        } else {
            let dying = random::categorical_log(rng, &ln_death);
            death_move(state, dying, rng).expect("death rates vanish when K = 1");
            cache.remove(dying);
            outcome.deaths += 1;
            BdEventKind::Death(dying)
        };
        outcome.events.push(BdEvent { k: held, wait, kind });
    }
}

/// Runs the birth-death process for `duration` units of virtual time.
pub fn bd_process<R: Rng + ?Sized>(
    data: &VoteTable,
    state: &mut ModelState,
    hyper: &Hyperparams,
    duration: f64,
    rng: &mut R,
) -> Result<BdOutcome> {
    hyper.validate()?;
    state.validate(data.n_municipalities(), data.n_questions())?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid!("duration must be positive, got {duration}"));
    }
    let mut cache = LogLikCache::new(data);
    cache.refresh(data, &state.alpha, state.k);
    let mut outcome = BdOutcome::default();
    bd_process_cached(data, state, &mut cache, hyper, duration, &mut outcome, rng);
    Ok(outcome)
}

/// Everything a chain produces besides the retained draws.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    pub samples: Vec<PosteriorSample>,
    /// Virtual time spent at each `K` after burn-in, indexed by `K`.
    pub k_occupancy: Vec<f64>,
    /// `K` after every iteration.
    pub k_trace: Vec<usize>,
    /// Complete-data log-likelihood after every iteration.
    pub log_likelihood: Vec<f64>,
    pub births: usize,
    pub deaths: usize,
    pub rejected_births: usize,
    pub capped_waits: usize,
}

/// Data-driven starting point: k-means++ seeding plus Lloyd iterations on the
/// observed yes shares, moment-matched `α` per bloc and question, and weights
/// proportional to bloc sizes.
pub fn initial_state<R: Rng + ?Sized>(
    data: &VoteTable,
    hyper: &Hyperparams,
    initial_k: Option<usize>,
    rng: &mut R,
) -> ModelState {
    let n = data.n_municipalities();
    let nq = data.n_questions();
    let wanted = initial_k.unwrap_or(libm::round(hyper.lambda).max(1.0) as usize);
    let k = wanted.clamp(1, hyper.k_max.min(n));
    let shares: Vec<f64> = data
        .counts()
        .iter()
        .map(|c| if c.total() == 0 { 0.5 } else { c.proportion_yes() })
        .collect();
    let z = if nq == 0 {
        (0..n).map(|_| rng.random_range(0..k)).collect()
    } else {
        crate::analysis::kmeans_rows(&shares, n, nq, k, 25, rng)
    };
    let mut sizes = alloc::vec![0usize; k];
    for &zi in &z {
        sizes[zi] += 1;
    }
    let mut alpha = Vec::with_capacity(k * nq);
    for j in 0..k {
        for q in 0..nq {
            let vals: Vec<f64> = (0..n)
                .filter(|&i| z[i] == j && data.cell(i, q).total() > 0)
                .map(|i| shares[i * nq + q])
                .collect();
            alpha.push(match moment_match(&vals) {
                Some(a) => a,
                None => sample_alpha_prior(hyper, rng),
            });
        }
    }
    let denom = n as f64 + k as f64 * hyper.gamma;
    let eta = sizes
        .iter()
        .map(|&d| (d as f64 + hyper.gamma) / denom)
        .collect();
    let mut state = ModelState { k, eta, z, alpha };
    state.renormalize_eta();
    state
}

fn moment_match(vals: &[f64]) -> Option<Alpha> {
    if vals.is_empty() {
        return None;
    }
    let m = crate::math::mean(vals).clamp(0.01, 0.99);
    let sd = crate::math::std_dev(vals);
    let v = sd * sd;
    let total = if vals.len() >= 2 && v > 0.0 && v < m * (1.0 - m) {
        (m * (1.0 - m) / v - 1.0).clamp(0.5, 1e4)
    } else {
        2.0
    };
    Some([m * total, (1.0 - m) * total])
}

fn complete_ll(cache: &LogLikCache, state: &ModelState) -> f64 {
    state
        .z
        .iter()
        .enumerate()
        .map(|(i, &zi)| ln(state.eta[zi]) + cache.get(i, zi))
        .sum()
}

/// Runs one hybrid chain: per iteration, birth-death simulation for
/// `bd_time`, a fresh draw of the assignments, then one fixed-`K` sweep.
pub fn run_chain<R: Rng + ?Sized>(
    data: &VoteTable,
    hyper: &Hyperparams,
    sweep_config: &SweepConfig,
    run_config: &RunConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    hyper.validate()?;
    sweep_config.validate()?;
    run_config.validate()?;
    let mut state = initial_state(data, hyper, run_config.initial_k, rng);
    run_chain_from(data, &mut state, hyper, sweep_config, run_config, rng)
}

/// [`run_chain`] from a caller-supplied starting state.
pub fn run_chain_from<R: Rng + ?Sized>(
    data: &VoteTable,
    state: &mut ModelState,
    hyper: &Hyperparams,
    sweep_config: &SweepConfig,
    run_config: &RunConfig,
    rng: &mut R,
) -> Result<ChainOutput> {
    hyper.validate()?;
    sweep_config.validate()?;
    run_config.validate()?;
    state.validate(data.n_municipalities(), data.n_questions())?;
    if state.k > hyper.k_max {
        return Err(invalid!("starting K {} exceeds k_max {}", state.k, hyper.k_max));
    }
    let mut cache = LogLikCache::new(data);
    cache.refresh(data, &state.alpha, state.k);
    let mut r = AugmentedCounts::zeros(data.n_municipalities(), data.n_questions());
    let mut out = ChainOutput {
        samples: Vec::with_capacity(run_config.retained()),
        k_occupancy: alloc::vec![0.0; hyper.k_max + 1],
        k_trace: Vec::with_capacity(run_config.iterations),
        log_likelihood: Vec::with_capacity(run_config.iterations),
        births: 0,
        deaths: 0,
        rejected_births: 0,
        capped_waits: 0,
    };
    let mut totals = BdOutcome::default();
    for it in 0..run_config.iterations {
        let mut interval = BdOutcome::default();
        bd_process_cached(data, state, &mut cache, hyper, run_config.bd_time, &mut interval, rng);
        totals.absorb(&interval);
        if it >= run_config.burn_in {
            for e in &interval.events {
                out.k_occupancy[e.k] += e.wait;
            }
        }
        update_z_cached(&cache, &state.eta, &mut state.z, rng);
        sweep_cached(data, state, &mut r, &mut cache, hyper, sweep_config, it, rng);
        out.k_trace.push(state.k);
        out.log_likelihood.push(complete_ll(&cache, state));
        if it >= run_config.burn_in && (it - run_config.burn_in) % run_config.thin == 0 {
            out.samples.push(PosteriorSample {
                state: state.clone(),
                wait_time: run_config.bd_time * run_config.thin as f64,
                iteration: it,
            });
        }
    }
    out.births = totals.births;
    out.deaths = totals.deaths;
    out.rejected_births = totals.rejected_births;
    out.capped_waits = totals.capped_waits;
    Ok(out)
}

/// Number of blocs holding at least `min_bloc_size` municipalities (at least one).
pub fn effective_k(state: &ModelState, min_bloc_size: usize) -> usize {
    state
        .bloc_sizes()
        .iter()
        .filter(|&&d| d >= min_bloc_size)
        .count()
        .max(1)
}

/// Wait-time weighted posterior over the (filtered) number of blocs.
pub fn posterior_k(samples: &[PosteriorSample], min_bloc_size: usize) -> Result<BTreeMap<usize, f64>> {
    if samples.is_empty() {
        return Err(Error::Empty("no posterior samples".into()));
    }
    let mut mass = BTreeMap::new();
    let mut total = 0.0;
    for s in samples {
        *mass.entry(effective_k(&s.state, min_bloc_size)).or_insert(0.0) += s.wait_time;
        total += s.wait_time;
    }
    if !(total > 0.0) {
        return Err(invalid!("samples carry no wait time"));
    }
    mass.values_mut().for_each(|v| *v /= total);
    Ok(mass)
}

/// Most probable `K`; ties go to the smaller value.
pub fn posterior_mode(dist: &BTreeMap<usize, f64>) -> Option<usize> {
    dist.iter()
        .fold(None, |best: Option<(usize, f64)>, (&k, &p)| match best {
            Some((_, bp)) if bp >= p => best,
            _ => Some((k, p)),
        })
        .map(|(k, _)| k)
}
