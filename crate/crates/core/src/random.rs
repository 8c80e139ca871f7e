//! Random variate helpers shared by the samplers and the simulator.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::math::{exp, ln, log_sum_exp};

/// The generator used for chains, simulations and predictive draws.
pub type ChainRng = ChaCha8Rng;

/// Independent stream `stream` under root seed `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChainRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Gamma(shape, scale) draw. Parameters must be positive and finite.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> f64 {
    Gamma::new(shape, scale)
        .expect("gamma parameters validated by caller")
        .sample(rng)
}

/// `ln G` for `G ~ Gamma(shape, 1)`, accurate when `shape` is tiny and the
/// draw itself would underflow.
pub fn ln_gamma_variate<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> f64 {
    if shape >= 1.0 {
        ln(gamma(rng, shape, 1.0))
    } else {
        let u: f64 = open01(rng);
        ln(gamma(rng, shape + 1.0, 1.0)) + ln(u) / shape
    }
}

/// Beta(a, b) draw, clamped away from the boundary so downstream logs stay finite.
pub fn beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    let p: f64 = Beta::new(a, b)
        .expect("beta parameters validated by caller")
        .sample(rng);
    p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

/// Uniform on the open interval (0, 1).
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Dirichlet draw computed through log-gamma variates; valid for arbitrarily
/// small concentrations. Every component is strictly positive.
pub fn dirichlet<R: Rng + ?Sized>(rng: &mut R, concentration: &[f64]) -> Vec<f64> {
    let logs: Vec<f64> = concentration
        .iter()
        .map(|&a| ln_gamma_variate(rng, a))
        .collect();
    let lse = log_sum_exp(&logs);
    let mut out: Vec<f64> = logs
        .iter()
        .map(|l| exp(l - lse).max(f64::MIN_POSITIVE))
        .collect();
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|x| *x /= total);
    out
}

/// Index drawn from normalized probabilities.
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // Rounding left `u` beyond the cumulative sum; take the last positive entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Index drawn from unnormalized log-weights.
pub fn categorical_log<R: Rng + ?Sized>(rng: &mut R, log_weights: &[f64]) -> usize {
    let lse = log_sum_exp(log_weights);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, w) in log_weights.iter().enumerate() {
        acc += exp(w - lse);
        if u < acc {
            return k;
        }
    }
    log_weights
        .iter()
        .rposition(|w| w.is_finite())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_survives_tiny_concentration() {
        let mut rng = stream_rng(7, 0);
        for _ in 0..1000 {
            let d = dirichlet(&mut rng, &[0.001, 0.001, 0.001]);
            assert!(d.iter().all(|&x| x > 0.0 && x.is_finite()));
            assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn streams_differ_and_replay() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        let c: u64 = stream_rng(1, 0).random();
        assert_ne!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn categorical_log_respects_weights() {
        let mut rng = stream_rng(3, 0);
        let w = [ln(1.0), ln(3.0), f64::NEG_INFINITY];
        let mut hits = [0usize; 3];
        for _ in 0..40_000 {
            hits[categorical_log(&mut rng, &w)] += 1;
        }
        assert_eq!(hits[2], 0);
        let frac = hits[1] as f64 / 40_000.0;
        assert!((frac - 0.75).abs() < 0.01, "{frac}");
    }
}
