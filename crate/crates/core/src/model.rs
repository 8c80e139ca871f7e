//! Domain types and the probability kernels shared by every sampler.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{invalid, Error, Result};
use crate::math::{ln, ln_beta, ln_choose, ln_gamma, log_sum_exp};
use crate::random;

/// Beta-binomial parameters `(α₀, α₁)` for one bloc and one question; index 0
/// pairs with the yes count, index 1 with the no count.
pub type Alpha = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct Municipality {
    pub id: String,
    pub name: String,
    pub latitude: Option<f64>,
    pub longitude: Option<f64>,
}

impl Municipality {
    pub fn new(id: impl Into<String>, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            name: name.into(),
            latitude: None,
            longitude: None,
        }
    }

    pub fn with_coordinates(mut self, latitude: f64, longitude: f64) -> Self {
        self.latitude = Some(latitude);
        self.longitude = Some(longitude);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub id: String,
    pub year: i32,
    pub label: String,
    pub tag: String,
}

impl Question {
    pub fn new(id: impl Into<String>, year: i32) -> Self {
        Self {
            id: id.into(),
            year,
            label: String::new(),
            tag: String::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct VoteCount {
    pub yes: u32,
    pub no: u32,
}

impl VoteCount {
    pub const fn new(yes: u32, no: u32) -> Self {
        Self { yes, no }
    }

    #[inline]
    pub fn total(self) -> u64 {
        self.yes as u64 + self.no as u64
    }

    #[inline]
    pub fn get(self, response: usize) -> u32 {
        if response == 0 {
            self.yes
        } else {
            self.no
        }
    }

    /// Observed yes share; `NaN` for an empty cell.
    pub fn proportion_yes(self) -> f64 {
        self.yes as f64 / self.total() as f64
    }
}

/// Dense municipality × question table of yes/no totals.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteTable {
    municipalities: Vec<Municipality>,
    questions: Vec<Question>,
    counts: Vec<VoteCount>,
}

impl VoteTable {
    /// Builds a table from row-major counts (`counts[i * Q + q]`). Every cell
    /// must hold at least one vote.
    pub fn new(
        municipalities: Vec<Municipality>,
        questions: Vec<Question>,
        counts: Vec<VoteCount>,
    ) -> Result<Self> {
        let table = Self::new_allow_empty(municipalities, questions, counts)?;
        if table.questions.is_empty() {
            return Err(Error::Empty("vote table has no questions".into()));
        }
        let n_q = table.questions.len();
        if let Some(pos) = table.counts.iter().position(|c| c.total() == 0) {
            return Err(Error::InvalidData(format!(
                "cell ({}, {}) has no votes",
                table.municipalities[pos / n_q].id,
                table.questions[pos % n_q].id
            )));
        }
        Ok(table)
    }

    /// Like [`VoteTable::new`] but accepts empty cells and zero questions.
    /// Such tables carry no information, which is what prior-only runs need.
    pub fn new_allow_empty(
        municipalities: Vec<Municipality>,
        questions: Vec<Question>,
        counts: Vec<VoteCount>,
    ) -> Result<Self> {
        if municipalities.is_empty() {
            return Err(Error::Empty("vote table has no municipalities".into()));
        }
        let expected = municipalities.len() * questions.len();
        if counts.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "expected {expected} cells, got {}",
                counts.len()
            )));
        }
        Ok(Self {
            municipalities,
            questions,
            counts,
        })
    }

    /// Table with generated ids (`m1..`, `q1..`) and every question in `year`.
    pub fn from_counts(n: usize, q: usize, counts: Vec<VoteCount>) -> Result<Self> {
        let (m, qs) = generated_ids(n, q);
        Self::new(m, qs, counts)
    }

    /// `n × q` table of empty cells: the likelihood is identically one.
    pub fn prior_only(n: usize, q: usize) -> Self {
        let (m, qs) = generated_ids(n, q);
        Self::new_allow_empty(m, qs, alloc::vec![VoteCount::default(); n * q])
            .expect("dimensions are consistent by construction")
    }

    #[inline]
    pub fn n_municipalities(&self) -> usize {
        self.municipalities.len()
    }

    #[inline]
    pub fn n_questions(&self) -> usize {
        self.questions.len()
    }

    #[inline]
    pub fn cell(&self, i: usize, q: usize) -> VoteCount {
        self.counts[i * self.questions.len() + q]
    }

    pub fn row(&self, i: usize) -> &[VoteCount] {
        let nq = self.questions.len();
        &self.counts[i * nq..(i + 1) * nq]
    }

    pub fn counts(&self) -> &[VoteCount] {
        &self.counts
    }

    pub fn counts_mut(&mut self) -> &mut [VoteCount] {
        &mut self.counts
    }

    pub fn municipalities(&self) -> &[Municipality] {
        &self.municipalities
    }

    pub fn municipalities_mut(&mut self) -> &mut [Municipality] {
        &mut self.municipalities
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn questions_mut(&mut self) -> &mut [Question] {
        &mut self.questions
    }
}

fn generated_ids(n: usize, q: usize) -> (Vec<Municipality>, Vec<Question>) {
    let m = (1..=n)
        .map(|i| Municipality::new(format!("m{i}"), format!("Municipality {i}")))
        .collect();
    let qs = (1..=q).map(|j| Question::new(format!("q{j}"), 2008)).collect();
    (m, qs)
}

/// Prior and birth-death hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    /// Gamma shape of every `α` component.
    pub kappa: f64,
    /// Gamma scale of every `α` component (prior mean `κθ`).
    pub theta: f64,
    /// Poisson mean of the number of blocs.
    pub lambda: f64,
    /// Symmetric Dirichlet concentration of the mixture weights.
    pub gamma: f64,
    /// Birth rate of the birth-death process.
    pub beta_birth: f64,
    /// Births are refused once `K` reaches this cap.
    pub k_max: usize,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            theta: 10.0,
            lambda: 10.0,
            gamma: 1.0,
            beta_birth: 10.0,
            k_max: 30,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("kappa", self.kappa),
            ("theta", self.theta),
            ("lambda", self.lambda),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid!("{name} must be positive and finite, got {v}"));
            }
        }
        // A zero birth rate is allowed: it freezes K apart from deaths.
        if !(self.beta_birth >= 0.0 && self.beta_birth.is_finite()) {
            return Err(invalid!("beta_birth must be non-negative, got {}", self.beta_birth));
        }
        if self.k_max == 0 {
            return Err(invalid!("k_max must be at least 1"));
        }
        Ok(())
    }
}

/// Current mixture: number of blocs, weights, assignments and parameters.
///
/// `z` holds zero-based bloc indices; `alpha` is row-major `K × Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub k: usize,
    pub eta: Vec<f64>,
    pub z: Vec<usize>,
    pub alpha: Vec<Alpha>,
}

impl ModelState {
    #[inline]
    pub fn alpha(&self, k: usize, q: usize, n_questions: usize) -> Alpha {
        self.alpha[k * n_questions + q]
    }

    /// Number of municipalities assigned to each bloc.
    pub fn bloc_sizes(&self) -> Vec<usize> {
        let mut d = alloc::vec![0usize; self.k];
        for &zi in &self.z {
            d[zi] += 1;
        }
        d
    }

    /// Checks the structural invariants against a table's shape.
    pub fn validate(&self, n: usize, q: usize) -> Result<()> {
        if self.k == 0 || self.eta.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "K = {} but {} weights",
                self.k,
                self.eta.len()
            )));
        }
        if self.z.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{} assignments for {n} municipalities",
                self.z.len()
            )));
        }
        if self.alpha.len() != self.k * q {
            return Err(Error::DimensionMismatch(format!(
                "{} alpha pairs for K = {} and Q = {q}",
                self.alpha.len(),
                self.k
            )));
        }
        if let Some(&bad) = self.z.iter().find(|&&zi| zi >= self.k) {
            return Err(Error::OutOfRange {
                index: bad,
                bound: self.k,
            });
        }
        if self.eta.iter().any(|&e| !(e > 0.0)) {
            return Err(invalid!("mixture weights must be positive"));
        }
        let s: f64 = self.eta.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            return Err(invalid!("mixture weights sum to {s}"));
        }
        if self.alpha.iter().flatten().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(invalid!("alpha components must be positive and finite"));
        }
        Ok(())
    }

    /// Renormalizes `eta` when rounding drift exceeds `1e-10`.
    pub fn renormalize_eta(&mut self) {
        let s: f64 = self.eta.iter().sum();
        if (s - 1.0).abs() > 1e-10 {
            self.eta.iter_mut().for_each(|e| *e /= s);
        }
    }
}

/// Stein–Meng augmentation counts, `r[i * Q + q][s]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedCounts {
    pub n: usize,
    pub q: usize,
    pub r: Vec<[u32; 2]>,
}

impl AugmentedCounts {
    pub fn zeros(n: usize, q: usize) -> Self {
        Self {
            n,
            q,
            r: alloc::vec![[0; 2]; n * q],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, q: usize) -> [u32; 2] {
        self.r[i * self.q + q]
    }

    /// `0 <= r <= c` and `r >= 1` exactly when `c >= 1`.
    pub fn respects_bounds(&self, data: &VoteTable) -> bool {
        data.counts().iter().zip(&self.r).all(|(c, r)| {
            (0..2).all(|s| {
                let cs = c.get(s);
                r[s] <= cs && ((cs == 0) == (r[s] == 0))
            })
        })
    }
}

#[inline]
pub(crate) fn ln_bb_unchecked(yes: u32, no: u32, a0: f64, a1: f64) -> f64 {
    if yes == 0 && no == 0 {
        return 0.0;
    }
    let n = yes as u64 + no as u64;
    ln_choose(n, yes as u64) + ln_beta(yes as f64 + a0, no as f64 + a1) - ln_beta(a0, a1)
}

fn check_alpha(alpha: Alpha) -> Result<()> {
    if alpha.iter().all(|&a| a > 0.0 && a.is_finite()) {
        Ok(())
    } else {
        Err(invalid!(
            "Beta-binomial parameters must be positive and finite, got ({}, {})",
            alpha[0],
            alpha[1]
        ))
    }
}

/// `ln P(yes, no | α₀, α₁)` under the Beta-binomial law, evaluated through
/// log-gamma so large counts do not overflow.
pub fn log_beta_binomial(counts: VoteCount, alpha: Alpha) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(ln_bb_unchecked(counts.yes, counts.no, alpha[0], alpha[1]))
}

/// `Σ_q ln BB(c_iq | α_kq)` for municipality `i` and bloc `k`.
pub(crate) fn row_log_likelihood(data: &VoteTable, alpha: &[Alpha], i: usize, k: usize) -> f64 {
    let nq = data.n_questions();
    data.row(i)
        .iter()
        .zip(&alpha[k * nq..(k + 1) * nq])
        .map(|(c, a)| ln_bb_unchecked(c.yes, c.no, a[0], a[1]))
        .sum()
}

fn check_shapes(data: &VoteTable, k: usize, eta: &[f64], alpha: &[Alpha]) -> Result<()> {
    if eta.len() != k || alpha.len() != k * data.n_questions() || k == 0 {
        return Err(Error::DimensionMismatch(format!(
            "K = {k}, {} weights, {} alpha pairs, Q = {}",
            eta.len(),
            alpha.len(),
            data.n_questions()
        )));
    }
    alpha.iter().try_for_each(|a| check_alpha(*a))
}

/// Complete-data log-likelihood `Σ_i [ln η_{z_i} + Σ_q ln BB(c_iq | α_{z_i q})]`.
pub fn log_complete_likelihood(data: &VoteTable, state: &ModelState) -> Result<f64> {
    check_shapes(data, state.k, &state.eta, &state.alpha)?;
    if state.z.len() != data.n_municipalities() {
        return Err(Error::DimensionMismatch(format!(
            "{} assignments for {} municipalities",
            state.z.len(),
            data.n_municipalities()
        )));
    }
    let mut total = 0.0;
    for (i, &zi) in state.z.iter().enumerate() {
        if zi >= state.k {
            return Err(Error::OutOfRange {
                index: zi,
                bound: state.k,
            });
        }
        total += ln(state.eta[zi]) + row_log_likelihood(data, &state.alpha, i, zi);
    }
    Ok(total)
}

/// Assignment-marginal log-likelihood `Σ_i ln Σ_k η_k Π_q BB(c_iq | α_kq)`.
pub fn log_marginal_mixture(data: &VoteTable, alpha: &[Alpha], eta: &[f64]) -> Result<f64> {
    let k = eta.len();
    check_shapes(data, k, eta, alpha)?;
    let mut terms = alloc::vec![0.0; k];
    let mut total = 0.0;
    for i in 0..data.n_municipalities() {
        for (j, t) in terms.iter_mut().enumerate() {
            *t = ln(eta[j]) + row_log_likelihood(data, alpha, i, j);
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

/// Two independent Gamma(κ, θ) draws.
pub fn sample_alpha_prior<R: Rng + ?Sized>(hyper: &Hyperparams, rng: &mut R) -> Alpha {
    [
        random::gamma(rng, hyper.kappa, hyper.theta),
        random::gamma(rng, hyper.kappa, hyper.theta),
    ]
}

/// Log-density of Gamma(shape, scale) at `x`.
pub fn ln_gamma_pdf(x: f64, shape: f64, scale: f64) -> f64 {
    (shape - 1.0) * ln(x) - x / scale - ln_gamma(shape) - shape * ln(scale)
}
