//! Monte Carlo experiments over Gaussian triples.
//!
//! Trials are grouped into fixed blocks of [`BLOCK_SIZE`] consecutive trial
//! indices. Every trial draws from its own [`RngStream`], each block reduces
//! to a [`SuffStats`], and blocks are merged in index order, so results do
//! not depend on the number of worker threads.
//!
//! Conditional experiments sample by rejection and keep the first `trials`
//! accepted draws in trial-index order.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::cond::{h_b, CondError};
use crate::dense::{rho_sing, MAX_NORM21_DIM};
use crate::lp::{
    binomial, classify_basis, verdict, Basis, BasisClass, DataTriple, Verdict, DEFAULT_TOL,
    MAX_BASES,
};
use crate::sampler::{sample_gaussian_square, sample_gaussian_triple, RngStream};

pub const BLOCK_SIZE: u64 = 1024;

/// Blocks evaluated per round while collecting accepted draws.
const ROUND_BLOCKS: u64 = 64;

/// Groups used by the median-of-means diagnostic.
pub const MOM_GROUPS: usize = 30;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "LP_KAPPA_THREADS";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("no accepted trials after {raw} draws")]
    NoAcceptedTrials { raw: u64 },
    #[error("empty sample")]
    EmptySample,
    #[error("unknown experiment '{0}'")]
    UnknownExperiment(String),
    #[error(transparent)]
    Cond(#[from] CondError),
}

/// Count, sum, sum of squares and range of the accepted values, plus the
/// number of degenerate trials seen alongside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuffStats {
    pub count: u64,
    pub sum: f64,
    pub sum_of_squares: f64,
    pub min: f64,
    pub max: f64,
    pub degenerate_count: u64,
}

impl Default for SuffStats {
    fn default() -> Self {
        Self {
            count: 0,
            sum: 0.0,
            sum_of_squares: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            degenerate_count: 0,
        }
    }
}

impl SuffStats {
    pub fn from_values(values: &[f64]) -> Self {
        let mut s = Self::default();
        values.iter().for_each(|&v| s.push(v));
        s
    }

    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_of_squares += v * v;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn push_degenerate(&mut self) {
        self.degenerate_count += 1;
    }

    pub fn merge(&self, other: &SuffStats) -> SuffStats {
        SuffStats {
            count: self.count + other.count,
            sum: self.sum + other.sum,
            sum_of_squares: self.sum_of_squares + other.sum_of_squares,
            min: self.min.min(other.min),
            max: self.max.max(other.max),
            degenerate_count: self.degenerate_count + other.degenerate_count,
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return f64::NAN;
        }
        let n = self.count as f64;
        ((self.sum_of_squares - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// Standard error of the mean.
    pub fn stderr(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Mean of group means' median, groups contiguous in sample order.
pub fn median_of_means(values: &[f64], groups: usize) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let g = groups.clamp(1, values.len());
    let mut means: Vec<f64> = (0..g)
        .map(|k| {
            let lo = k * values.len() / g;
            let hi = (k + 1) * values.len() / g;
            values[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    if g % 2 == 1 {
        means[g / 2]
    } else {
        0.5 * (means[g / 2 - 1] + means[g / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsOutcome {
    pub statistic: f64,
    pub critical: f64,
    pub reject: bool,
}

/// Asymptotic coefficient `c(alpha) = sqrt(-ln(alpha / 2) / 2)`.
pub fn ks_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Two-sample Kolmogorov-Smirnov test. Rejects when the statistic exceeds
/// `c(alpha) * sqrt((n1 + n2) / (n1 n2))`.
pub fn ks_two_sample(xs: &[f64], ys: &[f64], alpha: f64) -> Result<KsOutcome, McError> {
    if xs.is_empty() || ys.is_empty() {
        return Err(McError::EmptySample);
    }
    let mut x = xs.to_vec();
    let mut y = ys.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut stat = 0.0f64;
    while i < x.len() && j < y.len() {
        let t = x[i].min(y[j]);
        while i < x.len() && x[i] <= t {
            i += 1;
        }
        while j < y.len() && y[j] <= t {
            j += 1;
        }
        stat = stat.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let critical = ks_coefficient(alpha) * ((n1 + n2) / (n1 * n2)).sqrt();
    Ok(KsOutcome {
        statistic: stat,
        critical,
        reject: stat > critical,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    /// Probability of a unique optimal basis; target `C(n, m) / 2^n`.
    ProbU,
    /// Probability that a given basis is the unique optimal one; target `2^-n`.
    ProbUB,
    /// `E(ln K(d) | unique optimal basis)` against the logarithmic bound.
    LnKBound,
    /// `E(rho_sing(S)^{-1/2})` for Gaussian `m x m` matrices; bound `2 m^{5/4}`.
    RhoSingMoment,
    /// `E(h_B(d)^{-1/2})`; bound `2 (m+1)^{5/4} (n+1)`.
    HbMoment,
    /// `E|d|_12`; bound `6 sqrt(n+1)`.
    NormMoment,
    /// KS comparison of `h_B(d)` with and without conditioning on `B` being
    /// the unique optimal basis.
    Independence,
    /// Rejection estimate of `E(ln rho(d) | U)` against direct `E(ln h_B(d))`.
    EstimatorAgreement,
    /// Rejection estimate of `E(|d|_12 | U)` against direct `E|d|_12`.
    NormAgreement,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::ProbU,
        Experiment::ProbUB,
        Experiment::LnKBound,
        Experiment::RhoSingMoment,
        Experiment::HbMoment,
        Experiment::NormMoment,
        Experiment::Independence,
        Experiment::EstimatorAgreement,
        Experiment::NormAgreement,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Experiment::ProbU => "prob_U",
            Experiment::ProbUB => "prob_UB",
            Experiment::LnKBound => "lnK_bound",
            Experiment::RhoSingMoment => "rho_sing_moment",
            Experiment::HbMoment => "hB_moment",
            Experiment::NormMoment => "norm_moment",
            Experiment::Independence => "independence",
            Experiment::EstimatorAgreement => "estimator_agreement",
            Experiment::NormAgreement => "norm_agreement",
        }
    }

    fn policy(&self) -> Policy {
        match self {
            Experiment::ProbU | Experiment::ProbUB => Policy::TwoSided,
            Experiment::EstimatorAgreement | Experiment::NormAgreement => Policy::TwoSided,
            _ => Policy::OneSided,
        }
    }

    pub fn uses_basis(&self) -> bool {
        matches!(
            self,
            Experiment::ProbUB
                | Experiment::HbMoment
                | Experiment::Independence
                | Experiment::EstimatorAgreement
        )
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = McError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.id() == s)
            .ok_or_else(|| McError::UnknownExperiment(s.to_string()))
    }
}

/// How `pass` is decided from `(estimate, stderr, bound)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// `|estimate - bound| <= sigma * stderr`; `bound` is the exact target.
    TwoSided,
    /// `estimate <= bound`.
    OneSided,
}

pub fn evaluate(
    policy: Policy,
    estimate: f64,
    stderr: Option<f64>,
    bound: Option<f64>,
    sigma: f64,
) -> bool {
    let Some(bound) = bound else {
        return false;
    };
    match policy {
        Policy::TwoSided => {
            let se = stderr.unwrap_or(0.0);
            (estimate - bound).abs() <= sigma * se
        }
        Policy::OneSided => estimate <= bound,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub experiment: Experiment,
    pub m: usize,
    pub n: usize,
    /// Raw draws for unconditional experiments; accepted draws for
    /// conditional ones (`lnK_bound`, and the conditioned halves of
    /// `independence` and the agreement experiments).
    pub trials: u64,
    pub seed: u64,
    /// Defaults to `{1, ..., m}` where a basis is used.
    pub basis: Option<Basis>,
    pub sigma: f64,
    pub ks_alpha: f64,
    pub tol: f64,
    /// Replaces the experiment's bound or target.
    pub bound_override: Option<f64>,
}

impl McConfig {
    pub fn new(experiment: Experiment, m: usize, n: usize, trials: u64, seed: u64) -> Self {
        Self {
            experiment,
            m,
            n,
            trials,
            seed,
            basis: None,
            sigma: 3.0,
            ks_alpha: 0.01,
            tol: DEFAULT_TOL,
            bound_override: None,
        }
    }

    pub fn with_basis(mut self, basis: Basis) -> Self {
        self.basis = Some(basis);
        self
    }

    pub fn basis_or_leading(&self) -> Basis {
        self.basis.clone().unwrap_or_else(|| Basis::leading(self.m))
    }

    pub fn validate(&self) -> Result<(), McError> {
        let bad = |msg: String| Err(McError::Config(msg));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.m == 0 || self.m > self.n {
            return bad(format!(
                "need 1 <= m <= n, got m = {}, n = {}",
                self.m, self.n
            ));
        }
        if self.m + 1 > MAX_NORM21_DIM {
            return bad(format!(
                "m = {} too large for exact distance to singularity",
                self.m
            ));
        }
        if self.trials >= 1 << 40 {
            return bad("trials must be below 2^40".into());
        }
        if binomial(self.n, self.m) > MAX_BASES {
            return bad(format!("C({}, {}) exceeds {MAX_BASES}", self.n, self.m));
        }
        match self.experiment {
            Experiment::LnKBound | Experiment::EstimatorAgreement | Experiment::NormAgreement
                if self.n > 8 =>
            {
                return bad(format!("{} requires n <= 8", self.experiment));
            }
            Experiment::Independence if self.n > 6 => {
                return bad("independence requires n <= 6".into());
            }
            _ => {}
        }
        if let Some(b) = &self.basis {
            if b.indices().len() != self.m || b.indices().iter().any(|&j| j >= self.n) {
                return bad(format!(
                    "basis {b} does not fit m = {}, n = {}",
                    self.m, self.n
                ));
            }
        }
        let ok = self.sigma > 0.0 && self.ks_alpha > 0.0 && self.ks_alpha < 1.0 && self.tol >= 0.0;
        if !ok {
            return bad("sigma > 0, 0 < ks_alpha < 1 and tol >= 0 required".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct McResult {
    pub experiment: String,
    pub m: usize,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub estimate: f64,
    pub stderr: Option<f64>,
    pub bound: Option<f64>,
    pub degenerate_count: u64,
    pub pass: bool,
    /// Named diagnostics, e.g. accepted counts or the median of means.
    pub details: Vec<(String, f64)>,
}

impl McResult {
    pub fn detail(&self, name: &str) -> Option<f64> {
        self.details
            .iter()
            .find(|(k, _)| k == name)
            .map(|&(_, v)| v)
    }
}

/// Runs trial blocks on a rayon pool, optionally sized explicitly.
pub struct Executor {
    pool: Option<rayon::ThreadPool>,
}

impl Executor {
    /// `None` uses rayon's global pool.
    pub fn new(workers: Option<usize>) -> Self {
        let pool = workers.map(|w| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .expect("thread pool")
        });
        Self { pool }
    }

    /// Honors `LP_KAPPA_THREADS` when it parses as a positive integer.
    pub fn from_env() -> Self {
        let workers = std::env::var(THREADS_ENV)
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&w| w > 0);
        Self::new(workers)
    }

    fn install<R: Send>(&self, f: impl FnOnce() -> R + Send) -> R {
        match &self.pool {
            Some(p) => p.install(f),
            None => f(),
        }
    }

    /// Per-block results for trials `0..trials`, in block order.
    fn map_blocks<T: Send>(
        &self,
        first_block: u64,
        blocks: u64,
        trials: u64,
        f: impl Fn(std::ops::Range<u64>) -> T + Sync,
    ) -> Vec<T> {
        self.install(|| {
            (first_block..first_block + blocks)
                .into_par_iter()
                .map(|b| {
                    let lo = b * BLOCK_SIZE;
                    let hi = ((b + 1) * BLOCK_SIZE).min(trials);
                    f(lo..hi)
                })
                .collect()
        })
    }
}

impl Default for Executor {
    fn default() -> Self {
        Self::new(None)
    }
}

/// Outcome of one trial.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Obs<V> {
    Value(V),
    Reject,
    Degenerate,
}

struct Direct {
    stats: SuffStats,
    values: Vec<f64>,
}

fn run_direct(
    exec: &Executor,
    trials: u64,
    keep: bool,
    f: impl Fn(u64) -> Obs<f64> + Sync,
) -> Direct {
    let blocks = trials.div_ceil(BLOCK_SIZE);
    let parts = exec.map_blocks(0, blocks, trials, |range| {
        let mut s = SuffStats::default();
        let mut vals = Vec::new();
        for t in range {
            match f(t) {
                Obs::Value(v) => {
                    s.push(v);
                    if keep {
                        vals.push(v);
                    }
                }
                Obs::Degenerate => s.push_degenerate(),
                Obs::Reject => {}
            }
        }
        (s, vals)
    });
    let mut stats = SuffStats::default();
    let mut values = Vec::new();
    for (s, v) in parts {
        stats = stats.merge(&s);
        values.extend(v);
    }
    Direct { stats, values }
}

struct Collected<V> {
    values: Vec<V>,
    raw: u64,
    degenerate: u64,
}

/// First `target` accepted values in trial order, drawing at most `max_raw`.
fn run_conditional<V: Send>(
    exec: &Executor,
    target: u64,
    max_raw: u64,
    f: impl Fn(u64) -> Obs<V> + Sync,
) -> Result<Collected<V>, McError> {
    let mut out = Collected {
        values: Vec::new(),
        raw: 0,
        degenerate: 0,
    };
    let total_blocks = max_raw.div_ceil(BLOCK_SIZE);
    let mut next_block = 0;
    while next_block < total_blocks && (out.values.len() as u64) < target {
        let count = ROUND_BLOCKS.min(total_blocks - next_block);
        let parts = exec.map_blocks(next_block, count, max_raw, |range| {
            range.map(&f).collect::<Vec<_>>()
        });
        next_block += count;
        'scan: for part in parts {
            for obs in part {
                out.raw += 1;
                match obs {
                    Obs::Value(v) => {
                        out.values.push(v);
                        if out.values.len() as u64 == target {
                            break 'scan;
                        }
                    }
                    Obs::Degenerate => out.degenerate += 1,
                    Obs::Reject => {}
                }
            }
        }
    }
    if out.values.is_empty() {
        return Err(McError::NoAcceptedTrials { raw: out.raw });
    }
    Ok(out)
}

/// Lane 0 for unconditional draws, lane 1 for rejection-sampled ones.
const DIRECT_LANE: u16 = 0;
const CONDITIONAL_LANE: u16 = 1;

/// Target or bound for an experiment at `(m, n)`.
pub fn reference_value(e: Experiment, m: usize, n: usize) -> Option<f64> {
    let (mf, nf) = (m as f64, n as f64);
    match e {
        Experiment::ProbU => Some(binomial(n, m) as f64 / 2f64.powi(n as i32)),
        Experiment::ProbUB => Some(2f64.powi(-(n as i32))),
        Experiment::LnKBound => Some(1.25 * (mf + 1.0).ln() + 1.5 * (nf + 1.0).ln() + 12f64.ln()),
        Experiment::RhoSingMoment => Some(2.0 * mf.powf(1.25)),
        Experiment::HbMoment => Some(2.0 * (mf + 1.0).powf(1.25) * (nf + 1.0)),
        Experiment::NormMoment => Some(6.0 * (nf + 1.0).sqrt()),
        Experiment::Independence => None,
        Experiment::EstimatorAgreement | Experiment::NormAgreement => Some(0.0),
    }
}

fn conditional_cap(trials: u64, n: usize) -> u64 {
    trials
        .saturating_mul(1u64 << (n + 4))
        .saturating_add(100_000)
        .min(1 << 40)
}

pub fn run_experiment(cfg: &McConfig) -> Result<McResult, McError> {
    run_experiment_with(cfg, &Executor::from_env())
}

pub fn run_experiment_with(cfg: &McConfig, exec: &Executor) -> Result<McResult, McError> {
    cfg.validate()?;
    let (m, n, seed, tol) = (cfg.m, cfg.n, cfg.seed, cfg.tol);
    let basis = cfg.basis_or_leading();
    let triple = |lane: u16, t: u64| sample_gaussian_triple(m, n, RngStream::lane(seed, lane, t));
    let reference = cfg
        .bound_override
        .or_else(|| reference_value(cfg.experiment, m, n));
    let mut details: Vec<(String, f64)> = Vec::new();

    let (estimate, stderr, bound, degenerate) = match cfg.experiment {
        Experiment::ProbU | Experiment::ProbUB => {
            let only = (cfg.experiment == Experiment::ProbUB).then_some(&basis);
            let r = run_direct(exec, cfg.trials, false, |t| {
                match verdict(&triple(DIRECT_LANE, t), tol).expect("validated") {
                    Verdict::InU(b) => Obs::Value(if only.is_none_or(|o| *o == b) {
                        1.0
                    } else {
                        0.0
                    }),
                    Verdict::NotInU => Obs::Value(0.0),
                    Verdict::Boundary => Obs::Degenerate,
                }
            });
            let total = cfg.trials as f64;
            let hits = r.stats.sum;
            let p = hits / total;
            details.push(("hits".into(), hits));
            details.push(("misses".into(), r.stats.count as f64 - hits));
            details.push(("degenerate".into(), r.stats.degenerate_count as f64));
            (
                p,
                Some((p * (1.0 - p) / total).sqrt()),
                reference,
                r.stats.degenerate_count,
            )
        }
        Experiment::RhoSingMoment | Experiment::HbMoment | Experiment::NormMoment => {
            let r = run_direct(exec, cfg.trials, true, |t| match cfg.experiment {
                Experiment::RhoSingMoment => {
                    let s = sample_gaussian_square(m, RngStream::lane(seed, DIRECT_LANE, t));
                    positive_inv_sqrt(rho_sing(&s).expect("validated"))
                }
                Experiment::HbMoment => {
                    positive_inv_sqrt(h_b(&triple(DIRECT_LANE, t), &basis).expect("validated"))
                }
                _ => Obs::Value(triple(DIRECT_LANE, t).norm_12()),
            });
            if r.stats.count == 0 {
                return Err(McError::NoAcceptedTrials { raw: cfg.trials });
            }
            details.push((
                "median_of_means".into(),
                median_of_means(&r.values, MOM_GROUPS),
            ));
            details.push(("max".into(), r.stats.max));
            (
                r.stats.mean(),
                Some(r.stats.stderr()),
                reference,
                r.stats.degenerate_count,
            )
        }
        Experiment::LnKBound => {
            let c = run_conditional(exec, cfg.trials, conditional_cap(cfg.trials, n), |t| {
                let d = triple(DIRECT_LANE, t);
                match verdict(&d, tol).expect("validated") {
                    Verdict::InU(b) => {
                        let h = h_b(&d, &b).expect("validated");
                        if h > 0.0 {
                            Obs::Value((d.norm_12() / h).ln())
                        } else {
                            Obs::Degenerate
                        }
                    }
                    Verdict::NotInU => Obs::Reject,
                    Verdict::Boundary => Obs::Degenerate,
                }
            })?;
            let s = SuffStats::from_values(&c.values);
            details.push(("accepted".into(), s.count as f64));
            details.push(("raw_draws".into(), c.raw as f64));
            (s.mean(), Some(s.stderr()), reference, c.degenerate)
        }
        Experiment::Independence => {
            let h_direct =
                |t: u64| positive(h_b(&triple(DIRECT_LANE, t), &basis).expect("validated"));
            let uncond = run_direct(exec, cfg.trials, true, h_direct);
            let cond = run_conditional(exec, cfg.trials, conditional_cap(cfg.trials, n), |t| {
                let d = triple(CONDITIONAL_LANE, t);
                match accept_unique(&d, &basis, tol) {
                    Obs::Value(()) => positive(h_b(&d, &basis).expect("validated")),
                    Obs::Reject => Obs::Reject,
                    Obs::Degenerate => Obs::Degenerate,
                }
            })?;
            let ks = ks_two_sample(&uncond.values, &cond.values, cfg.ks_alpha)?;
            details.push(("accepted".into(), cond.values.len() as f64));
            details.push(("unconditional".into(), uncond.values.len() as f64));
            details.push(("critical".into(), ks.critical));
            let bound = cfg.bound_override.or(Some(ks.critical));
            (
                ks.statistic,
                None,
                bound,
                uncond.stats.degenerate_count + cond.degenerate,
            )
        }
        Experiment::EstimatorAgreement | Experiment::NormAgreement => {
            let want_norm = cfg.experiment == Experiment::NormAgreement;
            let direct = run_direct(exec, cfg.trials, false, |t| {
                let d = triple(DIRECT_LANE, t);
                if want_norm {
                    Obs::Value(d.norm_12())
                } else {
                    match positive(h_b(&d, &basis).expect("validated")) {
                        Obs::Value(h) => Obs::Value(h.ln()),
                        other => other,
                    }
                }
            });
            let cond = run_conditional(exec, cfg.trials, conditional_cap(cfg.trials, n), |t| {
                let d = triple(CONDITIONAL_LANE, t);
                match verdict(&d, tol).expect("validated") {
                    Verdict::InU(_) if want_norm => Obs::Value(d.norm_12()),
                    Verdict::InU(b) => match positive(h_b(&d, &b).expect("validated")) {
                        Obs::Value(rho) => Obs::Value(rho.ln()),
                        other => other,
                    },
                    Verdict::NotInU => Obs::Reject,
                    Verdict::Boundary => Obs::Degenerate,
                }
            })?;
            let cs = SuffStats::from_values(&cond.values);
            let se = (cs.stderr().powi(2) + direct.stats.stderr().powi(2)).sqrt();
            details.push(("conditional_mean".into(), cs.mean()));
            details.push(("direct_mean".into(), direct.stats.mean()));
            details.push(("accepted".into(), cs.count as f64));
            (
                cs.mean() - direct.stats.mean(),
                Some(se),
                reference,
                direct.stats.degenerate_count + cond.degenerate,
            )
        }
    };

    let pass = estimate.is_finite()
        && evaluate(cfg.experiment.policy(), estimate, stderr, bound, cfg.sigma);
    Ok(McResult {
        experiment: cfg.experiment.id().to_string(),
        m,
        n,
        trials: cfg.trials,
        seed,
        estimate,
        stderr,
        bound,
        degenerate_count: degenerate,
        pass,
        details,
    })
}

fn positive(v: f64) -> Obs<f64> {
    if v > 0.0 {
        Obs::Value(v)
    } else {
        Obs::Degenerate
    }
}

fn positive_inv_sqrt(v: f64) -> Obs<f64> {
    match positive(v) {
        Obs::Value(x) => Obs::Value(x.sqrt().recip()),
        other => other,
    }
}

/// Accepts `d` when `basis` is its unique optimal basis. Classifies `basis`
/// alone first, which rejects most draws cheaply.
fn accept_unique(d: &DataTriple, basis: &Basis, tol: f64) -> Obs<()> {
    match classify_basis(d, basis, tol) {
        BasisClass::Optimal => {}
        BasisClass::Degenerate => return Obs::Degenerate,
        _ => return Obs::Reject,
    }
    match verdict(d, tol).expect("validated") {
        Verdict::InU(b) if b == *basis => Obs::Value(()),
        Verdict::Boundary => Obs::Degenerate,
        _ => Obs::Reject,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_identity_and_pairs() {
        let a = SuffStats::from_values(&[1.0, 2.5, -3.0]);
        assert_eq!(a.merge(&SuffStats::default()), a);
        assert_eq!(SuffStats::default().merge(&a), a);
        let one = SuffStats::from_values(&[1.0]);
        let three = SuffStats::from_values(&[3.0]);
        assert_eq!(one.merge(&three), SuffStats::from_values(&[1.0, 3.0]));
    }

    #[test]
    fn merge_order_permutations() {
        let blocks = [
            SuffStats::from_values(&[0.1, 0.7, 1e3]),
            SuffStats::from_values(&[-2.3, 5.5]),
            SuffStats::from_values(&[1e-4, 9.9, 3.3, 2.2]),
        ];
        let reference = blocks[0].merge(&blocks[1]).merge(&blocks[2]);
        let perms = [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        for p in perms {
            let s = blocks[p[0]].merge(&blocks[p[1]]).merge(&blocks[p[2]]);
            assert_eq!(s.count, reference.count);
            assert!((s.sum - reference.sum).abs() <= 1e-14 * reference.sum.abs());
            assert!(
                (s.sum_of_squares - reference.sum_of_squares).abs()
                    <= 1e-14 * reference.sum_of_squares
            );
            assert_eq!((s.min, s.max), (reference.min, reference.max));
        }
    }

    #[test]
    fn mean_and_stderr() {
        let s = SuffStats::from_values(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean(), 2.5);
        assert!((s.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ks_examples() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0], 0.01).unwrap();
        assert_eq!((r.statistic, r.reject), (0.0, false));
        // Three points per side cannot reach the 1% critical value 1.33.
        let r = ks_two_sample(&[0.0; 3], &[1.0; 3], 0.01).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(!r.reject);
        let r = ks_two_sample(&[0.0; 30], &[1.0; 30], 0.01).unwrap();
        assert_eq!(r.statistic, 1.0);
        assert!(r.reject);
        let r = ks_two_sample(&[1.0, 2.0], &[1.5, 2.5], 0.01).unwrap();
        assert_eq!(r.statistic, 0.5);
        assert_eq!(ks_two_sample(&[], &[1.0], 0.01), Err(McError::EmptySample));
    }

    #[test]
    fn ks_coefficient_at_one_percent() {
        assert!((ks_coefficient(0.01) - 1.628).abs() < 5e-4);
    }

    #[test]
    fn median_of_means_is_robust() {
        let mut v = vec![1.0; 300];
        v[0] = 1e9;
        assert_eq!(median_of_means(&v, 30), 1.0);
        assert_eq!(median_of_means(&[2.0, 4.0], 30), 3.0);
    }

    #[test]
    fn experiment_ids_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.id().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }

    #[test]
    fn reference_values() {
        assert_eq!(reference_value(Experiment::ProbU, 1, 2), Some(0.5));
        assert_eq!(reference_value(Experiment::ProbU, 2, 4), Some(0.375));
        assert_eq!(reference_value(Experiment::ProbUB, 2, 4), Some(0.0625));
        let b = reference_value(Experiment::LnKBound, 1, 2).unwrap();
        assert!((b - 4.999).abs() < 1e-3, "{b}");
        assert_eq!(reference_value(Experiment::NormMoment, 1, 3), Some(12.0));
    }

    #[test]
    fn policies() {
        assert!(evaluate(
            Policy::TwoSided,
            0.501,
            Some(0.001),
            Some(0.5),
            3.0
        ));
        assert!(!evaluate(
            Policy::TwoSided,
            0.51,
            Some(0.001),
            Some(0.5),
            3.0
        ));
        assert!(evaluate(Policy::OneSided, 4.0, None, Some(5.0), 3.0));
        assert!(!evaluate(Policy::OneSided, 6.0, None, Some(5.0), 3.0));
        assert!(!evaluate(Policy::OneSided, 1.0, None, None, 3.0));
    }

    #[test]
    fn config_validation() {
        assert!(McConfig::new(Experiment::ProbU, 1, 2, 0, 1)
            .validate()
            .is_err());
        assert!(McConfig::new(Experiment::ProbU, 3, 2, 10, 1)
            .validate()
            .is_err());
        assert!(McConfig::new(Experiment::LnKBound, 1, 9, 10, 1)
            .validate()
            .is_err());
        assert!(McConfig::new(Experiment::Independence, 1, 7, 10, 1)
            .validate()
            .is_err());
        let bad_basis =
            McConfig::new(Experiment::ProbUB, 1, 2, 10, 1).with_basis(Basis::leading(2));
        assert!(bad_basis.validate().is_err());
        assert!(McConfig::new(Experiment::ProbU, 1, 2, 10, 1)
            .validate()
            .is_ok());
    }

    #[test]
    fn prob_u_counts_partition_trials() {
        let r = run_experiment_with(
            &McConfig::new(Experiment::ProbU, 2, 3, 3000, 11),
            &Executor::new(Some(2)),
        )
        .unwrap();
        let total = r.detail("hits").unwrap()
            + r.detail("misses").unwrap()
            + r.detail("degenerate").unwrap();
        assert_eq!(total, 3000.0);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        for e in [
            Experiment::ProbU,
            Experiment::LnKBound,
            Experiment::HbMoment,
            Experiment::Independence,
        ] {
            let cfg = McConfig::new(e, 1, 3, 2500, 99);
            let one = run_experiment_with(&cfg, &Executor::new(Some(1))).unwrap();
            let four = run_experiment_with(&cfg, &Executor::new(Some(4))).unwrap();
            assert_eq!(one, four, "{e}");
        }
    }

    #[test]
    fn conditional_collects_exact_target() {
        let r = run_experiment_with(
            &McConfig::new(Experiment::LnKBound, 1, 2, 777, 5),
            &Executor::default(),
        )
        .unwrap();
        assert_eq!(r.detail("accepted"), Some(777.0));
        assert!(r.detail("raw_draws").unwrap() >= 777.0);
    }
}
