//! The verification grid: eleven checks, each producing [`McResult`] rows
//! and a single pass/fail verdict.
//!
//! Non-Monte-Carlo checks (invariance fuzzing, sign fixing, the oracle
//! comparison, the fixed instance and determinism) report their worst
//! deviation or failure count as `estimate` against a `bound`.

use std::str::FromStr;

use rand::seq::index::sample as sample_indices;

use crate::cond::{h_b, kappa};
use crate::dense::{rho_sing, rho_sing_oracle, SquareMatrix};
use crate::lp::{basic_pair, classify_basis, Basis, BasisClass, DataTriple, DEFAULT_TOL};
use crate::mc::{run_experiment_with, Executor, Experiment, McConfig, McError, McResult};
use crate::sampler::{sample_gaussian_triple, RngStream};
use crate::symmetry::{apply_sign, orbit_partition_check, sign_fix, SignVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Fast,
    All,
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fast" => Ok(Suite::Fast),
            "all" => Ok(Suite::All),
            other => Err(format!("unknown suite '{other}' (expected all or fast)")),
        }
    }
}

/// Sample sizes for one suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scale {
    pub prob_trials: u64,
    pub lnk_accepted: u64,
    pub moment_trials: u64,
    pub ks_samples: u64,
    pub ks_seeds: u64,
    pub agreement_trials: u64,
    pub fuzz_cases: usize,
    pub orbit_cases: usize,
    pub oracle_cases: usize,
    pub oracle_iterations: usize,
    pub determinism_trials: u64,
}

impl Scale {
    pub fn of(suite: Suite) -> Self {
        match suite {
            Suite::All => Scale {
                prob_trials: 100_000,
                lnk_accepted: 10_000,
                moment_trials: 100_000,
                ks_samples: 2_000,
                ks_seeds: 20,
                agreement_trials: 20_000,
                fuzz_cases: 1_000,
                orbit_cases: 100,
                oracle_cases: 100,
                oracle_iterations: 4_000,
                determinism_trials: 20_000,
            },
            Suite::Fast => Scale {
                prob_trials: 20_000,
                lnk_accepted: 2_000,
                moment_trials: 20_000,
                ks_samples: 1_000,
                ks_seeds: 10,
                agreement_trials: 5_000,
                fuzz_cases: 200,
                orbit_cases: 30,
                oracle_cases: 30,
                oracle_iterations: 2_000,
                determinism_trials: 5_000,
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub suite: Suite,
    pub seed: u64,
    /// Forces the norm-moment bound to zero so the run must fail.
    pub inject_failure: bool,
}

impl VerifyOptions {
    pub fn new(suite: Suite, seed: u64) -> Self {
        Self {
            suite,
            seed,
            inject_failure: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub criterion: u8,
    pub name: &'static str,
    pub pass: bool,
    pub summary: String,
    pub results: Vec<McResult>,
}

/// Seed for sub-run `k` of check `criterion`.
pub fn check_seed(seed: u64, criterion: u8, k: u64) -> u64 {
    seed.wrapping_add(u64::from(criterion) << 32)
        .wrapping_add(k)
}

pub const PROB_GRID: [(usize, usize); 5] = [(1, 2), (1, 3), (2, 3), (2, 4), (3, 6)];
pub const LNK_GRID: [(usize, usize); 8] = [
    (1, 2),
    (1, 3),
    (2, 3),
    (2, 4),
    (3, 6),
    (1, 8),
    (2, 8),
    (3, 8),
];
pub const UB_GRID: [(usize, usize); 2] = [(2, 4), (3, 6)];
pub const HB_GRID: [(usize, usize); 3] = [(1, 2), (2, 4), (3, 6)];
pub const NORM_GRID: [(usize, usize); 4] = [(1, 2), (2, 4), (3, 6), (3, 8)];
pub const KS_GRID: [(usize, usize); 2] = [(1, 3), (2, 5)];
pub const AGREEMENT_GRID: [(usize, usize); 3] = [(1, 3), (2, 4), (3, 6)];

fn outcome(
    criterion: u8,
    name: &'static str,
    results: Vec<McResult>,
    summary: String,
) -> CheckOutcome {
    CheckOutcome {
        criterion,
        name,
        pass: results.iter().all(|r| r.pass),
        summary,
        results,
    }
}

fn row(
    experiment: &str,
    (m, n): (usize, usize),
    trials: u64,
    seed: u64,
    estimate: f64,
    bound: f64,
    pass: bool,
) -> McResult {
    McResult {
        experiment: experiment.to_string(),
        m,
        n,
        trials,
        seed,
        estimate,
        stderr: None,
        bound: Some(bound),
        degenerate_count: 0,
        pass,
        details: Vec::new(),
    }
}

fn summarize(results: &[McResult]) -> String {
    let passed = results.iter().filter(|r| r.pass).count();
    format!("{passed}/{} rows pass", results.len())
}

/// Criterion 1: probability of a unique optimal basis.
pub fn check_prob_u(scale: &Scale, seed: u64, exec: &Executor) -> Result<CheckOutcome, McError> {
    let results = PROB_GRID
        .iter()
        .map(|&(m, n)| {
            let cfg = McConfig::new(
                Experiment::ProbU,
                m,
                n,
                scale.prob_trials,
                check_seed(seed, 1, 0),
            );
            run_experiment_with(&cfg, exec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let s = summarize(&results);
    Ok(outcome(1, "prob_U", results, s))
}

/// A random basis other than `{1..m}`, drawn from `seed`.
pub fn random_basis(m: usize, n: usize, seed: u64) -> Basis {
    let mut g = RngStream::new(seed, 0).rng();
    loop {
        let mut ix = sample_indices(g.inner(), n, m).into_vec();
        ix.sort_unstable();
        let b = Basis::new(ix, m, n).expect("m-subset");
        if b != Basis::leading(m) || m == n {
            return b;
        }
    }
}

/// Criterion 2: probability that a fixed basis is the unique optimal one.
pub fn check_prob_ub(scale: &Scale, seed: u64, exec: &Executor) -> Result<CheckOutcome, McError> {
    let mut results = Vec::new();
    for &(m, n) in &UB_GRID {
        let s = check_seed(seed, 2, 0);
        for basis in [Basis::leading(m), random_basis(m, n, s)] {
            let cfg =
                McConfig::new(Experiment::ProbUB, m, n, scale.prob_trials, s).with_basis(basis);
            results.push(run_experiment_with(&cfg, exec)?);
        }
    }
    let s = summarize(&results);
    Ok(outcome(2, "prob_UB", results, s))
}

/// Criterion 3: the logarithmic bound on `E(ln K | U)`.
pub fn check_lnk(scale: &Scale, seed: u64, exec: &Executor) -> Result<CheckOutcome, McError> {
    let results = LNK_GRID
        .iter()
        .map(|&(m, n)| {
            let cfg = McConfig::new(
                Experiment::LnKBound,
                m,
                n,
                scale.lnk_accepted,
                check_seed(seed, 3, 0),
            );
            run_experiment_with(&cfg, exec)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let s = summarize(&results);
    Ok(outcome(3, "lnK_bound", results, s))
}

/// Criterion 4: the three moment bounds.
pub fn check_moments(
    scale: &Scale,
    seed: u64,
    inject_failure: bool,
    exec: &Executor,
) -> Result<CheckOutcome, McError> {
    let s = check_seed(seed, 4, 0);
    let mut results = Vec::new();
    for m in 1..=3 {
        let cfg = McConfig::new(Experiment::RhoSingMoment, m, m, scale.moment_trials, s);
        results.push(run_experiment_with(&cfg, exec)?);
    }
    for &(m, n) in &HB_GRID {
        let cfg = McConfig::new(Experiment::HbMoment, m, n, scale.moment_trials, s);
        results.push(run_experiment_with(&cfg, exec)?);
    }
    for &(m, n) in &NORM_GRID {
        let mut cfg = McConfig::new(Experiment::NormMoment, m, n, scale.moment_trials, s);
        if inject_failure {
            cfg.bound_override = Some(0.0);
        }
        results.push(run_experiment_with(&cfg, exec)?);
    }
    let s = summarize(&results);
    Ok(outcome(4, "moment_bounds", results, s))
}

/// Criterion 5: KS independence test, passing on at least 90% of seeds
/// for every grid point.
pub fn check_independence(
    scale: &Scale,
    seed: u64,
    exec: &Executor,
) -> Result<CheckOutcome, McError> {
    let needed = (scale.ks_seeds * 9).div_ceil(10) as usize;
    let mut results = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for &(m, n) in &KS_GRID {
        let mut accepted = 0;
        for k in 0..scale.ks_seeds {
            let cfg = McConfig::new(
                Experiment::Independence,
                m,
                n,
                scale.ks_samples,
                check_seed(seed, 5, k),
            );
            let r = run_experiment_with(&cfg, exec)?;
            accepted += usize::from(r.pass);
            results.push(r);
        }
        pass &= accepted >= needed;
        parts.push(format!(
            "({m},{n}) {accepted}/{} seeds (need {needed})",
            scale.ks_seeds
        ));
    }
    Ok(CheckOutcome {
        criterion: 5,
        name: "independence",
        pass,
        summary: parts.join("; "),
        results,
    })
}

/// Criterion 6: conditional and direct estimators agree.
pub fn check_agreement(scale: &Scale, seed: u64, exec: &Executor) -> Result<CheckOutcome, McError> {
    let mut results = Vec::new();
    for &(m, n) in &AGREEMENT_GRID {
        for e in [Experiment::EstimatorAgreement, Experiment::NormAgreement] {
            let cfg = McConfig::new(e, m, n, scale.agreement_trials, check_seed(seed, 6, 0));
            results.push(run_experiment_with(&cfg, exec)?);
        }
    }
    let s = summarize(&results);
    Ok(outcome(6, "estimator_agreement", results, s))
}

fn random_shape(g: &mut crate::sampler::NormalSource, max_n: usize) -> (usize, usize) {
    let m = 1 + g.index(3);
    let lo = m.max(2);
    (m, lo + g.index(max_n - lo + 1))
}

/// Criterion 7: `h_B` is unchanged by sign flips.
pub fn check_sign_invariance(scale: &Scale, seed: u64) -> Result<CheckOutcome, McError> {
    let s = check_seed(seed, 7, 0);
    let mut worst = 0.0f64;
    for t in 0..scale.fuzz_cases as u64 {
        let mut g = RngStream::lane(s, 1, t).rng();
        let (m, n) = random_shape(&mut g, 6);
        let d = sample_gaussian_triple(m, n, RngStream::new(s, t));
        let u = SignVector::from_mask(g.index(1 << n) as u64, n);
        let mut ix = sample_indices(g.inner(), n, m).into_vec();
        ix.sort_unstable();
        let basis = Basis::new(ix, m, n).expect("m-subset");
        let h = h_b(&d, &basis)?;
        let hu = h_b(&apply_sign(&d, &u).expect("length n"), &basis)?;
        worst = worst.max((hu - h).abs() / h.max(1.0));
    }
    let r = row(
        "sign_invariance",
        (3, 6),
        scale.fuzz_cases as u64,
        s,
        worst,
        1e-12,
        worst <= 1e-12,
    );
    let summary = format!("max |h_B(u(d)) - h_B(d)| / max(1, h_B) = {worst:.3e}");
    Ok(outcome(7, "sign_invariance", vec![r], summary))
}

/// Criterion 8: exactly one sign vector per basis, equal to the constructed one.
pub fn check_sign_fix(scale: &Scale, seed: u64) -> Result<CheckOutcome, McError> {
    let s = check_seed(seed, 8, 0);
    let (mut pairs, mut failures) = (0u64, 0u64);
    for t in 0..scale.orbit_cases as u64 {
        let mut g = RngStream::lane(s, 1, t).rng();
        let (m, n) = random_shape(&mut g, 8);
        let d = sample_gaussian_triple(m, n, RngStream::new(s, t));
        for basis in Basis::all(m, n) {
            if basic_pair(&d, &basis).is_none() {
                continue;
            }
            pairs += 1;
            let ok = match (
                orbit_partition_check(&d, &basis, DEFAULT_TOL),
                sign_fix(&d, &basis, DEFAULT_TOL),
            ) {
                (Ok(orbit), Ok(u)) => {
                    let fixed = apply_sign(&d, &u).expect("length n");
                    orbit.count == 1
                        && orbit.found.as_ref() == Some(&u)
                        && orbit.unique_optimal
                        && classify_basis(&fixed, &basis, DEFAULT_TOL) == BasisClass::Optimal
                }
                _ => false,
            };
            failures += u64::from(!ok);
        }
    }
    let mut r = row(
        "sign_fix_partition",
        (3, 8),
        scale.orbit_cases as u64,
        s,
        failures as f64,
        0.0,
        failures == 0,
    );
    r.details.push(("pairs".into(), pairs as f64));
    let summary = format!("{failures} failures over {pairs} (d, B) pairs");
    Ok(outcome(8, "sign_fix_partition", vec![r], summary))
}

/// Criterion 9: exact distance to singularity against the randomized oracle.
pub fn check_oracle(scale: &Scale, seed: u64) -> Result<CheckOutcome, McError> {
    let s = check_seed(seed, 9, 0);
    let mut results = Vec::new();
    let mut parts = Vec::new();
    for k in [2usize, 3] {
        let mut worst = 0.0f64;
        for t in 0..scale.oracle_cases as u64 {
            let mut g = RngStream::lane(s, k as u16, t).rng();
            let data = (0..k * k).map(|_| g.uniform(-2.0, 2.0)).collect();
            let m = SquareMatrix::new(k, data).expect("finite");
            let exact = rho_sing(&m).expect("small");
            let est = rho_sing_oracle(&m, scale.oracle_iterations, g.inner()).expect("small");
            let rel = if exact > 0.0 {
                (est - exact).abs() / exact
            } else {
                est.abs()
            };
            worst = worst.max(rel);
        }
        results.push(row(
            "rho_sing_oracle",
            (k, k),
            scale.oracle_cases as u64,
            s,
            worst,
            1e-3,
            worst <= 1e-3,
        ));
        parts.push(format!("{k}x{k} max rel {worst:.3e}"));
    }
    Ok(outcome(9, "rho_sing_oracle", results, parts.join("; ")))
}

fn six_digits(x: f64) -> String {
    format!("{x:.5e}")
}

/// Criterion 10: the fixed instance `A = [1 1], b = 1, c = (1, 2)`.
pub fn check_fixed_instance() -> Result<CheckOutcome, McError> {
    let d = DataTriple::from_rows(&[vec![1.0, 1.0]], vec![1.0], vec![1.0, 2.0]).expect("valid");
    let report = kappa(&d, DEFAULT_TOL)?;
    let rho = report.rho.unwrap_or(f64::NAN);
    let k = report.kappa.unwrap_or(f64::NAN);
    let (rho_ref, k_ref) = (1.0 / 13f64.sqrt(), 65f64.sqrt());
    let results = vec![
        row(
            "d0_rho",
            (1, 2),
            1,
            0,
            rho,
            rho_ref,
            six_digits(rho) == six_digits(rho_ref),
        ),
        row(
            "d0_kappa",
            (1, 2),
            1,
            0,
            k,
            k_ref,
            six_digits(k) == six_digits(k_ref),
        ),
    ];
    Ok(outcome(
        10,
        "fixed_instance",
        results,
        format!("rho = {rho:.9}, kappa = {k:.9}"),
    ))
}

/// Criterion 11: identical results for one and four workers and across reruns.
pub fn check_determinism(scale: &Scale, seed: u64) -> Result<CheckOutcome, McError> {
    let s = check_seed(seed, 11, 0);
    let configs = [
        McConfig::new(Experiment::ProbU, 2, 4, scale.determinism_trials, s),
        McConfig::new(Experiment::LnKBound, 1, 3, scale.determinism_trials / 4, s),
        McConfig::new(Experiment::RhoSingMoment, 2, 2, scale.determinism_trials, s),
    ];
    let (one, four) = (Executor::new(Some(1)), Executor::new(Some(4)));
    let mut mismatches = 0u64;
    for cfg in &configs {
        let a = run_experiment_with(cfg, &one)?;
        let b = run_experiment_with(cfg, &four)?;
        let c = run_experiment_with(cfg, &four)?;
        mismatches += u64::from(a != b) + u64::from(b != c);
    }
    let r = row(
        "determinism",
        (2, 4),
        configs.len() as u64,
        s,
        mismatches as f64,
        0.0,
        mismatches == 0,
    );
    Ok(outcome(
        11,
        "determinism",
        vec![r],
        format!("{mismatches} mismatches over {} configs", configs.len()),
    ))
}

/// Runs every check in criterion order.
pub fn run_suite(opts: &VerifyOptions, exec: &Executor) -> Result<Vec<CheckOutcome>, McError> {
    let scale = Scale::of(opts.suite);
    let seed = opts.seed;
    Ok(vec![
        check_prob_u(&scale, seed, exec)?,
        check_prob_ub(&scale, seed, exec)?,
        check_lnk(&scale, seed, exec)?,
        check_moments(&scale, seed, opts.inject_failure, exec)?,
        check_independence(&scale, seed, exec)?,
        check_agreement(&scale, seed, exec)?,
        check_sign_invariance(&scale, seed)?,
        check_sign_fix(&scale, seed)?,
        check_oracle(&scale, seed)?,
        check_fixed_instance()?,
        check_determinism(&scale, seed)?,
    ])
}
