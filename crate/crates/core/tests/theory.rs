use lp_kappa::cond::{h_b, kappa, submatrix_family};
use lp_kappa::dense::{rho_sing, rho_sing_oracle};
use lp_kappa::lp::{basic_pair, classify_basis, verdict, Basis, BasisClass, Verdict, DEFAULT_TOL};
use lp_kappa::mc::{ks_two_sample, run_experiment, Experiment, McConfig};
use lp_kappa::sampler::{sample_gaussian_triple, RngStream};
use lp_kappa::symmetry::{apply_sign, orbit_partition_check, sign_fix, SignVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `C(n, m) / 2^n` from factorials.
fn prob_u_oracle(m: usize, n: usize) -> f64 {
    let fact = |k: usize| (1..=k).map(|i| i as f64).product::<f64>();
    fact(n) / (fact(m) * fact(n - m)) / 2f64.powi(n as i32)
}

#[test]
fn boundary_is_rare() {
    let mut total = 0u64;
    let mut boundary = 0u64;
    for m in 1..=3 {
        for n in m.max(2)..=8 {
            for t in 0..600 {
                let d = sample_gaussian_triple(m, n, RngStream::new(101, t));
                total += 1;
                boundary += u64::from(verdict(&d, DEFAULT_TOL).unwrap() == Verdict::Boundary);
            }
        }
    }
    assert!(
        (boundary as f64) < 1e-3 * total as f64,
        "{boundary} of {total}"
    );
}

#[test]
fn rho_is_min_over_family_and_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for (m, n) in [(1, 2), (1, 3), (1, 4), (2, 3), (2, 4)] {
        for t in 0..40 {
            let d = sample_gaussian_triple(m, n, RngStream::new(55, t));
            let r = kappa(&d, DEFAULT_TOL).unwrap();
            let Verdict::InU(b) = &r.verdict else {
                continue;
            };
            let members: Vec<f64> = submatrix_family(&d, b)
                .iter()
                .map(|s| rho_sing(s).unwrap())
                .collect();
            let min = members.iter().copied().fold(f64::INFINITY, f64::min);
            assert_eq!(r.rho, Some(min));
            for s in submatrix_family(&d, b).iter() {
                let exact = rho_sing(s).unwrap();
                let oracle = rho_sing_oracle(s, 3000, &mut rng).unwrap();
                assert!(
                    (exact - oracle).abs() <= 1e-3 * exact.max(1.0),
                    "{exact} vs {oracle}"
                );
            }
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn sign_fix_is_the_only_orbit_element() {
    for t in 0..40u64 {
        let (m, n) = [(1, 2), (1, 5), (2, 4), (2, 6), (3, 5), (3, 7)][t as usize % 6];
        let d = sample_gaussian_triple(m, n, RngStream::new(77, t));
        for b in Basis::all(m, n) {
            if basic_pair(&d, &b).is_none() {
                continue;
            }
            let orbit = orbit_partition_check(&d, &b, DEFAULT_TOL).unwrap();
            let u = sign_fix(&d, &b, DEFAULT_TOL).unwrap();
            assert_eq!(orbit.count, 1);
            assert_eq!(orbit.found.as_ref(), Some(&u));
            let fixed = apply_sign(&d, &u).unwrap();
            assert_eq!(classify_basis(&fixed, &b, DEFAULT_TOL), BasisClass::Optimal);
            assert_eq!(
                verdict(&fixed, DEFAULT_TOL).unwrap(),
                Verdict::InU(b.clone())
            );
        }
    }
}

/// The orbit of `d` splits into `C(n, m)` unique-optimum triples, one per
/// basis, so the fraction of sign vectors landing in the unique class is
/// exactly `C(n, m) / 2^n`.
#[test]
fn orbit_counts_give_prob_u() {
    for (m, n) in [(1, 2), (2, 4), (2, 5), (3, 6)] {
        let d = sample_gaussian_triple(m, n, RngStream::new(5, (m * 10 + n) as u64));
        let unique = (0..1u64 << n)
            .filter(|&mask| {
                let du = apply_sign(&d, &SignVector::from_mask(mask, n)).unwrap();
                matches!(verdict(&du, DEFAULT_TOL).unwrap(), Verdict::InU(_))
            })
            .count();
        assert_eq!(unique as f64 / 2f64.powi(n as i32), prob_u_oracle(m, n));
    }
}

#[test]
fn prob_u_against_factorial_oracle() {
    for (m, n) in [(1, 2), (2, 4)] {
        let r = run_experiment(&McConfig::new(Experiment::ProbU, m, n, 40_000, 9)).unwrap();
        let target = prob_u_oracle(m, n);
        assert_eq!(r.bound, Some(target));
        assert!(
            (r.estimate - target).abs() <= 3.0 * r.stderr.unwrap(),
            "{r:?}"
        );
    }
}

#[test]
fn empirical_sign_invariance() {
    let (m, n, samples) = (2, 4, 10_000u64);
    let b = Basis::leading(m);
    let u = SignVector::new(vec![-1, 1, 1, -1]).unwrap();
    let draw = |lane: u16, t: u64| sample_gaussian_triple(m, n, RngStream::lane(13, lane, t));

    let plain: Vec<f64> = (0..samples)
        .map(|t| h_b(&draw(0, t), &b).unwrap())
        .collect();
    let flipped: Vec<f64> = (0..samples)
        .map(|t| h_b(&apply_sign(&draw(1, t), &u).unwrap(), &b).unwrap())
        .collect();
    assert!(!ks_two_sample(&plain, &flipped, 0.01).unwrap().reject);

    // A statistic that changes sign under u: first basic coordinate.
    let x1 = |d: &lp_kappa::DataTriple| basic_pair(d, &b).map_or(0.0, |p| p.x_star[0]);
    let plain: Vec<f64> = (0..samples).map(|t| x1(&draw(2, t))).collect();
    let flipped: Vec<f64> = (0..samples)
        .map(|t| x1(&apply_sign(&draw(3, t), &u).unwrap()))
        .collect();
    assert!(!ks_two_sample(&plain, &flipped, 0.01).unwrap().reject);
}

#[test]
fn estimator_agreement_across_seeds() {
    let passes = (0..20u64)
        .filter(|&s| {
            run_experiment(&McConfig::new(
                Experiment::EstimatorAgreement,
                1,
                3,
                3_000,
                1000 + s,
            ))
            .unwrap()
            .pass
        })
        .count();
    assert!(passes >= 19, "{passes} of 20 seeds");
}

#[test]
fn moment_rows_report_median_of_means() {
    for e in [Experiment::RhoSingMoment, Experiment::HbMoment] {
        let r = run_experiment(&McConfig::new(e, 2, 3, 6_000, 4)).unwrap();
        assert!(r.detail("median_of_means").is_some());
        assert_eq!(r.pass, r.estimate <= r.bound.unwrap());
    }
}

#[test]
fn unique_basis_implies_positive_h() {
    for t in 0..2000u64 {
        let d = sample_gaussian_triple(2, 5, RngStream::new(31, t));
        if let Verdict::InU(b) = verdict(&d, DEFAULT_TOL).unwrap() {
            assert!(h_b(&d, &b).unwrap() > 0.0);
        }
    }
}
