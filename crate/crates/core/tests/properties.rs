use lp_kappa::cond::{h_b, kappa, triple_norm_12};
use lp_kappa::dense::{
    lu_factor, lu_solve, norm_12, rho_sing, rho_sing_oracle, Matrix, SquareMatrix,
};
use lp_kappa::lp::{basic_pair, classify_basis, verdict, Basis, DataTriple, Verdict, DEFAULT_TOL};
use lp_kappa::symmetry::{apply_sign, SignVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn square(max_k: usize, lo: f64, hi: f64) -> impl Strategy<Value = SquareMatrix> {
    (1..=max_k).prop_flat_map(move |k| {
        prop::collection::vec(lo..hi, k * k).prop_map(move |v| SquareMatrix::new(k, v).unwrap())
    })
}

/// Triple with `1 <= m <= max_m`, `m <= n <= max_n`, a basis and a sign vector.
fn triple_case(
    max_m: usize,
    max_n: usize,
) -> impl Strategy<Value = (DataTriple, Basis, SignVector)> {
    (1..=max_m)
        .prop_flat_map(move |m| (Just(m), m.max(2)..=max_n))
        .prop_flat_map(|(m, n)| {
            (
                prop::collection::vec(-3.0f64..3.0, m * n + m + n),
                prop::sample::subsequence((0..n).collect::<Vec<_>>(), m),
                0u64..(1 << n),
                Just((m, n)),
            )
        })
        .prop_map(|(v, ix, mask, (m, n))| {
            let d = DataTriple::new(
                m,
                n,
                v[..m * n].to_vec(),
                v[m * n..m * n + m].to_vec(),
                v[m * n + m..].to_vec(),
            )
            .unwrap();
            (
                d,
                Basis::new(ix, m, n).unwrap(),
                SignVector::from_mask(mask, n),
            )
        })
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rho_sing_matches_oracle(s in square(3, -2.0, 2.0), seed in any::<u64>()) {
        let exact = rho_sing(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let est = rho_sing_oracle(&s, 3000, &mut rng).unwrap();
        prop_assert!((exact - est).abs() <= 1e-3 * exact.max(1.0), "exact {exact} oracle {est}");
    }
}

proptest! {
    #[test]
    fn rho_sing_column_sign_invariant(s in square(6, -2.0, 2.0), mask in any::<u64>()) {
        let k = s.dim();
        let signs: Vec<f64> = (0..k).map(|j| if (mask >> j) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let a = rho_sing(&s).unwrap();
        let b = rho_sing(&s.with_column_signs(&signs)).unwrap();
        prop_assert!(rel(a, b) <= 1e-12, "{a} vs {b}");
    }

    #[test]
    fn norm_12_homogeneous(
        rows in 1usize..5,
        cols in 1usize..5,
        v in prop::collection::vec(-5.0f64..5.0, 16),
        e in -20i32..20,
    ) {
        let m = Matrix::new(rows, cols, v[..rows * cols].to_vec()).unwrap();
        let alpha = 2f64.powi(e);
        prop_assert_eq!(norm_12(&m.scaled(alpha)), alpha * norm_12(&m));
        prop_assert_eq!(norm_12(&m.scaled(-alpha)), alpha * norm_12(&m));
        let zero = m.data().iter().all(|&x| x == 0.0);
        prop_assert_eq!(norm_12(&m) == 0.0, zero);
        prop_assert_eq!(norm_12(&Matrix::new(rows, cols, vec![0.0; rows * cols]).unwrap()), 0.0);
    }

    #[test]
    fn lu_solve_residual(
        k in 1usize..=12,
        v in prop::collection::vec(-1.0f64..1.0, 144),
        rhs in prop::collection::vec(-10.0f64..10.0, 12),
        transpose in any::<bool>(),
    ) {
        // Diagonal shift keeps the matrix well conditioned.
        let mut data = v[..k * k].to_vec();
        for i in 0..k {
            data[i * k + i] += 2.0 * k as f64;
        }
        let s = SquareMatrix::new(k, data).unwrap();
        let rhs = &rhs[..k];
        let x = lu_solve(&lu_factor(&s, 0.0), rhs, transpose).unwrap();
        let sx = if transpose { s.transpose_mul_vec(&x) } else { s.mul_vec(&x) };
        let res: f64 = sx.iter().zip(rhs).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let scale: f64 = rhs.iter().map(|b| b * b).sum::<f64>().sqrt();
        prop_assert!(res <= 1e-10 * scale, "residual {res}");
    }

    #[test]
    fn h_b_and_norm_sign_invariant((d, basis, u) in triple_case(3, 6)) {
        let du = apply_sign(&d, &u).unwrap();
        let (h, hu) = (h_b(&d, &basis).unwrap(), h_b(&du, &basis).unwrap());
        prop_assert!(rel(h, hu) <= 1e-12, "{h} vs {hu}");
        prop_assert!(rel(triple_norm_12(&d), triple_norm_12(&du)) <= 1e-12);
    }

    #[test]
    fn positive_homogeneity((d, basis, _u) in triple_case(3, 6), alpha in 0.05f64..20.0) {
        let da = d.scaled(alpha);
        prop_assert!(rel(triple_norm_12(&da), alpha * triple_norm_12(&d)) <= 1e-12);
        let (h, ha) = (h_b(&d, &basis).unwrap(), h_b(&da, &basis).unwrap());
        prop_assert!(rel(ha, alpha * h) <= 1e-12, "{ha} vs {}", alpha * h);
        let (k, ka) = (kappa(&d, DEFAULT_TOL).unwrap(), kappa(&da, DEFAULT_TOL).unwrap());
        prop_assert_eq!(&k.verdict, &ka.verdict);
        if let (Some(a), Some(b)) = (k.kappa, ka.kappa) {
            if a.is_finite() {
                prop_assert!(rel(a, b) <= 1e-11, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn classification_invariant_under_doubling((d, basis, _u) in triple_case(3, 8)) {
        let d2 = d.scaled(2.0);
        prop_assert_eq!(classify_basis(&d, &basis, DEFAULT_TOL), classify_basis(&d2, &basis, DEFAULT_TOL));
        prop_assert_eq!(verdict(&d, DEFAULT_TOL).unwrap(), verdict(&d2, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn action_compatibility((d, _basis, u) in triple_case(3, 8), x in prop::collection::vec(-4.0f64..4.0, 8)) {
        let (m, n) = (d.m(), d.n());
        let x = &x[..n];
        let du = apply_sign(&d, &u).unwrap();
        let ux = u.act_on_vector(x);
        for i in 0..m {
            let lhs: f64 = (0..n).map(|j| du.a(i, j) * ux[j]).sum();
            let rhs: f64 = (0..n).map(|j| d.a(i, j) * x[j]).sum();
            prop_assert_eq!(lhs.to_bits(), rhs.to_bits());
        }
    }

    #[test]
    fn basic_pair_under_sign_action((d, basis, u) in triple_case(3, 8)) {
        let Some(p) = basic_pair(&d, &basis) else { return Ok(()); };
        let pu = basic_pair(&apply_sign(&d, &u).unwrap(), &basis).unwrap();
        prop_assert_eq!(&pu.y_star, &p.y_star);
        for &j in basis.indices() {
            let want = u.get(j) * p.x_star[j];
            prop_assert!((pu.x_star[j] - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn unique_basis_has_positive_condition((d, _basis, _u) in triple_case(3, 6)) {
        let r = kappa(&d, DEFAULT_TOL).unwrap();
        if let Verdict::InU(b) = &r.verdict {
            prop_assert!(h_b(&d, b).unwrap() > 0.0);
            let k = r.kappa.unwrap();
            prop_assert!(k > 0.0 && k.is_finite());
        }
    }
}
