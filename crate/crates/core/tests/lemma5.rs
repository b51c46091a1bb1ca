mod common;

use common::lemma5_fixture;
use genent_core::hilbert::partial_trace;
use genent_core::lemma5::{analyze, build_delta, build_epsilon, verify_marginal_equations, verify_pt_symmetric_branch};
use genent_core::linalg::frobenius;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn consistent_fixtures_solve_the_block_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    for _ in 0..15 {
        let (params, beta) = lemma5_fixture(&mut rng);
        let residuals = verify_marginal_equations(&params.alpha(), &beta, &params).unwrap();
        assert!(residuals.max() < 1e-10, "{residuals:?}");

        let eps = build_epsilon(&params).unwrap();
        let branch = verify_pt_symmetric_branch(&eps, &params, Some(&beta), 1e-10).unwrap();
        for r in [branch.sep_00, branch.sep_11, branch.sep_01].into_iter().flatten() {
            assert!(r < 1e-10);
        }

        // β is recovered as the marginal of δ + ε
        let derived = params.derived_beta().unwrap();
        assert!(frobenius(&(derived.matrix() - beta.matrix())) < 1e-10);
        let full = build_delta(&params).unwrap().add(&eps).unwrap();
        let marginal = partial_trace(&full, &["B", "C2"]).unwrap();
        assert!(frobenius(&(marginal.matrix() - beta.matrix())) < 1e-10);

        let report = analyze(&params, None, 1e-10).unwrap();
        assert!(report.block_00.max(report.block_11).max(report.block_01) < 1e-10);
    }
}

#[test]
fn perturbed_parameters_break_the_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..15 {
        let (params, beta) = lemma5_fixture(&mut rng);
        for probe in 0..4 {
            let mut q = params.clone();
            match probe {
                0 => q.theta += 1e-3,
                1 => q.mu += 1e-3,
                2 => q.f += 1e-3,
                _ => q.nu += 1e-3,
            }
            let residual = verify_marginal_equations(&q.alpha(), &beta, &q).unwrap().max();
            assert!(residual > 1e-5, "probe {probe}: {residual}");
        }
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let (params, _) = lemma5_fixture(&mut rng);
    for bad in [
        {
            let mut q = params.clone();
            q.theta = 0.0;
            q
        },
        {
            let mut q = params.clone();
            q.f = 1.5;
            q
        },
        {
            let mut q = params.clone();
            q.b_dim = 0;
            q
        },
    ] {
        assert!(bad.validate().is_err());
        assert!(analyze(&bad, None, 1e-10).is_err());
    }
}
