#![allow(clippy::needless_range_loop)]

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use oblivion::bellmap::{
    bell_value, box_from_quantum, cglmp3, game_from_bell, preparations_from_entangled, strategy_from_box, BellFunctional,
};
use oblivion::bounds::{local_bound, pnc_bound_lp_oracle};
use oblivion::cglmp::{alice_measurements, closed_form_prob, optimal_state};
use oblivion::games::{
    behavior_from_quantum, cglmp_target, make_cglmp3_game, make_rac_game, obliviousness_residual_behavior,
    obliviousness_residual_quantum, QuantumStrategy,
};
use oblivion::lp::{solve, LinearProgram};
use oblivion::qmath::{born_prob, partial_trace, ComplexMatrix, DensityMatrix, Povm, Subsystem};

fn ginibre(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

fn random_state(rng: &mut ChaCha8Rng, d: usize, rank: usize) -> DensityMatrix {
    let g = ginibre(rng, d, rank);
    let m = g.matmul(&g.adjoint());
    let t = m.trace().re;
    DensityMatrix::new(m.scale(1.0 / t)).unwrap()
}

fn random_povm(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Povm {
    let parts: Vec<ComplexMatrix> = (0..k)
        .map(|_| {
            let g = ginibre(rng, d, d);
            g.matmul(&g.adjoint())
        })
        .collect();
    let mut total = ComplexMatrix::zeros(d, d);
    parts.iter().for_each(|p| total.add_scaled(1.0, p));
    let root = total.map_spectrum(|v| 1.0 / v.sqrt());
    Povm::new(parts.iter().map(|p| root.matmul(p).matmul(&root).hermitian_part()).collect()).unwrap()
}

fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> ComplexMatrix {
    ginibre(rng, d, d).hermitian_part()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigendecomposition_reconstructs(seed in any::<u64>(), d in 1usize..=9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(&mut rng, d);
        let (values, vectors) = m.eigh();
        let back = vectors.matmul(&ComplexMatrix::diagonal(&values)).matmul(&vectors.adjoint());
        prop_assert!(back.max_abs_diff(&m) < 1e-10);
    }

    #[test]
    fn partial_trace_keeps_trace(seed in any::<u64>(), da in 1usize..=3, db in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, da * db, da * db);
        for which in [Subsystem::A, Subsystem::B] {
            let r = partial_trace(rho.matrix(), da, db, which).unwrap();
            prop_assert!((r.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn born_probabilities_sum_to_one(seed in any::<u64>(), d in 2usize..=5, k in 1usize..=5, rank in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_state(&mut rng, d, rank.min(d));
        let povm = random_povm(&mut rng, d, k);
        let total: f64 = povm.elements().iter().map(|e| born_prob(&rho, e).unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn behavior_residual_is_controlled(seed in any::<u64>(), d in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let game = make_rac_game(2, 3).unwrap();
        let preps = (0..9)
            .map(|_| {
                let rank = 1 + rng.random_range(0..d);
                random_state(&mut rng, d, rank)
            })
            .collect();
        let meas = (0..2).map(|_| random_povm(&mut rng, d, 3)).collect();
        let s = QuantumStrategy::new(preps, meas).unwrap();
        let rb = obliviousness_residual_behavior(&game, &behavior_from_quantum(&s).unwrap()).unwrap();
        let rq = obliviousness_residual_quantum(&game, &s).unwrap();
        prop_assert!(rb <= d as f64 * rq + 1e-10, "{} > {} * {}", rb, d, rq);
    }

    #[test]
    fn steering_matches_box_route(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rank = 1 + rng.random_range(0..9);
        let state = random_state(&mut rng, 9, rank);
        let alice: Vec<Povm> = (0..2).map(|_| random_povm(&mut rng, 3, 3)).collect();
        let bob: Vec<Povm> = (0..2).map(|_| random_povm(&mut rng, 3, 3)).collect();
        let steered = preparations_from_entangled(&state, &alice).unwrap();
        let direct = behavior_from_quantum(&QuantumStrategy::new(steered.preparations.clone(), bob.clone()).unwrap()).unwrap();
        let bx = box_from_quantum(&state, &alice, &bob).unwrap();
        let (p_g, via_box) = strategy_from_box(&bx).unwrap();
        for (i, used) in steered.used.iter().enumerate() {
            if *used {
                for y in 0..2 {
                    for b in 0..3 {
                        prop_assert!((direct.prob(i, y, b) - via_box.prob(i, y, b)).abs() < 1e-10);
                    }
                }
            }
        }
        for x in 0..2 {
            for a in 0..3 {
                prop_assert!((p_g[x][a] - steered.p_g[x][a]).abs() < 1e-10);
            }
        }
        let game = game_from_bell(&cglmp3(), &p_g).unwrap();
        let ig = oblivion::games::performance(&game, &via_box).unwrap();
        prop_assert!((ig - bell_value(&cglmp3(), &bx).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn local_bound_ignores_outcome_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs: Vec<Vec<Vec<Vec<f64>>>> = (0..2)
            .map(|_| (0..2).map(|_| (0..3).map(|_| (0..3).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect()).collect()).collect())
            .collect();
        let bell = BellFunctional::new(coeffs.clone(), vec![0.5; 2], vec![0.5; 2]).unwrap();
        // Relabel Alice's outcomes by a cyclic shift and Bob's by a swap.
        let mut permuted = coeffs.clone();
        for x in 0..2 {
            for y in 0..2 {
                for a in 0..3 {
                    for b in 0..3 {
                        permuted[x][y][(a + 1) % 3][[1, 0, 2][b]] = coeffs[x][y][a][b];
                    }
                }
            }
        }
        let other = BellFunctional::new(permuted, vec![0.5; 2], vec![0.5; 2]).unwrap();
        let (v1, v2) = (local_bound(&bell).unwrap().value, local_bound(&other).unwrap().value);
        prop_assert!((v1 - v2).abs() < 1e-12);
        // Reference enumeration in reversed order.
        let mut best = f64::NEG_INFINITY;
        for g in (0..9usize).rev() {
            for f in (0..9usize).rev() {
                let (fa, ga) = ([f / 3, f % 3], [g / 3, g % 3]);
                let mut v = 0.0;
                for x in 0..2 {
                    for y in 0..2 {
                        v += 0.25 * coeffs[x][y][fa[x]][ga[y]];
                    }
                }
                best = best.max(v);
            }
        }
        prop_assert!((best - v1).abs() < 1e-12);
    }

    #[test]
    fn lp_invariant_under_variable_permutation(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..7);
        let point: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
        let rows: Vec<Vec<f64>> = (0..rng.random_range(1..n)).map(|_| (0..n).map(|_| rng.random::<f64>() - 0.3).collect()).collect();
        let build = |perm: &[usize]| {
            let mut lp = LinearProgram::new(perm.iter().map(|&i| c[i]).collect());
            for row in &rows {
                let rhs = row.iter().zip(&point).map(|(a, x)| a * x).sum();
                lp.add_equality(perm.iter().map(|&i| row[i]).collect(), rhs);
            }
            (0..n).for_each(|i| lp.set_upper(i, 1.0));
            lp
        };
        let identity: Vec<usize> = (0..n).collect();
        let reversed: Vec<usize> = (0..n).rev().collect();
        let a = solve(&build(&identity)).unwrap();
        let b = solve(&build(&reversed)).unwrap();
        prop_assert!((a.objective_value - b.objective_value).abs() < 1e-9);
    }
}

#[test]
fn conditional_preparations_are_pure_with_uniform_marginals() {
    let steered = preparations_from_entangled(&optimal_state().density(), &alice_measurements()).unwrap();
    for rho in &steered.preparations {
        assert!((rho.purity() - 1.0).abs() < 1e-10);
    }
    for row in &steered.p_g {
        for &p in row {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn winning_probabilities_do_not_depend_on_x0() {
    for x in 0..2 {
        for y in 0..2 {
            for k in 0..2 {
                let reference = closed_form_prob(0, x, y, cglmp_target(0, x, y, k));
                for x0 in 1..3 {
                    assert!((closed_form_prob(x0, x, y, cglmp_target(x0, x, y, k)) - reference).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn rac_sets_have_prime_power_size() {
    for (n, d) in [(2, 2), (3, 2), (2, 3), (3, 3), (2, 5)] {
        let game = make_rac_game(n, d).unwrap();
        for family in game.families() {
            assert_eq!(family.len(), d);
            for set in family {
                assert_eq!(set.len(), d.pow(n as u32 - 1));
            }
        }
    }
}

#[test]
fn oracle_is_monotone_in_messages() {
    let game = make_rac_game(2, 3).unwrap();
    let values: Vec<f64> = (1..=3).map(|m| pnc_bound_lp_oracle(&game, m).unwrap().value).collect();
    assert!(values.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{values:?}");
}

#[test]
fn oracle_matches_formula_for_three_bit_code() {
    let v = pnc_bound_lp_oracle(&make_rac_game(3, 2).unwrap(), 2).unwrap().value;
    assert!((v - 2.0 / 3.0).abs() < 1e-9, "{v}");
}

#[test]
fn cglmp_game_bound_matches_pnc_bound() {
    assert_eq!(local_bound(&cglmp3()).unwrap().value, 0.5);
    let oracle = pnc_bound_lp_oracle(&make_cglmp3_game(), 3).unwrap().value;
    assert!((oracle - 0.5).abs() < 1e-9);
}
