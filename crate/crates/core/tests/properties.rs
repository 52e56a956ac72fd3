mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;

use common::*;
use udn_coord::exact::{assignment_feasible, solve_fixed_pairing, solve_joint_ppp};
use udn_coord::greedy::{
    intra_partition_weight, interference_weight_matrix, power_aware_partition,
    power_unaware_partition, random_partition, GreedyConfig,
};
use udn_coord::harness::{read_csv, write_csv, AlgorithmId, RunRecord, Stats, Summary};
use udn_coord::power::{
    approx_common_sinr, evaluate_assignment, optimal_common_sinr, optimal_power_vector,
    perron_root, sinr_bounds, PerronBoundParams,
};
use udn_coord::{NetworkInstance, PartitionGroup};

fn link_matrix(max_l: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_l).prop_flat_map(|l| {
        prop::collection::vec(0.0f64..6.0, l * l)
            .prop_map(move |e| DMatrix::from_fn(l, l, |i, j| 10f64.powf(e[i * l + j])))
    })
}

fn gains(k: usize, m: usize) -> impl Strategy<Value = NetworkInstance> {
    prop::collection::vec(0.0f64..5.0, k * m).prop_map(move |e| {
        let rows = (0..k).map(|i| (0..m).map(|j| 10f64.powf(e[i * m + j])).collect()).collect();
        NetworkInstance::from_gains(rows, 1.0).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_gamma_matches_bisection_oracle(link in link_matrix(5)) {
        let group = group_from_links(&link);
        let exact = optimal_common_sinr(&group, 1.0).unwrap();
        let oracle = oracle_gamma(&group, 1.0);
        prop_assert!(rel_err(exact, oracle) < 1e-8, "{exact} vs {oracle}");
    }

    #[test]
    fn bounds_sandwich_single_matrix_root(link in link_matrix(8), a in 1u32..=2, b in 1u32..=2) {
        let group = group_from_links(&link);
        let l = group.len();
        let w = (0..l).fold(0, |b, i| if group.inverse_gains[i] > group.inverse_gains[b] { i } else { b });
        let mut m = group.cross.clone();
        for i in 0..l {
            m[(i, w)] += group.inverse_gains[i];
        }
        let exact = 1.0 / perron_root(&m).unwrap();
        let bounds = sinr_bounds(&group, 1.0, PerronBoundParams::new(a, b)).unwrap();
        prop_assert!(bounds.lower <= exact * (1.0 + 1e-9));
        prop_assert!(exact <= bounds.upper * (1.0 + 1e-9));
        let mid = approx_common_sinr(&group, 1.0, PerronBoundParams::new(a, b)).unwrap();
        prop_assert!(bounds.lower <= mid && mid <= bounds.upper);
    }

    #[test]
    fn more_budget_never_hurts(link in link_matrix(5), scale in 1.0f64..100.0) {
        let group = group_from_links(&link);
        let low = optimal_common_sinr(&group, 0.5).unwrap();
        let high = optimal_common_sinr(&group, 0.5 * scale).unwrap();
        prop_assert!(high >= low * (1.0 - 1e-10));
    }

    #[test]
    fn adding_a_pair_never_helps(link in link_matrix(6)) {
        let l = link.nrows();
        prop_assume!(l >= 2);
        let full = group_from_links(&link);
        let sub = full.subgroup(&(0..l - 1).collect::<Vec<_>>());
        let g_full = optimal_common_sinr(&full, 1.0).unwrap();
        let g_sub = optimal_common_sinr(&sub, 1.0).unwrap();
        prop_assert!(g_full <= g_sub * (1.0 + 1e-10));
    }

    #[test]
    fn gain_scaling_acts_like_budget_scaling(link in link_matrix(5), c in 0.01f64..100.0) {
        let base = group_from_links(&link);
        let scaled = group_from_links(&(&link * c));
        for i in 0..base.len() {
            prop_assert!(rel_err(scaled.inverse_gains[i], base.inverse_gains[i] / c) < 1e-12);
            for j in 0..base.len() {
                prop_assert!((scaled.cross[(i, j)] - base.cross[(i, j)]).abs() <= 1e-12 * base.cross[(i, j)]);
            }
        }
        let a = optimal_common_sinr(&scaled, 1.0).unwrap();
        let b = optimal_common_sinr(&base, c).unwrap();
        prop_assert!(rel_err(a, b) < 1e-9);
    }

    #[test]
    fn optimal_powers_in_box_and_equalized(link in link_matrix(8)) {
        let group = group_from_links(&link);
        let gamma = optimal_common_sinr(&group, 2.0).unwrap();
        let p = optimal_power_vector(&group, 2.0).unwrap().powers;
        prop_assert!(p.iter().all(|&x| x > 0.0 && x <= 2.0));
        for s in group.sinrs(&p) {
            prop_assert!(rel_err(s, gamma) < 1e-8);
        }
    }

    #[test]
    fn perron_root_matches_2x2_closed_form(e in prop::collection::vec(0.0f64..10.0, 4)) {
        let m = DMatrix::from_row_slice(2, 2, &e);
        let expected = 0.5 * (e[0] + e[3]) + (0.25 * (e[0] - e[3]).powi(2) + e[1] * e[2]).sqrt();
        let r = perron_root(&m).unwrap();
        prop_assert!((r - expected).abs() <= 1e-10 * expected.max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn feasibility_is_monotone_in_target(inst in gains(3, 3), t in 0.01f64..0.99) {
        let best = solve_joint_ppp(&inst, 2, 1e-6).unwrap().common_sinr;
        prop_assert!(assignment_feasible(&inst, best * t, 2, None).unwrap().is_some());
        prop_assert!(assignment_feasible(&inst, best * (1.0 + 1e-6), 2, None).unwrap().is_none());
    }

    #[test]
    fn theta_grows_with_partitions(inst in gains(4, 3)) {
        let mut last = 0.0;
        for n in 1..=4 {
            // Four UEs cannot share one partition over three ANs.
            let t = solve_joint_ppp(&inst, n, 1e-6).map_or(0.0, |s| s.common_sinr);
            prop_assert!(t >= last * (1.0 - 1e-12));
            last = t;
        }
    }

    #[test]
    fn heuristics_below_joint_optimum(inst in gains(4, 4), n in 1usize..=3) {
        let exact = solve_joint_ppp(&inst, n, 1e-6).unwrap().common_rate;
        for config in [GreedyConfig::default(), GreedyConfig::approx()] {
            if let Ok(a) = power_aware_partition(&inst, n, config) {
                let r = evaluate_assignment(&inst, &a).unwrap().common_rate;
                prop_assert!(r <= exact * (1.0 + 1e-9));
            }
        }
    }

    #[test]
    fn refinement_never_lowers_rate(inst in gains(6, 5), n in 2usize..=3) {
        let plain = GreedyConfig { enable_refinement: false, ..GreedyConfig::default() };
        let a0 = power_aware_partition(&inst, n, plain).unwrap();
        let a1 = power_aware_partition(&inst, n, GreedyConfig::default()).unwrap();
        let r0 = evaluate_assignment(&inst, &a0).unwrap().common_rate;
        let r1 = evaluate_assignment(&inst, &a1).unwrap().common_rate;
        prop_assert!(r1 >= r0 * (1.0 - 1e-12));
    }

    #[test]
    fn every_heuristic_assignment_is_valid(inst in gains(6, 6), n in 1usize..=6) {
        for config in [GreedyConfig::default(), GreedyConfig::approx()] {
            let a = power_aware_partition(&inst, n, config).unwrap();
            prop_assert!(a.validate(&inst).is_ok());
        }
    }

    #[test]
    fn common_rate_solutions_have_equal_rates(inst in gains(5, 5), n in 1usize..=3) {
        let a = power_aware_partition(&inst, n, GreedyConfig::default()).unwrap();
        let sol = evaluate_assignment(&inst, &a).unwrap();
        prop_assert!(rel_err(sol.sum_rate(), 5.0 * sol.common_rate) < 1e-9);
        prop_assert!(sol.per_ue_sinr.iter().all(|&s| s >= sol.common_sinr * (1.0 - 1e-9)));
    }

    #[test]
    fn fixed_pairing_matches_enumeration(inst in gains(4, 3)) {
        let pairing = udn_coord::greedy::closest_an_pairing(&inst);
        let oracle = brute_force_theta(&inst, 2, Some(&pairing));
        match solve_fixed_pairing(&inst, &pairing, 2, 1e-6 * oracle.max(1e-9)) {
            Ok(sol) => prop_assert!(rel_err(sol.common_sinr, oracle) < 1e-6),
            Err(_) => prop_assert_eq!(oracle, 0.0),
        }
    }

    #[test]
    fn csv_round_trip_and_summary(rates in prop::collection::vec((0.0f64..10.0, 0.0f64..1e4), 0..20)) {
        let records: Vec<RunRecord> = rates
            .iter()
            .enumerate()
            .map(|(i, &(r, t))| RunRecord {
                realization: i / 2,
                seed: 10 + i as u64,
                algorithm: if i % 2 == 0 { AlgorithmId::FullOrth } else { AlgorithmId::PowerUnaware },
                n: 1 + i % 3,
                theta: t,
                common_rate_bps_hz: r,
                sum_rate_bps_hz: 3.0 * r,
                wall_ms: 0.0,
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_csv(&records, std::fs::File::create(&path).unwrap()).unwrap();
        let back = read_csv(&path).unwrap();
        prop_assert_eq!(&back, &records);
        let summary = Summary::from_records(&back, Vec::new());
        for s in &summary.algorithms {
            let vals: Vec<f64> = back.iter().filter(|r| r.algorithm == s.algorithm).map(|r| r.common_rate_bps_hz).collect();
            prop_assert!((s.common_rate.mean - Stats::of(&vals).mean).abs() <= 1e-12);
        }
    }
}

#[test]
fn grid_oracle_agrees_on_symmetric_pair() {
    let link = DMatrix::from_row_slice(2, 2, &[100.0, 5.0, 5.0, 100.0]);
    let group: PartitionGroup = group_from_links(&link);
    let exact = optimal_common_sinr(&group, 1.0).unwrap();
    let grid = grid_max_min(&link, 1.0, 200, 0);
    // Both powers at p_max are on the grid.
    assert!(rel_err(grid, exact) < 1e-12);
}

// Heuristic, not a theorem: a few percent of drops defeat the greedy (and
// adversarial gain matrices defeat it easily), so the claim is checked over
// batches of drawn deployments rather than per instance.
proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn greedy_weight_beats_random_mean_on_most_drops(base in any::<u32>(), size in 6usize..=12, n in 2usize..=4) {
        use rand::SeedableRng;
        let mut wins = 0;
        let (mut greedy_total, mut random_total) = (0.0, 0.0);
        for s in 0..40u64 {
            let config = udn_coord::SystemConfig::default().with_seed(u64::from(base) * 1000 + s);
            let inst = udn_coord::network::generate_instance(size, size, &config).unwrap();
            let pairing = udn_coord::greedy::closest_an_pairing(&inst);
            let w = interference_weight_matrix(&inst, &pairing, 3).unwrap();
            let greedy = intra_partition_weight(&w, &power_unaware_partition(&w, n).unwrap());
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(s);
            let randoms: Vec<f64> = (0..100)
                .map(|_| intra_partition_weight(&w, &random_partition(&pairing, n, &mut rng).unwrap()))
                .collect();
            let random = mean(&randoms);
            if greedy <= random {
                wins += 1;
            }
            greedy_total += greedy / random.max(f64::MIN_POSITIVE);
            random_total += 1.0;
        }
        prop_assert!(wins >= 36, "greedy won {wins}/40");
        prop_assert!(greedy_total < random_total);
    }
}
