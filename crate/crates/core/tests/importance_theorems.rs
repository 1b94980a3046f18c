use forest_importance::distributions::{generate, Problem};
use forest_importance::forest::{build_forest, ForestConfig, Method};
use forest_importance::importance::{asymptotic_mdi, asymptotic_mdi_redundant_closed_form, asymptotic_mdi_report, mdi};
use forest_importance::infotheory::cond_mutual_information;
use forest_importance::tree::TreeConfig;

#[test]
fn totally_randomized_forest_converges_to_the_oracle() {
    let dist = generate(Problem::Digit).unwrap();
    let oracle = asymptotic_mdi_report(&dist, 7).unwrap();
    let data = dist.to_exact_dataset();
    let forest = build_forest(&data, &ForestConfig::totally_randomized(4000, 17)).unwrap();
    let empirical = mdi(&forest, &data);
    for m in 0..7 {
        assert!(
            (empirical.scores[m] - oracle.scores[m]).abs() < 0.02,
            "X{}: {} vs {}",
            m + 1,
            empirical.scores[m],
            oracle.scores[m]
        );
    }
    assert!((empirical.total() - 10f64.log2()).abs() < 1e-9);
}

#[test]
fn pruned_depth_restricts_to_low_degrees() {
    let dist = generate(Problem::Digit).unwrap();
    let full = asymptotic_mdi_report(&dist, 7).unwrap();
    let shallow = asymptotic_mdi_report(&dist, 2).unwrap();
    for m in 0..7 {
        let rows = (full.per_degree.as_ref().unwrap(), shallow.per_degree.as_ref().unwrap());
        assert!((rows.0[m][0] - rows.1[m][0]).abs() < 1e-12);
        assert!((rows.0[m][1] - rows.1[m][1]).abs() < 1e-12);
        assert!(rows.1[m][2..].iter().all(|&v| v == 0.0));
    }
    // Every input configuration has positive probability here, so no input
    // is ever constant inside a node.
    let dist = generate(Problem::MarginalOnly { p: 5, r: 3 }).unwrap();
    let shallow = asymptotic_mdi_report(&dist, 2).unwrap();
    let data = dist.to_exact_dataset();
    let config = ForestConfig::new(
        Method::TotallyRandomized,
        3000,
        TreeConfig::totally_randomized().with_depth(2),
        4,
    );
    let empirical = mdi(&build_forest(&data, &config).unwrap(), &data);
    for m in 0..5 {
        assert!(
            (empirical.scores[m] - shallow.scores[m]).abs() < 0.01,
            "X{}: {} vs {}",
            m + 1,
            empirical.scores[m],
            shallow.scores[m]
        );
    }
}

#[test]
fn relevant_generators_have_positive_importance() {
    for problem in [
        Problem::Chain { p: 6, r: 3 },
        Problem::Clique { p: 5, r: 3 },
        Problem::MarginalOnly { p: 6, r: 2 },
    ] {
        let dist = generate(problem).unwrap();
        let report = asymptotic_mdi_report(&dist, dist.n_inputs()).unwrap();
        let r = match problem {
            Problem::Chain { r, .. } | Problem::Clique { r, .. } | Problem::MarginalOnly { r, .. } => r,
            _ => unreachable!(),
        };
        for m in 0..dist.n_inputs() {
            assert_eq!(report.scores[m] > 1e-12, m < r, "{problem} input {m}");
        }
    }
}

#[test]
fn duplicated_input_shares_importance() {
    let dist = generate(Problem::XorStrongWeak { alpha: 0.8 }).unwrap();
    let dup = dist.with_duplicate_input(2).unwrap();
    let report = asymptotic_mdi_report(&dup, dup.n_inputs()).unwrap();
    let closed = asymptotic_mdi_redundant_closed_form(&dist, 2).unwrap();
    assert!((report.scores[2] - closed).abs() < 1e-9);
    assert!((report.scores[2] - report.scores[3]).abs() < 1e-12);
    let single = asymptotic_mdi_report(&dist, dist.n_inputs()).unwrap();
    assert!(report.scores[2] < single.scores[2]);
    let all: Vec<usize> = (0..dist.n_inputs()).collect();
    let mi = cond_mutual_information(&dist, &all, &[dist.output_slot()], &[]).unwrap();
    assert!((report.total() - mi).abs() < 1e-9);
}

#[test]
fn masking_by_a_perfect_copy() {
    let flip = 0.1;
    let dist = generate(Problem::NoisyCopy { flip }).unwrap();
    let data = dist.to_exact_dataset();
    let marginal = cond_mutual_information(&dist, &[1], &[dist.output_slot()], &[]).unwrap();
    let grow = |k: usize| {
        let tree = TreeConfig::default().with_k(k);
        let forest = build_forest(&data, &ForestConfig::new(Method::ExtraTrees, 2000, tree, 9)).unwrap();
        mdi(&forest, &data)
    };
    assert!(grow(2).scores[1] <= 1e-12);
    let k1 = grow(1).scores[1];
    assert!((k1 - marginal / 2.0).abs() < 0.02, "{k1} vs {}", marginal / 2.0);
    let (exact, _) = asymptotic_mdi(&dist, 1, 2).unwrap();
    assert!((exact - marginal / 2.0).abs() < 1e-9);
}
