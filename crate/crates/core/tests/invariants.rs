use forest_importance::distributions::{JointDistribution, Variable};
use forest_importance::forest::{build_forest, ForestConfig};
use forest_importance::importance::{asymptotic_mdi_report, mdi};
use forest_importance::infotheory::{classify_relevance, cond_mutual_information, entropy, Relevance};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

/// Random distributions over 1..=4 inputs of cardinality 2 or 3 and an
/// output of cardinality 2 or 3; about a third of the configurations get
/// probability zero.
fn distributions() -> impl Strategy<Value = JointDistribution> {
    (prop::collection::vec(2u32..=3, 1..=4), 2u32..=3).prop_flat_map(|(cards, out)| {
        let size: usize = cards.iter().map(|&c| c as usize).product::<usize>() * out as usize;
        prop::collection::vec(prop_oneof![1 => Just(0.0), 2 => 0.01f64..1.0], size)
            .prop_filter("some mass", |w| w.iter().any(|&x| x > 0.0))
            .prop_map(move |w| build(&cards, out, &w))
    })
}

fn build(cards: &[u32], out: u32, weights: &[f64]) -> JointDistribution {
    let inputs: Vec<Variable> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| Variable::new(format!("X{}", i + 1), c))
        .collect();
    let mut all = cards.to_vec();
    all.push(out);
    let entries = weights.iter().enumerate().map(|(mut idx, &w)| {
        let config: Vec<u32> = all
            .iter()
            .map(|&c| {
                let v = (idx % c as usize) as u32;
                idx /= c as usize;
                v
            })
            .collect();
        (config, w)
    });
    JointDistribution::normalized(inputs, Variable::new("Y", out), None, entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mutual_information_chain_rule(d in distributions()) {
        let p = d.n_inputs();
        let y = d.output_slot();
        let all: Vec<usize> = (0..p).collect();
        // I(X_1..X_p; Y) = Σ_i I(X_i; Y | X_1..X_{i-1})
        let total = cond_mutual_information(&d, &all, &[y], &[]).unwrap();
        let sum: f64 = (0..p)
            .map(|i| cond_mutual_information(&d, &[i], &[y], &all[..i]).unwrap())
            .sum();
        prop_assert!((total - sum).abs() < TOL);
        let h = entropy(&d, &[y]).unwrap() + entropy(&d, &all).unwrap() - entropy(&d, &[&all[..], &[y]].concat()).unwrap();
        prop_assert!((total - h).abs() < TOL);
    }

    #[test]
    fn cmi_nonnegative_and_symmetric(d in distributions(), pick in any::<u64>()) {
        let p = d.n_inputs();
        let y = d.output_slot();
        let x = (pick % p as u64) as usize;
        let b: Vec<usize> = (0..p).filter(|&i| i != x && (pick >> (8 + i)) & 1 == 1).collect();
        let a = cond_mutual_information(&d, &[x], &[y], &b).unwrap();
        let s = cond_mutual_information(&d, &[y], &[x], &b).unwrap();
        prop_assert!(a >= -TOL);
        prop_assert!((a - s).abs() < TOL);
    }

    #[test]
    fn oracle_importances_sum_to_mutual_information(d in distributions()) {
        let p = d.n_inputs();
        let report = asymptotic_mdi_report(&d, p).unwrap();
        let all: Vec<usize> = (0..p).collect();
        let mi = cond_mutual_information(&d, &all, &[d.output_slot()], &[]).unwrap();
        prop_assert!((report.total() - mi).abs() < TOL);
        for (m, row) in report.per_degree.as_ref().unwrap().iter().enumerate() {
            prop_assert!((row.iter().sum::<f64>() - report.scores[m]).abs() < TOL);
            prop_assert!(row.iter().all(|&v| v >= -TOL));
        }
    }

    #[test]
    fn zero_importance_iff_irrelevant(d in distributions()) {
        let report = asymptotic_mdi_report(&d, d.n_inputs()).unwrap();
        for m in 0..d.n_inputs() {
            let irrelevant = classify_relevance(&d, m).unwrap().label == Relevance::Irrelevant;
            prop_assert_eq!(report.scores[m] < 1e-12, irrelevant, "input {}", m);
        }
    }

    #[test]
    fn irrelevant_input_leaves_importances_unchanged(d in distributions(), card in 2u32..=3) {
        let p = d.n_inputs();
        let extended = d.with_independent_input(Variable::new("N", card)).unwrap();
        let before = asymptotic_mdi_report(&d, p).unwrap();
        let after = asymptotic_mdi_report(&extended, p + 1).unwrap();
        for m in 0..p {
            prop_assert!((before.scores[m] - after.scores[m]).abs() < 1e-10);
        }
        prop_assert!(after.scores[p].abs() < 1e-12);
    }

    #[test]
    fn forests_are_deterministic(d in distributions(), seed in any::<u64>()) {
        let data = d.sample(60, seed).unwrap();
        let config = ForestConfig::totally_randomized(20, seed);
        let a = mdi(&build_forest(&data, &config).unwrap(), &data);
        let b = mdi(&build_forest(&data, &config).unwrap(), &data);
        prop_assert_eq!(a.scores, b.scores);
    }
}
