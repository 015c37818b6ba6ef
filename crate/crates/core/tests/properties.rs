mod common;

use std::collections::BTreeSet;

use common::oracles::{bits_of, brute_force, direct_energy, random_problem};
use proptest::prelude::*;
use qafs::dataset::{
    filter_columns, generate_friedman1, ordinal_encode, split, Dataset, FeatureMask, SplitPlan,
};
use qafs::evaluation::{
    run_experiment, subset_accuracy, DataSource, ExperimentConfig, FriedmanSource,
};
use qafs::metrics::{distance, gmic, mic, pcc, MetricKind, DEFAULT_GMIC_P, DEFAULT_GRID_EXPONENT};
use qafs::models::{mae, ModelKind};
use qafs::qubo::{build_q, energy, expand_penalized, QuboProblem};
use qafs::samplers::{exhaustive_solve, simulated_anneal, AnnealSchedule, SamplerConfig};
use qafs::selection::{greedy_ranked_select, SelectorKind};

fn short_schedule() -> AnnealSchedule {
    AnnealSchedule {
        sweeps: 200,
        ..AnnealSchedule::default()
    }
}

fn column(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0..100.0f64, n)
}

fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (4usize..60).prop_flat_map(|n| (column(n), column(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn noiseless_friedman_reproduces_target(n in 1usize..60, m in 5usize..12, seed in any::<u64>()) {
        let d = generate_friedman1(n, m, 0.0, seed).unwrap();
        for i in 0..n {
            let x = d.row(i);
            let expect = 10.0 * (std::f64::consts::PI * x[0] * x[1]).sin()
                + 20.0 * (x[2] - 0.5) * (x[2] - 0.5)
                + 10.0 * x[3]
                + 5.0 * x[4];
            prop_assert!((d.target()[i] - expect).abs() <= 1e-9);
            prop_assert!(x.iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn identity_filter_is_idempotent(n in 2usize..30, m in 5usize..10, seed in any::<u64>(), bits in prop::collection::vec(any::<bool>(), 10)) {
        let d = generate_friedman1(n, m, 1.0, seed).unwrap();
        let mut bits = bits[..m].to_vec();
        bits[0] = true;
        let once = filter_columns(&d, &FeatureMask::from_bits(bits)).unwrap();
        let twice = filter_columns(&once, &FeatureMask::full(once.n_features())).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn splits_partition_rows(n in 2usize..80, fraction in 0.05f64..0.95, repeats in 1usize..5, seed in any::<u64>()) {
        let d = generate_friedman1(n, 5, 1.0, 1).unwrap();
        let plan = SplitPlan { train_fraction: fraction, n_repeats: repeats, seed };
        match split(&d, &plan) {
            Ok(splits) => {
                prop_assert_eq!(splits.len(), repeats);
                for s in splits {
                    let train: BTreeSet<usize> = s.train_rows.iter().copied().collect();
                    let test: BTreeSet<usize> = s.test_rows.iter().copied().collect();
                    prop_assert_eq!(train.len(), s.train_rows.len());
                    prop_assert_eq!(test.len(), s.test_rows.len());
                    prop_assert!(train.is_disjoint(&test));
                    prop_assert_eq!(train.len() + test.len(), n);
                    prop_assert_eq!(s.train.n_rows(), train.len());
                }
            }
            Err(_) => {
                let n_train = (fraction * n as f64).floor() as usize;
                prop_assert!(n_train == 0 || n_train >= n);
            }
        }
    }

    #[test]
    fn ordinal_codes_count_distinct_labels(labels in prop::collection::vec("[a-d]{1,2}", 0..40)) {
        let codes = ordinal_encode(&labels);
        let distinct: BTreeSet<&String> = labels.iter().collect();
        let code_set: BTreeSet<u64> = codes.iter().map(|c| *c as u64).collect();
        prop_assert_eq!(code_set.len(), distinct.len());
        prop_assert!(codes.iter().all(|&c| c < distinct.len() as f64));
    }

    #[test]
    fn metrics_are_symmetric((x, y) in pair()) {
        for metric in [MetricKind::Pcc, MetricKind::mi(), MetricKind::mic(), MetricKind::gmic()] {
            let a = distance(&metric, &x, &y).unwrap();
            let b = distance(&metric, &y, &x).unwrap();
            prop_assert!((a - b).abs() < 1e-9, "{}: {} vs {}", metric, a, b);
        }
    }

    #[test]
    fn pcc_is_affine_equivariant((x, y) in pair(), a in prop_oneof![-50.0..-0.01f64, 0.01..50.0f64], b in -100.0..100.0f64) {
        let base = pcc(&x, &y).unwrap();
        prop_assert!((-1.0..=1.0).contains(&base));
        let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
        let moved = pcc(&ax, &y).unwrap();
        // degenerate spreads collapse to zero on both sides
        prop_assert!((moved - a.signum() * base).abs() < 1e-9, "{} vs {}", moved, base);
    }

    #[test]
    fn mic_family_in_unit_interval((x, y) in pair()) {
        let m = mic(&x, &y, DEFAULT_GRID_EXPONENT).unwrap();
        let g = gmic(&x, &y, DEFAULT_GMIC_P, DEFAULT_GRID_EXPONENT).unwrap();
        prop_assert!((0.0..=1.0).contains(&m));
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn expanded_energy_identity(m in 1usize..=10, alpha in 0.01f64..2000.0, lambda in prop_oneof![Just(0.0), 0.0..1e4f64], seed in any::<u64>(), kk in 0usize..10) {
        let k = 1 + kk % m;
        let p = random_problem(m, alpha, lambda, k, seed);
        let expanded = expand_penalized(&p);
        let rows = p.q.rows();
        for code in 0..1u64 << m {
            let bits = bits_of(code, m);
            let e = energy(&p, &FeatureMask::from_bits(bits.clone())).unwrap();
            let direct = direct_energy(&rows, alpha, lambda, k, &bits);
            let tol = 1e-9 * (1.0 + e.abs());
            prop_assert!((expanded.energy(&bits) - e).abs() <= tol);
            prop_assert!((direct - e).abs() <= tol);
        }
        prop_assert!((expanded.offset - lambda * (k * k) as f64).abs() <= 1e-9 * (1.0 + expanded.offset));
    }

    #[test]
    fn stiff_penalty_enforces_cardinality(m in 2usize..=10, alpha in 0.1f64..100.0, seed in any::<u64>(), kk in 0usize..10) {
        let k = 1 + kk % m;
        let p0 = random_problem(m, alpha, 0.0, k, seed);
        let total: f64 = p0.q.rows().iter().flatten().map(|v| v.abs()).sum();
        let p = QuboProblem::new(p0.q.clone(), alpha, alpha * total + 1.0, k).unwrap();
        let (_, minimizers) = brute_force(&p, 0.0);
        for b in minimizers {
            prop_assert_eq!(b.iter().filter(|&&x| x).count(), k);
        }
    }

    #[test]
    fn pcc_q_is_affine_invariant(seed in 0u64..1000, j in 0usize..6, a in prop_oneof![-20.0..-0.1f64, 0.1..20.0f64], b in -10.0..10.0f64) {
        let d = generate_friedman1(40, 6, 1.0, seed).unwrap();
        let mut cols = d.columns().to_vec();
        for v in &mut cols[j] {
            *v = a * *v + b;
        }
        let moved = Dataset::from_columns(cols, d.target().to_vec()).unwrap();
        let q1 = build_q(&d, &MetricKind::Pcc).unwrap();
        let q2 = build_q(&moved, &MetricKind::Pcc).unwrap();
        for (r1, r2) in q1.rows().iter().zip(q2.rows()) {
            for (u, v) in r1.iter().zip(r2) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn sampler_energies_and_oracle_dominance(m in 2usize..=12, alpha in prop_oneof![Just(1.0), Just(1000.0)], lambda in prop_oneof![Just(0.0), Just(10.0), Just(1e4)], seed in any::<u64>(), kk in 0usize..12) {
        let k = 1 + kk % m;
        let p = random_problem(m, alpha, lambda, k, seed);
        let sa = simulated_anneal(&p, 16, &short_schedule(), seed).unwrap();
        let ex = exhaustive_solve(&p).unwrap();
        for s in sa.samples.iter().chain(&ex.samples) {
            let e = energy(&p, &s.mask).unwrap();
            prop_assert!((s.energy - e).abs() <= 1e-9 * (1.0 + e.abs()));
        }
        prop_assert!(ex.best_energy().unwrap() <= sa.best_energy().unwrap() + 1e-9 * (1.0 + sa.best_energy().unwrap().abs()));
        prop_assert_eq!(sa.samples.iter().map(|s| s.occurrences).sum::<usize>(), 16);
    }

    #[test]
    fn annealing_is_reproducible_and_monotone_in_shots(m in 2usize..=20, seed in any::<u64>(), shots in 1usize..12) {
        let p = random_problem(m, 1000.0, 10.0, (m / 2).max(1), seed);
        let a = simulated_anneal(&p, shots, &short_schedule(), seed).unwrap();
        let b = simulated_anneal(&p, shots, &short_schedule(), seed).unwrap();
        prop_assert_eq!(&a.samples, &b.samples);
        let doubled = simulated_anneal(&p, 2 * shots, &short_schedule(), seed).unwrap();
        prop_assert!(doubled.best_energy().unwrap() <= a.best_energy().unwrap());
        // the first `shots` reads of the longer run are the shorter run
        for s in &a.samples {
            let twin = doubled.samples.iter().find(|t| t.mask == s.mask);
            prop_assert!(twin.is_some_and(|t| t.occurrences >= s.occurrences));
        }
    }

    #[test]
    fn mae_is_nonnegative_and_zero_only_on_equality(a in prop::collection::vec(-1e3..1e3f64, 1..30), shift in prop::collection::vec(-1.0..1.0f64, 30)) {
        prop_assert_eq!(mae(&a, &a).unwrap(), 0.0);
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let v = mae(&a, &b).unwrap();
        prop_assert!(v >= 0.0);
        prop_assert_eq!(v == 0.0, a == b);
    }

    #[test]
    fn greedy_size_rule(m in 5usize..20, fraction in 0.001f64..=1.0, seed in 0u64..50) {
        let d = generate_friedman1(30, m, 1.0, seed).unwrap();
        let k = greedy_ranked_select(&d, fraction).unwrap().mask.k();
        prop_assert_eq!(k, ((fraction * m as f64).floor() as usize).max(1));
    }

    #[test]
    fn subset_accuracy_bounds(sel in prop::collection::btree_set(0usize..40, 0..40), opt in prop::collection::btree_set(0usize..40, 1..10)) {
        let sel: Vec<usize> = sel.into_iter().collect();
        let opt: Vec<usize> = opt.into_iter().collect();
        let v = subset_accuracy(&sel, &opt).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(subset_accuracy(&opt, &opt).unwrap(), 1.0);
    }
}

fn small_config(
    selectors: Vec<SelectorKind>,
    metrics: Vec<MetricKind>,
    models: Vec<ModelKind>,
) -> ExperimentConfig {
    ExperimentConfig {
        data: DataSource::Friedman(FriedmanSource {
            samples: 50,
            features: 8,
            noise: 1.0,
        }),
        metrics,
        models,
        selectors,
        repeats: 2,
        bootstrap: 2,
        sampler: SamplerConfig {
            shots: 10,
            schedule: short_schedule(),
            ..SamplerConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

#[test]
fn experiment_row_count_and_recorded_mae() {
    use SelectorKind::*;
    let cases = [
        (vec![Qubo, All], vec![MetricKind::Pcc], vec![ModelKind::Lr]),
        (
            vec![Qubo, Greedy, Rfe, All],
            vec![MetricKind::Pcc, MetricKind::mic()],
            vec![ModelKind::Lr, ModelKind::Gbr],
        ),
        (
            vec![Greedy],
            vec![MetricKind::Pcc, MetricKind::mi()],
            vec![ModelKind::Gbr],
        ),
    ];
    for (selectors, metrics, models) in cases {
        let config = small_config(selectors.clone(), metrics.clone(), models.clone());
        let report = run_experiment(&config).unwrap();
        let per_model: usize = selectors
            .iter()
            .map(|s| if *s == Qubo { metrics.len() } else { 1 })
            .sum();
        assert_eq!(
            report.rows.len() + report.failures.len(),
            per_model * models.len()
        );
        assert!(report.failures.is_empty(), "{:?}", report.failures);
        // round-trip through JSON, then recompute every MAE from stored predictions
        let json = serde_json::to_string(&report).unwrap();
        let back: qafs::evaluation::ExperimentReport = serde_json::from_str(&json).unwrap();
        for row in &back.rows {
            assert_eq!(row.repeats.len(), 2);
            let mut sum = 0.0;
            for rep in &row.repeats {
                let recomputed = mae(&rep.predictions, &rep.targets).unwrap();
                assert!((recomputed - rep.mae).abs() < 1e-12, "{}", row.label);
                sum += recomputed;
            }
            assert!((sum / 2.0 - row.mae_mean).abs() < 1e-12, "{}", row.label);
        }
    }
}
