use std::path::PathBuf;

use eans::analysis::{
    neg_weight_cdf, score_gap_report, substitution_histogram, NegativeGroup, ProbeSampler,
};
use eans::config::preset;
use eans::dataset::{load_dataset, KgDataset, Splits};
use eans::sampling::Strategy;
use eans::trainer::{train, TrainConfig, Trainer};

fn toy() -> KgDataset {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/toy");
    load_dataset(&dir, Splits::ALL).unwrap()
}

fn base() -> TrainConfig {
    preset("toy-transe").unwrap().train
}

fn short(strategy: Strategy) -> TrainConfig {
    TrainConfig {
        dim: 32,
        max_steps: 1500,
        eval_interval: 0,
        strategy,
        ..base()
    }
}

#[test]
fn untrained_gap_is_negligible() {
    // Corrupting the tail with the head itself scores ‖r‖, so at init the
    // negatives sit about 0.3% below the positives; nothing else separates them.
    let ds = toy();
    let cfg = base();
    let t = Trainer::new(&ds, &cfg).unwrap();
    let s = ProbeSampler::from_config(&cfg);
    let samplers = [
        s.with_strategy(Strategy::Uniform),
        s.with_strategy(Strategy::Eans),
    ];
    let rows = score_gap_report(&[(0, t.params())], &ds, &samplers, 1000).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.gap().abs() <= 0.01 * r.mean_pos, "{r:?}");
    }
    // Over a handful of batches the remaining bias is inside the noise.
    let few = score_gap_report(&[(0, t.params())], &ds, &samplers, 10).unwrap();
    for r in &few {
        assert!(r.gap().abs() <= 3.0 * r.gap_se(), "{r:?}");
    }
}

#[test]
fn gap_report_has_one_row_per_checkpoint_and_sampler() {
    let ds = toy();
    let cfg = base();
    let t = Trainer::new(&ds, &cfg).unwrap();
    let p = t.params();
    let s = ProbeSampler::from_config(&cfg);
    let rows =
        score_gap_report(&[(0, p), (1, p), (2, p)], &ds, std::slice::from_ref(&s), 5).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.step).collect::<Vec<_>>(),
        vec![0, 1, 2]
    );
    // Fresh batches per row from the same stream position: identical rows.
    assert_eq!(rows[0].mean_neg, rows[1].mean_neg);
}

#[test]
fn untrained_cdf_is_near_the_diagonal() {
    let ds = toy();
    // TransE's init scores spread enough that α = 1 already skews the
    // sorted weights, so it is probed at a low temperature.
    for (name, alpha) in [
        ("toy-distmult", 1.0),
        ("toy-complex", 1.0),
        ("toy-transe", 0.1),
    ] {
        let cfg = TrainConfig {
            negatives: 64,
            ..preset(name).unwrap().train
        };
        let t = Trainer::new(&ds, &cfg).unwrap();
        let s = ProbeSampler::from_config(&cfg);
        let cdf = neg_weight_cdf(t.params(), &ds, &s, alpha, 20).unwrap();
        assert_eq!(cdf.cumulative.len(), 64);
        assert!((cdf.top(32) - 0.5).abs() <= 0.05, "{name}: {}", cdf.top(32));
        assert!(cdf.cumulative.windows(2).all(|w| w[0] <= w[1]));
        assert!((cdf.top(64) - 1.0).abs() <= 1e-9);
    }
}

#[test]
fn histogram_partitions_every_sample() {
    let ds = toy();
    let cfg = base();
    let t = Trainer::new(&ds, &cfg).unwrap();
    let s = ProbeSampler::from_config(&cfg);
    let h = substitution_histogram(t.params(), &ds, &s, 7, 50).unwrap();
    assert_eq!(h.total(), 7 * cfg.batch_size * cfg.negatives);
    for g in NegativeGroup::ALL {
        assert_eq!(h.group(g).counts.iter().sum::<usize>(), h.group(g).count);
        assert_eq!(h.group(g).counts.len(), 50);
    }
    assert_eq!(h.edges.len(), 51);
}

#[test]
fn histogram_requires_trained_substitution() {
    let ds = toy();
    let cfg = TrainConfig {
        use_substitution: false,
        ..base()
    };
    let t = Trainer::new(&ds, &cfg).unwrap();
    let err = substitution_histogram(t.params(), &ds, &ProbeSampler::from_config(&cfg), 1, 10)
        .unwrap_err();
    assert!(err.to_string().contains("never trained"));
}

#[test]
fn trained_uniform_leaves_a_wider_gap_and_skewed_weights() {
    let ds = toy();
    let (uni, _) = train(&ds, &short(Strategy::Uniform)).unwrap();
    let (ea, _) = train(&ds, &short(Strategy::Eans)).unwrap();
    let s = ProbeSampler::from_config(&short(Strategy::Uniform));
    let gap_uni =
        score_gap_report(&[(1500, &uni)], &ds, std::slice::from_ref(&s), 200).unwrap()[0].gap();
    let es = s.with_strategy(Strategy::Eans);
    let gap_eans =
        score_gap_report(&[(1500, &ea)], &ds, std::slice::from_ref(&es), 200).unwrap()[0].gap();
    assert!(gap_uni > gap_eans, "uniform {gap_uni} vs eans {gap_eans}");
    let top = |p, s: &ProbeSampler| neg_weight_cdf(p, &ds, s, 1.0, 20).unwrap().top(4);
    let (tu, te) = (top(&uni, &s), top(&ea, &es));
    assert!(tu > te, "uniform {tu} vs eans {te}");
}
