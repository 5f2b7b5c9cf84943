mod common;

use common::{brute_summary, ids};
use latent_probe::stats::{battery, summarize, ScoreGrid};
use latent_probe::{Error, ScoreTable};
use proptest::prelude::*;
use rand::Rng;

fn random_table(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> ScoreTable {
    // quantized so exact zeros and ties show up
    let scores: Vec<f64> = (0..n)
        .map(|_| {
            if r.random_bool(0.3) {
                (r.random_range(-4i32..=4) as f64) / 100.0
            } else {
                r.random_range(-0.1..0.1)
            }
        })
        .collect();
    ScoreTable::from_scores("m", "a", &ids(n), &scores)
}

#[test]
fn summaries_match_brute_force_oracle() {
    let mut r = common::rng(21);
    for _ in 0..1000 {
        let n = r.random_range(1..200);
        let t = random_table(&mut r, n);
        let s = summarize(&t, 1).unwrap();
        let b = brute_summary(&t.scores());
        let pct = |c: usize| 100.0 * c as f64 / n as f64;
        assert_eq!(s.n_total, n);
        assert_eq!(s.pct_right, pct(b.right));
        assert_eq!(s.pct_left, pct(b.left));
        assert_eq!(s.pct_zero, pct(b.zero));
        assert!((s.sigma - b.sigma).abs() <= 1e-12);
    }
}

#[test]
fn k_equal_n_lists_every_image() {
    let mut r = common::rng(22);
    let t = random_table(&mut r, 40);
    let s = summarize(&t, 40).unwrap();
    let mut names: Vec<_> = s.top_right.iter().map(|x| x.0.clone()).collect();
    names.sort();
    assert_eq!(names, ids(40));
    assert!(matches!(summarize(&t, 41), Err(Error::InvalidArgument(_))));
}

#[test]
fn battery_requires_full_grid() {
    let mut grid = ScoreGrid::new(vec!["a".into(), "b".into()], vec!["x".into(), "y".into()]);
    for m in ["a", "b"] {
        grid.insert(ScoreTable::from_scores(m, "x", &ids(3), &[0.1, -0.2, 0.3]));
    }
    grid.insert(ScoreTable::from_scores(
        "a",
        "y",
        &ids(3),
        &[0.1, -0.2, 0.3],
    ));
    match battery(&grid, 1) {
        Err(Error::IncompleteGrid(cells)) => {
            assert_eq!(cells, [("b".to_string(), "y".to_string())])
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn published_mean_sigma_ordering() {
    let sigmas = [
        ("openai_clip", 0.024),
        ("openclip_laion", 0.044),
        ("siglip", 0.014),
    ];
    let models: Vec<String> = sigmas.iter().map(|s| s.0.to_string()).collect();
    let mut grid = ScoreGrid::new(models, vec!["x".into()]);
    for (m, sd) in sigmas {
        // symmetric +-sd has population std exactly sd
        let scores: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { sd } else { -sd }).collect();
        grid.insert(ScoreTable::from_scores(m, "x", &ids(10), &scores));
    }
    let b = battery(&grid, 3).unwrap();
    assert_eq!(
        b.stability_order,
        ["siglip", "openai_clip", "openclip_laion"]
    );
    for (m, sd) in sigmas {
        assert!((b.mean_sigma[m] - sd).abs() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn positive_rescaling_keeps_counts_and_scales_sigma(seed in any::<u64>(), c in 0.01f64..100.0) {
        let mut r = common::rng(seed);
        let t = random_table(&mut r, 60);
        let scaled: Vec<f64> = t.scores().iter().map(|s| s * c).collect();
        let u = ScoreTable::from_scores("m", "a", &ids(60), &scaled);
        let (s, v) = (summarize(&t, 5).unwrap(), summarize(&u, 5).unwrap());
        prop_assert_eq!(s.pct_right, v.pct_right);
        prop_assert_eq!(s.pct_left, v.pct_left);
        prop_assert_eq!(s.pct_zero, v.pct_zero);
        prop_assert!((v.sigma - c * s.sigma).abs() <= 1e-12 * c.max(1.0));
    }

    #[test]
    fn permuting_rows_changes_nothing(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let t = random_table(&mut r, 50);
        let mut rows = t.rows.clone();
        for i in (1..rows.len()).rev() {
            rows.swap(i, r.random_range(0..=i));
        }
        let u = ScoreTable { rows, ..t.clone() };
        let (s, v) = (summarize(&t, 7).unwrap(), summarize(&u, 7).unwrap());
        prop_assert_eq!(s.pct_right, v.pct_right);
        prop_assert_eq!(&s.top_right, &v.top_right);
        prop_assert_eq!(&s.top_left, &v.top_left);
        prop_assert!((s.sigma - v.sigma).abs() <= 1e-12);
    }

    #[test]
    fn pole_swap_exchanges_sides(seed in any::<u64>()) {
        let mut r = common::rng(seed);
        let t = random_table(&mut r, 50);
        let neg: Vec<f64> = t.scores().iter().map(|s| -s).collect();
        let u = ScoreTable::from_scores("m", "a", &ids(50), &neg);
        let (s, v) = (summarize(&t, 6).unwrap(), summarize(&u, 6).unwrap());
        prop_assert_eq!(s.pct_right, v.pct_left);
        prop_assert_eq!(s.pct_left, v.pct_right);
        prop_assert_eq!(s.sigma, v.sigma);
        let names = |l: &[(String, f64)]| l.iter().map(|x| x.0.clone()).collect::<Vec<_>>();
        prop_assert_eq!(names(&s.top_right), names(&v.top_left));
        prop_assert_eq!(names(&s.top_left), names(&v.top_right));
    }

    #[test]
    fn percentages_sum_to_100(seed in any::<u64>(), n in 1usize..300) {
        let mut r = common::rng(seed);
        let s = summarize(&random_table(&mut r, n), 1).unwrap();
        prop_assert!((s.pct_right + s.pct_left + s.pct_zero - 100.0).abs() < 1e-9);
    }
}
