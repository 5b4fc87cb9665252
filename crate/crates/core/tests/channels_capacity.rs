mod common;

use gamecap::capacity::{
    ba_point_to_point, cooperation_gap, gba_sum_capacity, mutual_information, GbaConfig,
    InputDistribution, ProductDistribution,
};
use gamecap::channels::{
    build_game_channel, closed_form_sum_capacity, conditional_output_entropy,
    is_weakly_symmetric, validate_game_channel, weakly_symmetric_capacity, Channel, ChannelMode,
    ChannelParams, TransitionMatrix, DEFAULT_CHECK_TOL,
};
use gamecap::games::{make_chsh, make_magic_square, make_parity, Game};
use gamecap::rng::StreamRng;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};

fn builtins() -> Vec<Game> {
    vec![
        make_chsh(),
        make_magic_square(),
        make_parity(3).unwrap(),
        make_parity(4).unwrap(),
    ]
}

fn game_channel(g: &Game, w: f64, l: f64, mode: ChannelMode) -> Channel {
    let p = ChannelParams::new(w, l, mode).unwrap();
    build_game_channel(g, &p, g.question_sizes()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn built_channels_validate(w in 0.0f64..=1.0, gap in 0.001f64..1.0, which in 0usize..4, global in any::<bool>()) {
        let l = w * (1.0 - gap);
        let g = &builtins()[which];
        let mode = if global { ChannelMode::Global } else { ChannelMode::PerReceiver };
        let ch = game_channel(g, w, l, mode);
        let report = validate_game_channel(&ch, g, DEFAULT_CHECK_TOL).unwrap();
        prop_assert!(report.strictness_margin >= 1e-9);
        prop_assert!(report.receivers.iter().all(|r| r.weakly_symmetric));
    }

    /// `H(Y|X=x)` equals the sum of the receivers' winning entropies.
    #[test]
    fn winning_rows_have_sum_entropy(eta in 0.0f64..0.49, which in 0usize..4) {
        let g = &builtins()[which];
        let ch = game_channel(g, 1.0 - eta, eta, ChannelMode::PerReceiver);
        let report = validate_game_channel(&ch, g, DEFAULT_CHECK_TOL).unwrap();
        let hw: f64 = report.h_w().iter().sum();
        for qi in 0..g.num_question_tuples() {
            let q = g.question_radix().decode(qi);
            for ai in 0..g.num_answer_tuples() {
                if !g.is_winning_flat(qi, ai) {
                    continue;
                }
                let a = g.answer_radix().decode(ai);
                let x: Vec<usize> = (0..q.len()).map(|i| ch.input_symbol(i, q[i], a[i])).collect();
                let h = conditional_output_entropy(&ch, &x).unwrap();
                prop_assert!((h - hw).abs() < 1e-10);
                let xi = ch.input_radix().encode(&x).unwrap();
                prop_assert!((common::entropy(ch.row(xi)) - hw).abs() < 1e-10);
            }
        }
    }

    /// Any joint input law, correlated or not, stays below the closed form.
    #[test]
    fn converse_bound_on_joint_inputs(seed in any::<u64>(), which in 0usize..4, eta in 0.0f64..0.49) {
        let g = &builtins()[which];
        let ch = game_channel(g, 1.0 - eta, eta, ChannelMode::PerReceiver);
        let bound = closed_form_sum_capacity(&validate_game_channel(&ch, g, DEFAULT_CHECK_TOL).unwrap());
        let mut rng = StreamRng::seed_from_u64(seed);
        let mut joint = common::dirichlet(&mut rng, ch.num_inputs());
        // Sparse laws concentrate on a few inputs.
        if rng.random_bool(0.5) {
            let keep = rng.random_range(1..=4);
            for (i, v) in joint.iter_mut().enumerate() {
                if i % (ch.num_inputs() / keep).max(1) != 0 { *v = 0.0; }
            }
            let s: f64 = joint.iter().sum();
            joint.iter_mut().for_each(|v| *v /= s);
        }
        let mi = mutual_information(&ch, &InputDistribution::Joint(joint.clone())).unwrap();
        prop_assert!(mi <= bound + 1e-9, "{} > {}", mi, bound);
        let oracle = common::mutual_information(ch.probs(), ch.num_outputs(), &joint);
        prop_assert!((mi - oracle).abs() < 1e-9);
    }

    #[test]
    fn weakly_symmetric_capacity_matches_ba(seed in any::<u64>()) {
        let mut rng = StreamRng::seed_from_u64(seed);
        let sub = common::random_weakly_symmetric(&mut rng);
        prop_assert!(is_weakly_symmetric(&sub, 1e-12));
        let closed = weakly_symmetric_capacity(&sub).unwrap();
        let rows: Vec<Vec<f64>> = sub.rows().map(<[f64]>::to_vec).collect();
        let (oracle, _) = common::blahut_arimoto(&rows, 5000);
        prop_assert!((closed - oracle).abs() < 1e-6, "{} vs {}", closed, oracle);
        let ba = ba_point_to_point(&sub, 1e-10, 100_000).unwrap();
        prop_assert!((closed - ba.value).abs() < 1e-6);
        let n = sub.inputs() as f64;
        prop_assert!(ba.argmax.factors()[0].iter().all(|p| (p - 1.0 / n).abs() < 1e-5));
    }

    /// Relabeling one transmitter's alphabet together with the channel's
    /// input axis leaves the mutual information unchanged.
    #[test]
    fn mutual_information_is_permutation_equivariant(seed in any::<u64>()) {
        let mut rng = StreamRng::seed_from_u64(seed);
        let sizes = [rng.random_range(2..4usize), rng.random_range(2..4usize)];
        let ny = rng.random_range(2..5usize);
        let probs = common::random_rows(&mut rng, sizes[0] * sizes[1], ny);
        let ch = Channel::new(&sizes, &[1, 1], &[ny], probs.clone()).unwrap();
        let f = vec![common::dirichlet(&mut rng, sizes[0]), common::dirichlet(&mut rng, sizes[1])];
        let mut perm: Vec<usize> = (0..sizes[1]).collect();
        perm.shuffle(&mut rng);
        let mut permuted = vec![0.0; probs.len()];
        for x1 in 0..sizes[0] {
            for x2 in 0..sizes[1] {
                let src = (x1 * sizes[1] + x2) * ny;
                let dst = (x1 * sizes[1] + perm[x2]) * ny;
                permuted[dst..dst + ny].copy_from_slice(&probs[src..src + ny]);
            }
        }
        let ch2 = Channel::new(&sizes, &[1, 1], &[ny], permuted).unwrap();
        let mut f2 = f.clone();
        for x2 in 0..sizes[1] {
            f2[1][perm[x2]] = f[1][x2];
        }
        let a = mutual_information(&ch, &InputDistribution::Product(ProductDistribution::new(f).unwrap())).unwrap();
        let b = mutual_information(&ch2, &InputDistribution::Product(ProductDistribution::new(f2).unwrap())).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn gba_is_monotone(seed in any::<u64>()) {
        let mut rng = StreamRng::seed_from_u64(seed);
        let k = rng.random_range(1..4usize);
        let sizes: Vec<usize> = (0..k).map(|_| rng.random_range(2..4)).collect();
        let ny = rng.random_range(2..6usize);
        let probs = common::random_rows(&mut rng, sizes.iter().product(), ny);
        let ch = Channel::new(&sizes, &vec![1; k], &[ny], probs).unwrap();
        let cfg = GbaConfig { num_starts: 4, rng_seed: seed, record_history: true, ..GbaConfig::default() };
        let r = gba_sum_capacity(&ch, &cfg).unwrap();
        for s in &r.starts {
            for w in s.history.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-12, "start {} decreased: {:?}", s.start, w);
            }
        }
    }

    #[test]
    fn gba_stays_below_closed_form(eta in 0.0f64..0.49, which in 0usize..4, seed in any::<u64>()) {
        let g = &builtins()[which];
        let ch = game_channel(g, 1.0 - eta, eta, ChannelMode::PerReceiver);
        let bound = closed_form_sum_capacity(&validate_game_channel(&ch, g, DEFAULT_CHECK_TOL).unwrap());
        let cfg = GbaConfig { num_starts: 3, rng_seed: seed, ..GbaConfig::default() };
        let r = gba_sum_capacity(&ch, &cfg).unwrap();
        prop_assert!(r.value <= bound + 1e-6);
    }
}

#[test]
fn gba_matches_grid_search() {
    let mut rng = StreamRng::seed_from_u64(2024);
    for case in 0..12 {
        let sizes = [rng.random_range(2..=3usize), rng.random_range(2..=3usize)];
        let ny = rng.random_range(2..=4usize);
        let probs = common::random_rows(&mut rng, sizes[0] * sizes[1], ny);
        let ch = Channel::new(&sizes, &[1, 1], &[ny], probs.clone()).unwrap();
        let cfg = GbaConfig {
            rng_seed: case,
            ..GbaConfig::default()
        };
        let gba = gba_sum_capacity(&ch, &cfg).unwrap().value;
        let grid = common::grid_search_two(&probs, ny, sizes, 0.02);
        // The grid underestimates the optimum slightly; GBA may not beat it by much.
        assert!(
            (gba - grid).abs() < 5e-3,
            "case {case} {sizes:?}: gba {gba} grid {grid}"
        );
        assert!(gba >= grid - 1e-9, "case {case}: gba {gba} below grid {grid}");
    }
}

#[test]
fn single_transmitter_reduces_to_ba() {
    let mut rng = StreamRng::seed_from_u64(5);
    for _ in 0..10 {
        let nx = rng.random_range(2..6usize);
        let ny = rng.random_range(2..6usize);
        let rows: Vec<Vec<f64>> = (0..nx).map(|_| common::dirichlet(&mut rng, ny)).collect();
        let sub = TransitionMatrix::from_rows(&rows).unwrap();
        let ch = Channel::point_to_point(&sub);
        let gba = gba_sum_capacity(&ch, &GbaConfig { tolerance: 1e-12, ..GbaConfig::default() })
            .unwrap()
            .value;
        let (oracle, _) = common::blahut_arimoto(&rows, 20_000);
        let ba = ba_point_to_point(&sub, 1e-10, 100_000).unwrap().value;
        assert!((gba - oracle).abs() < 1e-6, "{gba} vs {oracle}");
        assert!((ba - oracle).abs() < 1e-6, "{ba} vs {oracle}");
    }
}

#[test]
fn gba_is_deterministic() {
    let g = make_parity(3).unwrap();
    let ch = game_channel(&g, 0.9, 0.1, ChannelMode::PerReceiver);
    let cfg = GbaConfig {
        num_starts: 8,
        rng_seed: 77,
        record_history: true,
        ..GbaConfig::default()
    };
    let a = gba_sum_capacity(&ch, &cfg).unwrap();
    let b = gba_sum_capacity(&ch, &cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    let other = gba_sum_capacity(&ch, &GbaConfig { rng_seed: 78, ..cfg }).unwrap();
    assert_ne!(a.starts[0].history, other.starts[0].history);
}

#[test]
fn named_channel_values() {
    let chsh = make_chsh();
    // eta_w = 0.8: each winning factor is {0.9, 0.1}.
    let ch = game_channel(&chsh, 0.8, 0.2, ChannelMode::PerReceiver);
    let report = validate_game_channel(&ch, &chsh, DEFAULT_CHECK_TOL).unwrap();
    for h in report.h_w() {
        assert!((h - common::h2(0.1)).abs() < 1e-12);
    }
    assert!((report.max_winning_entropy - 2.0 * common::h2(0.1)).abs() < 1e-12);
    let closed = closed_form_sum_capacity(&report);
    assert!((closed - 2.0 * (1.0 - common::h2(0.1))).abs() < 1e-12);
    assert!((closed - 1.0620).abs() < 1e-4);

    // Losing input q=(1,1), a=(0,0): each bit relayed correctly with 0.2 + 0.8/2.
    let x = [ch.input_symbol(0, 1, 0), ch.input_symbol(1, 1, 0)];
    let row = ch.row(ch.input_radix().encode(&x).unwrap());
    let correct_first: f64 = row[2] + row[3];
    assert!((correct_first - 0.6).abs() < 1e-12);

    let ch = game_channel(&chsh, 0.9, 0.1, ChannelMode::PerReceiver);
    let report = validate_game_channel(&ch, &chsh, DEFAULT_CHECK_TOL).unwrap();
    for h in report.h_w() {
        assert!((h - 0.2864).abs() < 1e-4);
        assert!((h - common::h2(0.05)).abs() < 1e-12);
    }

    let bsc = TransitionMatrix::bsc(0.1).unwrap();
    assert!((weakly_symmetric_capacity(&bsc).unwrap() - (1.0 - common::h2(0.1))).abs() < 1e-12);
    let ba = ba_point_to_point(&bsc, 1e-10, 10_000).unwrap();
    assert!((ba.value - 0.5310).abs() < 1e-4);
    assert!((ba.value - (1.0 - common::h2(0.1))).abs() < 1e-6);

    // The gap shrinks to zero as the channel stops caring about the game.
    let near = game_channel(&chsh, 0.502, 0.498, ChannelMode::PerReceiver);
    let gap = cooperation_gap(&near, &chsh, &GbaConfig { num_starts: 5, ..GbaConfig::default() })
        .unwrap();
    assert!(gap.gap_bits < 2e-3, "{}", gap.gap_bits);
}
