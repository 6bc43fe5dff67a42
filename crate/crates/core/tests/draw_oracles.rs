use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_lob::draws::{autocorrelation, default_taus, diffusion_and_hurst, draw_sizes, FlatPolicy};
use swarm_lob::Price;

/// Sizes from an explicit sign string: group the gaps by sign and sum each
/// group, after removing zeros (`Skip`), splitting on them (`Break`) or
/// keeping them as their own groups (`Zero`).
fn reference_sizes(ticks: &[Price], policy: FlatPolicy) -> Vec<u64> {
    let gaps: Vec<i64> = ticks.windows(2).map(|w| w[1] - w[0]).collect();
    let pieces: Vec<Vec<i64>> = match policy {
        FlatPolicy::Skip => vec![gaps.into_iter().filter(|&g| g != 0).collect()],
        FlatPolicy::Break => gaps.split(|&g| g == 0).map(|s| s.to_vec()).collect(),
        FlatPolicy::Zero => vec![gaps],
    };
    let mut out = Vec::new();
    for piece in pieces {
        let mut i = 0;
        while i < piece.len() {
            let sign = piece[i].signum();
            let mut sum = 0i64;
            while i < piece.len() && piece[i].signum() == sign {
                sum += piece[i];
                i += 1;
            }
            out.push(sum.unsigned_abs());
        }
    }
    out
}

#[test]
fn segmenter_matches_reference() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..2000 {
        let len = rng.gen_range(1..120);
        let mut p = 0;
        let ticks: Vec<Price> = (0..len)
            .map(|_| {
                p += rng.gen_range(-3..=3);
                p
            })
            .collect();
        for policy in [FlatPolicy::Zero, FlatPolicy::Skip, FlatPolicy::Break] {
            assert_eq!(draw_sizes(&ticks, policy), reference_sizes(&ticks, policy), "{policy:?} {ticks:?}");
        }
    }
}

#[test]
fn random_walk_hurst_is_one_half() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut p = 0;
    let walk: Vec<Price> = (0..1_000_000)
        .map(|_| {
            p += if rng.gen_bool(0.5) { 1 } else { -1 };
            p
        })
        .collect();
    let d = diffusion_and_hurst(&walk, &default_taus()).unwrap();
    assert!((0.48..=0.52).contains(&d.hurst), "H = {}", d.hurst);
    // sigma(1) of a fair ±1 walk is 1
    assert!((d.points[0].1 - 1.0).abs() < 1e-3);
}

#[test]
fn white_noise_autocorrelation_vanishes() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let noise: Vec<f64> = (0..200_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let rho = autocorrelation(&noise, 50).unwrap();
    // sd of each coefficient is about 1/sqrt(n) = 0.0022
    assert!(rho[1..].iter().all(|r| r.abs() < 0.01), "{rho:?}");
}
