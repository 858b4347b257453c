//! Exact small-instance oracles and Monte Carlo checks against them.

use std::collections::HashMap;

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rumor_core::config_model::{
    count_matchings, expected_stats, for_each_perfect_matching, matching_stats, project, sample_matching,
    sample_simple_regular, DEFAULT_MAX_ATTEMPTS,
};
use rumor_core::push::{run_incremental, run_static};
use rumor_core::{fixtures, Graph, Vertex};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn chi_square_pvalue(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    1.0 - ChiSquared::new((counts.len() - 1) as f64).unwrap().cdf(stat)
}

#[test]
fn matching_sampler_is_uniform() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in [4usize, 6, 8] {
        let classes = count_matchings(k).unwrap() as usize;
        let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
        for _ in 0..classes * 400 {
            let m = sample_matching(k, &mut rng).unwrap();
            *counts.entry(m.partners().to_vec()).or_default() += 1;
        }
        assert_eq!(counts.len(), classes);
        let p = chi_square_pvalue(&counts.into_values().collect::<Vec<_>>());
        assert!(p > 1e-3, "k = {k}, p = {p}");
    }
}

#[test]
fn simple_sampler_is_uniform_over_labeled_cubic_graphs() {
    // 70 labeled 3-regular graphs on 6 vertices: 60 prisms and 10 copies of K_{3,3}
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut counts: HashMap<Vec<Vertex>, u64> = HashMap::new();
    for _ in 0..70 * 300 {
        let s = sample_simple_regular(6, 3, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        *counts.entry(s.graph.edge_ends().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 70);
    let p = chi_square_pvalue(&counts.into_values().collect::<Vec<_>>());
    assert!(p > 1e-3, "p = {p}");
}

#[test]
fn simple_acceptance_rate_for_cubic_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut accepted, mut attempts) = (0u32, 0u32);
    while attempts < 2000 {
        let s = sample_simple_regular(1000, 3, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap();
        accepted += 1;
        attempts += s.attempts;
    }
    let rate = accepted as f64 / attempts as f64;
    assert!((rate - (-2.0f64).exp()).abs() < 0.02, "rate {rate}");
}

#[test]
fn quartic_acceptance_rate_is_stable_in_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut rate = |n: usize| {
        let (mut accepted, mut attempts) = (0u32, 0u32);
        while attempts < 40_000 {
            attempts += sample_simple_regular(n, 4, &mut rng, DEFAULT_MAX_ATTEMPTS).unwrap().attempts;
            accepted += 1;
        }
        accepted as f64 / attempts as f64
    };
    let rates = [rate(500), rate(1000), rate(2000)];
    let (lo, hi) = rates.iter().fold((f64::MAX, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    assert!(lo > 0.0 && hi / lo < 1.2, "{rates:?}");
}

/// Exact expectations by enumeration, in the layout `C` clones first, then
/// `A`, then `B`.
#[test]
fn enumeration_matches_closed_forms() {
    let mut instances = 0;
    for d in 1..=10usize {
        for c in 0..=10 / d {
            for a in 0..=10 - d * c {
                for b in 0..=10 - d * c - a {
                    let k = a + b + d * c;
                    if k < 2 || k % 2 == 1 {
                        continue;
                    }
                    let cs: Vec<Vertex> = (0..c as Vertex).collect();
                    let a_clones: Vec<u32> = (d * c..d * c + a).map(|x| x as u32).collect();
                    let b_clones: Vec<u32> = (d * c + a..k).map(|x| x as u32).collect();
                    let (mut aa, mut ab, mut ac, mut q, mut count) = (0u64, 0u64, 0u64, 0u64, 0u64);
                    let mut h = vec![0u64; d + 1];
                    for_each_perfect_matching(k, |m| {
                        let s = matching_stats(m, &a_clones, &b_clones, &cs, d).unwrap();
                        aa += s.e_aa;
                        ab += s.e_ab;
                        ac += s.e_ac;
                        q += s.q;
                        h.iter_mut().zip(&s.h).for_each(|(x, y)| *x += y);
                        count += 1;
                    })
                    .unwrap();
                    let e = expected_stats(a, b, c, d).unwrap();
                    assert_eq!(Ratio::new(aa, count), e.e_aa, "e_AA at a={a} b={b} c={c} d={d}");
                    assert_eq!(Ratio::new(ab, count), e.e_ab, "e_AB at a={a} b={b} c={c} d={d}");
                    assert_eq!(Ratio::new(ac, count), e.e_ac, "e_AC at a={a} b={b} c={c} d={d}");
                    if let Some(upper) = e.q_upper {
                        assert!(q as f64 / count as f64 <= upper + 1e-12);
                    }
                    assert_eq!(h.iter().sum::<u64>(), c as u64 * count);
                    instances += 1;
                }
            }
        }
    }
    assert!(instances > 50);
}

#[test]
fn petersen_layers_and_small_projection() {
    let g = fixtures::petersen();
    let layers = g.bfs_layers(0).unwrap();
    assert_eq!(layers.sizes(), &[1, 3, 6]);
    assert!(layers.is_tree_up_to(&g, 1));
    // girth 5: the radius-2 ball closes 5-cycles
    assert!(!layers.is_tree_up_to(&g, 2));

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = sample_matching(12, &mut rng).unwrap();
    let g = project(&m, 4, 3).unwrap();
    assert_eq!(g.edge_count(), 6);
}

/// Exact law of `T` for push on `K_4` from the number of informed vertices.
fn k4_broadcast_law(max_t: usize) -> Vec<f64> {
    // transition[k][j]: probability to go from k to j informed vertices
    let mut transition = [[0.0f64; 5]; 5];
    for k in 1..4usize {
        let choices = 3usize.pow(k as u32);
        for code in 0..choices {
            let mut informed = [false; 4];
            informed[..k].iter_mut().for_each(|x| *x = true);
            let mut c = code;
            for v in 0..k {
                let pick = c % 3;
                c /= 3;
                let target = (0..4).filter(|&u| u != v).nth(pick).unwrap();
                informed[target] = true;
            }
            let j = informed.iter().filter(|&&x| x).count();
            transition[k][j] += 1.0 / choices as f64;
        }
    }
    let mut state = [0.0, 1.0, 0.0, 0.0, 0.0];
    let mut law = vec![0.0; max_t + 1];
    for slot in law.iter_mut().skip(1) {
        let mut next = [0.0; 5];
        for k in 1..4 {
            for j in k..5 {
                next[j] += state[k] * transition[k][j];
            }
        }
        *slot = next[4];
        next[4] = 0.0;
        state = next;
    }
    law
}

fn empirical_law(samples: &[u32], max_t: usize) -> Vec<f64> {
    let mut law = vec![0.0; max_t + 1];
    for &t in samples {
        law[(t as usize).min(max_t)] += 1.0 / samples.len() as f64;
    }
    law
}

fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
}

#[test]
fn static_k4_matches_exact_law() {
    let exact = k4_broadcast_law(40);
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let g = fixtures::complete(4);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples: Vec<u32> =
        (0..200_000).map(|_| run_static(&g, 0, &mut rng).unwrap().broadcast_time.unwrap()).collect();
    let tv = total_variation(&exact, &empirical_law(&samples, 40));
    assert!(tv < 0.01, "tv {tv}");
}

#[test]
fn incremental_conditioned_on_k4_matches_static() {
    let k4 = fixtures::complete(4);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut samples = Vec::new();
    while samples.len() < 100_000 {
        let (tr, g): (_, Graph) = run_incremental(4, 3, &mut rng).unwrap();
        if g.is_simple() {
            assert_eq!(g, k4);
            samples.push(tr.broadcast_time.unwrap());
        }
    }
    let tv = total_variation(&k4_broadcast_law(40), &empirical_law(&samples, 40));
    assert!(tv < 0.02, "tv {tv}");
}
