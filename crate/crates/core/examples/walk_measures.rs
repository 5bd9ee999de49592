//! Lift distance of stationary walks, and word-length laws under mu^n and mu_bar^n.

use monsterlab::graph::{girth, random_regular};
use monsterlab::labeling::sample_labeling;
use monsterlab::mc;
use monsterlab::walks::{sample_mu_bar_with, sample_mu_with, sample_walk};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = random_regular(500, 3, 3)?;
    println!("random cubic graph, 500 vertices, girth {:?}", girth(&g));

    let t = sample_walk(&g, 20, 1)?;
    println!("lift profile: {:?}", t.lifted_distance_profile);

    let (n, j, k, trials) = (6, 2, 2, 50_000);
    let l = sample_labeling(&g, j, k, 1)?;
    let mut rng = mc::single(2);
    let mut mu = vec![0u64; n * j + 1];
    let mut mu_bar = vec![0u64; n * j + 1];
    for _ in 0..trials {
        mu[sample_mu_with(&g, &l, n, &mut rng)?.len()] += 1;
        mu_bar[sample_mu_bar_with(&g, n, j, k, &mut rng)?.len()] += 1;
    }
    println!("\n|w| {:>8} {:>8}", "mu", "mu_bar");
    for len in 0..=n * j {
        println!("{len:>3} {:>8.4} {:>8.4}", mu[len] as f64 / trials as f64, mu_bar[len] as f64 / trials as f64);
    }
    Ok(())
}
