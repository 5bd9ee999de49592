//! Event-level comparison mu^n(A) >= lambda mu_bar^n(A) over several labelings.

use monsterlab::graph::{girth, random_regular};
use monsterlab::labeling::sample_labeling;
use monsterlab::walks::{comparison_test, parse_events};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = (0..)
        .map(|s| random_regular(30, 3, s))
        .find(|g| g.as_ref().map_or(true, |g| girth(g).is_some_and(|x| x >= 6)))
        .unwrap()?;
    let events = parse_events("len_ge 1,len_ge 2,len_ge 3")?;
    let mut all_pass = 0;
    for seed in 0..10 {
        let l = sample_labeling(&g, 1, 2, seed)?;
        let rows = comparison_test(&g, &l, 0.5, &events, 4, 20_000, seed)?;
        all_pass += usize::from(rows.iter().all(|r| r.pass));
        if seed == 0 {
            println!("{:<10} {:>2} {:>8} {:>8} {:>8} pass", "event", "n", "mu", "mu_bar", "margin");
            for r in &rows {
                println!("{:<10} {:>2} {:>8.4} {:>8.4} {:>8.4} {}", r.event, r.n, r.mu_hat, r.mu_bar_hat, r.margin, r.pass);
            }
        }
    }
    println!("\nlabelings with every row passing: {all_pass}/10");
    Ok(())
}
