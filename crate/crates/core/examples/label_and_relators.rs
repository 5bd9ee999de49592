//! Sample a symmetric labeling, push a path forward, and list the relators.

use monsterlab::labeling::{pushforward, relators, sample_labeling};
use monsterlab::word::format_letters;
use monsterlab::Graph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = Graph::petersen();
    let l = sample_labeling(&g, 2, 2, 42)?;
    for d in 0..6 {
        let dart = g.dart(d);
        println!("dart {d:>2}: {} -> {}  {}", dart.source, dart.target, format_letters(l.label(d)));
    }

    // around the outer pentagon and back
    let mut path = Vec::new();
    let mut v = 0;
    for _ in 0..5 {
        let d = *g.out_darts(v).iter().find(|&&d| g.dart(d).target == (v + 1) % 5).unwrap();
        path.push(d);
        v = (v + 1) % 5;
    }
    println!("\npentagon label: {}", pushforward(&g, &l, &path)?);
    let back: Vec<usize> = path.iter().rev().map(|&d| g.reverse(d)).collect();
    let there_and_back: Vec<usize> = path.iter().chain(&back).copied().collect();
    println!("there and back: {}", pushforward(&g, &l, &there_and_back)?);

    let p = relators(&g, &l)?;
    println!("\n{} relators (cycle rank {}):", p.relators.len(), p.cycle_rank);
    for r in &p.relators {
        println!("  {r}");
    }
    Ok(())
}
