//! Speed of the simple random walk on F_k against the exact birth-death chain.

use monsterlab::harness::estimate_drift;
use monsterlab::hyperbolic::ActionOracle;
use monsterlab::word::{sample_srw, srw_length_distribution};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 200;
    println!("{:>3} {:>10} {:>10} {:>10}", "k", "MC speed", "exact", "1 - 1/k");
    for k in [2u16, 3, 4] {
        let est = estimate_drift(&ActionOracle::Tree { k }, k, n, 20_000, 7)?;
        let exact: f64 = srw_length_distribution(n, k).iter().enumerate().map(|(l, p)| l as f64 * p).sum::<f64>() / n as f64;
        println!("{k:>3} {:>10.5} {exact:>10.5} {:>10.5}", est.mean_speed, 1.0 - 1.0 / k as f64);
    }

    let path = sample_srw(12, 2, 1);
    println!("\none trajectory:");
    for (t, w) in path.iter().enumerate() {
        println!("  {t:>2} |w|={:<2} {w}", w.len());
    }
    Ok(())
}
