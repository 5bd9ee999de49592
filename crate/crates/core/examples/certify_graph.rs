//! Certify a few graphs against the degree and diameter/girth hypotheses.
//!
//!     cargo run --example certify_graph [-- <graph-ref> <d> <C>]

use std::path::Path;

use monsterlab::graph::{check_admissible, random_regular};
use monsterlab::graph_ref;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let [reference, d, c] = args.as_slice() {
        let g = graph_ref::resolve(reference, Path::new("."))?;
        println!("{}", serde_json::to_string_pretty(&check_admissible(&g, d.parse()?, c.parse()?)?)?);
        return Ok(());
    }

    println!("{:<24} {:>5} {:>5} {:>9} {:>10}", "graph", "girth", "diam", "lambda2", "admissible");
    let named = [
        ("petersen", monsterlab::Graph::petersen()),
        ("K4", monsterlab::Graph::complete(4)),
        ("C6", monsterlab::Graph::cycle(6)),
        ("random cubic n=200", random_regular(200, 3, 1)?),
        ("random cubic n=2000", random_regular(2000, 3, 1)?),
    ];
    for (name, g) in named {
        let cert = check_admissible(&g, 3, 2.0)?;
        let girth = cert.girth.map_or("inf".to_string(), |x| x.to_string());
        println!("{name:<24} {girth:>5} {:>5} {:>9.5} {:>10}", cert.diameter, cert.lambda2, cert.admissible);
    }
    Ok(())
}
