//! Graph references used in config and action files.
//!
//! A reference is either a built-in family or a path to a graph file:
//!
//! ```text
//! petersen
//! complete:<n>      cycle:<n>      path:<n>      star:<leaves>
//! complete_bipartite:<a>:<b>
//! random_regular:<n>:<deg>:<seed>
//! random_bipartite_regular:<side>:<deg>:<seed>
//! <anything else>   graph file, relative to the referring file
//! ```

use std::path::Path;

use crate::graph::{random_bipartite_regular, random_regular, Graph, GraphError};

fn args<const N: usize>(reference: &str, rest: &[&str]) -> Result<[u64; N], GraphError> {
    let bad = || GraphError::Parse { line: 0, message: format!("bad graph reference {reference:?}") };
    if rest.len() != N {
        return Err(bad());
    }
    let mut out = [0u64; N];
    for (o, s) in out.iter_mut().zip(rest) {
        *o = s.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

pub fn resolve(reference: &str, base_dir: &Path) -> Result<Graph, GraphError> {
    let parts: Vec<&str> = reference.split(':').collect();
    let (head, rest) = (parts[0], &parts[1..]);
    match head {
        "petersen" if rest.is_empty() => Ok(Graph::petersen()),
        "complete" => args::<1>(reference, rest).map(|[n]| Graph::complete(n as usize)),
        "cycle" => args::<1>(reference, rest).map(|[n]| Graph::cycle(n as usize)),
        "path" => args::<1>(reference, rest).map(|[n]| Graph::path(n as usize)),
        "star" => args::<1>(reference, rest).map(|[n]| Graph::star(n as usize)),
        "complete_bipartite" => args::<2>(reference, rest).map(|[a, b]| Graph::complete_bipartite(a as usize, b as usize)),
        "random_regular" => {
            let [n, d, seed] = args::<3>(reference, rest)?;
            random_regular(n as usize, d as usize, seed)
        }
        "random_bipartite_regular" => {
            let [side, d, seed] = args::<3>(reference, rest)?;
            random_bipartite_regular(side as usize, d as usize, seed)
        }
        _ => Graph::load(base_dir.join(reference)),
    }
}
