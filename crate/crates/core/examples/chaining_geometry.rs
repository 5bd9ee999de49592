//! Gromov products, four-point delta and the chaining bound in the three oracle kinds.

use monsterlab::hyperbolic::{chain_stats, four_point_delta, ActionOracle, FiniteAction, Point};
use monsterlab::mc;
use monsterlab::word::{srw_trajectory, Word};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tree = ActionOracle::Tree { k: 2 };
    let traj = srw_trajectory(60, 2, &mut mc::single(3));
    let points: Vec<Point> = traj.iter().step_by(10).cloned().map(Point::Tree).collect();
    let stats = chain_stats(&tree, &points)?;
    println!("tree chain");
    println!("  segments {:?}", stats.segment_dists);
    println!("  products {:?}", stats.products);
    println!("  bound {} vs endpoint distance {}", stats.lower_bound, tree.dist(&points[0], points.last().unwrap())?);

    let c8 = ActionOracle::FiniteGraph(FiniteAction::rotation(8, 0, &[1, 3])?);
    let verts: Vec<Point> = (0..8).map(Point::Vertex).collect();
    println!("\nC8 rotations: four-point delta {}", four_point_delta(&verts, &c8)?);
    let w: Word = "a1 a1 a2".parse()?;
    println!("  {w} moves the basepoint to {:?}, displacement {}", c8.apply(&w)?, c8.displacement(&w)?);

    println!("\ntrivial: displacement of {w} is {}", ActionOracle::Trivial.displacement(&w)?);
    Ok(())
}
