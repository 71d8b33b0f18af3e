//! Chamfer distance between two sampled drawings.

use cfsc::dxf::sample_points;
use cfsc::geometry::{Entity, Point, SketchModel};
use cfsc::metrics::{chamfer_distance, chamfer_distance_brute_force, normalized_chamfer};

fn square(side: f64) -> Result<SketchModel, Box<dyn std::error::Error>> {
    let p = |x, y| Point::new(x, y);
    let mut m = SketchModel::new();
    m.push(Entity::polyline(vec![p(0.0, 0.0), p(side, 0.0), p(side, side), p(0.0, side)], true)?);
    Ok(m)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = sample_points(&square(10.0)?, 2048, 1)?;
    let b = sample_points(&square(11.0)?, 2048, 1)?;
    println!("cd (kd-tree)     {:.6}", chamfer_distance(&a.points, &b.points)?);
    println!("cd (brute force) {:.6}", chamfer_distance_brute_force(&a.points, &b.points)?);
    println!("normalized       {:.6}", normalized_chamfer(&a, &b)?);
    println!("self             {:.6}", chamfer_distance(&a.points, &a.points)?);
    Ok(())
}
