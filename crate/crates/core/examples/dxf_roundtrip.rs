//! Write a model to DXF, read it back and compare canonical forms.

use cfsc::dxf::{read_dxf, write_dxf};
use cfsc::geometry::{canonicalize, Annotation, Entity, Point, SketchModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut m = SketchModel::new();
    m.push(Entity::line(Point::new(0.0, 0.0), Point::new(30.0, 0.0))?);
    m.push(Entity::arc(Point::new(30.0, 10.0), 10.0, 270.0, 90.0)?);
    m.push(Entity::circle(Point::new(12.5, 7.25), 3.125)?);
    m.annotate(Annotation::linear(Point::new(0.0, 0.0), Point::new(30.0, 0.0), -5.0)?);
    m.annotate(Annotation::roughness(Point::new(15.0, 0.0), 1.6)?);

    let doc = write_dxf(&m);
    let text = doc.to_text();
    println!("{}", text.lines().skip_while(|l| *l != "ENTITIES").take(24).collect::<Vec<_>>().join("\n"));

    let read = read_dxf(text.as_bytes())?;
    let same = canonicalize(&read.model, 1e-6)? == canonicalize(&m, 1e-6)?;
    println!("...\nround trip equal at 1e-6: {same}");
    Ok(())
}
