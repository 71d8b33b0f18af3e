//! Parse and execute a script, then print what it drew.

use cfsc::dxf::write_dxf;
use cfsc::script::{execute, parse, pretty_print};

const SCRIPT: &str = "\
use cad

main {
    # plate with a hole
    add_lwpolyline(1, (0, 0), (80, 0), (80, 50), (0, 50))
    add_circle((40, 25), 9)
    dim_linear((0, 0), (80, 0), -8)
    dim_radius((40, 25), 9)
    annotate_roughness((80, 25), 3.2)
}
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let src = std::env::args().nth(1).map(std::fs::read_to_string).transpose()?.unwrap_or_else(|| SCRIPT.into());
    let prog = parse(&src)?;
    println!("{}", pretty_print(&prog));
    let model = execute(&prog)?;
    for e in &model.entities {
        println!("entity     {e:?}");
    }
    for a in &model.annotations {
        println!("annotation {a:?}");
    }
    println!("{} bytes of DXF", write_dxf(&model).to_bytes().len());
    Ok(())
}
