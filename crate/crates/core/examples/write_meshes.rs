//! Writes the benchmark meshes as OBJ files in metres.
//!
//! Usage: `cargo run -p grasp-core --example write_meshes -- data/meshes`

use std::path::PathBuf;

use grasp_core::mesh::{write_obj, METERS_TO_MM};
use grasp_core::mesh::shapes;
use grasp_core::Vec3;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data/meshes".into()));
    std::fs::create_dir_all(&dir)?;
    let meshes = [
        ("cube", shapes::cuboid(Vec3::splat(20.0))),
        ("plate", shapes::plate(60.0, 40.0, 2.0)),
        ("l_bracket", shapes::l_bracket(50.0, 40.0, 5.0, 20.0)),
        ("cylinder", shapes::cylinder(12.0, 40.0, 32)),
    ];
    for (name, mesh) in &meshes {
        let path = dir.join(format!("{name}.obj"));
        write_obj(mesh, &path, METERS_TO_MM)?;
        println!("{}: {} faces", path.display(), mesh.faces().len());
    }
    Ok(())
}
