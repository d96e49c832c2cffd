use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Vec3;
use crate::mesh::TriMesh;
use crate::scalar::Real;

/// Mesh files are stored in metres; everything downstream works in millimetres.
pub const METERS_TO_MM: f64 = 1000.0;

/// Loads an OBJ or STL (ASCII or binary) file, converting metres to millimetres.
pub fn load_mesh<T: Real>(path: impl AsRef<Path>) -> Result<TriMesh<T>> {
    load_mesh_scaled(path, METERS_TO_MM)
}

/// Loads a mesh and multiplies every coordinate by `scale`.
pub fn load_mesh_scaled<T: Real>(path: impl AsRef<Path>, scale: f64) -> Result<TriMesh<T>> {
    let path = path.as_ref();
    if !path.is_file() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let (positions, faces) = match ext.as_deref() {
        Some("obj") => read_obj(path)?,
        Some("stl") => read_stl(path)?,
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    let vertices = positions
        .into_iter()
        .map(|p| Vec3::from_f64([p[0] * scale, p[1] * scale, p[2] * scale]))
        .collect();
    TriMesh::new(vertices, faces)
}

fn parse_error(path: &Path, message: impl ToString) -> Error {
    Error::Parse { path: path.to_path_buf(), message: message.to_string() }
}

type RawMesh = (Vec<[f64; 3]>, Vec<[u32; 3]>);

fn read_obj(path: &Path) -> Result<RawMesh> {
    let options = tobj::LoadOptions { triangulate: true, single_index: true, ..Default::default() };
    let (models, _) = tobj::load_obj(path, &options).map_err(|e| parse_error(path, e))?;
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for model in models {
        let m = model.mesh;
        if m.positions.len() % 3 != 0 || m.indices.len() % 3 != 0 {
            return Err(parse_error(path, "ragged position or index arrays"));
        }
        let base = positions.len() as u32;
        positions.extend(m.positions.chunks_exact(3).map(|c| [c[0], c[1], c[2]]));
        let count = positions.len() as u32;
        for tri in m.indices.chunks_exact(3) {
            let f = [base + tri[0], base + tri[1], base + tri[2]];
            if f.iter().any(|&i| i >= count) {
                return Err(parse_error(path, "face references a missing vertex"));
            }
            faces.push(f);
        }
    }
    if positions.iter().flatten().any(|c| !c.is_finite()) {
        return Err(parse_error(path, "non-finite vertex coordinate"));
    }
    Ok((positions, faces))
}

fn read_stl(path: &Path) -> Result<RawMesh> {
    let mut file = File::open(path).map_err(|e| parse_error(path, e))?;
    let mesh = stl_io::read_stl(&mut file).map_err(|e| parse_error(path, e))?;
    let positions: Vec<[f64; 3]> = mesh
        .vertices
        .iter()
        .map(|v| [v[0] as f64, v[1] as f64, v[2] as f64])
        .collect();
    if positions.iter().flatten().any(|c| !c.is_finite()) {
        return Err(parse_error(path, "non-finite vertex coordinate"));
    }
    let faces = mesh
        .faces
        .iter()
        .map(|f| [f.vertices[0] as u32, f.vertices[1] as u32, f.vertices[2] as u32])
        .collect();
    Ok((positions, faces))
}

/// Writes a Wavefront OBJ, dividing coordinates by `scale` (use [`METERS_TO_MM`] to write metres).
pub fn write_obj<T: Real>(mesh: &TriMesh<T>, path: impl AsRef<Path>, scale: f64) -> std::io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in mesh.vertices() {
        let [x, y, z] = v.to_f64();
        writeln!(w, "v {} {} {}", x / scale, y / scale, z / scale)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::shapes;

    #[test]
    fn obj_round_trip_in_metres() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.obj");
        let cube: TriMesh<f64> = shapes::cuboid(Vec3::splat(20.0));
        write_obj(&cube, &path, METERS_TO_MM).unwrap();
        let back: TriMesh<f64> = load_mesh(&path).unwrap();
        assert_eq!(back.faces().len(), 12);
        assert!((back.total_area() - 2400.0).abs() < 1e-6);
        let raw: TriMesh<f64> = load_mesh_scaled(&path, 1.0).unwrap();
        assert!((raw.total_area() - 2400e-6).abs() < 1e-12);
    }

    #[test]
    fn degenerate_triangle_in_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tri.obj");
        std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 2 0 0\nf 1 2 4\nf 1 2 3\n").unwrap();
        let mesh: TriMesh<f64> = load_mesh(&path).unwrap();
        assert_eq!(mesh.faces().len(), 1);
        assert_eq!(mesh.dropped_faces(), 1);
    }

    #[test]
    fn binary_stl() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cube.stl");
        let cube: TriMesh<f64> = shapes::cuboid(Vec3::splat(0.02));
        let tris: Vec<stl_io::Triangle> = cube
            .faces()
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let t = cube.triangle(i);
                let n = cube.face_normals()[i];
                let v = |p: Vec3<f64>| stl_io::Vertex::new([p.x as f32, p.y as f32, p.z as f32]);
                stl_io::Triangle {
                    normal: stl_io::Normal::new([n.x as f32, n.y as f32, n.z as f32]),
                    vertices: [v(t[0]), v(t[1]), v(t[2])],
                }
            })
            .collect();
        let mut f = File::create(&path).unwrap();
        stl_io::write_stl(&mut f, tris.iter()).unwrap();
        drop(f);
        let mesh: TriMesh<f64> = load_mesh(&path).unwrap();
        assert!(mesh.is_watertight());
        assert!((mesh.total_area() - 2400.0).abs() < 1e-3);
    }

    #[test]
    fn missing_and_malformed() {
        assert!(matches!(load_mesh::<f64>("/nonexistent/x.obj"), Err(Error::FileNotFound(_))));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.obj");
        std::fs::write(&path, "v 0 0 0\nf 1 2 3\n").unwrap();
        assert!(matches!(load_mesh::<f64>(&path), Err(Error::Parse { .. })));
        let other = dir.path().join("x.ply");
        std::fs::write(&other, "ply").unwrap();
        assert!(matches!(load_mesh::<f64>(&other), Err(Error::UnsupportedFormat(_))));
    }
}
