//! OFF and OBJ reading and writing.
//!
//! Coordinates are written with Rust's shortest round-trip float formatting,
//! so saving and reloading reproduces every position bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{HalfedgeMesh, Point};
use crate::error::MeshError;

/// Supported file formats.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self, MeshError> {
        match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()) {
            Some(e) if e == "off" => Ok(MeshFormat::Off),
            Some(e) if e == "obj" => Ok(MeshFormat::Obj),
            _ => Err(MeshError::UnsupportedFormat(path.to_path_buf())),
        }
    }
}

/// Loads a triangle mesh, choosing the parser from the file extension.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<HalfedgeMesh, MeshError> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let text = fs::read_to_string(path).map_err(|source| MeshError::Io { path: path.to_path_buf(), source })?;
    load_mesh_from_str(&text, format)
}

pub fn load_mesh_from_str(text: &str, format: MeshFormat) -> Result<HalfedgeMesh, MeshError> {
    let (positions, triangles) = match format {
        MeshFormat::Off => parse_off(text)?,
        MeshFormat::Obj => parse_obj(text)?,
    };
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    HalfedgeMesh::from_triangles(positions, &triangles)
}

/// Saves the live part of the mesh with compacted indices.
pub fn save_mesh(mesh: &HalfedgeMesh, path: impl AsRef<Path>) -> Result<(), MeshError> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    fs::write(path, write_mesh(mesh, format)).map_err(|source| MeshError::Io { path: path.to_path_buf(), source })
}

pub fn write_mesh(mesh: &HalfedgeMesh, format: MeshFormat) -> String {
    let (positions, triangles) = mesh.to_triangles();
    let mut out = String::with_capacity(64 * (positions.len() + triangles.len()));
    match format {
        MeshFormat::Off => {
            out.push_str("OFF\n");
            let _ = writeln!(out, "{} {} 0", positions.len(), triangles.len());
            for p in &positions {
                let _ = writeln!(out, "{} {} {}", p.x, p.y, p.z);
            }
            for t in &triangles {
                let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
            }
        }
        MeshFormat::Obj => {
            for p in &positions {
                let _ = writeln!(out, "v {} {} {}", p.x, p.y, p.z);
            }
            for t in &triangles {
                let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
            }
        }
    }
    out
}

type Parsed = (Vec<Point>, Vec<[usize; 3]>);

fn parse_err(line: usize, message: impl Into<String>) -> MeshError {
    MeshError::Parse { line, message: message.into() }
}

fn parse_f64(token: &str, line: usize) -> Result<f64, MeshError> {
    token.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number `{token}`")))
}

fn parse_off(text: &str) -> Result<Parsed, MeshError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (line, head) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = head
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(line, format!("expected OFF header, found `{head}`")))?
        .trim();
    let (line, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| parse_err(line, "missing element counts"))?
    } else {
        (line, rest)
    };
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(parse_err(line, "missing element counts"));
    }
    let parse_count = |t: &str| t.parse::<usize>().map_err(|_| parse_err(line, format!("invalid count `{t}`")));
    let nv = parse_count(counts[0])?;
    let nf = parse_count(counts[1])?;

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, text) = lines.next().ok_or_else(|| parse_err(line, "unexpected end of file reading vertices"))?;
        let c: Vec<&str> = text.split_whitespace().collect();
        if c.len() < 3 {
            return Err(parse_err(l, "vertex needs three coordinates"));
        }
        positions.push(Point::new(parse_f64(c[0], l)?, parse_f64(c[1], l)?, parse_f64(c[2], l)?));
    }
    let mut triangles = Vec::with_capacity(nf);
    for fi in 0..nf {
        let (l, text) = lines.next().ok_or_else(|| parse_err(line, "unexpected end of file reading facets"))?;
        let t: Vec<&str> = text.split_whitespace().collect();
        let k = t[0].parse::<usize>().map_err(|_| parse_err(l, format!("invalid facet size `{}`", t[0])))?;
        if k != 3 {
            return Err(MeshError::NonTriangularFacet { index: fi });
        }
        if t.len() < 4 {
            return Err(parse_err(l, "facet needs three indices"));
        }
        let mut tri = [0usize; 3];
        for (slot, tok) in tri.iter_mut().zip(&t[1..4]) {
            *slot = tok.parse::<usize>().map_err(|_| parse_err(l, format!("invalid index `{tok}`")))?;
        }
        triangles.push(tri);
    }
    Ok((positions, triangles))
}

fn parse_obj(text: &str) -> Result<Parsed, MeshError> {
    let mut positions = Vec::new();
    let mut triangles = Vec::new();
    let mut facet_index = 0usize;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.split('#').next().unwrap_or("");
        let mut it = l.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<&str> = it.take(3).collect();
                if c.len() < 3 {
                    return Err(parse_err(line, "vertex needs three coordinates"));
                }
                positions.push(Point::new(parse_f64(c[0], line)?, parse_f64(c[1], line)?, parse_f64(c[2], line)?));
            }
            Some("f") => {
                let refs: Vec<&str> = it.collect();
                if refs.len() != 3 {
                    return Err(MeshError::NonTriangularFacet { index: facet_index });
                }
                let mut tri = [0usize; 3];
                for (slot, r) in tri.iter_mut().zip(refs) {
                    let first = r.split('/').next().unwrap_or("");
                    let idx: i64 = first.parse().map_err(|_| parse_err(line, format!("invalid index `{r}`")))?;
                    let resolved = match idx {
                        0 => return Err(parse_err(line, "index 0 is not valid in OBJ")),
                        i if i > 0 => (i - 1) as usize,
                        i => {
                            let back = (-i) as usize;
                            if back > positions.len() {
                                return Err(parse_err(line, format!("relative index {i} out of range")));
                            }
                            positions.len() - back
                        }
                    };
                    *slot = resolved;
                }
                triangles.push(tri);
                facet_index += 1;
            }
            _ => {}
        }
    }
    Ok((positions, triangles))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    #[test]
    fn off_round_trip_is_exact() {
        let mut m = shapes::icosphere(2);
        // awkward coordinates
        let vs: Vec<_> = m.vertices().collect();
        for v in vs {
            let p = m.position(v);
            m.relocate_vertex(v, p * (1.0 / 3.0) + nalgebra::Vector3::new(1e-17, -7.3e5, 0.1));
        }
        let text = write_mesh(&m, MeshFormat::Off);
        let back = load_mesh_from_str(&text, MeshFormat::Off).unwrap();
        assert_eq!(back.vertex_count(), m.vertex_count());
        for (a, b) in m.vertices().zip(back.vertices()) {
            assert_eq!(m.position(a), back.position(b));
        }
        assert_eq!(write_mesh(&back, MeshFormat::Off), text);
    }

    #[test]
    fn obj_round_trip() {
        let m = shapes::grid(3, 2, 1.0);
        let text = write_mesh(&m, MeshFormat::Obj);
        let back = load_mesh_from_str(&text, MeshFormat::Obj).unwrap();
        assert_eq!(write_mesh(&back, MeshFormat::Obj), text);
    }

    #[test]
    fn obj_face_variants() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nvt 0 0\nvn 0 0 1\nf 1/1/1 2//1 -1\n";
        let m = load_mesh_from_str(text, MeshFormat::Obj).unwrap();
        assert_eq!(m.facet_count(), 1);
    }

    #[test]
    fn quad_is_rejected_with_index() {
        let text = "OFF\n4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n4 0 1 2 3\n";
        let err = load_mesh_from_str(text, MeshFormat::Off).unwrap_err();
        assert_eq!(err.to_string(), "non-triangular facet at index 1");
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        let err = load_mesh_from_str(text, MeshFormat::Obj).unwrap_err();
        assert_eq!(err.to_string(), "non-triangular facet at index 0");
    }

    #[test]
    fn non_manifold_input_names_the_edge() {
        let text = "OFF\n5 3 0\n0 0 0\n1 0 0\n0 1 0\n0 -1 0\n0 0 1\n3 0 1 2\n3 1 0 3\n3 0 1 4\n";
        let err = load_mesh_from_str(text, MeshFormat::Off).unwrap_err();
        assert!(err.to_string().contains("non-manifold edge"), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_mesh("/nonexistent/dir/x.off").unwrap_err();
        assert!(matches!(err, MeshError::Io { .. }));
    }
}
