//! Wavefront OBJ ingestion: `v`, `f` (fan-triangulated) and `usemtl`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use super::{Triangle, TriangleMesh, Vec3};
use crate::error::{Error, Result};
use crate::material::{Material, MaterialTable};

/// Faces that appear before any `usemtl` take this material, if the table has it.
pub const DEFAULT_MATERIAL: &str = "default";

/// A loaded mesh plus what was dropped on the way.
#[derive(Debug, Clone)]
pub struct ObjLoad {
    pub mesh: TriangleMesh,
    /// Triangles removed because their area was below the degeneracy threshold.
    pub degenerate_faces: usize,
    /// Polygons (`f` records) read from the file.
    pub polygons: usize,
}

pub fn load_obj(path: impl AsRef<Path>, materials: &MaterialTable) -> Result<ObjLoad> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_obj(&text, path, materials)
}

struct PendingFace {
    line: usize,
    corners: Vec<usize>,
    material: usize,
}

/// Parses OBJ text. `path` is only used in error messages.
pub fn parse_obj(text: &str, path: &Path, table: &MaterialTable) -> Result<ObjLoad> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: PathBuf::from(path),
        line,
        message,
    };

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut pending: Vec<PendingFace> = Vec::new();
    let mut used: Vec<Material> = Vec::new();
    let mut used_index: HashMap<String, usize> = HashMap::new();
    let mut current: Option<usize> = None;

    let mut bind = |name: &str, line: usize, used: &mut Vec<Material>| -> Result<usize> {
        if let Some(&i) = used_index.get(name) {
            return Ok(i);
        }
        let m = table.get(name).ok_or_else(|| Error::UnresolvedMaterial {
            path: PathBuf::from(path),
            line,
            name: name.to_string(),
        })?;
        used.push(m.clone());
        used_index.insert(name.to_string(), used.len() - 1);
        Ok(used.len() - 1)
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let keyword = tokens.next().unwrap_or("");
        match keyword {
            "v" => {
                let coords: Vec<f64> = tokens
                    .take(3)
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| parse_err(line_no, format!("bad vertex coordinate: {e}")))?;
                if coords.len() < 3 {
                    return Err(parse_err(line_no, "vertex needs three coordinates".into()));
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(parse_err(line_no, "vertex coordinate is not finite".into()));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut corners = Vec::new();
                for t in tokens {
                    let idx_text = t.split('/').next().unwrap_or("");
                    let idx: i64 = idx_text
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad face index `{t}`")))?;
                    let resolved = match idx {
                        0 => return Err(parse_err(line_no, "face index 0 is invalid".into())),
                        i if i > 0 => (i - 1) as usize,
                        i => {
                            let back = (-i) as usize;
                            if back > vertices.len() {
                                return Err(parse_err(
                                    line_no,
                                    format!("relative index {i} before first vertex"),
                                ));
                            }
                            vertices.len() - back
                        }
                    };
                    corners.push(resolved);
                }
                if corners.len() < 3 {
                    return Err(parse_err(
                        line_no,
                        "face needs at least three vertices".into(),
                    ));
                }
                let material = match current {
                    Some(m) => m,
                    None => {
                        let m = bind(DEFAULT_MATERIAL, line_no, &mut used).map_err(|_| {
                            parse_err(line_no, "face appears before any `usemtl`".into())
                        })?;
                        current = Some(m);
                        m
                    }
                };
                pending.push(PendingFace {
                    line: line_no,
                    corners,
                    material,
                });
            }
            "usemtl" => {
                let name = tokens
                    .next()
                    .ok_or_else(|| parse_err(line_no, "usemtl without a name".into()))?;
                current = Some(bind(name, line_no, &mut used)?);
            }
            "vt" | "vn" | "vp" | "g" | "o" | "s" | "mtllib" | "l" | "p" => {}
            other => {
                log::debug!("{}:{line_no}: ignoring `{other}`", path.display());
            }
        }
    }

    let mut faces = Vec::new();
    let mut degenerate_faces = 0;
    for face in &pending {
        if let Some(&bad) = face.corners.iter().find(|&&c| c >= vertices.len()) {
            return Err(parse_err(
                face.line,
                format!(
                    "face index {} out of range ({} vertices)",
                    bad + 1,
                    vertices.len()
                ),
            ));
        }
        let first = face.corners[0];
        for pair in face.corners[1..].windows(2) {
            let (b, c) = (pair[0], pair[1]);
            if TriangleMesh::is_degenerate(vertices[first], vertices[b], vertices[c]) {
                degenerate_faces += 1;
                continue;
            }
            faces.push(Triangle::new(first, b, c, face.material));
        }
    }
    if degenerate_faces > 0 {
        log::warn!(
            "{}: dropped {degenerate_faces} degenerate faces",
            path.display()
        );
    }

    let polygons = pending.len();
    let mesh = TriangleMesh::new(vertices, faces, used)?;
    Ok(ObjLoad {
        mesh,
        degenerate_faces,
        polygons,
    })
}

/// Writes a mesh as OBJ text, grouping faces by material with `usemtl`.
pub fn write_obj(mesh: &TriangleMesh) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {:?} {:?} {:?}", v.x, v.y, v.z);
    }
    let mut current = None;
    for f in mesh.faces() {
        if current != Some(f.material) {
            let _ = writeln!(out, "usemtl {}", mesh.materials()[f.material].name);
            current = Some(f.material);
        }
        let _ = writeln!(out, "f {} {} {}", f.a + 1, f.b + 1, f.c + 1);
    }
    out
}
