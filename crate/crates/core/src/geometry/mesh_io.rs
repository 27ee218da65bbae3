//! ASCII triangle-mesh import.
//!
//! Accepted records, one per line (`#` starts a comment):
//!
//! - `v x y z [w]` vertex position
//! - `f a b c ...` face with 1-based (or negative, relative) vertex indices;
//!   `a/t`, `a/t/n` and `a//n` forms are accepted and the extra fields
//!   ignored. Polygons are fan-triangulated.
//! - `o name` / `g name` start a new object; each non-empty group becomes one
//!   mesh object in the scene.
//! - `vn`, `vt`, `vp`, `s`, `usemtl`, `mtllib`, `l` are ignored.
//!
//! Any other keyword, a malformed number or an out-of-range index is a
//! [`MeshParseError`] naming the line.

use std::path::Path;

use super::primitives::{Shape, TriMesh};
use super::scene::{GeometryError, ObjectTag, Scene, SceneBuilder};
use crate::math::Vec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeshParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("cannot read mesh file: {0}")]
    Io(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

fn syntax(line: usize, message: impl Into<String>) -> MeshParseError {
    MeshParseError::Syntax {
        line,
        message: message.into(),
    }
}

pub fn load_mesh_scene(path: impl AsRef<Path>) -> Result<Scene, MeshParseError> {
    let text = std::fs::read_to_string(path.as_ref())
        .map_err(|e| MeshParseError::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_mesh_scene(&text)
}

/// Parses mesh text into a scene whose objects are tagged as structure.
pub fn parse_mesh_scene(text: &str) -> Result<Scene, MeshParseError> {
    let mut vertices: Vec<Vec3> = Vec::new();
    // per group: global vertex indices of each triangle
    let mut groups: Vec<Vec<[usize; 3]>> = vec![Vec::new()];
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let keyword = tokens.next().unwrap();
        match keyword {
            "v" => {
                let coords: Vec<f64> = tokens
                    .map(|t| t.parse::<f64>().map_err(|_| syntax(line, format!("bad number `{t}`"))))
                    .collect::<Result<_, _>>()?;
                if coords.len() < 3 || coords.len() > 4 {
                    return Err(syntax(line, "vertex needs 3 coordinates"));
                }
                if !coords.iter().all(|c| c.is_finite()) {
                    return Err(syntax(line, "vertex is not finite"));
                }
                vertices.push(Vec3::new(coords[0], coords[1], coords[2]));
            }
            "f" => {
                let mut idx = Vec::new();
                for t in tokens {
                    let first = t.split('/').next().unwrap_or("");
                    let raw: i64 = first
                        .parse()
                        .map_err(|_| syntax(line, format!("bad face index `{t}`")))?;
                    let n = vertices.len() as i64;
                    let resolved = if raw > 0 { raw - 1 } else { n + raw };
                    if raw == 0 || resolved < 0 || resolved >= n {
                        return Err(syntax(
                            line,
                            format!("face index {raw} out of range ({n} vertices defined)"),
                        ));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() < 3 {
                    return Err(syntax(line, "face needs at least 3 vertices"));
                }
                let group = groups.last_mut().unwrap();
                for k in 1..idx.len() - 1 {
                    group.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            "o" | "g" => {
                if !groups.last().unwrap().is_empty() {
                    groups.push(Vec::new());
                }
            }
            "vn" | "vt" | "vp" | "s" | "usemtl" | "mtllib" | "l" => {}
            other => return Err(syntax(line, format!("unknown record `{other}`"))),
        }
    }
    let mut builder = SceneBuilder::new();
    for tris in groups.into_iter().filter(|g| !g.is_empty()) {
        // compact to the vertices this group uses
        let mut remap = std::collections::HashMap::new();
        let mut verts = Vec::new();
        let mut triangles = Vec::with_capacity(tris.len());
        for tri in tris {
            let mut out = [0u32; 3];
            for (k, &vi) in tri.iter().enumerate() {
                out[k] = *remap.entry(vi).or_insert_with(|| {
                    verts.push(vertices[vi]);
                    (verts.len() - 1) as u32
                });
            }
            triangles.push(out);
        }
        builder.add(
            ObjectTag::Structure,
            Shape::TriMesh(TriMesh {
                vertices: verts,
                triangles,
            }),
        );
    }
    Ok(builder.build()?)
}
