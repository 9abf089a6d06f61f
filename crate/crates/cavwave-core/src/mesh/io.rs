//! Mesh file formats: a minimal native text format and a subset of the
//! Gmsh MSH 2.2 ASCII format.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

use super::Mesh;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::MeshParse {
        line,
        message: message.into(),
    }
}

/// Write the native format: a header line, counts, node coordinates, and
/// zero-based triangle indices. Coordinates use 17 significant digits, so
/// reading the file back reproduces them bit for bit.
pub fn write_mesh_text(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "cavmesh 1")?;
    writeln!(out, "{} {}", mesh.n_nodes(), mesh.n_triangles())?;
    for p in mesh.nodes() {
        writeln!(out, "{:.16e} {:.16e}", p[0], p[1])?;
    }
    for t in mesh.triangles() {
        writeln!(out, "{} {} {}", t[0], t[1], t[2])?;
    }
    out.flush()?;
    Ok(())
}

/// Read the native format written by [`write_mesh_text`].
pub fn read_mesh_text(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().collect();
    let header = *lines
        .first()
        .ok_or_else(|| parse_err(1, "empty mesh file"))?;
    if header.trim() != "cavmesh 1" {
        return Err(parse_err(1, format!("unrecognized header '{header}'")));
    }
    let counts = lines
        .get(1)
        .ok_or_else(|| parse_err(2, "missing count line"))?;
    let mut it = counts.split_whitespace();
    let n_nodes: usize = it
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| parse_err(2, "bad node count"))?;
    let n_tris: usize = it
        .next()
        .and_then(|w| w.parse().ok())
        .ok_or_else(|| parse_err(2, "bad triangle count"))?;

    let mut nodes = Vec::with_capacity(n_nodes);
    for i in 0..n_nodes {
        let ln = 3 + i;
        let line = lines
            .get(2 + i)
            .ok_or_else(|| parse_err(ln, "unexpected end of node list"))?;
        let mut w = line.split_whitespace();
        let x: f64 = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad x coordinate"))?;
        let y: f64 = w
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(ln, "bad y coordinate"))?;
        nodes.push([x, y]);
    }
    let mut tris = Vec::with_capacity(n_tris);
    for i in 0..n_tris {
        let ln = 3 + n_nodes + i;
        let line = lines
            .get(2 + n_nodes + i)
            .ok_or_else(|| parse_err(ln, "unexpected end of triangle list"))?;
        let mut w = line.split_whitespace();
        let mut tri = [0usize; 3];
        for v in tri.iter_mut() {
            *v = w
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| parse_err(ln, "bad triangle index"))?;
        }
        tris.push(tri);
    }
    Mesh::new(nodes, tris)
}

/// Write Gmsh MSH 2.2 ASCII with boundary edges as line elements and
/// triangles as surface elements.
pub fn write_msh(path: &Path, mesh: &Mesh) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "$MeshFormat")?;
    writeln!(out, "2.2 0 8")?;
    writeln!(out, "$EndMeshFormat")?;
    writeln!(out, "$Nodes")?;
    writeln!(out, "{}", mesh.n_nodes())?;
    for (i, p) in mesh.nodes().iter().enumerate() {
        writeln!(out, "{} {:.16e} {:.16e} 0", i + 1, p[0], p[1])?;
    }
    writeln!(out, "$EndNodes")?;
    writeln!(out, "$Elements")?;
    writeln!(
        out,
        "{}",
        mesh.boundary_edges().len() + mesh.n_triangles()
    )?;
    let mut id = 1usize;
    for e in mesh.boundary_edges() {
        writeln!(out, "{id} 1 2 1 1 {} {}", e[0] + 1, e[1] + 1)?;
        id += 1;
    }
    for t in mesh.triangles() {
        writeln!(out, "{id} 2 2 2 2 {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        id += 1;
    }
    writeln!(out, "$EndElements")?;
    out.flush()?;
    Ok(())
}

/// Read a subset of Gmsh MSH 2.2 ASCII: nodes and 3-node triangles.
///
/// Line and point elements are skipped (the boundary is rebuilt from the
/// triangulation), unknown sections are skipped wholesale, and any other
/// element type is a parse error. Errors carry the 1-based line number.
pub fn read_msh(path: &Path) -> Result<Mesh> {
    let text = std::fs::read_to_string(path)?;
    parse_msh(&text)
}

fn parse_msh(text: &str) -> Result<Mesh> {
    let lines: Vec<&str> = text.lines().collect();
    let mut nodes: Vec<[f64; 2]> = Vec::new();
    let mut id_to_index: HashMap<u64, usize> = HashMap::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut seen_nodes = false;
    let mut seen_elements = false;

    let mut i = 0usize;
    while i < lines.len() {
        let line = lines[i].trim();
        if line.is_empty() {
            i += 1;
            continue;
        }
        let Some(section) = line.strip_prefix('$') else {
            return Err(parse_err(i + 1, format!("expected a section, got '{line}'")));
        };
        match section {
            "MeshFormat" => {
                let ln = i + 2;
                let version_line = lines
                    .get(i + 1)
                    .ok_or_else(|| parse_err(ln, "missing format line"))?;
                let version = version_line.split_whitespace().next().unwrap_or("");
                if version != "2.2" {
                    return Err(parse_err(
                        ln,
                        format!("unsupported MSH version '{version}', expected 2.2"),
                    ));
                }
                i = expect_end(&lines, i + 2, "MeshFormat")?;
            }
            "Nodes" => {
                let ln = i + 2;
                let count: usize = lines
                    .get(i + 1)
                    .and_then(|l| l.trim().parse().ok())
                    .ok_or_else(|| parse_err(ln, "bad node count"))?;
                for k in 0..count {
                    let ln = i + 2 + k + 1;
                    let row = lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(ln, "unexpected end of node list"))?;
                    let mut w = row.split_whitespace();
                    let id: u64 = w
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad node id"))?;
                    let x: f64 = w
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad x coordinate"))?;
                    let y: f64 = w
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(ln, "bad y coordinate"))?;
                    if id_to_index.insert(id, nodes.len()).is_some() {
                        return Err(parse_err(ln, format!("duplicate node id {id}")));
                    }
                    nodes.push([x, y]);
                }
                i = expect_end(&lines, i + 2 + count, "Nodes")?;
                seen_nodes = true;
            }
            "Elements" => {
                let ln = i + 2;
                let count: usize = lines
                    .get(i + 1)
                    .and_then(|l| l.trim().parse().ok())
                    .ok_or_else(|| parse_err(ln, "bad element count"))?;
                for k in 0..count {
                    let ln = i + 2 + k + 1;
                    let row = lines
                        .get(i + 2 + k)
                        .ok_or_else(|| parse_err(ln, "unexpected end of element list"))?;
                    let fields: Vec<&str> = row.split_whitespace().collect();
                    if fields.len() < 3 {
                        return Err(parse_err(ln, "truncated element line"));
                    }
                    let etype: u32 = fields[1]
                        .parse()
                        .map_err(|_| parse_err(ln, "bad element type"))?;
                    let ntags: usize = fields[2]
                        .parse()
                        .map_err(|_| parse_err(ln, "bad tag count"))?;
                    let node_fields = &fields[3 + ntags.min(fields.len() - 3)..];
                    match etype {
                        1 | 15 => {} // boundary rebuilt from triangles
                        2 => {
                            if node_fields.len() < 3 {
                                return Err(parse_err(ln, "triangle with fewer than 3 nodes"));
                            }
                            let mut tri = [0usize; 3];
                            for (slot, f) in tri.iter_mut().zip(node_fields) {
                                let id: u64 = f
                                    .parse()
                                    .map_err(|_| parse_err(ln, "bad element node id"))?;
                                *slot = *id_to_index.get(&id).ok_or_else(|| {
                                    parse_err(ln, format!("element references unknown node {id}"))
                                })?;
                            }
                            tris.push(tri);
                        }
                        other => {
                            return Err(parse_err(
                                ln,
                                format!("unsupported element type {other}"),
                            ));
                        }
                    }
                }
                i = expect_end(&lines, i + 2 + count, "Elements")?;
                seen_elements = true;
            }
            other => {
                // Skip sections such as $PhysicalNames.
                let end = format!("$End{other}");
                let mut k = i + 1;
                loop {
                    match lines.get(k) {
                        Some(l) if l.trim() == end => break,
                        Some(_) => k += 1,
                        None => {
                            return Err(parse_err(i + 1, format!("section ${other} never ends")))
                        }
                    }
                }
                i = k + 1;
            }
        }
    }
    if !seen_nodes || !seen_elements {
        return Err(parse_err(
            lines.len(),
            "file is missing $Nodes or $Elements",
        ));
    }
    Mesh::new(nodes, tris)
}

fn expect_end(lines: &[&str], at: usize, section: &str) -> Result<usize> {
    let want = format!("$End{section}");
    match lines.get(at) {
        Some(l) if l.trim() == want => Ok(at + 1),
        _ => Err(parse_err(at + 1, format!("expected {want}"))),
    }
}
