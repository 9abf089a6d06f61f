//! Triangle meshes of the computational domain.
//!
//! A [`Mesh`] is always validated on construction: node duplicates are
//! merged, triangle orientation is fixed to counterclockwise, degenerate
//! elements are rejected, and the boundary is required to be a closed loop
//! of edges each belonging to exactly one triangle.

mod gen;
mod io;

pub use gen::{generate_disk, prolongate, refine_uniform, refine_uniform_with_map};
pub use io::{read_mesh_text, read_msh, write_mesh_text, write_msh};

use std::collections::HashMap;

use crate::error::{Error, Result};

/// Absolute distance below which two nodes are considered the same point.
pub const NODE_MERGE_TOLERANCE: f64 = 1e-12;

/// Validated triangulation with explicit boundary information.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    /// Boundary edges oriented as they appear in their (counterclockwise)
    /// triangle, so the loop runs counterclockwise around the domain.
    boundary_edges: Vec<[usize; 2]>,
    boundary_nodes: Vec<usize>,
    is_boundary: Vec<bool>,
}

/// Size and quality summary of a mesh.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshStatistics {
    pub n_nodes: usize,
    pub n_triangles: usize,
    pub n_boundary_edges: usize,
    /// Longest edge over all triangles.
    pub h_max: f64,
    /// Smallest of the per-triangle longest edges.
    pub h_min: f64,
    pub min_area: f64,
    pub total_area: f64,
}

impl Mesh {
    /// Build a mesh from raw arrays, merging duplicate nodes, fixing
    /// triangle orientation, and checking boundary topology.
    pub fn new(nodes: Vec<[f64; 2]>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        if nodes.is_empty() || triangles.is_empty() {
            return Err(Error::Mesh("mesh needs nodes and triangles".into()));
        }
        for p in &nodes {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::Mesh("non-finite node coordinate".into()));
            }
        }

        let (nodes, remap, merged) = merge_close_nodes(nodes);
        if merged > 0 {
            log::info!("merged {merged} duplicate mesh nodes");
        }

        let mut scale: f64 = 0.0;
        let (mut xmin, mut xmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY);
        for p in &nodes {
            xmin = xmin.min(p[0]);
            xmax = xmax.max(p[0]);
            ymin = ymin.min(p[1]);
            ymax = ymax.max(p[1]);
        }
        scale = scale.max(((xmax - xmin).powi(2) + (ymax - ymin).powi(2)).sqrt());
        let area_floor = 0.5 * 1e-14 * scale * scale;

        let mut tris = Vec::with_capacity(triangles.len());
        let mut flipped = 0usize;
        for (t, tri) in triangles.iter().enumerate() {
            let mut v = [0usize; 3];
            for k in 0..3 {
                if tri[k] >= remap.len() {
                    return Err(Error::Mesh(format!(
                        "triangle {t} references node {} out of range",
                        tri[k]
                    )));
                }
                v[k] = remap[tri[k]];
            }
            if v[0] == v[1] || v[1] == v[2] || v[0] == v[2] {
                return Err(Error::Mesh(format!("triangle {t} has repeated vertices")));
            }
            let a2 = signed_area_2(&nodes, v);
            if a2 < 0.0 {
                v.swap(1, 2);
                flipped += 1;
            }
            if signed_area_2(&nodes, v).abs() < 2.0 * area_floor {
                return Err(Error::Mesh(format!("triangle {t} is degenerate")));
            }
            tris.push(v);
        }
        if flipped > 0 {
            log::info!("reoriented {flipped} clockwise triangles");
        }

        // Edge census: interior edges belong to two triangles, boundary
        // edges to exactly one.
        let mut census: HashMap<(usize, usize), (usize, [usize; 2])> = HashMap::new();
        for tri in &tris {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let entry = census.entry(key).or_insert((0, [a, b]));
                entry.0 += 1;
                if entry.0 > 2 {
                    return Err(Error::Mesh(format!(
                        "edge ({a}, {b}) is shared by more than two triangles"
                    )));
                }
            }
        }
        let mut boundary_edges: Vec<[usize; 2]> = census
            .values()
            .filter(|(count, _)| *count == 1)
            .map(|(_, e)| *e)
            .collect();
        boundary_edges.sort_unstable();
        if boundary_edges.is_empty() {
            return Err(Error::Mesh("mesh has no boundary".into()));
        }

        let mut incidence = vec![0usize; nodes.len()];
        for e in &boundary_edges {
            incidence[e[0]] += 1;
            incidence[e[1]] += 1;
        }
        let mut is_boundary = vec![false; nodes.len()];
        let mut boundary_nodes = Vec::new();
        for (i, &c) in incidence.iter().enumerate() {
            match c {
                0 => {}
                2 => {
                    is_boundary[i] = true;
                    boundary_nodes.push(i);
                }
                _ => {
                    return Err(Error::Mesh(format!(
                        "boundary is not a closed loop at node {i} ({c} incident edges)"
                    )))
                }
            }
        }

        Ok(Mesh {
            nodes,
            triangles: tris,
            boundary_edges,
            boundary_nodes,
            is_boundary,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary_edges
    }

    pub fn boundary_nodes(&self) -> &[usize] {
        &self.boundary_nodes
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary[node]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * signed_area_2(&self.nodes, self.triangles[t])
    }

    pub fn statistics(&self) -> MeshStatistics {
        let mut h_max: f64 = 0.0;
        let mut h_min = f64::INFINITY;
        let mut min_area = f64::INFINITY;
        let mut total_area = 0.0;
        for (t, tri) in self.triangles.iter().enumerate() {
            let mut longest: f64 = 0.0;
            for k in 0..3 {
                let a = self.nodes[tri[k]];
                let b = self.nodes[tri[(k + 1) % 3]];
                longest = longest.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
            h_max = h_max.max(longest);
            h_min = h_min.min(longest);
            let area = self.triangle_area(t);
            min_area = min_area.min(area);
            total_area += area;
        }
        MeshStatistics {
            n_nodes: self.nodes.len(),
            n_triangles: self.triangles.len(),
            n_boundary_edges: self.boundary_edges.len(),
            h_max,
            h_min,
            min_area,
            total_area,
        }
    }
}

impl MeshStatistics {
    /// Number of elements per wavelength at the given wavelength. Logs a
    /// warning below the usual rule of thumb of ten.
    pub fn elements_per_wavelength(&self, wavelength: f64) -> f64 {
        let ratio = wavelength / self.h_max;
        if ratio < 10.0 {
            log::warn!(
                "mesh resolves only {ratio:.2} elements per wavelength {wavelength:.4e}; \
                 results may be polluted by dispersion error"
            );
        }
        ratio
    }
}

fn signed_area_2(nodes: &[[f64; 2]], tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri;
    (nodes[b][0] - nodes[a][0]) * (nodes[c][1] - nodes[a][1])
        - (nodes[b][1] - nodes[a][1]) * (nodes[c][0] - nodes[a][0])
}

/// Merge nodes closer than [`NODE_MERGE_TOLERANCE`], returning the kept
/// nodes, the index remap, and the number of merged nodes. Spatial hashing
/// keeps this linear in the node count.
fn merge_close_nodes(nodes: Vec<[f64; 2]>) -> (Vec<[f64; 2]>, Vec<usize>, usize) {
    let tol = NODE_MERGE_TOLERANCE;
    let inv = 1.0 / tol;
    let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut kept: Vec<[f64; 2]> = Vec::with_capacity(nodes.len());
    let mut remap = vec![0usize; nodes.len()];
    let mut merged = 0usize;

    'outer: for (i, p) in nodes.iter().enumerate() {
        let cx = (p[0] * inv).round() as i64;
        let cy = (p[1] * inv).round() as i64;
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(candidates) = buckets.get(&(cx + dx, cy + dy)) {
                    for &k in candidates {
                        let q = kept[k];
                        if ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt() < tol {
                            remap[i] = k;
                            merged += 1;
                            continue 'outer;
                        }
                    }
                }
            }
        }
        let idx = kept.len();
        kept.push(*p);
        remap[i] = idx;
        buckets.entry((cx, cy)).or_default().push(idx);
    }
    (kept, remap, merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_two_triangles() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn square_mesh_validates_with_correct_boundary() {
        let m = unit_square_two_triangles();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_triangles(), 2);
        assert_eq!(m.boundary_edges().len(), 4);
        assert_eq!(m.boundary_nodes(), &[0, 1, 2, 3]);
        assert!((m.statistics().total_area - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let m = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
        )
        .unwrap();
        assert!(m.triangle_area(0) > 0.0);
    }

    #[test]
    fn duplicate_nodes_are_merged() {
        let m = Mesh::new(
            vec![
                [0.0, 0.0],
                [1.0, 0.0],
                [0.0, 1.0],
                [1.0 + 0.4e-12, 0.4e-12],
                [1.0, 1.0],
            ],
            vec![[0, 1, 2], [3, 4, 2]],
        )
        .unwrap();
        assert_eq!(m.n_nodes(), 4);
        assert_eq!(m.n_triangles(), 2);
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)));
    }

    #[test]
    fn non_manifold_edge_is_rejected() {
        let err = Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [-1.0, 1.0]],
            vec![[0, 1, 2], [0, 1, 3], [0, 1, 4]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)));
    }

    #[test]
    fn out_of_range_triangle_index_is_rejected() {
        let err = Mesh::new(vec![[0.0, 0.0], [1.0, 0.0]], vec![[0, 1, 5]]).unwrap_err();
        assert!(matches!(err, Error::Mesh(_)));
    }

    #[test]
    fn statistics_track_edge_lengths() {
        let m = unit_square_two_triangles();
        let s = m.statistics();
        let sqrt2 = std::f64::consts::SQRT_2;
        assert!((s.h_max - sqrt2).abs() < 1e-15);
        assert!((s.h_min - sqrt2).abs() < 1e-15);
        assert!((s.min_area - 0.5).abs() < 1e-15);
    }

    #[test]
    fn wavelength_ratio_is_wavelength_over_h() {
        let s = unit_square_two_triangles().statistics();
        let r = s.elements_per_wavelength(7.0);
        assert!((r - 7.0 / std::f64::consts::SQRT_2).abs() < 1e-12);
    }
}
