//! Structured disk meshing and uniform refinement.

use std::collections::{HashMap, HashSet};
use std::f64::consts::PI;

use crate::error::{Error, Result};

use super::Mesh;

/// Mesh a disk of the given radius centered at the origin with target edge
/// length `h`.
///
/// Nodes are placed on concentric rings spaced `radius / n_rings` apart,
/// with the node count per ring chosen so the azimuthal spacing matches the
/// radial one. Consecutive rings are stitched by walking both rings in
/// angle. Boundary nodes land on the circle to machine precision.
pub fn generate_disk(radius: f64, h: f64) -> Result<Mesh> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "disk radius must be positive, got {radius}"
        )));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "target edge length must be positive, got {h}"
        )));
    }

    let n_rings = ((radius / h).round() as usize).max(1);
    let dr = radius / n_rings as f64;

    let mut nodes: Vec<[f64; 2]> = vec![[0.0, 0.0]];
    // (first node index, node count, angular offset) per ring.
    let mut rings: Vec<(usize, usize, f64)> = Vec::with_capacity(n_rings);
    for i in 1..=n_rings {
        let r = i as f64 * dr;
        let n_i = ((2.0 * PI * i as f64).round() as usize).max(3);
        let offset = (i % 2) as f64 * PI / n_i as f64;
        let first = nodes.len();
        for k in 0..n_i {
            let th = offset + 2.0 * PI * k as f64 / n_i as f64;
            nodes.push([r * th.cos(), r * th.sin()]);
        }
        rings.push((first, n_i, offset));
    }

    let mut tris: Vec<[usize; 3]> = Vec::new();
    // Fan around the center node.
    let (first, n1, _) = rings[0];
    for k in 0..n1 {
        tris.push([0, first + k, first + (k + 1) % n1]);
    }
    // Stitch consecutive rings by advancing whichever ring has the smaller
    // next angle; each step emits one triangle.
    for w in rings.windows(2) {
        let (in_first, n_in, in_off) = w[0];
        let (out_first, n_out, out_off) = w[1];
        let ang_in = |k: usize| in_off + 2.0 * PI * k as f64 / n_in as f64;
        let ang_out = |k: usize| out_off + 2.0 * PI * k as f64 / n_out as f64;
        let mut i = 0usize;
        let mut j = 0usize;
        while i < n_in || j < n_out {
            let advance_inner = if i == n_in {
                false
            } else if j == n_out {
                true
            } else {
                ang_in(i + 1) <= ang_out(j + 1)
            };
            if advance_inner {
                tris.push([
                    in_first + i % n_in,
                    out_first + j % n_out,
                    in_first + (i + 1) % n_in,
                ]);
                i += 1;
            } else {
                tris.push([
                    out_first + j % n_out,
                    out_first + (j + 1) % n_out,
                    in_first + i % n_in,
                ]);
                j += 1;
            }
        }
    }

    Mesh::new(nodes, tris)
}

/// Split every triangle into four congruent children through the edge
/// midpoints. Midpoints of boundary edges are optionally pushed out to the
/// circle of the given radius (the mesh is assumed centered at the origin),
/// so refining a disk mesh keeps approximating the disk instead of the
/// coarse polygon.
pub fn refine_uniform(mesh: &Mesh, project_to_radius: Option<f64>) -> Result<Mesh> {
    refine_uniform_with_map(mesh, project_to_radius).map(|(m, _)| m)
}

/// Uniform refinement that also reports where the new nodes came from.
///
/// The returned vector has one entry per added node, in index order starting
/// at the coarse node count: the pair of coarse endpoints whose edge the new
/// node bisects. Coarse nodes keep their indices and coordinates, so a nodal
/// field transfers to the fine mesh by copying the old values and averaging
/// endpoint values for the new ones (see [`prolongate`]).
pub fn refine_uniform_with_map(
    mesh: &Mesh,
    project_to_radius: Option<f64>,
) -> Result<(Mesh, Vec<(usize, usize)>)> {
    let mut nodes = mesh.nodes().to_vec();
    let boundary: HashSet<(usize, usize)> = mesh
        .boundary_edges()
        .iter()
        .map(|e| (e[0].min(e[1]), e[0].max(e[1])))
        .collect();
    let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edge_parents: Vec<(usize, usize)> = Vec::new();
    let mut tris = Vec::with_capacity(4 * mesh.n_triangles());

    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<[f64; 2]>| -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&idx) = midpoints.get(&key) {
            return idx;
        }
        edge_parents.push(key);
        let pa = nodes[a];
        let pb = nodes[b];
        let mut p = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if let Some(r) = project_to_radius {
            if boundary.contains(&key) {
                let len = (p[0] * p[0] + p[1] * p[1]).sqrt();
                if len > 0.0 {
                    p[0] *= r / len;
                    p[1] *= r / len;
                }
            }
        }
        let idx = nodes.len();
        nodes.push(p);
        midpoints.insert(key, idx);
        idx
    };

    for tri in mesh.triangles() {
        let [a, b, c] = *tri;
        let mab = midpoint(a, b, &mut nodes);
        let mbc = midpoint(b, c, &mut nodes);
        let mca = midpoint(c, a, &mut nodes);
        tris.push([a, mab, mca]);
        tris.push([b, mbc, mab]);
        tris.push([c, mca, mbc]);
        tris.push([mab, mbc, mca]);
    }

    let expected = nodes.len();
    let fine = Mesh::new(nodes, tris)?;
    if fine.n_nodes() != expected {
        return Err(Error::Mesh(format!(
            "refinement produced coincident nodes ({} of {expected} survived); \
             the coarse-to-fine node map would be invalid",
            fine.n_nodes()
        )));
    }
    Ok((fine, edge_parents))
}

/// Transfer a nodal field from a coarse mesh to its uniform refinement by
/// linear interpolation, using the edge map from [`refine_uniform_with_map`].
pub fn prolongate<T>(coarse: &[T], edge_parents: &[(usize, usize)]) -> Result<Vec<T>>
where
    T: Copy + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let mut fine = Vec::with_capacity(coarse.len() + edge_parents.len());
    fine.extend_from_slice(coarse);
    for &(a, b) in edge_parents {
        if a >= coarse.len() || b >= coarse.len() {
            return Err(Error::Dimension(format!(
                "edge parent ({a}, {b}) outside coarse field of {} nodes",
                coarse.len()
            )));
        }
        fine.push((coarse[a] + coarse[b]) * 0.5);
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn circumradius(mesh: &Mesh, t: usize) -> f64 {
        let tri = mesh.triangles()[t];
        let p: Vec<[f64; 2]> = tri.iter().map(|&i| mesh.nodes()[i]).collect();
        let e = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let (la, lb, lc) = (e(p[0], p[1]), e(p[1], p[2]), e(p[2], p[0]));
        la * lb * lc / (4.0 * mesh.triangle_area(t))
    }

    #[test]
    fn coarse_disk_matches_expected_size() {
        let m = generate_disk(0.2, 0.05).unwrap();
        // Around 85 nodes is the expected size for this spacing; require
        // agreement within a factor of two.
        assert!(m.n_nodes() >= 43 && m.n_nodes() <= 170, "{}", m.n_nodes());
    }

    #[test]
    fn fine_disk_matches_expected_size() {
        let m = generate_disk(0.2, 0.003125).unwrap();
        assert!(
            m.n_nodes() >= 7609 && m.n_nodes() <= 30436,
            "{}",
            m.n_nodes()
        );
    }

    #[test]
    fn disk_area_close_to_circle_area() {
        let r = 0.2;
        let m = generate_disk(r, r / 20.0).unwrap();
        let area = m.statistics().total_area;
        assert!(((area - PI * r * r) / (PI * r * r)).abs() < 0.01);
    }

    #[test]
    fn boundary_nodes_lie_on_the_circle() {
        let r = 0.2;
        let m = generate_disk(r, 0.01).unwrap();
        for &i in m.boundary_nodes() {
            let p = m.nodes()[i];
            let dist = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((dist - r).abs() <= 1e-10 * r);
        }
        assert_eq!(m.boundary_edges().len(), m.boundary_nodes().len());
    }

    #[test]
    fn triangles_stay_within_circumradius_bound() {
        for h in [0.05, 0.01] {
            let m = generate_disk(0.2, h).unwrap();
            for t in 0..m.n_triangles() {
                let r = circumradius(&m, t);
                assert!(r <= 1.5 * h, "h={h}, t={t}: circumradius {r}");
            }
        }
    }

    #[test]
    fn euler_characteristic_of_a_disk() {
        let m = generate_disk(0.2, 0.02).unwrap();
        let mut edges = std::collections::HashSet::new();
        for tri in m.triangles() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                edges.insert((a.min(b), a.max(b)));
            }
        }
        let chi = m.n_nodes() as i64 - edges.len() as i64 + m.n_triangles() as i64;
        assert_eq!(chi, 1);
    }

    #[test]
    fn rejects_nonpositive_sizes() {
        assert!(generate_disk(0.0, 0.01).is_err());
        assert!(generate_disk(0.2, -1.0).is_err());
        assert!(generate_disk(f64::NAN, 0.01).is_err());
    }

    #[test]
    fn refinement_quadruples_triangles_and_keeps_parent_nodes() {
        let m = generate_disk(0.2, 0.05).unwrap();
        let f = refine_uniform(&m, Some(0.2)).unwrap();
        assert_eq!(f.n_triangles(), 4 * m.n_triangles());
        for (a, b) in m.nodes().iter().zip(f.nodes()) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }

    #[test]
    fn prolongation_reproduces_linear_fields_away_from_the_boundary() {
        let m = generate_disk(0.2, 0.05).unwrap();
        let (f, parents) = refine_uniform_with_map(&m, Some(0.2)).unwrap();
        assert_eq!(f.n_nodes(), m.n_nodes() + parents.len());
        let lin = |p: [f64; 2]| 3.0 * p[0] - 2.0 * p[1] + 0.7;
        let coarse: Vec<f64> = m.nodes().iter().map(|&p| lin(p)).collect();
        let fine = prolongate(&coarse, &parents).unwrap();
        for (i, &v) in fine.iter().enumerate() {
            if f.is_boundary(i) {
                // Boundary midpoints were projected onto the circle, so the
                // interpolated value belongs to the chord midpoint nearby.
                continue;
            }
            let exact = lin(f.nodes()[i]);
            assert!((v - exact).abs() <= 1e-12, "node {i}: {v} vs {exact}");
        }
        // Out-of-range parents are rejected.
        assert!(prolongate(&coarse[..3], &parents).is_err());
    }

    #[test]
    fn refinement_projects_boundary_midpoints() {
        let r = 0.2;
        let m = generate_disk(r, 0.05).unwrap();
        let f = refine_uniform(&m, Some(r)).unwrap();
        for &i in f.boundary_nodes() {
            let p = f.nodes()[i];
            let dist = (p[0] * p[0] + p[1] * p[1]).sqrt();
            assert!((dist - r).abs() <= 1e-10 * r);
        }
        // Without projection the new midpoints sit on the chords instead.
        let flat = refine_uniform(&m, None).unwrap();
        let off_circle = flat
            .boundary_nodes()
            .iter()
            .map(|&i| {
                let p = flat.nodes()[i];
                ((p[0] * p[0] + p[1] * p[1]).sqrt() - r).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(off_circle > 1e-6 * r);
    }

    #[test]
    fn repeated_refinement_shrinks_h() {
        let m = generate_disk(0.2, 0.05).unwrap();
        let f = refine_uniform(&m, Some(0.2)).unwrap();
        let s0 = m.statistics();
        let s1 = f.statistics();
        assert!(s1.h_max < 0.6 * s0.h_max);
    }
}
