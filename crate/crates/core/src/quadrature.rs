//! Quadrature points shared by assembly and coefficient sampling.

use nalgebra::{Point2, Vector2};

use crate::mesh::{boundary_normal, Mesh};

/// Barycentric coordinates of the symmetric 3-point degree-2 rule; each
/// point carries weight `area / 3`.
pub const TRI3_BARY: [[f64; 3]; 3] =
    [[2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0], [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0]];

pub fn tri3_points(p: [Point2<f64>; 3]) -> [Point2<f64>; 3] {
    TRI3_BARY.map(|l| Point2::from(p[0].coords * l[0] + p[1].coords * l[1] + p[2].coords * l[2]))
}

/// All element quadrature points of the mesh.
pub fn element_points(mesh: &Mesh) -> Vec<Point2<f64>> {
    mesh.triangles.iter().flat_map(|t| tri3_points(t.map(|v| mesh.vertices[v]))).collect()
}

/// Boundary sample points with the outward normal of the underlying domain:
/// each boundary node (normal = normalized average of its two edge normals)
/// and each edge midpoint (normal of the edge).
pub fn boundary_points(mesh: &Mesh) -> Vec<(Point2<f64>, Vector2<f64>)> {
    let m = mesh.boundary_edges.len();
    let normals: Vec<Vector2<f64>> = (0..m).map(|e| boundary_normal(mesh, e).expect("edge index in range")).collect();
    let mut out = Vec::with_capacity(2 * m);
    for (e, &[a, b]) in mesh.boundary_edges.iter().enumerate() {
        let prev = normals[(e + m - 1) % m];
        out.push((mesh.vertices[a], (prev + normals[e]).normalize()));
        let mid = Point2::from((mesh.vertices[a].coords + mesh.vertices[b].coords) * 0.5);
        out.push((mid, normals[e]));
    }
    out
}
