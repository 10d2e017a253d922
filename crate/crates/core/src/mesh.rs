//! Conforming triangulations of the unit square and of a polygonal unit disk.
//!
//! Meshes carry the boundary as a single counterclockwise loop of nodes, so
//! boundary traces of P1 functions are piecewise linear on a closed polyline
//! and outward normals are available edge by edge.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{BufRead, Write};

use nalgebra::{Point2, Vector2};
use spade::{DelaunayTriangulation, Triangulation};

use crate::error::{Error, Result};

/// Vertex cap used when callers do not pass one explicitly.
pub const DEFAULT_MAX_VERTICES: usize = 250_000;

const MESH_MAGIC: &str = "DTNMESH 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shape {
    /// `[0, 1]^2`.
    Square,
    /// Inscribed regular polygon approximating the unit disk.
    Disk,
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "square" => Ok(Shape::Square),
            "disk" => Ok(Shape::Disk),
            other => Err(Error::InvalidArgument(format!("unknown shape `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point2<f64>>,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    /// Directed edges with the domain on the left; `boundary_edges[k]` joins
    /// `boundary_nodes[k]` and `boundary_nodes[k + 1]` (cyclically).
    pub boundary_edges: Vec<[usize; 2]>,
    pub boundary_nodes: Vec<usize>,
    /// Maximum edge length.
    pub h: f64,
}

/// Generates a mesh with the default vertex cap.
///
/// For the square, `h_target` bounds the axis-aligned grid spacing; for the
/// disk it bounds the length of the boundary segments. `Mesh::h` always
/// reports the true maximum edge length, which for the square is the cell
/// diagonal.
pub fn generate(shape: Shape, h_target: f64) -> Result<Mesh> {
    generate_capped(shape, h_target, DEFAULT_MAX_VERTICES)
}

pub fn generate_capped(shape: Shape, h_target: f64, max_vertices: usize) -> Result<Mesh> {
    if !(h_target > 0.0) || !h_target.is_finite() {
        return Err(Error::InvalidArgument(format!("h_target must be positive, got {h_target}")));
    }
    match shape {
        Shape::Square => {
            let n = (1.0 / h_target).ceil();
            let nv = (n + 1.0) * (n + 1.0);
            check_cap(nv, max_vertices)?;
            Ok(square_grid(n as usize))
        }
        Shape::Disk => {
            let rings = disk_ring_count(h_target);
            let nv = 1.0 + 3.0 * rings * (rings + 1.0);
            check_cap(nv, max_vertices)?;
            disk_rings(rings as usize)
        }
    }
}

fn check_cap(requested: f64, cap: usize) -> Result<()> {
    if requested > cap as f64 {
        return Err(Error::ResourceLimit {
            what: "mesh vertices",
            requested: requested.min(usize::MAX as f64) as usize,
            cap,
        });
    }
    Ok(())
}

/// Smallest ring count with boundary segment `2 sin(pi / 6K) <= h`.
fn disk_ring_count(h_target: f64) -> f64 {
    if h_target >= 1.0 {
        return 1.0;
    }
    let mut k = (PI / (6.0 * (h_target / 2.0).asin())).ceil().max(1.0);
    // guard against the ceil landing one short from rounding
    while 2.0 * (PI / (6.0 * k)).sin() > h_target {
        k += 1.0;
    }
    k
}

/// `n x n` cells, each split along the diagonal from lower-left to upper-right.
fn square_grid(n: usize) -> Mesh {
    let step = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(i as f64 * step, j as f64 * step));
        }
    }
    // exact endpoints so the boundary sits on the unit square
    for v in &mut vertices {
        v.x = v.x.min(1.0);
        v.y = v.y.min(1.0);
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let (p00, p10, p11, p01) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([p00, p10, p11]);
            triangles.push([p00, p11, p01]);
        }
    }
    let mut boundary_nodes = Vec::with_capacity(4 * n);
    boundary_nodes.extend((0..n).map(|i| id(i, 0)));
    boundary_nodes.extend((0..n).map(|j| id(n, j)));
    boundary_nodes.extend((0..n).map(|i| id(n - i, n)));
    boundary_nodes.extend((0..n).map(|j| id(0, n - j)));
    finish(vertices, triangles, boundary_nodes)
}

/// Concentric rings: ring `k` carries `6k` nodes at radius `k / rings`, then
/// the point set is Delaunay-triangulated.
fn disk_rings(rings: usize) -> Result<Mesh> {
    let mut vertices = vec![Point2::new(0.0, 0.0)];
    for k in 1..=rings {
        let r = k as f64 / rings as f64;
        let count = 6 * k;
        for j in 0..count {
            let theta = 2.0 * PI * j as f64 / count as f64;
            vertices.push(Point2::new(r * theta.cos(), r * theta.sin()));
        }
    }
    let mut dt: DelaunayTriangulation<spade::Point2<f64>> = DelaunayTriangulation::new();
    for v in &vertices {
        dt.insert(spade::Point2::new(v.x, v.y))
            .map_err(|e| Error::InvalidMesh(format!("delaunay insertion failed: {e:?}")))?;
    }
    if dt.num_vertices() != vertices.len() {
        return Err(Error::InvalidMesh("duplicate disk vertices".into()));
    }
    let mut triangles: Vec<[usize; 3]> = dt
        .inner_faces()
        .map(|f| {
            let [a, b, c] = f.vertices();
            [a.fix().index(), b.fix().index(), c.fix().index()]
        })
        .collect();
    for t in &mut triangles {
        if signed_area(&vertices, *t) < 0.0 {
            t.swap(1, 2);
        }
    }
    triangles.sort_unstable();
    let first_outer = 1 + 3 * (rings - 1) * rings;
    let boundary_nodes: Vec<usize> = (first_outer..vertices.len()).collect();
    Ok(finish(vertices, triangles, boundary_nodes))
}

fn finish(vertices: Vec<Point2<f64>>, triangles: Vec<[usize; 3]>, boundary_nodes: Vec<usize>) -> Mesh {
    let boundary_edges = loop_edges(&boundary_nodes);
    let mut mesh = Mesh { vertices, triangles, boundary_edges, boundary_nodes, h: 0.0 };
    mesh.h = mesh.max_edge_length();
    mesh
}

fn loop_edges(nodes: &[usize]) -> Vec<[usize; 2]> {
    (0..nodes.len()).map(|k| [nodes[k], nodes[(k + 1) % nodes.len()]]).collect()
}

fn signed_area(vertices: &[Point2<f64>], [a, b, c]: [usize; 3]) -> f64 {
    let (pa, pb, pc) = (vertices[a], vertices[b], vertices[c]);
    0.5 * ((pb - pa).perp(&(pc - pa)))
}

/// Uniform red refinement: every triangle is split into four by its edge
/// midpoints. Boundary midpoints stay on the straight boundary edges.
pub fn refine(mesh: &Mesh) -> Result<Mesh> {
    refine_capped(mesh, DEFAULT_MAX_VERTICES)
}

pub fn refine_capped(mesh: &Mesh, max_vertices: usize) -> Result<Mesh> {
    let edges = mesh.edge_count();
    check_cap((mesh.vertices.len() + edges) as f64, max_vertices)?;
    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<(usize, usize), usize> = HashMap::with_capacity(edges);
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point2<f64>>| -> usize {
        let key = (a.min(b), a.max(b));
        *midpoint.entry(key).or_insert_with(|| {
            let (pa, pb) = (vertices[a], vertices[b]);
            vertices.push(Point2::from((pa.coords + pb.coords) * 0.5));
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangles.len());
    for &[a, b, c] in &mesh.triangles {
        let ab = mid(a, b, &mut vertices);
        let bc = mid(b, c, &mut vertices);
        let ca = mid(c, a, &mut vertices);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary_nodes = Vec::with_capacity(2 * mesh.boundary_nodes.len());
    for &[a, b] in &mesh.boundary_edges {
        boundary_nodes.push(a);
        boundary_nodes.push(mid(a, b, &mut vertices));
    }
    Ok(finish(vertices, triangles, boundary_nodes))
}

/// Outward unit normal of boundary edge `edge_index`.
pub fn boundary_normal(mesh: &Mesh, edge_index: usize) -> Result<Vector2<f64>> {
    let [a, b] = *mesh
        .boundary_edges
        .get(edge_index)
        .ok_or(Error::IndexOutOfRange { index: edge_index, len: mesh.boundary_edges.len() })?;
    let t = mesh.vertices[b] - mesh.vertices[a];
    Ok(Vector2::new(t.y, -t.x) / t.norm())
}

impl Mesh {
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.vertices, self.triangles[t])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|&[a, b]| (self.vertices[b] - self.vertices[a]).norm()).sum()
    }

    /// Boundary flags indexed by vertex.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for &b in &self.boundary_nodes {
            mask[b] = true;
        }
        mask
    }

    /// Vertex indices not on the boundary, ascending.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let mask = self.boundary_mask();
        (0..self.vertices.len()).filter(|&i| !mask[i]).collect()
    }

    /// Undirected edge -> number of incident triangles.
    fn edge_incidence(&self) -> HashMap<(usize, usize), usize> {
        let mut count = HashMap::with_capacity(3 * self.triangles.len() / 2 + self.boundary_edges.len());
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_insert(0usize) += 1;
            }
        }
        count
    }

    pub fn edge_count(&self) -> usize {
        self.edge_incidence().len()
    }

    fn max_edge_length(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| (0..3).map(move |k| (t[k], t[(k + 1) % 3])))
            .map(|(a, b)| (self.vertices[b] - self.vertices[a]).norm())
            .fold(0.0, f64::max)
    }

    /// `V - E + F`; equals 1 for a triangulated disk-topology domain.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count() as i64 + self.triangles.len() as i64
    }

    /// Checks every structural invariant of a mesh.
    pub fn validate(&self) -> Result<()> {
        let nv = self.vertices.len();
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::InvalidMesh(format!("triangle {t} references a missing vertex")));
            }
            let area = self.triangle_area(t);
            if !(area > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} has non-positive signed area {area:e}")));
            }
        }
        let incidence = self.edge_incidence();
        let mut boundary_set = HashMap::with_capacity(self.boundary_edges.len());
        for &[a, b] in &self.boundary_edges {
            if a >= nv || b >= nv {
                return Err(Error::InvalidMesh("boundary edge references a missing vertex".into()));
            }
            if boundary_set.insert((a.min(b), a.max(b)), ()).is_some() {
                return Err(Error::InvalidMesh(format!("duplicate boundary edge ({a}, {b})")));
            }
        }
        for (&(a, b), &count) in &incidence {
            let expected = if boundary_set.contains_key(&(a, b)) { 1 } else { 2 };
            if count != expected {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) belongs to {count} triangles, expected {expected}"
                )));
            }
        }
        if boundary_set.keys().any(|e| !incidence.contains_key(e)) {
            return Err(Error::InvalidMesh("boundary edge not in any triangle".into()));
        }
        // boundary must be one closed loop matching the edge list
        if self.boundary_nodes.len() != self.boundary_edges.len() || self.boundary_nodes.len() < 3 {
            return Err(Error::InvalidMesh("boundary loop length mismatch".into()));
        }
        if loop_edges(&self.boundary_nodes) != self.boundary_edges {
            return Err(Error::InvalidMesh("boundary edges do not trace boundary_nodes".into()));
        }
        let mut seen = vec![false; nv];
        for &b in &self.boundary_nodes {
            if std::mem::replace(&mut seen[b], true) {
                return Err(Error::InvalidMesh(format!("boundary node {b} visited twice")));
            }
        }
        // orientation: the triangle owning a boundary edge must contain it as (a, b)
        let mut directed = HashMap::with_capacity(3 * self.triangles.len());
        for t in &self.triangles {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]), ());
            }
        }
        for &[a, b] in &self.boundary_edges {
            if !directed.contains_key(&(a, b)) {
                return Err(Error::InvalidMesh(format!(
                    "boundary edge ({a}, {b}) does not have the domain on its left"
                )));
            }
        }
        for e in 0..self.boundary_edges.len() {
            let n = boundary_normal(self, e)?;
            if (n.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidMesh(format!("normal of edge {e} is not unit")));
            }
        }
        if self.euler_characteristic() != 1 {
            return Err(Error::InvalidMesh(format!("Euler characteristic {} != 1", self.euler_characteristic())));
        }
        Ok(())
    }

    /// Local Delaunay test over every interior edge: no opposite vertex lies
    /// strictly inside the neighbouring circumcircle, up to a relative
    /// predicate tolerance of `1e-12`.
    pub fn is_delaunay(&self) -> bool {
        self.delaunay_violations().is_empty()
    }

    /// Interior edges `(a, b)` failing the empty-circumcircle test.
    pub fn delaunay_violations(&self) -> Vec<(usize, usize)> {
        let mut opposite: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                opposite.entry((a.min(b), a.max(b))).or_default().push(c);
            }
        }
        let mut bad = Vec::new();
        for (&(a, b), opp) in &opposite {
            if let [c, d] = opp[..] {
                let [pa, pb, pc, pd] = [a, b, c, d].map(|i| self.vertices[i]);
                // orient (a, b, c) counterclockwise before the incircle test
                let (pa, pb) = if (pb - pa).perp(&(pc - pa)) > 0.0 { (pa, pb) } else { (pb, pa) };
                let (det, scale) = incircle(pa, pb, pc, pd);
                if det > 1e-12 * scale {
                    bad.push((a, b));
                }
            }
        }
        bad.sort_unstable();
        bad
    }

    /// Writes the line-oriented `DTNMESH 1` text format.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MESH_MAGIC}");
        let _ = writeln!(s, "{} {} {}", self.vertices.len(), self.triangles.len(), self.boundary_edges.len());
        for v in &self.vertices {
            let _ = writeln!(s, "{:.16e} {:.16e}", v.x, v.y);
        }
        for [i, j, k] in &self.triangles {
            let _ = writeln!(s, "{i} {j} {k}");
        }
        for [i, j] in &self.boundary_edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Mesh> {
        let mut lines = r.lines().enumerate().filter_map(|(n, l)| match l {
            Ok(l) if l.trim().is_empty() => None,
            other => Some((n + 1, other)),
        });
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::Parse { line: 0, msg: format!("unexpected end of file, expected {what}") }),
            }
        };
        let (n, magic) = next("header")?;
        if magic.trim() != MESH_MAGIC {
            return Err(Error::Parse { line: n, msg: format!("expected `{MESH_MAGIC}`") });
        }
        let (n, counts) = next("counts")?;
        let counts: Vec<usize> = parse_fields(n, &counts, 3)?;
        let (nv, nt, nbe) = (counts[0], counts[1], counts[2]);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (n, l) = next("vertex")?;
            let xy: Vec<f64> = parse_fields(n, &l, 2)?;
            vertices.push(Point2::new(xy[0], xy[1]));
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (n, l) = next("triangle")?;
            let t: Vec<usize> = parse_fields(n, &l, 3)?;
            triangles.push([t[0], t[1], t[2]]);
        }
        let mut boundary_edges = Vec::with_capacity(nbe);
        for _ in 0..nbe {
            let (n, l) = next("boundary edge")?;
            let e: Vec<usize> = parse_fields(n, &l, 2)?;
            boundary_edges.push([e[0], e[1]]);
        }
        let boundary_nodes = trace_loop(&boundary_edges)?;
        let mut mesh = Mesh { vertices, triangles, boundary_edges, boundary_nodes, h: 0.0 };
        mesh.h = mesh.max_edge_length();
        mesh.validate()?;
        Ok(mesh)
    }
}

fn parse_fields<T: std::str::FromStr>(line: usize, s: &str, count: usize) -> Result<Vec<T>> {
    let fields: Vec<T> = s
        .split_whitespace()
        .map(|f| f.parse::<T>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Parse { line, msg: format!("malformed line `{s}`") })?;
    if fields.len() != count {
        return Err(Error::Parse { line, msg: format!("expected {count} fields, found {}", fields.len()) });
    }
    Ok(fields)
}

fn trace_loop(edges: &[[usize; 2]]) -> Result<Vec<usize>> {
    let bad = |msg: &str| Error::InvalidMesh(msg.to_string());
    if edges.is_empty() {
        return Err(bad("no boundary edges"));
    }
    let succ: HashMap<usize, usize> = edges.iter().map(|&[a, b]| (a, b)).collect();
    if succ.len() != edges.len() {
        return Err(bad("boundary node with two outgoing edges"));
    }
    let start = edges[0][0];
    let mut nodes = vec![start];
    let mut cur = edges[0][1];
    while cur != start {
        if nodes.len() > edges.len() {
            return Err(bad("boundary edges do not close into one loop"));
        }
        nodes.push(cur);
        cur = *succ.get(&cur).ok_or_else(|| bad("open boundary loop"))?;
    }
    if nodes.len() != edges.len() {
        return Err(bad("boundary is not a single loop"));
    }
    Ok(nodes)
}

/// Incircle determinant for counterclockwise `(a, b, c)`; positive when `d`
/// is strictly inside. Returns the determinant and a magnitude scale.
fn incircle(a: Point2<f64>, b: Point2<f64>, c: Point2<f64>, d: Point2<f64>) -> (f64, f64) {
    let rows = [a - d, b - d, c - d];
    let m = rows.map(|r| [r.x, r.y, r.norm_squared()]);
    let det = m[0][0] * (m[1][1] * m[2][2] - m[2][1] * m[1][2]) - m[1][0] * (m[0][1] * m[2][2] - m[2][1] * m[0][2])
        + m[2][0] * (m[0][1] * m[1][2] - m[1][1] * m[0][2]);
    let scale = rows.iter().map(|r| r.norm()).fold(0.0, f64::max).powi(4);
    (det, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_half_grid_counts() {
        let m = generate(Shape::Square, 0.5).unwrap();
        assert_eq!(m.vertices.len(), 9);
        assert_eq!(m.triangles.len(), 8);
        assert_eq!(m.boundary_edges.len(), 8);
        assert_eq!(m.interior_nodes(), vec![4]);
        m.validate().unwrap();
    }

    #[test]
    fn square_area_is_one() {
        for h in [0.5, 0.3, 0.1, 0.07] {
            let m = generate(Shape::Square, h).unwrap();
            assert!((m.total_area() - 1.0).abs() < 1e-12);
            assert!(m.is_delaunay());
        }
    }

    #[test]
    fn disk_area_matches_inscribed_polygon() {
        let m = generate(Shape::Disk, 0.05).unwrap();
        m.validate().unwrap();
        let n = m.boundary_nodes.len() as f64;
        let polygon = 0.5 * n * (2.0 * PI / n).sin();
        assert!((m.total_area() - polygon).abs() < 1e-12);
        assert!((m.total_area() - PI).abs() / PI < 2e-3);
        assert!(m.is_delaunay());
        let seg = (m.vertices[m.boundary_nodes[1]] - m.vertices[m.boundary_nodes[0]]).norm();
        assert!(seg <= 0.05);
    }

    #[test]
    fn refine_quadruples_and_preserves_area() {
        let m = generate(Shape::Square, 0.5).unwrap();
        let r = refine(&m).unwrap();
        assert_eq!(r.triangles.len(), 32);
        assert!((r.h - m.h / 2.0).abs() < 1e-15);
        r.validate().unwrap();

        let d = generate(Shape::Disk, 0.3).unwrap();
        let rd = refine(&d).unwrap();
        rd.validate().unwrap();
        assert_eq!(rd.boundary_nodes.len(), 2 * d.boundary_nodes.len());
        assert!((rd.total_area() - d.total_area()).abs() < 1e-12);
    }

    #[test]
    fn square_normals() {
        let m = generate(Shape::Square, 0.25).unwrap();
        // first edge runs along y = 0, edges 4..8 along x = 1
        let n0 = boundary_normal(&m, 0).unwrap();
        assert_eq!((n0.x, n0.y), (0.0, -1.0));
        let n4 = boundary_normal(&m, 4).unwrap();
        assert_eq!((n4.x, n4.y), (1.0, 0.0));
        assert!(matches!(boundary_normal(&m, 99), Err(Error::IndexOutOfRange { index: 99, len: 16 })));
    }

    #[test]
    fn disk_normals_approach_radial() {
        let m = generate(Shape::Disk, 0.1).unwrap();
        for (e, &[a, b]) in m.boundary_edges.iter().enumerate() {
            let mid = (m.vertices[a].coords + m.vertices[b].coords) * 0.5;
            let radial = mid / mid.norm();
            let n = boundary_normal(&m, e).unwrap();
            assert!((n - radial).norm() <= m.h);
        }
    }

    #[test]
    fn resource_cap_and_bad_h() {
        assert!(matches!(generate_capped(Shape::Square, 0.001, 1000), Err(Error::ResourceLimit { .. })));
        assert!(generate(Shape::Disk, 0.0).is_err());
        assert!(generate(Shape::Disk, f64::NAN).is_err());
    }

    #[test]
    fn text_round_trip_is_exact() {
        for shape in [Shape::Square, Shape::Disk] {
            let m = generate(shape, 0.2).unwrap();
            let text = m.to_text();
            let back = Mesh::read_text(text.as_bytes()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn read_rejects_garbage() {
        assert!(Mesh::read_text("DTNMESH 2\n".as_bytes()).is_err());
        assert!(Mesh::read_text("DTNMESH 1\n3 1 3\n0 0\n1 0\n".as_bytes()).is_err());
    }

    #[test]
    fn flipped_triangle_is_invalid() {
        let mut m = generate(Shape::Square, 0.5).unwrap();
        m.triangles[0].swap(1, 2);
        assert!(m.validate().is_err());
    }
}
