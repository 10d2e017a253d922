//! P1 assembly of the bilinear form
//!
//! ```text
//! a(u, v) = ∫ (a ∇u)·∇v + ∫ (b·∇u) v + ∫ u (c·∇v) + ∫ d u v
//! ```
//!
//! together with the domain mass `M`, the boundary mass `Mb` and the Robin
//! form `a(u, v) + ∫_∂Ω β u v`.
//!
//! Index convention: `K[(i, j)] = a(φ_j, φ_i)`, i.e. the trial function is the
//! column. With `b != c` the matrix is not symmetric and a transposition
//! would silently produce the adjoint problem.

use nalgebra::{Point2, Vector2};
use nalgebra_sparse::CsrMatrix;
use rayon::prelude::*;

use crate::coefficients::{CoefficientSet, Diffusion, SupNorms, VectorField};
use crate::error::{Error, Result};
use crate::linalg::sparse::{axpby, from_triplets, submatrix};
use crate::mesh::Mesh;
use crate::quadrature::{tri3_points, TRI3_BARY};

const MIN_AREA: f64 = 1e-14;

/// Boundary Gram matrix variant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BoundaryMass {
    /// Exact integration of products of boundary hat functions.
    #[default]
    Consistent,
    /// Row-sum lumped, diagonal.
    Lumped,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AssemblyOptions {
    pub boundary_mass: BoundaryMass,
}

/// Element matrices, each indexed `[test][trial]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LocalForm {
    pub diffusion: [[f64; 3]; 3],
    pub advection_b: [[f64; 3]; 3],
    pub advection_c: [[f64; 3]; 3],
    pub mass: [[f64; 3]; 3],
}

/// Gradients of the barycentric coordinates and the signed area.
pub fn p1_gradients(p: [Point2<f64>; 3]) -> ([Vector2<f64>; 3], f64) {
    let area = 0.5 * (p[1] - p[0]).perp(&(p[2] - p[0]));
    let grad = |j: usize, k: usize| {
        let e = p[k] - p[j];
        Vector2::new(-e.y, e.x) / (2.0 * area)
    };
    ([grad(1, 2), grad(2, 0), grad(0, 1)], area)
}

/// Element contributions on the triangle `p` (counterclockwise).
pub fn local_form(p: [Point2<f64>; 3], coeffs: &CoefficientSet) -> LocalForm {
    let (g, area) = p1_gradients(p);
    let qp = tri3_points(p);
    let w = area / 3.0;
    let mut out = LocalForm::default();
    for (q, x) in qp.iter().enumerate() {
        let bary = TRI3_BARY[q];
        let a = coeffs.a.at(*x);
        let b = coeffs.b.at(*x);
        let c = coeffs.c.at(*x);
        for i in 0..3 {
            for j in 0..3 {
                out.diffusion[i][j] += w * (a * g[j]).dot(&g[i]);
                out.advection_b[i][j] += w * b.dot(&g[j]) * bary[i];
                out.advection_c[i][j] += w * bary[j] * c.dot(&g[i]);
            }
        }
    }
    for i in 0..3 {
        for j in 0..3 {
            out.mass[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    out
}

/// The four coefficient slots of `K`, assembled separately.
#[derive(Clone, Debug)]
pub struct FormParts {
    pub diffusion: CsrMatrix<f64>,
    pub advection_b: CsrMatrix<f64>,
    pub advection_c: CsrMatrix<f64>,
    /// `d * M`.
    pub reaction: CsrMatrix<f64>,
}

#[derive(Clone, Debug)]
pub struct AssembledSystem {
    /// `K[(i, j)] = a(φ_j, φ_i)`.
    pub k: CsrMatrix<f64>,
    pub m: CsrMatrix<f64>,
    /// Boundary Gram matrix embedded in `n x n`.
    pub mb: CsrMatrix<f64>,
    /// `M` plus the identity-diffusion stiffness: the H¹ Gram matrix.
    pub h1_gram: CsrMatrix<f64>,
    pub parts: FormParts,
    pub interior_idx: Vec<usize>,
    /// Boundary nodes in loop order.
    pub boundary_idx: Vec<usize>,
    /// Boundary edges as `([a, b], length)`.
    pub boundary_edges: Vec<([usize; 2], f64)>,
    pub boundary_mass: BoundaryMass,
    pub quadrature_order: u32,
    pub coefficients: CoefficientSet,
    /// Sampled coefficient sup norms on this mesh.
    pub sup_norms: SupNorms,
}

impl AssembledSystem {
    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// `b == c`: then `K` is symmetric and the boundary operator self-adjoint.
    pub fn is_self_adjoint(&self) -> bool {
        self.coefficients.is_symmetric()
    }

    /// `K - lambda M`.
    pub fn shifted(&self, lambda: f64) -> CsrMatrix<f64> {
        axpby(1.0, &self.k, -lambda, &self.m)
    }

    /// Boundary block of `Mb`, boundary loop order.
    pub fn mb_boundary(&self) -> CsrMatrix<f64> {
        submatrix(&self.mb, &self.boundary_idx, &self.boundary_idx)
    }
}

pub fn assemble(mesh: &Mesh, coeffs: &CoefficientSet) -> Result<AssembledSystem> {
    assemble_with(mesh, coeffs, AssemblyOptions::default())
}

pub fn assemble_with(mesh: &Mesh, coeffs: &CoefficientSet, opts: AssemblyOptions) -> Result<AssembledSystem> {
    let n = mesh.num_vertices();
    for t in 0..mesh.triangles.len() {
        let area = mesh.triangle_area(t);
        if !(area >= MIN_AREA) {
            return Err(Error::DegenerateTriangle { triangle: t, area });
        }
    }
    let laplace = CoefficientSet::laplace();
    let needs_identity = coeffs.a != Diffusion::Identity;
    // element loop may run in parallel; triplets are pushed in element order
    let locals: Vec<(LocalForm, Option<LocalForm>)> = mesh
        .triangles
        .par_iter()
        .map(|tri| {
            let p = tri.map(|v| mesh.vertices[v]);
            let own = local_form(p, coeffs);
            let id = needs_identity.then(|| local_form(p, &laplace));
            (own, id)
        })
        .collect();

    let cap = 9 * mesh.triangles.len();
    let mut diff = Vec::with_capacity(cap);
    let mut adv_b = Vec::with_capacity(cap);
    let mut adv_c = Vec::with_capacity(cap);
    let mut mass = Vec::with_capacity(cap);
    let mut lap = Vec::with_capacity(if needs_identity { cap } else { 0 });
    for (tri, (local, id)) in mesh.triangles.iter().zip(&locals) {
        for i in 0..3 {
            for j in 0..3 {
                let (r, c) = (tri[i], tri[j]);
                diff.push((r, c, local.diffusion[i][j]));
                adv_b.push((r, c, local.advection_b[i][j]));
                adv_c.push((r, c, local.advection_c[i][j]));
                mass.push((r, c, local.mass[i][j]));
                if let Some(id) = id {
                    lap.push((r, c, id.diffusion[i][j]));
                }
            }
        }
    }
    let diffusion = from_triplets(n, &diff);
    let m = from_triplets(n, &mass);
    let reaction = &m * coeffs.d;
    let advection_b = from_triplets(n, &adv_b);
    let advection_c = from_triplets(n, &adv_c);
    let mut k = axpby(1.0, &diffusion, 1.0, &reaction);
    if coeffs.b != VectorField::Zero {
        k = axpby(1.0, &k, 1.0, &advection_b);
    }
    if coeffs.c != VectorField::Zero {
        k = axpby(1.0, &k, 1.0, &advection_c);
    }
    let identity_stiffness = if needs_identity { from_triplets(n, &lap) } else { diffusion.clone() };
    let h1_gram = axpby(1.0, &m, 1.0, &identity_stiffness);

    let boundary_edges: Vec<([usize; 2], f64)> =
        mesh.boundary_edges.iter().map(|&[a, b]| ([a, b], (mesh.vertices[b] - mesh.vertices[a]).norm())).collect();
    let mb = boundary_mass_matrix(n, &boundary_edges, opts.boundary_mass, None);

    Ok(AssembledSystem {
        k,
        m,
        mb,
        h1_gram,
        parts: FormParts { diffusion, advection_b, advection_c, reaction },
        interior_idx: mesh.interior_nodes(),
        boundary_idx: mesh.boundary_nodes.clone(),
        boundary_edges,
        boundary_mass: opts.boundary_mass,
        quadrature_order: 2,
        coefficients: coeffs.clone(),
        sup_norms: coeffs.sup_norms(mesh),
    })
}

/// `∫_∂Ω β φ_j φ_i` with `β` piecewise linear from nodal values (`None`
/// means `β = 1`). Products of three linears are integrated exactly.
fn boundary_mass_matrix(
    n: usize,
    edges: &[([usize; 2], f64)],
    kind: BoundaryMass,
    beta: Option<&dyn Fn(usize) -> f64>,
) -> CsrMatrix<f64> {
    let mut t = Vec::with_capacity(4 * edges.len());
    for &([a, b], len) in edges {
        let (ba, bb) = match beta {
            Some(f) => (f(a), f(b)),
            None => (1.0, 1.0),
        };
        match kind {
            BoundaryMass::Consistent => {
                t.push((a, a, len * (ba / 4.0 + bb / 12.0)));
                t.push((b, b, len * (ba / 12.0 + bb / 4.0)));
                let off = len * (ba + bb) / 12.0;
                t.push((a, b, off));
                t.push((b, a, off));
            }
            BoundaryMass::Lumped => {
                t.push((a, a, len * ba / 2.0));
                t.push((b, b, len * bb / 2.0));
            }
        }
    }
    from_triplets(n, &t)
}

/// Robin coefficient on the boundary.
#[derive(Clone, Debug, PartialEq)]
pub enum Beta {
    Constant(f64),
    /// Values at the boundary nodes, in boundary loop order.
    PerNode(Vec<f64>),
}

#[derive(Clone, Debug)]
pub struct RobinSystem {
    /// `K + ∫_∂Ω β φ_j φ_i`.
    pub kbeta: CsrMatrix<f64>,
    pub beta: Beta,
}

pub fn assemble_robin(sys: &AssembledSystem, beta: Beta) -> Result<RobinSystem> {
    let term = match &beta {
        Beta::Constant(v) => &sys.mb * *v,
        Beta::PerNode(values) => {
            if values.len() != sys.boundary_idx.len() {
                return Err(Error::LengthMismatch { expected: sys.boundary_idx.len(), got: values.len() });
            }
            let mut nodal = vec![0.0; sys.dim()];
            for (&node, &v) in sys.boundary_idx.iter().zip(values) {
                nodal[node] = v;
            }
            let f = move |i: usize| nodal[i];
            boundary_mass_matrix(sys.dim(), &sys.boundary_edges, sys.boundary_mass, Some(&f))
        }
    };
    Ok(RobinSystem { kbeta: axpby(1.0, &sys.k, 1.0, &term), beta })
}

/// Interior blocks `(K_II, M_II)`: the discrete Dirichlet realization.
pub fn dirichlet_blocks(sys: &AssembledSystem) -> Result<(CsrMatrix<f64>, CsrMatrix<f64>)> {
    if sys.interior_idx.is_empty() {
        return Err(Error::EmptyInterior);
    }
    Ok((
        submatrix(&sys.k, &sys.interior_idx, &sys.interior_idx),
        submatrix(&sys.m, &sys.interior_idx, &sys.interior_idx),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::preset;
    use crate::linalg::sparse::{asymmetry, spmv, to_dense};
    use crate::mesh::{generate, Shape};
    use nalgebra::DVector;

    fn unit_triangle() -> [Point2<f64>; 3] {
        [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
    }

    fn close(a: [[f64; 3]; 3], b: [[f64; 3]; 3]) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() < 1e-15))
    }

    #[test]
    fn unit_triangle_stiffness_and_mass() {
        let f = local_form(unit_triangle(), &CoefficientSet::laplace());
        assert!(close(f.diffusion, [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]]));
        let s = 1.0 / 24.0;
        assert!(close(f.mass, [[2.0 * s, s, s], [s, 2.0 * s, s], [s, s, 2.0 * s]]));
    }

    #[test]
    fn unit_triangle_constant_advection() {
        let c = CoefficientSet::laplace().with_advection(VectorField::Constant(1.0, 0.0), VectorField::Zero);
        let f = local_form(unit_triangle(), &c);
        let row = [-1.0 / 6.0, 1.0 / 6.0, 0.0];
        assert!(close(f.advection_b, [row, row, row]));
        // the c slot is the transpose pattern: u (c . grad v)
        let c = CoefficientSet::laplace().with_advection(VectorField::Zero, VectorField::Constant(1.0, 0.0));
        let f = local_form(unit_triangle(), &c);
        let col = [[-1.0 / 6.0; 3], [1.0 / 6.0; 3], [0.0; 3]];
        assert!(close(f.advection_c, col));
    }

    #[test]
    fn constants_in_kernel_and_symmetric() {
        let mesh = generate(Shape::Disk, 0.2).unwrap();
        let sys = assemble(&mesh, &CoefficientSet::laplace()).unwrap();
        let ones = DVector::from_element(sys.dim(), 1.0);
        assert!(spmv(&sys.k, &ones).amax() < 1e-10);
        assert!(asymmetry(&sys.k) < 1e-12);
        assert_eq!(sys.interior_idx.len() + sys.boundary_idx.len(), sys.dim());
        // boundary mass integrates 1 to the perimeter
        let total: f64 = spmv(&sys.mb, &ones).sum();
        assert!((total - mesh.boundary_length()).abs() < 1e-12);
        let total_m: f64 = spmv(&sys.m, &ones).sum();
        assert!((total_m - mesh.total_area()).abs() < 1e-12);
    }

    #[test]
    fn self_adjoint_case_is_symmetric() {
        let mesh = generate(Shape::Disk, 0.2).unwrap();
        let sys = assemble(&mesh, &preset("rotational+constant_d", &[2.0, 0.5]).unwrap()).unwrap();
        assert!(asymmetry(&sys.k) < 1e-12);
        let skew = assemble(&mesh, &preset("skew_stream", &[1.0]).unwrap()).unwrap();
        assert!(asymmetry(&skew.k) > 1e-3);
    }

    #[test]
    fn slots_are_additive() {
        let mesh = generate(Shape::Square, 0.2).unwrap();
        let c = preset("scaled_identity+skew_stream+constant_d", &[2.0, 0.7, 0.3]).unwrap();
        let sys = assemble(&mesh, &c).unwrap();
        let p = &sys.parts;
        let sum = axpby(1.0, &axpby(1.0, &p.diffusion, 1.0, &p.advection_b), 1.0, &p.reaction);
        assert!((to_dense(&sum) - to_dense(&sys.k)).amax() < 1e-14);
        let lap = assemble(&mesh, &CoefficientSet::laplace()).unwrap();
        assert!((to_dense(&p.diffusion) - to_dense(&lap.k) * 2.0).amax() < 1e-13);
    }

    #[test]
    fn divergence_free_advection_is_nearly_skew() {
        // with c = 0 the advection block satisfies A + A^T -> 0 as h -> 0
        let c = preset("skew_stream", &[1.0]).unwrap();
        let mut prev = f64::INFINITY;
        for h in [0.1, 0.05, 0.025] {
            let mesh = generate(Shape::Square, h).unwrap();
            let sys = assemble(&mesh, &c).unwrap();
            let a = &sys.parts.advection_b;
            let sym = crate::linalg::sparse::max_abs(&axpby(1.0, a, 1.0, &a.transpose()));
            let scale = crate::linalg::sparse::max_abs(a);
            let rel = sym / scale;
            assert!(rel < 0.6 * prev, "h = {h}: {rel} vs {prev}");
            prev = rel;
        }
        assert!(prev < 0.05);
    }

    #[test]
    fn robin_terms() {
        let mesh = generate(Shape::Disk, 0.3).unwrap();
        let sys = assemble(&mesh, &CoefficientSet::laplace()).unwrap();
        let zero = assemble_robin(&sys, Beta::Constant(0.0)).unwrap();
        assert_eq!(to_dense(&zero.kbeta), to_dense(&sys.k));
        let one = assemble_robin(&sys, Beta::Constant(1.0)).unwrap();
        assert_eq!(to_dense(&one.kbeta), to_dense(&sys.k) + to_dense(&sys.mb));
        assert!((to_dense(&one.kbeta) - to_dense(&sys.k) - to_dense(&sys.mb)).amax() < 1e-15);
        // per-node constant reproduces the scalar case
        let m = sys.boundary_idx.len();
        let pn = assemble_robin(&sys, Beta::PerNode(vec![2.5; m])).unwrap();
        let c = assemble_robin(&sys, Beta::Constant(2.5)).unwrap();
        assert!((to_dense(&pn.kbeta) - to_dense(&c.kbeta)).amax() < 1e-15);
        assert!(matches!(assemble_robin(&sys, Beta::PerNode(vec![1.0; m + 1])), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn robin_difference_lives_on_boundary() {
        let mesh = generate(Shape::Square, 0.25).unwrap();
        let sys = assemble(&mesh, &CoefficientSet::laplace()).unwrap();
        let m = sys.boundary_idx.len();
        let beta: Vec<f64> = (0..m).map(|i| (i as f64).cos()).collect();
        let r = assemble_robin(&sys, Beta::PerNode(beta)).unwrap();
        let diff = to_dense(&r.kbeta) - to_dense(&sys.k);
        for &i in &sys.interior_idx {
            assert!(diff.row(i).amax() == 0.0 && diff.column(i).amax() == 0.0);
        }
    }

    #[test]
    fn coarse_dirichlet_block() {
        let mesh = generate(Shape::Square, 0.5).unwrap();
        let sys = assemble(&mesh, &CoefficientSet::laplace()).unwrap();
        let (kii, mii) = dirichlet_blocks(&sys).unwrap();
        assert_eq!((kii.nrows(), mii.nrows()), (1, 1));
        let mesh = generate(Shape::Square, 1.0).unwrap();
        let sys = assemble(&mesh, &CoefficientSet::laplace()).unwrap();
        assert!(matches!(dirichlet_blocks(&sys), Err(Error::EmptyInterior)));
    }

    #[test]
    fn lumped_boundary_mass_is_diagonal() {
        let mesh = generate(Shape::Disk, 0.3).unwrap();
        let sys =
            assemble_with(&mesh, &CoefficientSet::laplace(), AssemblyOptions { boundary_mass: BoundaryMass::Lumped })
                .unwrap();
        let d = to_dense(&sys.mb);
        assert_eq!(
            d.clone() - nalgebra::DMatrix::from_diagonal(&d.diagonal()),
            nalgebra::DMatrix::zeros(d.nrows(), d.ncols())
        );
    }
}
