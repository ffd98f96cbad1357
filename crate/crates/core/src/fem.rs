//! P1 discretisation of the form
//! `q[u] = int |grad u|^2 - int_{axes} sigma |u|^2`
//! with Dirichlet elimination on the walls (and, optionally, on the
//! truncation cut).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, Mesh, TruncationBc};
use crate::sigma::SigmaProfile;
use crate::sparse::{SparseSymMatrix, TripletBuilder};

pub type Point = [f64; 2];

fn signed_double_area(p: &[Point; 3]) -> f64 {
    (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])
}

fn checked_area(p: &[Point; 3]) -> Result<f64> {
    let a2 = signed_double_area(p);
    let scale = (0..3)
        .map(|k| {
            let (u, v) = (p[k], p[(k + 1) % 3]);
            (v[0] - u[0]).powi(2) + (v[1] - u[1]).powi(2)
        })
        .fold(0.0, f64::max);
    if a2.abs() <= 1e-12 * scale || scale == 0.0 {
        return Err(Error::DegenerateTriangle { area: 0.5 * a2 });
    }
    Ok(0.5 * a2.abs())
}

/// Element matrix of `int grad phi_i . grad phi_j`.
pub fn local_stiffness(p: &[Point; 3]) -> Result<[[f64; 3]; 3]> {
    let area = checked_area(p)?;
    let b = [
        p[1][1] - p[2][1],
        p[2][1] - p[0][1],
        p[0][1] - p[1][1],
    ];
    let c = [
        p[2][0] - p[1][0],
        p[0][0] - p[2][0],
        p[1][0] - p[0][0],
    ];
    let mut k = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = (b[i] * b[j] + c[i] * c[j]) / (4.0 * area);
        }
    }
    Ok(k)
}

/// Element matrix of `int phi_i phi_j`: `(area / 12) [[2,1,1],[1,2,1],[1,1,2]]`.
pub fn local_mass(p: &[Point; 3]) -> Result<[[f64; 3]; 3]> {
    let area = checked_area(p)?;
    let mut m = [[area / 12.0; 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = area / 6.0;
    }
    Ok(m)
}

/// Edge matrix of `int sigma phi_i phi_j` along a Robin edge.
///
/// On `RobinX` edges (`x = 0`) the profile is evaluated at `y`, on `RobinY`
/// edges at `x`. Non-constant profiles are integrated with two-point Gauss
/// rules on each smooth piece of the edge, which is exact for piecewise
/// linear `sigma`.
pub fn local_robin(a: Point, b: Point, tag: BoundaryTag, profile: &SigmaProfile) -> Result<[[f64; 2]; 2]> {
    let axis = match tag {
        BoundaryTag::RobinX => 1,
        BoundaryTag::RobinY => 0,
        other => return Err(Error::WrongTag(other.name())),
    };
    let len = (b[0] - a[0]).hypot(b[1] - a[1]);
    if let SigmaProfile::Constant { value } = profile {
        let s = value * len / 6.0;
        return Ok([[2.0 * s, s], [s, 2.0 * s]]);
    }

    let (ca, cb) = (a[axis], b[axis]);
    let (lo, hi) = (ca.min(cb), ca.max(cb));
    let mut cuts = vec![0.0];
    cuts.extend(profile.kinks_between(lo, hi).into_iter().map(|y| (y - ca) / (cb - ca)));
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);

    let g = 0.5 / 3f64.sqrt();
    let mut m = [[0.0; 2]; 2];
    for w in cuts.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let half = 0.5 * (s1 - s0);
        let mid = 0.5 * (s0 + s1);
        for s in [mid - 2.0 * g * half, mid + 2.0 * g * half] {
            let sigma = profile.eval_clamped(ca + s * (cb - ca));
            let phi = [1.0 - s, s];
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += half * len * sigma * phi[i] * phi[j];
                }
            }
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConstraintReason {
    DirichletDiag,
    Truncation,
    Wall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofStatus {
    Free(usize),
    Constrained(ConstraintReason),
}

/// Vertex-to-unknown map. Vertices on Dirichlet edges are eliminated;
/// a vertex shared by a Robin edge and a Dirichlet edge is constrained.
#[derive(Debug, Clone)]
pub struct DofMap {
    status: Vec<DofStatus>,
    free: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, truncation_bc: TruncationBc) -> Self {
        let n = mesh.n_vertices();
        let mut reason: Vec<Option<ConstraintReason>> = vec![None; n];
        let rank = |r: ConstraintReason| match r {
            ConstraintReason::DirichletDiag | ConstraintReason::Wall => 2,
            ConstraintReason::Truncation => 1,
        };
        for e in &mesh.boundary_edges {
            let r = match e.tag {
                BoundaryTag::DirichletDiag => ConstraintReason::DirichletDiag,
                BoundaryTag::Wall => ConstraintReason::Wall,
                BoundaryTag::Truncation if truncation_bc == TruncationBc::Dirichlet => {
                    ConstraintReason::Truncation
                }
                _ => continue,
            };
            for v in e.vertices {
                if reason[v].is_none_or(|old| rank(r) > rank(old)) {
                    reason[v] = Some(r);
                }
            }
        }
        let mut free = Vec::new();
        let status = reason
            .into_iter()
            .enumerate()
            .map(|(v, r)| match r {
                Some(r) => DofStatus::Constrained(r),
                None => {
                    free.push(v);
                    DofStatus::Free(free.len() - 1)
                }
            })
            .collect();
        DofMap { status, free }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.status.len()
    }

    pub fn status(&self, vertex: usize) -> DofStatus {
        self.status[vertex]
    }

    /// Free vertices in unknown order.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Scatter a vector of free unknowns onto all vertices (zero on constrained ones).
    pub fn expand(&self, u: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.status.len()];
        for (k, &v) in self.free.iter().enumerate() {
            full[v] = u[k];
        }
        full
    }
}

/// Matrices over all mesh vertices, before Dirichlet elimination.
#[derive(Debug, Clone)]
pub struct FullForm {
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    pub robin: SparseSymMatrix,
}

/// Matrices restricted to free unknowns; `form = stiffness - robin`.
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub stiffness: SparseSymMatrix,
    pub mass: SparseSymMatrix,
    pub robin: SparseSymMatrix,
    pub form: SparseSymMatrix,
}

impl DiscreteForm {
    /// Build directly from a form/mass pair (used by solver tests and oracles).
    pub fn from_pair(form: SparseSymMatrix, mass: SparseSymMatrix) -> Self {
        let n = form.dim();
        DiscreteForm {
            stiffness: form.clone(),
            mass,
            robin: SparseSymMatrix::zeros(n),
            form,
        }
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// Rayleigh quotient `x^T K x / x^T M x`.
    pub fn rayleigh(&self, x: &[f64]) -> f64 {
        self.form.quad_form(x) / self.mass.quad_form(x)
    }
}

fn robin_extent(mesh: &Mesh) -> f64 {
    mesh.boundary_edges
        .iter()
        .filter(|e| e.tag.is_robin())
        .flat_map(|e| e.vertices)
        .map(|v| mesh.vertices[v][0].max(mesh.vertices[v][1]))
        .fold(0.0, f64::max)
}

pub fn assemble_full(mesh: &Mesh, profile: &SigmaProfile) -> Result<FullForm> {
    let n = mesh.n_vertices();
    let extent = robin_extent(mesh);
    if let Some(d) = profile.extent() {
        if extent > 0.0 && (d - extent).abs() > 1e-9 * extent {
            return Err(Error::RangeMismatch { lo: 0.0, hi: d, d: extent });
        }
    }

    let mut a = TripletBuilder::new(n);
    let mut m = TripletBuilder::new(n);
    for tri in &mesh.triangles {
        let p = tri.map(|v| mesh.vertices[v]);
        let ke = local_stiffness(&p)?;
        let me = local_mass(&p)?;
        for i in 0..3 {
            for j in 0..3 {
                a.push(tri[i], tri[j], ke[i][j]);
                m.push(tri[i], tri[j], me[i][j]);
            }
        }
    }
    let mut b = TripletBuilder::new(n);
    for e in mesh.boundary_edges.iter().filter(|e| e.tag.is_robin()) {
        let [u, v] = e.vertices;
        let be = local_robin(mesh.vertices[u], mesh.vertices[v], e.tag, profile)?;
        let ids = [u, v];
        for i in 0..2 {
            for j in 0..2 {
                b.push(ids[i], ids[j], be[i][j]);
            }
        }
    }
    Ok(FullForm {
        stiffness: a.build(),
        mass: m.build(),
        robin: b.build(),
    })
}

/// Assemble and eliminate constrained vertices.
pub fn assemble(mesh: &Mesh, profile: &SigmaProfile, dofs: &DofMap) -> Result<DiscreteForm> {
    if dofs.n_vertices() != mesh.n_vertices() {
        return Err(Error::InvalidInput(format!(
            "dof map covers {} vertices, mesh has {}",
            dofs.n_vertices(),
            mesh.n_vertices()
        )));
    }
    let full = assemble_full(mesh, profile)?;
    let keep = dofs.free_vertices();
    let stiffness = full.stiffness.submatrix(keep);
    let mass = full.mass.submatrix(keep);
    let robin = full.robin.submatrix(keep);
    let form = SparseSymMatrix::lin_comb(1.0, &stiffness, -1.0, &robin);
    Ok(DiscreteForm {
        stiffness,
        mass,
        robin,
        form,
    })
}
