//! Structured triangulations of the truncated band
//! `{(x, y) : x, y >= 0, |x - y| <= d, x + y <= 2L}` and of the auxiliary
//! reference domains (rectangle, L-shape) used as oracles.
//!
//! Every mesh lives on the square lattice `(i h, j h)`. Each lattice cell is
//! split along its diagonal parallel to `y = x`, so the walls `|x - y| = d`
//! are unions of mesh edges whenever `h` divides `d`. A triangle is kept only
//! if all three of its vertices are inside the domain; the truncation cut
//! `x + y = 2L` is therefore realised as a lattice staircase.

use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Artificial boundary condition imposed on the truncation cut.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TruncationBc {
    #[default]
    Dirichlet,
    Neumann,
}

/// Parameters of the truncated, discretised band.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    /// Molecule size; the band is `|x - y| <= d`.
    pub d: f64,
    /// Truncation parameter; vertices satisfy `x + y <= 2L`.
    #[serde(rename = "L")]
    pub length: f64,
    /// Lattice pitch. Must divide both `d` and `L`.
    pub h: f64,
    pub truncation_bc: TruncationBc,
}

fn integral_ratio(value: f64, h: f64, what: &'static str) -> Result<usize> {
    let r = value / h;
    let n = r.round();
    if n < 1.0 || (r - n).abs() > 1e-9 * r.max(1.0) {
        return Err(Error::NonIntegerPitch { h, what, value });
    }
    Ok(n as usize)
}

impl DomainSpec {
    pub fn new(d: f64, length: f64, h: f64, truncation_bc: TruncationBc) -> Result<Self> {
        let spec = DomainSpec {
            d,
            length,
            h,
            truncation_bc,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidInput(format!("d must be positive, got {}", self.d)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidInput(format!("h must be positive, got {}", self.h)));
        }
        if !(self.length > self.d) {
            return Err(Error::DegenerateDomain(format!(
                "L = {} must exceed d = {}",
                self.length, self.d
            )));
        }
        let m = integral_ratio(self.d, self.h, "d")?;
        let n = integral_ratio(self.length, self.h, "L")?;
        if n < 2 * m {
            return Err(Error::DegenerateDomain(format!(
                "L = {} must be at least 2d = {}",
                self.length,
                2.0 * self.d
            )));
        }
        Ok(())
    }

    /// Band half-width `m = d / h` in lattice steps.
    pub fn half_width_steps(&self) -> usize {
        (self.d / self.h).round() as usize
    }

    /// `n = L / h`; vertices satisfy `i + j <= 2n`.
    pub fn truncation_steps(&self) -> usize {
        (self.length / self.h).round() as usize
    }

    pub fn with_length(&self, length: f64) -> Self {
        DomainSpec { length, ..*self }
    }

    pub fn with_truncation(&self, truncation_bc: TruncationBc) -> Self {
        DomainSpec {
            truncation_bc,
            ..*self
        }
    }

    /// Dilate every length by `alpha`.
    pub fn dilated(&self, alpha: f64) -> Self {
        DomainSpec {
            d: self.d * alpha,
            length: self.length * alpha,
            h: self.h * alpha,
            truncation_bc: self.truncation_bc,
        }
    }
}

/// Same domain, pitch halved.
pub fn refine(spec: &DomainSpec) -> DomainSpec {
    DomainSpec {
        h: spec.h / 2.0,
        ..*spec
    }
}

/// Role of a boundary edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryTag {
    /// On the segment `x = 0, 0 <= y <= d`.
    RobinX,
    /// On the segment `y = 0, 0 <= x <= d`.
    RobinY,
    /// On one of the walls `|x - y| = d`.
    DirichletDiag,
    /// On the artificial truncation cut.
    Truncation,
    /// Dirichlet wall of an auxiliary reference domain.
    Wall,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::RobinX => "RobinX",
            BoundaryTag::RobinY => "RobinY",
            BoundaryTag::DirichletDiag => "DirichletDiag",
            BoundaryTag::Truncation => "Truncation",
            BoundaryTag::Wall => "Wall",
        }
    }

    pub fn is_robin(self) -> bool {
        matches!(self, BoundaryTag::RobinX | BoundaryTag::RobinY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    /// Endpoints, oriented counterclockwise with respect to the owning triangle.
    pub vertices: [usize; 2],
    pub tag: BoundaryTag,
}

/// Lattice triangulation. Immutable once built.
#[derive(Debug, Clone)]
pub struct Mesh {
    pub pitch: f64,
    pub vertices: Vec<[f64; 2]>,
    /// Lattice indices `(i, j)` with `x = i h`, `y = j h`.
    pub grid: Vec<[usize; 2]>,
    /// Counterclockwise triples; the first vertex carries the right angle.
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
}

fn build_lattice(
    h: f64,
    extent: usize,
    inside: impl Fn(usize, usize) -> bool,
    classify: impl Fn([usize; 2], [usize; 2]) -> BoundaryTag,
) -> Mesh {
    let mut grid = Vec::new();
    let mut index = HashMap::new();
    // Anti-diagonal order keeps the band matrices narrow.
    for s in 0..=2 * extent {
        for i in 0..=s.min(extent) {
            let j = s - i;
            if j <= extent && inside(i, j) {
                index.insert([i, j], grid.len());
                grid.push([i, j]);
            }
        }
    }

    let mut triangles = Vec::new();
    for &[i, j] in &grid {
        let lower = [[i + 1, j], [i + 1, j + 1], [i, j]];
        let upper = [[i, j + 1], [i, j], [i + 1, j + 1]];
        for tri in [lower, upper] {
            let ids: Option<Vec<usize>> = tri.iter().map(|v| index.get(v).copied()).collect();
            if let Some(ids) = ids {
                triangles.push([ids[0], ids[1], ids[2]]);
            }
        }
    }

    let mut seen: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    let mut order = Vec::new();
    for (t, tri) in triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            let entry = seen.entry(key).or_insert_with(|| {
                order.push((a, b));
                (0, t)
            });
            entry.0 += 1;
        }
    }
    let boundary_edges = order
        .into_iter()
        .filter(|&(a, b)| seen[&(a.min(b), a.max(b))].0 == 1)
        .map(|(a, b)| BoundaryEdge {
            vertices: [a, b],
            tag: classify(grid[a], grid[b]),
        })
        .collect();

    let vertices = grid
        .iter()
        .map(|&[i, j]| [i as f64 * h, j as f64 * h])
        .collect();

    Mesh {
        pitch: h,
        vertices,
        grid,
        triangles,
        boundary_edges,
    }
}

/// Triangulate the truncated band described by `spec`.
pub fn build_mesh(spec: &DomainSpec) -> Result<Mesh> {
    spec.validate()?;
    let m = spec.half_width_steps();
    let n = spec.truncation_steps();
    let inside = |i: usize, j: usize| i.abs_diff(j) <= m && i + j <= 2 * n;
    let classify = |a: [usize; 2], b: [usize; 2]| {
        if a[0] == 0 && b[0] == 0 {
            BoundaryTag::RobinX
        } else if a[1] == 0 && b[1] == 0 {
            BoundaryTag::RobinY
        } else if a[0] != b[0] && a[1] != b[1] && a[0].abs_diff(a[1]) == m && b[0].abs_diff(b[1]) == m
        {
            BoundaryTag::DirichletDiag
        } else {
            BoundaryTag::Truncation
        }
    };
    Ok(build_lattice(spec.h, 2 * n, inside, classify))
}

/// Axis-aligned rectangle `[0, nx h] x [0, ny h]` with Dirichlet walls.
pub fn rectangle_mesh(nx: usize, ny: usize, h: f64) -> Result<Mesh> {
    if nx == 0 || ny == 0 || !(h > 0.0) {
        return Err(Error::DegenerateDomain(format!(
            "rectangle needs positive cell counts and pitch, got {nx} x {ny}, h = {h}"
        )));
    }
    Ok(build_lattice(
        h,
        nx.max(ny),
        |i, j| i <= nx && j <= ny,
        |_, _| BoundaryTag::Wall,
    ))
}

/// L-shaped waveguide made of two perpendicular strips of width `width h`,
/// each cut at `arm h`. Outer walls are tagged `Wall`, the two cuts
/// `Truncation`.
pub fn lshape_mesh(width: usize, arm: usize, h: f64) -> Result<Mesh> {
    if width == 0 || arm <= width || !(h > 0.0) {
        return Err(Error::DegenerateDomain(format!(
            "L-shape needs 0 < width < arm, got width {width}, arm {arm}"
        )));
    }
    let inside = |i: usize, j: usize| (j <= width && i <= arm) || (i <= width && j <= arm);
    let classify = move |a: [usize; 2], b: [usize; 2]| {
        if (a[0] == arm && b[0] == arm) || (a[1] == arm && b[1] == arm) {
            BoundaryTag::Truncation
        } else {
            BoundaryTag::Wall
        }
    };
    Ok(build_lattice(h, arm, inside, classify))
}

/// Sum of the lengths of edges carrying `tag`.
pub fn boundary_length(mesh: &Mesh, tag: BoundaryTag) -> f64 {
    mesh.boundary_edges
        .iter()
        .filter(|e| e.tag == tag)
        .map(|e| mesh.edge_length(e.vertices))
        .sum()
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_length(&self, [a, b]: [usize; 2]) -> f64 {
        let (p, q) = (self.vertices[a], self.vertices[b]);
        (q[0] - p[0]).hypot(q[1] - p[1])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t].map(|v| self.vertices[v]);
        0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
    }

    pub fn area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// Enclosed area from the oriented boundary (Green's theorem).
    pub fn boundary_area(&self) -> f64 {
        self.boundary_edges
            .iter()
            .map(|e| {
                let (p, q) = (self.vertices[e.vertices[0]], self.vertices[e.vertices[1]]);
                0.5 * (p[0] * q[1] - q[0] * p[1])
            })
            .sum()
    }

    /// Lumped (row-sum) vertex masses: a third of each adjacent triangle's area.
    pub fn lumped_mass(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.vertices.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &v in tri {
                w[v] += a;
            }
        }
        w
    }

    /// Permutation induced by `(x, y) -> (y, x)`, if the vertex set is
    /// invariant under it.
    pub fn swap_permutation(&self) -> Option<Vec<usize>> {
        let index: HashMap<[usize; 2], usize> =
            self.grid.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        self.grid
            .iter()
            .map(|&[i, j]| index.get(&[j, i]).copied())
            .collect()
    }

    /// Plain-text listing: `vertex`, `triangle` and `edge` records, one per line.
    pub fn write_listing<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# {} vertices, {} triangles, {} boundary edges, pitch {:.17e}",
            self.vertices.len(),
            self.triangles.len(),
            self.boundary_edges.len(),
            self.pitch
        )?;
        for (k, p) in self.vertices.iter().enumerate() {
            writeln!(out, "vertex {k} {:.17e} {:.17e}", p[0], p[1])?;
        }
        for (k, t) in self.triangles.iter().enumerate() {
            writeln!(out, "triangle {k} {} {} {}", t[0], t[1], t[2])?;
        }
        for (k, e) in self.boundary_edges.iter().enumerate() {
            writeln!(
                out,
                "edge {k} {} {} {}",
                e.vertices[0],
                e.vertices[1],
                e.tag.name()
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn band(d: f64, l: f64, h: f64) -> Mesh {
        build_mesh(&DomainSpec::new(d, l, h, TruncationBc::Dirichlet).unwrap()).unwrap()
    }

    fn lattice_count(m: usize, n: usize) -> usize {
        let mut count = 0;
        for i in 0..=2 * n {
            for j in 0..=2 * n {
                if i.abs_diff(j) <= m && i + j <= 2 * n {
                    count += 1;
                }
            }
        }
        count
    }

    #[test]
    fn smallest_band_by_hand() {
        let mesh = band(1.0, 2.0, 1.0);
        let got: BTreeSet<[usize; 2]> = mesh.grid.iter().copied().collect();
        let want: BTreeSet<[usize; 2]> =
            [[0, 0], [0, 1], [1, 0], [1, 1], [1, 2], [2, 1], [2, 2]].into_iter().collect();
        assert_eq!(got, want);
        assert_eq!(mesh.triangles.len(), 6);
    }

    #[test]
    fn half_pitch_vertex_count() {
        let mesh = band(1.0, 2.0, 0.5);
        assert_eq!(mesh.n_vertices(), lattice_count(2, 4));
    }

    #[test]
    fn rejects_bad_pitch_and_length() {
        assert!(matches!(
            DomainSpec::new(1.0, 3.0, 0.3, TruncationBc::Dirichlet),
            Err(Error::NonIntegerPitch { .. })
        ));
        assert!(matches!(
            DomainSpec::new(1.0, 1.0, 0.5, TruncationBc::Dirichlet),
            Err(Error::DegenerateDomain(_))
        ));
        assert!(matches!(
            DomainSpec::new(1.0, 1.5, 0.5, TruncationBc::Dirichlet),
            Err(Error::DegenerateDomain(_))
        ));
    }

    #[test]
    fn boundary_lengths() {
        let mesh = band(1.0, 2.0, 1.0);
        assert!((boundary_length(&mesh, BoundaryTag::RobinX) - 1.0).abs() < 1e-14);
        assert!((boundary_length(&mesh, BoundaryTag::RobinY) - 1.0).abs() < 1e-14);
        assert!((boundary_length(&mesh, BoundaryTag::DirichletDiag) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert_eq!(boundary_length(&mesh, BoundaryTag::Wall), 0.0);
    }

    #[test]
    fn diagonal_length_matches_clipping() {
        // Each wall y = x +- d runs from the axis to the last lattice point
        // with i + j <= 2n, i.e. floor((2n - m) / 2) diagonal steps.
        for (d, l, h) in [(1.0, 4.0, 0.25), (1.0, 3.0, 0.5), (0.5, 2.0, 0.125), (2.0, 5.0, 0.5)] {
            let mesh = band(d, l, h);
            let m = (d / h).round() as usize;
            let n = (l / h).round() as usize;
            let steps = ((2 * n - m) / 2) as f64;
            let want = 2.0 * 2f64.sqrt() * h * steps;
            assert!((boundary_length(&mesh, BoundaryTag::DirichletDiag) - want).abs() < 1e-12 * want);
        }
    }

    #[test]
    fn refine_halves_pitch_only() {
        let spec = DomainSpec::new(1.0, 4.0, 0.5, TruncationBc::Dirichlet).unwrap();
        let once = refine(&spec);
        assert_eq!((once.d, once.length, once.h), (1.0, 4.0, 0.25));
        let twice = refine(&once);
        assert_eq!(twice.h, 0.125);
        assert_eq!(twice.half_width_steps() as f64 * twice.h, twice.d);
        twice.validate().unwrap();
    }

    #[test]
    fn triangles_are_ccw_right_isoceles() {
        let mesh = band(1.0, 3.0, 0.25);
        let h = mesh.pitch;
        for (t, tri) in mesh.triangles.iter().enumerate() {
            assert!((mesh.triangle_area(t) - 0.5 * h * h).abs() < 1e-15);
            let [a, b, c] = tri.map(|v| mesh.vertices[v]);
            let e1 = [b[0] - a[0], b[1] - a[1]];
            let e2 = [c[0] - a[0], c[1] - a[1]];
            assert!((e1[0] * e2[0] + e1[1] * e2[1]).abs() < 1e-15);
            assert!((e1[0].hypot(e1[1]) - h).abs() < 1e-15);
            assert!((e2[0].hypot(e2[1]) - h).abs() < 1e-15);
        }
    }

    #[test]
    fn reference_domains() {
        let rect = rectangle_mesh(4, 2, 0.5).unwrap();
        assert_eq!(rect.n_vertices(), 15);
        assert!((rect.area() - 2.0).abs() < 1e-14);
        assert!((boundary_length(&rect, BoundaryTag::Wall) - 6.0).abs() < 1e-14);

        let l = lshape_mesh(2, 6, 0.5).unwrap();
        assert!((l.area() - (2.0 * 3.0 * 1.0 - 1.0)).abs() < 1e-14);
        assert!((boundary_length(&l, BoundaryTag::Truncation) - 2.0).abs() < 1e-14);
        assert!((l.boundary_area() - l.area()).abs() < 1e-12);
        assert!(l.swap_permutation().is_some());
    }

    #[test]
    fn listing_has_one_record_per_item() {
        let mesh = band(1.0, 2.0, 1.0);
        let mut buf = Vec::new();
        mesh.write_listing(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().filter(|l| l.starts_with("vertex ")).count(), 7);
        assert_eq!(text.lines().filter(|l| l.starts_with("triangle ")).count(), 6);
        assert!(text.contains("DirichletDiag"));
    }

    fn band_params() -> impl Strategy<Value = (usize, usize)> {
        (1usize..=4).prop_flat_map(|m| (Just(m), (2 * m).max(2)..=8))
    }

    proptest! {
        #[test]
        fn vertex_count_matches_lattice((m, n) in band_params()) {
            let h = 0.25;
            let mesh = band(m as f64 * h, n as f64 * h, h);
            prop_assert_eq!(mesh.n_vertices(), lattice_count(m, n));
            for &[i, j] in &mesh.grid {
                prop_assert!(i.abs_diff(j) <= m && i + j <= 2 * n);
            }
        }

        #[test]
        fn areas_and_tags_consistent((m, n) in band_params()) {
            let h = 0.5;
            let d = m as f64 * h;
            let mesh = band(d, n as f64 * h, h);
            prop_assert!((mesh.area() - mesh.boundary_area()).abs() < 1e-12 * mesh.area());
            prop_assert!((boundary_length(&mesh, BoundaryTag::RobinX) - d).abs() < 1e-12);
            prop_assert!((boundary_length(&mesh, BoundaryTag::RobinY) - d).abs() < 1e-12);
            for e in &mesh.boundary_edges {
                if e.tag == BoundaryTag::DirichletDiag {
                    for v in e.vertices {
                        let [x, y] = mesh.vertices[v];
                        prop_assert!(((x - y).abs() - d).abs() <= 1e-12 * d);
                    }
                }
            }
        }

        #[test]
        fn swap_symmetric((m, n) in band_params()) {
            let mesh = band(m as f64, n as f64, 1.0);
            let perm = mesh.swap_permutation().expect("vertex set symmetric");
            let tris: BTreeSet<[usize; 3]> = mesh.triangles.iter().map(|t| {
                let mut s = *t; s.sort(); s
            }).collect();
            for t in &mesh.triangles {
                let mut s = t.map(|v| perm[v]);
                s.sort();
                prop_assert!(tris.contains(&s));
            }
        }
    }
}
