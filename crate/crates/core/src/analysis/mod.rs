//! Bound-state experiments built on mesh -> assembly -> eigensolve.

mod detect;
mod reference;
mod studies;

use serde::Serialize;

use crate::eigen::{smallest_eigenpairs, SolverOptions, SpectralResult};
use crate::error::Result;
use crate::fem::{assemble, DiscreteForm, DofMap};
use crate::geometry::{build_mesh, DomainSpec, Mesh, TruncationBc};
use crate::sigma::SigmaProfile;

pub use detect::{detect_bound_state, BoundStateVerdict, DetectOptions, LevelRecord, Verdict};
pub use reference::{lshape_direct_solve, lshape_study, rectangle_study, ReferenceStudy};
pub use studies::{
    convergence_study, essential_spectrum_probe, gamma_threshold_search, sigma_sweep, ConvergenceReport,
    ProbeReport, ProbeRow, SigmaFamily, SweepRow, SweepTable, ThresholdOptions, ThresholdReport, ThresholdStep,
};

/// A discretised problem together with its lowest eigenpairs.
#[derive(Debug, Clone)]
pub struct Solve {
    pub mesh: Mesh,
    pub dofs: DofMap,
    pub form: DiscreteForm,
    pub spectrum: SpectralResult,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub spec: DomainSpec,
    pub profile: SigmaProfile,
    pub n_vertices: usize,
    pub n_free: usize,
    pub threshold: f64,
    /// Share of the ground state on `x + y <= 4 d`.
    pub localization: f64,
    #[serde(flatten)]
    pub spectrum: SpectralResult,
}

impl Solve {
    /// Eigenvector `i` scattered onto all mesh vertices.
    pub fn mode(&self, i: usize) -> Vec<f64> {
        self.dofs.expand(&self.spectrum.eigenvectors[i])
    }

    pub fn summary(&self, spec: &DomainSpec, profile: &SigmaProfile) -> Result<SolveSummary> {
        Ok(SolveSummary {
            spec: *spec,
            profile: profile.clone(),
            n_vertices: self.mesh.n_vertices(),
            n_free: self.dofs.n_free(),
            threshold: crate::oracles::strip_threshold(spec.d)?.value,
            localization: self.localization(4.0 * spec.d),
            spectrum: self.spectrum.clone(),
        })
    }

    pub fn ground_energy(&self) -> f64 {
        self.spectrum.eigenvalues[0]
    }

    /// Fraction of the ground state's mass on `x + y <= radius`.
    pub fn localization(&self, radius: f64) -> f64 {
        localization_measure(&self.mesh, &self.dofs, &self.spectrum.eigenvectors[0], radius)
    }
}

/// Solve on an arbitrary mesh with the given truncation condition.
pub fn solve_mesh(
    mesh: Mesh,
    profile: &SigmaProfile,
    truncation_bc: TruncationBc,
    k: usize,
    opts: &SolverOptions,
) -> Result<Solve> {
    let dofs = DofMap::new(&mesh, truncation_bc);
    let form = assemble(&mesh, profile, &dofs)?;
    let spectrum = smallest_eigenpairs(&form, k, opts)?;
    Ok(Solve {
        mesh,
        dofs,
        form,
        spectrum,
    })
}

/// Lowest `k` eigenpairs on the truncated band.
pub fn solve_spectrum(spec: &DomainSpec, profile: &SigmaProfile, k: usize, opts: &SolverOptions) -> Result<Solve> {
    let mesh = build_mesh(spec)?;
    solve_mesh(mesh, profile, spec.truncation_bc, k, opts)
}

/// Fraction of `sum_v w_v u_v^2` (lumped vertex masses `w`) on vertices with
/// `x + y <= radius`. `u` is indexed by free unknowns.
pub fn localization_measure(mesh: &Mesh, dofs: &DofMap, u: &[f64], radius: f64) -> f64 {
    let full = dofs.expand(u);
    let weights = mesh.lumped_mass();
    let mut inside = 0.0;
    let mut total = 0.0;
    for (v, p) in mesh.vertices.iter().enumerate() {
        let mass = weights[v] * full[v] * full[v];
        total += mass;
        if p[0] + p[1] <= radius * (1.0 + 1e-12) {
            inside += mass;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        inside / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::strip_threshold;

    fn spec(h: f64, l: f64) -> DomainSpec {
        DomainSpec::new(1.0, l, h, TruncationBc::Dirichlet).unwrap()
    }

    #[test]
    fn localization_extremes() {
        let s = spec(0.25, 4.0);
        let mesh = build_mesh(&s).unwrap();
        let dofs = DofMap::new(&mesh, s.truncation_bc);
        let near: Vec<f64> = dofs
            .free_vertices()
            .iter()
            .map(|&v| if mesh.vertices[v][0] + mesh.vertices[v][1] <= 2.0 { 1.0 } else { 0.0 })
            .collect();
        assert_eq!(localization_measure(&mesh, &dofs, &near, 2.0), 1.0);
        let far: Vec<f64> = near.iter().map(|v| 1.0 - v).collect();
        assert_eq!(localization_measure(&mesh, &dofs, &far, 2.0), 0.0);
    }

    #[test]
    fn free_band_has_state_below_threshold() {
        let solve = solve_spectrum(&spec(0.125, 6.0), &SigmaProfile::constant(0.0), 5, &SolverOptions::default())
            .unwrap();
        let thr = strip_threshold(1.0).unwrap().value;
        assert!(solve.ground_energy() < thr);
        assert!(solve.spectrum.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
        assert!(solve.localization(4.0) > 0.5);
    }

    #[test]
    fn ground_state_is_swap_symmetric() {
        let solve = solve_spectrum(&spec(0.125, 4.0), &SigmaProfile::constant(0.0), 2, &SolverOptions::default())
            .unwrap();
        let perm = solve.mesh.swap_permutation().unwrap();
        let u = solve.mode(0);
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff = (0..u.len()).map(|v| (u[v] - u[perm[v]]).powi(2)).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-6);
    }
}
