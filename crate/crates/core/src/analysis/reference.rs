use rayon::prelude::*;
use serde::Serialize;

use super::solve_mesh;
use crate::eigen::SolverOptions;
use crate::error::{Error, Result};
use crate::extrapolation::{observed_order, richardson};
use crate::geometry::{lshape_mesh, rectangle_mesh, TruncationBc};
use crate::oracles::{lshape_reference, rect_ground_state};
use crate::sigma::SigmaProfile;

#[derive(Debug, Clone, Serialize)]
pub struct ReferenceStudy {
    pub name: String,
    /// `(pitch, ground energy, free unknowns)` per level.
    pub levels: Vec<(f64, f64, usize)>,
    pub observed_order: Option<f64>,
    pub extrapolated: f64,
    pub reference: f64,
    pub relative_error: f64,
}

fn summarize(name: &str, levels: Vec<(f64, f64, usize)>, reference: f64) -> Result<ReferenceStudy> {
    let n = levels.len();
    if n < 2 {
        return Err(Error::InvalidInput("a reference study needs at least two levels".into()));
    }
    let e: Vec<f64> = levels.iter().map(|l| l.1).collect();
    let ratio = levels[n - 2].0 / levels[n - 1].0;
    let order = if n >= 3 {
        observed_order(e[n - 3], e[n - 2], e[n - 1], ratio)
    } else {
        None
    };
    let extrapolated = richardson(e[n - 2], e[n - 1], ratio, order.unwrap_or(2.0));
    Ok(ReferenceStudy {
        name: name.to_string(),
        levels,
        observed_order: order,
        extrapolated,
        reference,
        relative_error: (extrapolated - reference).abs() / reference.abs(),
    })
}

/// Dirichlet ground energy of the band section `|x - y| <= d` of axial
/// length `sqrt(2) w`, meshed as a rotated rectangle at lattice pitch
/// `sqrt(2) h` for every `h` in `pitches`.
pub fn rectangle_study(d: f64, w: f64, pitches: &[f64], opts: &SolverOptions) -> Result<ReferenceStudy> {
    let reference = rect_ground_state(d, w)?.value;
    let levels = pitches
        .par_iter()
        .map(|&h| {
            let nx = steps(w, h)?;
            let ny = steps(d, h)?;
            let mesh = rectangle_mesh(nx, ny, std::f64::consts::SQRT_2 * h)?;
            let solve = solve_mesh(mesh, &SigmaProfile::constant(0.0), TruncationBc::Dirichlet, 1, opts)?;
            Ok((h, solve.ground_energy(), solve.dofs.n_free()))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize("rectangle", levels, reference)
}

fn steps(length: f64, h: f64) -> Result<usize> {
    let r = length / h;
    if (r - r.round()).abs() > 1e-9 || r.round() < 1.0 {
        return Err(Error::NonIntegerPitch { h, what: "length", value: length });
    }
    Ok(r.round() as usize)
}

/// Ground energy of the L-shaped guide of width `b` on one mesh with
/// `cells` cells across each arm and arms of length `arm_over_b * b`.
pub fn lshape_direct_solve(
    b: f64,
    cells: usize,
    arm_over_b: f64,
    truncation_bc: TruncationBc,
    opts: &SolverOptions,
) -> Result<(f64, usize)> {
    let h = b / cells as f64;
    let arm = (arm_over_b * cells as f64).round() as usize;
    let mesh = lshape_mesh(cells, arm, h)?;
    let solve = solve_mesh(mesh, &SigmaProfile::constant(0.0), truncation_bc, 1, opts)?;
    Ok((solve.ground_energy(), solve.dofs.n_free()))
}

/// L-shape ground energy over several resolutions, compared with the
/// literature factor times `(pi / b)^2`.
pub fn lshape_study(b: f64, cells: &[usize], arm_over_b: f64, opts: &SolverOptions) -> Result<ReferenceStudy> {
    let reference = lshape_reference(b)?.value;
    let levels = cells
        .par_iter()
        .map(|&c| {
            let (e, n) = lshape_direct_solve(b, c, arm_over_b, TruncationBc::Dirichlet, opts)?;
            Ok((b / c as f64, e, n))
        })
        .collect::<Result<Vec<_>>>()?;
    summarize("lshape", levels, reference)
}
