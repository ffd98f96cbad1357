use rayon::prelude::*;
use serde::Serialize;

use super::{solve_spectrum, Solve};
use crate::eigen::SolverOptions;
use crate::error::Result;
use crate::extrapolation::{observed_order, richardson};
use crate::geometry::{refine, DomainSpec, TruncationBc};
use crate::oracles::strip_threshold;
use crate::sigma::SigmaProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Yes,
    No,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Yes => "Yes",
            Verdict::No => "No",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetectOptions {
    pub solver: SolverOptions,
    /// Certification margin = `margin_factor` x Richardson error + solver tol.
    pub margin_factor: f64,
    /// Largest accepted `|E0(L) - E0(2L)| / E0(L)` for a `Yes`.
    pub drift_tol: f64,
    /// Localization radius in units of `d`.
    pub radius_factor: f64,
    pub localization_min: f64,
    /// Accepted range of the observed convergence order.
    pub order_band: (f64, f64),
}

impl Default for DetectOptions {
    fn default() -> Self {
        DetectOptions {
            solver: SolverOptions::default(),
            margin_factor: 10.0,
            drift_tol: 1e-4,
            radius_factor: 4.0,
            localization_min: 0.5,
            // The mixed Dirichlet/Robin corners of the band (interior angle
            // 3 pi / 4) limit uniform-mesh P1 eigenvalues to order 4/3.
            order_band: (1.0, 2.3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LevelRecord {
    pub h: f64,
    #[serde(rename = "L")]
    pub length: f64,
    pub e0: f64,
    pub n_free: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundStateVerdict {
    pub exists: Verdict,
    #[serde(rename = "E0_extrapolated")]
    pub e0_extrapolated: f64,
    /// Extrapolated ground energy on the doubled truncation length.
    #[serde(rename = "E0_extrapolated_2L")]
    pub e0_extrapolated_long: f64,
    pub threshold: f64,
    /// `threshold - E0_extrapolated`.
    pub gap_to_threshold: f64,
    pub margin: f64,
    pub localization: f64,
    pub truncation_drift: f64,
    /// `None` when the level differences are not monotone.
    pub observed_order: Option<f64>,
    pub order_ok: bool,
    /// Finest Dirichlet-truncated ground energy. Conforming elements on a
    /// subdomain make it an upper bound for the bottom of the spectrum.
    pub upper_bound: f64,
    /// `upper_bound + tol < threshold` under Dirichlet truncation.
    pub binding_certified: bool,
    pub levels: Vec<LevelRecord>,
}

impl BoundStateVerdict {
    /// Side of a threshold search this verdict falls on: `Yes`, or an
    /// `Inconclusive` run whose upper bound already lies below threshold.
    pub fn indicates_binding(&self) -> bool {
        match self.exists {
            Verdict::Yes => true,
            Verdict::No => false,
            Verdict::Inconclusive => self.binding_certified,
        }
    }
}

/// Decide whether an eigenvalue lies below the strip threshold.
///
/// Solves at `(h, h/2, h/4)` on `L` and at `(h, h/2)` on `2L`. The
/// `L` sequence fixes the observed order and the Richardson limit; the
/// drift compares `L` and `2L` at `h/2`; localization is measured on the
/// finest `2L` ground state.
pub fn detect_bound_state(spec: &DomainSpec, profile: &SigmaProfile, opts: &DetectOptions) -> Result<BoundStateVerdict> {
    spec.validate()?;
    let s0 = *spec;
    let s1 = refine(&s0);
    let s2 = refine(&s1);
    let t0 = s0.with_length(2.0 * s0.length);
    let t1 = refine(&t0);
    let specs = [s0, s1, s2, t0, t1];
    let solves: Vec<Solve> = specs
        .par_iter()
        .map(|s| solve_spectrum(s, profile, 1, &opts.solver))
        .collect::<Result<_>>()?;
    let e: Vec<f64> = solves.iter().map(Solve::ground_energy).collect();
    let levels = specs
        .iter()
        .zip(&solves)
        .map(|(s, solve)| LevelRecord {
            h: s.h,
            length: s.length,
            e0: solve.ground_energy(),
            n_free: solve.dofs.n_free(),
        })
        .collect();

    let threshold = strip_threshold(spec.d)?.value;
    let order = observed_order(e[0], e[1], e[2], 2.0);
    let order_ok = order.is_some_and(|p| p >= opts.order_band.0 && p <= opts.order_band.1);
    let p = if order_ok { order.unwrap() } else { 2.0 };
    let e0_extrapolated = richardson(e[1], e[2], 2.0, p);
    let mut err = (e0_extrapolated - e[2]).abs();
    if !order_ok {
        err = err.max((e[1] - e[2]).abs());
    }
    let e0_extrapolated_long = richardson(e[3], e[4], 2.0, p);
    let margin = opts.margin_factor * err + opts.solver.tol;
    let truncation_drift = (e[1] - e[4]).abs() / e[1].abs();
    let localization = solves[4].localization(opts.radius_factor * spec.d);

    let upper_bound = e[2].min(e[4]);
    let binding_certified =
        spec.truncation_bc == TruncationBc::Dirichlet && upper_bound + opts.solver.tol < threshold;

    let cut = threshold - margin;
    let exists = if order_ok
        && e0_extrapolated < cut
        && truncation_drift < opts.drift_tol
        && localization > opts.localization_min
    {
        Verdict::Yes
    } else if e0_extrapolated >= cut && e0_extrapolated_long >= cut && localization < opts.localization_min {
        Verdict::No
    } else {
        Verdict::Inconclusive
    };

    Ok(BoundStateVerdict {
        exists,
        e0_extrapolated,
        e0_extrapolated_long,
        threshold,
        gap_to_threshold: threshold - e0_extrapolated,
        margin,
        localization,
        truncation_drift,
        observed_order: order,
        order_ok,
        upper_bound,
        binding_certified,
        levels,
    })
}
