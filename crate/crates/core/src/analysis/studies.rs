use rayon::prelude::*;
use serde::Serialize;

use super::detect::{detect_bound_state, BoundStateVerdict, DetectOptions, LevelRecord, Verdict};
use super::{solve_spectrum, Solve};
use crate::eigen::SolverOptions;
use crate::error::{Error, Result};
use crate::extrapolation::{observed_order, richardson};
use crate::geometry::{refine, DomainSpec, TruncationBc};
use crate::oracles::strip_threshold;
use crate::sigma::SigmaProfile;

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRow {
    #[serde(rename = "L")]
    pub length: f64,
    pub eigenvalues: Vec<f64>,
    pub count_in_window: usize,
    /// Least eigenvalue above the ground state.
    pub first_excited: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub threshold: f64,
    pub window: (f64, f64),
    pub rows: Vec<ProbeRow>,
    pub counts_nondecreasing: bool,
    pub first_excited_decreasing: bool,
}

fn solve_past(spec: &DomainSpec, profile: &SigmaProfile, above: f64, opts: &SolverOptions) -> Result<Solve> {
    let mut k = 8;
    loop {
        let n = crate::fem::DofMap::new(&crate::geometry::build_mesh(spec)?, spec.truncation_bc).n_free();
        let k_eff = k.min(n - 1);
        let solve = solve_spectrum(spec, profile, k_eff, opts)?;
        if solve.spectrum.eigenvalues.last().is_some_and(|&v| v > above) || k_eff == n - 1 {
            return Ok(solve);
        }
        k *= 2;
    }
}

/// Track the spectrum near the strip threshold as the truncation grows.
///
/// For each length the eigenvalues in `[thr, thr + thr / 4]` are counted;
/// enough eigenpairs are computed to pass the window's upper edge.
pub fn essential_spectrum_probe(
    spec: &DomainSpec,
    lengths: &[f64],
    profile: &SigmaProfile,
    opts: &SolverOptions,
) -> Result<ProbeReport> {
    if lengths.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "the probe needs at least 3 truncation lengths, got {}",
            lengths.len()
        )));
    }
    let threshold = strip_threshold(spec.d)?.value;
    let window = (threshold, threshold * 1.25);
    let rows: Vec<ProbeRow> = lengths
        .par_iter()
        .map(|&l| {
            let s = spec.with_length(l);
            let solve = solve_past(&s, profile, window.1, opts)?;
            let ev = solve.spectrum.eigenvalues;
            let count = ev.iter().filter(|&&v| v >= window.0 && v <= window.1).count();
            Ok(ProbeRow {
                length: l,
                first_excited: ev[1],
                count_in_window: count,
                eigenvalues: ev,
            })
        })
        .collect::<Result<_>>()?;
    let counts_nondecreasing = rows.windows(2).all(|w| w[1].count_in_window >= w[0].count_in_window);
    let first_excited_decreasing = rows.windows(2).all(|w| w[1].first_excited < w[0].first_excited);
    Ok(ProbeReport {
        threshold,
        window,
        rows,
        counts_nondecreasing,
        first_excited_decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThresholdOptions {
    pub detect: DetectOptions,
    /// Base pitch as a fraction of `d`.
    pub h_over_d: f64,
    /// Truncation length as a multiple of `d`.
    pub length_over_d: f64,
    /// Bisection stops once the bracket is at most this wide.
    pub width: f64,
    pub truncation_bc: TruncationBc,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        ThresholdOptions {
            detect: DetectOptions::default(),
            h_over_d: 1.0 / 8.0,
            length_over_d: 8.0,
            width: 0.05,
            truncation_bc: TruncationBc::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdStep {
    pub gamma: f64,
    pub verdict: Verdict,
    #[serde(rename = "E0_extrapolated")]
    pub e0_extrapolated: f64,
    pub upper_bound: f64,
    pub binding: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdReport {
    pub d: f64,
    pub gamma_star: f64,
    /// Final bracket: binding at `gamma_hi`, not binding at `gamma_lo`.
    pub gamma_lo: f64,
    pub gamma_hi: f64,
    pub width: f64,
    /// Verdicts at the ends of the requested bracket.
    pub verdict_hi: Verdict,
    pub verdict_lo: Verdict,
    /// Verdicts at the ends of the final bracket.
    pub flip_verdict_hi: Verdict,
    pub flip_verdict_lo: Verdict,
    pub spec: DomainSpec,
    pub steps: Vec<ThresholdStep>,
}

/// Bisect on constant `sigma = gamma` for the point where the bound state
/// disappears. `bracket = (gamma_lo, gamma_hi)` must bind at `gamma_hi` and
/// not at `gamma_lo`.
pub fn gamma_threshold_search(d: f64, bracket: (f64, f64), opts: &ThresholdOptions) -> Result<ThresholdReport> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidInput(format!("bracket ({lo}, {hi}) is not increasing")));
    }
    let spec = DomainSpec::new(d, opts.length_over_d * d, opts.h_over_d * d, opts.truncation_bc)?;
    let mut steps = Vec::new();
    let probe = |gamma: f64, steps: &mut Vec<ThresholdStep>| -> Result<BoundStateVerdict> {
        let v = detect_bound_state(&spec, &SigmaProfile::constant(gamma), &opts.detect)?;
        steps.push(ThresholdStep {
            gamma,
            verdict: v.exists,
            e0_extrapolated: v.e0_extrapolated,
            upper_bound: v.upper_bound,
            binding: v.indicates_binding(),
        });
        Ok(v)
    };

    let top = probe(hi, &mut steps)?;
    let bottom = probe(lo, &mut steps)?;
    if !(top.indicates_binding() && !bottom.indicates_binding()) {
        return Err(Error::BracketInvalid {
            hi: top.exists.to_string(),
            lo: bottom.exists.to_string(),
        });
    }
    let (verdict_hi, verdict_lo) = (top.exists, bottom.exists);
    let (mut flip_hi, mut flip_lo) = (verdict_hi, verdict_lo);
    if !(opts.width > 0.0) {
        return Err(Error::InvalidInput(format!("bracket width must be positive, got {}", opts.width)));
    }
    while hi - lo > opts.width {
        let mid = 0.5 * (lo + hi);
        let v = probe(mid, &mut steps)?;
        if v.indicates_binding() {
            hi = mid;
            flip_hi = v.exists;
        } else {
            lo = mid;
            flip_lo = v.exists;
        }
    }
    Ok(ThresholdReport {
        d,
        gamma_star: 0.5 * (lo + hi),
        gamma_lo: lo,
        gamma_hi: hi,
        width: hi - lo,
        verdict_hi,
        verdict_lo,
        flip_verdict_hi: flip_hi,
        flip_verdict_lo: flip_lo,
        spec,
        steps,
    })
}

/// A one-parameter family of profiles.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SigmaFamily {
    /// `sigma = t`.
    Constant(Vec<f64>),
    /// `sigma = t * base`.
    Scaled { base: SigmaProfile, factors: Vec<f64> },
}

impl SigmaFamily {
    fn members(&self) -> Vec<(f64, SigmaProfile)> {
        match self {
            SigmaFamily::Constant(values) => values.iter().map(|&t| (t, SigmaProfile::constant(t))).collect(),
            SigmaFamily::Scaled { base, factors } => factors.iter().map(|&t| (t, base.scaled(t))).collect(),
        }
    }

    /// Whether members increase pointwise along the parameter grid.
    fn pointwise_increasing(&self) -> bool {
        let ascending = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        match self {
            SigmaFamily::Constant(values) => ascending(values),
            SigmaFamily::Scaled { base, factors } => base.is_nonnegative() && ascending(factors),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub param: f64,
    pub sup_norm: f64,
    pub verdict: Verdict,
    #[serde(rename = "E0_extrapolated")]
    pub e0_extrapolated: f64,
    pub gap_to_threshold: f64,
    /// Lowest Ritz values on the base mesh.
    pub ritz: Vec<f64>,
    #[serde(skip)]
    pub detail: BoundStateVerdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepTable {
    pub spec: DomainSpec,
    pub threshold: f64,
    pub rows: Vec<SweepRow>,
    pub pointwise_increasing: bool,
    /// Extrapolated E0 nonincreasing along the grid.
    pub e0_monotone: bool,
    /// Every base-mesh Ritz value nonincreasing along the grid.
    pub ritz_monotone: bool,
}

impl SweepTable {
    /// Monotonicity is only required for pointwise increasing families.
    pub fn postcondition_holds(&self) -> bool {
        !self.pointwise_increasing || (self.e0_monotone && self.ritz_monotone)
    }
}

/// Bound-state verdicts and base-mesh Ritz values along a profile family.
pub fn sigma_sweep(
    spec: &DomainSpec,
    family: &SigmaFamily,
    ritz_count: usize,
    opts: &DetectOptions,
) -> Result<SweepTable> {
    let rows: Vec<SweepRow> = family
        .members()
        .into_par_iter()
        .map(|(param, profile)| {
            let detail = detect_bound_state(spec, &profile, opts)?;
            let base = solve_spectrum(spec, &profile, ritz_count, &opts.solver)?;
            Ok(SweepRow {
                param,
                sup_norm: profile.sup_norm(),
                verdict: detail.exists,
                e0_extrapolated: detail.e0_extrapolated,
                gap_to_threshold: detail.gap_to_threshold,
                ritz: base.spectrum.eigenvalues,
                detail,
            })
        })
        .collect::<Result<_>>()?;
    let e0_monotone = rows.windows(2).all(|w| w[1].e0_extrapolated <= w[0].e0_extrapolated);
    let ritz_monotone = rows
        .windows(2)
        .all(|w| w[0].ritz.iter().zip(&w[1].ritz).all(|(a, b)| b <= a));
    Ok(SweepTable {
        spec: *spec,
        threshold: strip_threshold(spec.d)?.value,
        rows,
        pointwise_increasing: family.pointwise_increasing(),
        e0_monotone,
        ritz_monotone,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub records: Vec<LevelRecord>,
    /// Order from the last three levels (needs at least three).
    pub observed_order: Option<f64>,
    /// Richardson limit from the last two levels, with the observed order
    /// when available and order 2 otherwise.
    pub extrapolated: Option<f64>,
    pub threshold: f64,
    pub ratio_to_threshold: Option<f64>,
}

/// Ground energy under repeated halving of `h`.
pub fn convergence_study(
    spec: &DomainSpec,
    profile: &SigmaProfile,
    levels: usize,
    opts: &SolverOptions,
) -> Result<ConvergenceReport> {
    if levels == 0 {
        return Err(Error::InvalidInput("need at least one level".into()));
    }
    let mut specs = vec![*spec];
    for _ in 1..levels {
        let next = refine(specs.last().unwrap());
        specs.push(next);
    }
    let records: Vec<LevelRecord> = specs
        .par_iter()
        .map(|s| {
            let solve = solve_spectrum(s, profile, 1, opts)?;
            Ok(LevelRecord {
                h: s.h,
                length: s.length,
                e0: solve.ground_energy(),
                n_free: solve.dofs.n_free(),
            })
        })
        .collect::<Result<_>>()?;
    let e: Vec<f64> = records.iter().map(|r| r.e0).collect();
    let n = e.len();
    let observed = if n >= 3 {
        observed_order(e[n - 3], e[n - 2], e[n - 1], 2.0)
    } else {
        None
    };
    let extrapolated = (n >= 2).then(|| richardson(e[n - 2], e[n - 1], 2.0, observed.unwrap_or(2.0)));
    let threshold = strip_threshold(spec.d)?.value;
    Ok(ConvergenceReport {
        records,
        observed_order: observed,
        extrapolated,
        threshold,
        ratio_to_threshold: extrapolated.map(|v| v / threshold),
    })
}
