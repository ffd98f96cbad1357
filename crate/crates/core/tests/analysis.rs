use halfband::analysis::{
    detect_bound_state, essential_spectrum_probe, gamma_threshold_search, lshape_direct_solve, sigma_sweep,
    solve_mesh, solve_spectrum, DetectOptions, SigmaFamily, ThresholdOptions, Verdict,
};
use halfband::eigen::{dense_oracle, SolverOptions};
use halfband::fem::{assemble, DofMap};
use halfband::geometry::{build_mesh, DomainSpec, TruncationBc};
use halfband::sigma::SigmaProfile;
use halfband::Error;

fn spec(d: f64, l: f64, h: f64, bc: TruncationBc) -> DomainSpec {
    DomainSpec::new(d, l, h, bc).unwrap()
}

fn lowest(s: &DomainSpec, sigma: f64, k: usize) -> Vec<f64> {
    solve_spectrum(s, &SigmaProfile::constant(sigma), k, &SolverOptions::default())
        .unwrap()
        .spectrum
        .eigenvalues
}

// Reference values from an independent scipy implementation of the same
// discretisation (d = 1, h = 1/8, L = 4, Neumann truncation).
const FROZEN: [(f64, [f64; 3]); 3] = [
    (0.0, [3.328816102288702, 5.069159099234525, 5.971972316573138]),
    (1.0, [-0.590756156631856, 5.050476835886559, 5.842385633326304]),
    (-1.0, [4.862888918630547, 5.19956305231665, 6.257048173425388]),
];

#[test]
fn matches_frozen_reference_spectrum() {
    let s = spec(1.0, 4.0, 0.125, TruncationBc::Neumann);
    for (sigma, want) in FROZEN {
        let got = lowest(&s, sigma, 3);
        for i in 0..3 {
            assert!(
                (got[i] - want[i]).abs() < 1e-9 * want[i].abs().max(1.0),
                "sigma {sigma}, {i}: {} vs {}",
                got[i],
                want[i]
            );
        }
    }
}

#[test]
fn dilation_scales_spectrum() {
    let base = spec(1.0, 4.0, 0.125, TruncationBc::Dirichlet);
    for sigma in [0.0, 1.0, -2.0] {
        let e1 = lowest(&base, sigma, 4);
        let e2 = lowest(&base.dilated(2.0), sigma / 2.0, 4);
        for (a, b) in e1.iter().zip(&e2) {
            assert!((a / 4.0 - b).abs() < 1e-9 * a.abs().max(1.0), "{a} / 4 vs {b}");
        }
    }
}

#[test]
fn truncation_conditions_bracket_spectrum() {
    for sigma in [0.0, 0.5, -3.0] {
        let d = lowest(&spec(1.0, 4.0, 0.125, TruncationBc::Dirichlet), sigma, 5);
        let n = lowest(&spec(1.0, 4.0, 0.125, TruncationBc::Neumann), sigma, 5);
        for (a, b) in d.iter().zip(&n) {
            assert!(*a >= b - 1e-10 * b.abs(), "{a} < {b}");
        }
    }
}

#[test]
fn sparse_matches_dense() {
    for (h, l, sigma) in [(0.25, 4.0, 0.0), (0.125, 3.0, 2.0), (0.125, 4.0, -5.0)] {
        let s = spec(1.0, l, h, TruncationBc::Dirichlet);
        let mesh = build_mesh(&s).unwrap();
        let dofs = DofMap::new(&mesh, s.truncation_bc);
        let form = assemble(&mesh, &SigmaProfile::constant(sigma), &dofs).unwrap();
        let dense = dense_oracle(&form).unwrap();
        let sparse = lowest(&s, sigma, 5);
        for i in 0..5 {
            let rel = (sparse[i] - dense.eigenvalues[i]).abs() / dense.eigenvalues[i].abs();
            assert!(rel < 1e-8, "{i}: {} vs {}", sparse[i], dense.eigenvalues[i]);
        }
    }
}

#[test]
fn stronger_attraction_lowers_every_ritz_value() {
    let s = spec(1.0, 4.0, 0.125, TruncationBc::Dirichlet);
    let runs: Vec<Vec<f64>> = [-1.0, 0.0, 0.5, 3.0].iter().map(|&g| lowest(&s, g, 4)).collect();
    for w in runs.windows(2) {
        assert!(w[0].iter().zip(&w[1]).all(|(a, b)| b < a));
    }
}

#[test]
fn free_band_binds_and_attraction_binds_deeper() {
    let s = spec(1.0, 6.0, 0.125, TruncationBc::Dirichlet);
    let opts = DetectOptions::default();
    let free = detect_bound_state(&s, &SigmaProfile::constant(0.0), &opts).unwrap();
    assert_eq!(free.exists, Verdict::Yes);
    assert!(free.e0_extrapolated / free.threshold <= 0.95);
    assert!(free.levels.len() == 5);
    let attractive = detect_bound_state(&s, &SigmaProfile::constant(1.0), &opts).unwrap();
    assert_eq!(attractive.exists, Verdict::Yes);
    assert!(attractive.e0_extrapolated < free.e0_extrapolated);
}

#[test]
fn strong_repulsion_destroys_bound_state() {
    let s = spec(1.0, 6.0, 0.125, TruncationBc::Dirichlet);
    let v = detect_bound_state(&s, &SigmaProfile::constant(-100.0), &DetectOptions::default()).unwrap();
    assert_eq!(v.exists, Verdict::No);
    assert!(!v.indicates_binding());
}

#[test]
fn probe_rescales_with_width() {
    let lengths = [4.0, 8.0, 12.0];
    let one = essential_spectrum_probe(
        &spec(1.0, 4.0, 0.125, TruncationBc::Dirichlet),
        &lengths,
        &SigmaProfile::constant(0.0),
        &SolverOptions::default(),
    )
    .unwrap();
    assert!(one.counts_nondecreasing);
    assert!(one.first_excited_decreasing);
    assert!(one.rows.iter().all(|r| r.first_excited > one.threshold));

    let doubled: Vec<f64> = lengths.iter().map(|l| 2.0 * l).collect();
    let two = essential_spectrum_probe(
        &spec(2.0, 8.0, 0.25, TruncationBc::Dirichlet),
        &doubled,
        &SigmaProfile::constant(0.0),
        &SolverOptions::default(),
    )
    .unwrap();
    for (a, b) in one.rows.iter().zip(&two.rows) {
        assert_eq!(a.count_in_window, b.count_in_window);
        assert!((a.first_excited / 4.0 - b.first_excited).abs() < 1e-9);
    }
    assert!(essential_spectrum_probe(
        &spec(1.0, 4.0, 0.125, TruncationBc::Dirichlet),
        &[4.0, 8.0],
        &SigmaProfile::constant(0.0),
        &SolverOptions::default()
    )
    .is_err());
}

#[test]
fn small_repulsion_bracket_is_invalid() {
    let r = gamma_threshold_search(1.0, (-0.01, 0.0), &ThresholdOptions::default());
    match r {
        Err(Error::BracketInvalid { hi, lo }) => {
            assert_eq!(hi, "Yes");
            assert_eq!(lo, "Yes");
        }
        other => panic!("expected BracketInvalid, got {other:?}"),
    }
}

#[test]
fn sweep_single_row_matches_detector() {
    let s = spec(1.0, 6.0, 0.125, TruncationBc::Dirichlet);
    let opts = DetectOptions::default();
    let table = sigma_sweep(&s, &SigmaFamily::Constant(vec![0.0]), 2, &opts).unwrap();
    let direct = detect_bound_state(&s, &SigmaProfile::constant(0.0), &opts).unwrap();
    assert_eq!(table.rows.len(), 1);
    assert_eq!(table.rows[0].detail, direct);
    assert!(table.postcondition_holds());
}

#[test]
fn small_repulsion_keeps_binding() {
    let s = spec(1.0, 6.0, 0.125, TruncationBc::Dirichlet);
    let table = sigma_sweep(
        &s,
        &SigmaFamily::Constant(vec![-0.1, -0.05, 0.0]),
        3,
        &DetectOptions::default(),
    )
    .unwrap();
    assert!(table.rows.iter().all(|r| r.verdict == Verdict::Yes));
    assert!(table.pointwise_increasing);
    assert!(table.e0_monotone && table.ritz_monotone);
}

#[test]
fn scaled_family_sweep() {
    let base = SigmaProfile::piecewise(1.0, vec![0.5], vec![1.0, 0.25]).unwrap();
    let table = sigma_sweep(
        &spec(1.0, 4.0, 0.125, TruncationBc::Dirichlet),
        &SigmaFamily::Scaled { base, factors: vec![0.0, 1.0, 2.0] },
        2,
        &DetectOptions::default(),
    )
    .unwrap();
    assert!(table.pointwise_increasing);
    assert!(table.postcondition_holds());
    assert_eq!(table.rows[2].sup_norm, 2.0);
}

#[test]
fn lshape_scales_and_is_bracketed() {
    let opts = SolverOptions::default();
    let (one, _) = lshape_direct_solve(1.0, 8, 6.0, TruncationBc::Dirichlet, &opts).unwrap();
    let (two, _) = lshape_direct_solve(2.0, 8, 6.0, TruncationBc::Dirichlet, &opts).unwrap();
    assert!((one / 4.0 - two).abs() < 1e-9 * one);
    let (neumann, _) = lshape_direct_solve(1.0, 8, 6.0, TruncationBc::Neumann, &opts).unwrap();
    assert!(neumann <= one);
    let pi2 = std::f64::consts::PI.powi(2);
    // Exponentially small truncation gap; the mesh error (about 2.5% at this
    // resolution) dominates both.
    assert!(one - neumann < 1e-3 * one);
    assert!(neumann / pi2 > 0.9 && one / pi2 < 1.0);
}

#[test]
fn general_mesh_solve_reports_free_count() {
    let mesh = halfband::geometry::rectangle_mesh(4, 3, 0.5).unwrap();
    let solve = solve_mesh(mesh, &SigmaProfile::constant(0.0), TruncationBc::Dirichlet, 2, &SolverOptions::default())
        .unwrap();
    assert_eq!(solve.dofs.n_free(), 3 * 2);
    assert_eq!(solve.mode(0).len(), 5 * 4);
}
