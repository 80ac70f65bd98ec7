//! Analyzer contracts checked against independent quadrature, brute-force
//! and finite-difference oracles.

mod common;

use driftlab_core::campanato::{Analyzer, ScanMode, SeminormSpec};
use driftlab_core::dynamics;
use driftlab_core::field::VectorField;
use driftlab_core::grid::MAX_DIM;
use driftlab_core::ops::Jacobian;
use driftlab_core::rng;
use driftlab_core::weight::{ScaleLadder, Stencil, WeightProfile};
use driftlab_core::Grid;
use proptest::prelude::*;
use std::f64::consts::PI;

fn grid_128() -> Grid {
    Grid::new(2, 128, 2.0 * PI).unwrap()
}

fn center_index(g: &Grid) -> usize {
    let n = g.points_per_axis();
    g.flat_index(&[n / 2, n / 2])
}

fn affine_field(g: &Grid, a: [[f64; 2]; 2], c: [f64; 2]) -> VectorField {
    VectorField::from_fns(g, move |i, p| a[i][0] * p[0] + a[i][1] * p[1] + c[i])
}

fn constant_jacobian(g: &Grid, a: [[f64; 2]; 2]) -> Jacobian {
    let mut m = [[0.0; MAX_DIM]; MAX_DIM];
    m[0][..2].copy_from_slice(&a[0]);
    m[1][..2].copy_from_slice(&a[1]);
    Jacobian::constant(g, &m)
}

#[test]
fn local_mean_exact_on_constants_and_linears() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);

    let constant = VectorField::from_fns(&g, |i, _| if i == 0 { 2.5 } else { -1.25 });
    for &r in analyzer.ladder().radii() {
        let mean = analyzer.local_mean(&constant, x, r).unwrap();
        assert!((mean[0] - 2.5).abs() < 1e-13);
        assert!((mean[1] + 1.25).abs() < 1e-13);
    }

    // odd moments of the symmetric stencil vanish, so linears average to
    // their center value (stencil kept away from the wrap)
    let linear = affine_field(&g, [[1.0, 0.4], [-0.3, 0.9]], [0.1, 0.2]);
    let coords = g.coords_of(x);
    let pos = g.position(&coords[..2]);
    for &r in analyzer.ladder().radii() {
        let mean = analyzer.local_mean(&linear, x, r).unwrap();
        let expect0 = pos[0] + 0.4 * pos[1] + 0.1;
        let expect1 = -0.3 * pos[0] + 0.9 * pos[1] + 0.2;
        assert!((mean[0] - expect0).abs() < 1e-12);
        assert!((mean[1] - expect1).abs() < 1e-12);
    }
}

#[test]
fn local_mean_quadratic_shift_matches_second_moment_oracle() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let coords = g.coords_of(x);
    let pos = g.position(&coords[..2]);
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0] * p[0] } else { 0.0 });

    let m2_oracle = common::bump_second_moment_2d();
    let r = analyzer.ladder().radius(0); // largest scale, best quadrature
    let mean = analyzer.local_mean(&u, x, r).unwrap();
    let shift = mean[0] - pos[0] * pos[0];
    assert!(
        common::rel_diff(shift, r * r * m2_oracle) < 1e-3,
        "shift {shift} vs r^2 m2 {}",
        r * r * m2_oracle
    );
}

#[test]
fn oscillation_on_linears_matches_second_moment_oracle() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let u = affine_field(&g, [[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0]);
    let m2 = common::bump_second_moment_2d();
    for &r in analyzer.ladder().radii() {
        let i_val = analyzer.campanato_i(&u, x, r).unwrap();
        // discrete second moment converges to the continuum value as the
        // stencil refines; the coarsest rung gets the loosest tolerance
        let tol = if r / g.spacing() >= 16.0 { 1e-3 } else { 2e-2 };
        assert!(
            common::rel_diff(i_val, r * r * m2) < tol,
            "r = {r}: I = {i_val} vs {}",
            r * r * m2
        );
    }
}

#[test]
fn oscillation_of_constant_vanishes() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |_, _| 3.0);
    let x = center_index(&g);
    for &r in analyzer.ladder().radii() {
        assert!(analyzer.campanato_i(&u, x, r).unwrap() < 1e-26);
    }
}

#[test]
fn small_scale_oscillation_of_sine_recovers_second_moment() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0].sin() } else { 0.0 });
    let x = 0usize; // sin is odd around the origin
    let r = analyzer.ladder().min_radius();
    let i_val = analyzer.campanato_i(&u, x, r).unwrap();
    let m2 = common::bump_second_moment_2d();
    assert!(
        common::rel_diff(i_val / (r * r), m2) < 2e-2,
        "I/r^2 = {} vs m2 = {m2}",
        i_val / (r * r)
    );
}

#[test]
fn double_difference_form_of_linear_field() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let u = affine_field(&g, [[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0]);
    let m2 = common::bump_second_moment_2d();
    let r = analyzer.ladder().radius(0);
    let ddf = analyzer.double_diff_form(&u, x, r).unwrap();
    assert!(common::rel_diff(ddf, 2.0 * r * r * m2) < 1e-3);
}

#[test]
fn morrey_functional_constant_cases() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let b = VectorField::from_fns(&g, |i, _| if i == 0 { 0.6 } else { -0.8 }); // |b| = 1
    let holder = SeminormSpec::new(0.5).unwrap();
    let bmo = SeminormSpec::new(0.0).unwrap();
    let morrey = SeminormSpec::new(-0.5).unwrap();
    for (level, &r) in analyzer.ladder().radii().iter().enumerate() {
        assert!(analyzer.morrey_m(&b, x, r, &holder).unwrap() < 1e-13);
        // the plain ball average accumulates summation roundoff over the
        // stencil before cancelling
        assert!(analyzer.morrey_m(&b, x, r, &bmo).unwrap() < 1e-11);
        // re-centering at zero leaves |c| times the discrete ball measure
        let st = analyzer.stencil(level);
        let omega = st.len() as f64 * st.cell_weight;
        let m = analyzer.morrey_m(&b, x, r, &morrey).unwrap();
        assert!(common::rel_diff(m, omega) < 1e-12, "m {m} omega {omega}");
        // and that measure approximates the unit-ball area
        assert!(common::rel_diff(omega, PI) < 3e-2, "omega {omega}");
    }
}

#[test]
fn morrey_linear_holder_matches_abs_moment_oracle() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let b = affine_field(&g, [[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0]);
    let spec = SeminormSpec::new(0.5).unwrap();
    let oracle = common::ball_abs_moment_2d(); // int_{B_1} |y_1| dy = 4/3
    assert!(common::rel_diff(oracle, 4.0 / 3.0) < 1e-4, "oracle sanity");
    let r = analyzer.ladder().radius(0);
    let m = analyzer.morrey_m(&b, x, r, &spec).unwrap();
    assert!(common::rel_diff(m, r * oracle) < 2e-2, "M = {m} vs {}", r * oracle);
}

#[test]
fn lipschitz_field_has_scale_flat_ratio() {
    // pointwise ratio r^{-1} M for a locally linear drift is flat in r
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let b = affine_field(&g, [[1.0, 0.0], [0.0, 0.0]], [0.0, 0.0]);
    let spec = SeminormSpec::new(1.0).unwrap();
    let x = center_index(&g);
    let mut ratios = Vec::new();
    for &r in analyzer.ladder().radii() {
        ratios.push(analyzer.morrey_m(&b, x, r, &spec).unwrap() / r);
    }
    for pair in ratios.windows(2) {
        assert!(
            common::rel_diff(pair[1], pair[0]) < 5e-2,
            "ratios not flat: {ratios:?}"
        );
    }
}

#[test]
fn scan_of_zero_field_is_zero() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let zero = VectorField::zeros(&g);
    let scan = analyzer.seminorm_scan(&zero, 0.5, ScanMode::CampanatoSqrt).unwrap();
    assert_eq!(scan.value, 0.0);
    let spec = SeminormSpec::new(0.0).unwrap();
    let scan = analyzer.seminorm_scan(&zero, 0.0, ScanMode::MorreyCase(spec)).unwrap();
    assert_eq!(scan.value, 0.0);
}

#[test]
fn sine_scan_peaks_at_the_top_rung_and_matches_brute_force() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0].sin() } else { 0.0 });
    let alpha = 0.5;
    let scan = analyzer.seminorm_scan(&u, alpha, ScanMode::CampanatoSqrt).unwrap();
    assert_eq!(scan.level, 0, "argmax should sit at the largest radius");

    // brute force: pointwise oscillation at every lattice point and rung
    for rung in &scan.rungs {
        let mut best = 0.0f64;
        for x in 0..g.point_count() {
            let v = analyzer.campanato_i_level(&u, x, rung.level).sqrt()
                * rung.radius.powf(-alpha);
            best = best.max(v);
        }
        assert!(
            common::rel_diff(rung.value, best) < 1e-9,
            "rung {}: scan {} brute {}",
            rung.level,
            rung.value,
            best
        );
    }
}

#[test]
fn finer_ladder_agrees_on_common_radii() {
    let g = grid_128();
    let coarse = Analyzer::new(&g).unwrap();
    let fine =
        Analyzer::with_ladder(&g, ScaleLadder::with_min_cells(&g, 2.0).unwrap()).unwrap();
    let mut rng = rng::rng_from_seed(5);
    let u = rng::random_divergence_free(&g, 6, 1.0, &mut rng).unwrap();
    let scan_coarse = coarse.seminorm_scan(&u, 0.5, ScanMode::CampanatoSqrt).unwrap();
    let scan_fine = fine.seminorm_scan(&u, 0.5, ScanMode::CampanatoSqrt).unwrap();
    for rc in &scan_coarse.rungs {
        let rf = scan_fine
            .rungs
            .iter()
            .find(|r| (r.radius - rc.radius).abs() < 1e-12)
            .expect("common radius present in the finer ladder");
        assert_eq!(rc.value, rf.value);
        assert_eq!(rc.argmax, rf.argmax);
    }
}

#[test]
fn holder_amplitude_of_constant_is_zero() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |_, _| 1.0);
    let a = analyzer.holder_amplitude(&u, 0.5).unwrap();
    assert_eq!(a.value, 0.0);
    assert!(analyzer.holder_amplitude(&u, 1.5).is_err());
}

#[test]
fn holder_amplitude_tracks_brute_force_quotient_for_sine() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0].sin() } else { 0.0 });
    let alpha = 0.5;
    let a = analyzer.holder_amplitude(&u, alpha).unwrap().value;
    let q = common::holder_quotient(&u, alpha, 64);
    let factor = (a / q).max(q / a);
    assert!(factor < 4.0, "amplitude {a}, quotient {q}, factor {factor}");
}

#[test]
fn rescaled_amplitude_follows_the_zoom_exponent() {
    // u_r(x) = r u(rx) carries I_{u_r}(x, rho) = r^2 I_u(rx, r rho), so per
    // rung the amplitude picks up r^{1+alpha} while the rung index shifts
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let mut rng = rng::rng_from_seed(9);
    let u = rng::random_divergence_free(&g, 6, 1.0, &mut rng).unwrap();
    let alpha = 0.5;
    let zoomed = dynamics::rescale(&u, 2.0).unwrap();
    let base = analyzer.seminorm_scan(&u, alpha, ScanMode::CampanatoSqrt).unwrap();
    let scan = analyzer.seminorm_scan(&zoomed, alpha, ScanMode::CampanatoSqrt).unwrap();
    for k in 1..scan.rungs.len() {
        let expected = 2.0f64.powf(1.0 + alpha) * base.rungs[k - 1].value;
        assert!(
            common::rel_diff(scan.rungs[k].value, expected) < 2e-2,
            "rung {k}: {} vs {}",
            scan.rungs[k].value,
            expected
        );
    }
}

#[test]
fn amplitude_is_monotone_in_alpha_per_ladder_half() {
    // r^{-alpha} is increasing in alpha for r < 1 and decreasing for r > 1,
    // so the sup over each ladder half inherits that monotonicity
    let g = Grid::new(2, 128, 16.0).unwrap(); // rungs 4, 2, 1, 0.5
    let analyzer = Analyzer::new(&g).unwrap();
    let mut rng = rng::rng_from_seed(13);
    let u = rng::random_divergence_free(&g, 6, 1.0, &mut rng).unwrap();
    let alphas = [0.3, 0.5, 0.7, 0.9];
    let mut sup_small = Vec::new(); // radii <= 1
    let mut sup_large = Vec::new(); // radii >= 1
    for &alpha in &alphas {
        let scan = analyzer.seminorm_scan(&u, alpha, ScanMode::CampanatoSqrt).unwrap();
        let small = scan
            .rungs
            .iter()
            .filter(|r| r.radius <= 1.0)
            .map(|r| r.value)
            .fold(f64::NEG_INFINITY, f64::max);
        let large = scan
            .rungs
            .iter()
            .filter(|r| r.radius >= 1.0)
            .map(|r| r.value)
            .fold(f64::NEG_INFINITY, f64::max);
        sup_small.push(small);
        sup_large.push(large);
    }
    for w in sup_small.windows(2) {
        assert!(w[1] >= w[0] * (1.0 - 1e-12), "small radii: {sup_small:?}");
    }
    for w in sup_large.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12), "large radii: {sup_large:?}");
    }
}

#[test]
fn dissipation_vanishes_for_affine_and_constant_fields() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let a = [[0.7, -0.2], [0.4, 0.1]];
    let jac = constant_jacobian(&g, a);
    for level in 0..analyzer.ladder().len() {
        // weight renormalization leaves squared-roundoff residue
        assert!(analyzer.dissipation_with(&jac, x, level).abs() < 1e-24);
    }
    let constant = VectorField::from_fns(&g, |_, _| 2.0);
    assert!(analyzer.dissipation(&constant, x, analyzer.ladder().radius(0)).unwrap().abs() < 1e-20);
}

#[test]
fn dissipation_matches_double_loop_oracle() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0].sin() } else { 0.0 });
    let x = 0usize;
    let level = analyzer.ladder().len() - 1; // coarse stencil keeps the loop small
    let r = analyzer.ladder().radius(level);
    let d = analyzer.dissipation(&u, x, r).unwrap();
    assert!(d <= 0.0);

    // naive O(S^2) double loop over stencil pairs with the same Jacobian
    let jac = Jacobian::of(&u).unwrap();
    let st = analyzer.stencil(level);
    let center = g.coords_of(x);
    let mut oracle = 0.0;
    for p in 0..st.len() {
        let ip = st.sample_index(&g, &center, p);
        for q in 0..st.len() {
            let iq = st.sample_index(&g, &center, q);
            let mut diff2 = 0.0;
            for i in 0..2 {
                for a in 0..2 {
                    let d = jac.entry(i, a, ip) - jac.entry(i, a, iq);
                    diff2 += d * d;
                }
            }
            oracle -= st.weight(p) * st.weight(q) * diff2;
        }
    }
    assert!(common::rel_diff(d, oracle) < 1e-8, "d {d} oracle {oracle}");
}

#[test]
fn scale_derivative_of_affine_satisfies_the_euler_identity() {
    // r I' = 2 I for affine fields
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let a = [[1.0, 0.3], [-0.2, 0.5]];
    let u = affine_field(&g, a, [0.0, 0.0]);
    let jac = constant_jacobian(&g, a);
    for level in 0..analyzer.ladder().len() {
        let i_val = analyzer.campanato_i_level(&u, x, level);
        let didr = analyzer.di_dr_with(&u, &jac, x, level);
        let r = analyzer.ladder().radius(level);
        assert!(
            (r * didr - 2.0 * i_val).abs() <= 1e-8 * i_val,
            "level {level}: r I' = {} vs 2I = {}",
            r * didr,
            2.0 * i_val
        );
    }
    let constant = VectorField::from_fns(&g, |_, _| 4.0);
    let didr = analyzer.di_dr(&constant, x, analyzer.ladder().radius(0)).unwrap();
    assert!(didr.abs() < 1e-20);
}

#[test]
fn scale_derivative_matches_finite_difference_oracle() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0].sin() } else { 0.0 });
    let profile = WeightProfile::standard_bump(2).unwrap();
    let x = g.flat_index(&[37, 81]);
    let center = g.coords_of(x);
    let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();

    let oscillation_at = |radius: f64| -> f64 {
        let st = Stencil::build(&g, &profile, radius).unwrap();
        let mut mean = [0.0f64; 2];
        for p in 0..st.len() {
            let idx = st.sample_index(&g, &center, p);
            for i in 0..2 {
                mean[i] += st.weight(p) * comps[i][idx];
            }
        }
        let mut acc = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&g, &center, p);
            for i in 0..2 {
                let d = comps[i][idx] - mean[i];
                acc += st.weight(p) * d * d;
            }
        }
        acc
    };

    let r = analyzer.ladder().radius(0);
    let delta = r / 64.0;
    let fd = (oscillation_at(r + delta) - oscillation_at(r - delta)) / (2.0 * delta);
    let didr = analyzer.di_dr(&u, x, r).unwrap();
    assert!(common::rel_diff(didr, fd) < 1e-4, "dI/dr {didr} vs fd {fd}");
}

#[test]
fn functional_gap_vanishes_on_affine_fields() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let x = center_index(&g);
    let a = [[0.8, 0.1], [0.3, -0.6]];
    let u = affine_field(&g, a, [0.2, -0.1]);
    let jac = constant_jacobian(&g, a);
    for level in 0..analyzer.ladder().len() {
        let gap = analyzer.functional_gap_with(&u, &jac, x, level);
        assert!(gap.lhs.abs() <= 1e-8 * gap.i_value.max(1e-30), "lhs {}", gap.lhs);
        assert!(gap.rhs_factor_e.abs() < 1e-12);
    }
}

#[test]
fn recentering_at_the_mean_minimizes_the_oscillation() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let mut rng = rng::rng_from_seed(21);
    let u = rng::random_divergence_free(&g, 6, 1.0, &mut rng).unwrap();
    let x = g.flat_index(&[40, 90]);
    let level = 1;
    let st = analyzer.stencil(level);
    let center = g.coords_of(x);
    let mean = analyzer.local_mean_level(&u, x, level);
    let base = analyzer.campanato_i_level(&u, x, level);
    let comps: Vec<&[f64]> = u.components().iter().map(|c| c.samples()).collect();
    for shift in [-0.5, -0.01, 0.01, 0.5] {
        let mut acc = 0.0;
        for p in 0..st.len() {
            let idx = st.sample_index(&g, &center, p);
            for i in 0..2 {
                let anchor = mean[i] + if i == 0 { shift } else { 0.0 };
                let d = comps[i][idx] - anchor;
                acc += st.weight(p) * d * d;
            }
        }
        assert!(acc > base, "shift {shift}: {acc} vs {base}");
    }
}

#[test]
fn scales_outside_the_ladder_are_rejected() {
    let g = grid_128();
    let analyzer = Analyzer::new(&g).unwrap();
    let u = VectorField::from_fns(&g, |i, p| if i == 0 { p[0].sin() } else { 0.0 });
    let x = center_index(&g);
    let below = analyzer.ladder().min_radius() / 2.0;
    assert!(analyzer.local_mean(&u, x, below).is_err());
    assert!(analyzer.campanato_i(&u, x, below).is_err());
    let between = analyzer.ladder().radius(0) * 0.7;
    assert!(analyzer.double_diff_form(&u, x, between).is_err());
    // a ladder with no admissible rung cannot be built
    assert!(ScaleLadder::with_min_cells(&g, 1e9).is_err());
}

#[test]
fn three_dimensional_analyzer_smoke() {
    let g = Grid::new(3, 16, 2.0 * PI).unwrap();
    let analyzer = Analyzer::new(&g).unwrap();
    assert_eq!(analyzer.ladder().len(), 1); // L/4 = 4h exactly
    let mut rng = rng::rng_from_seed(61);
    let u = rng::random_divergence_free(&g, 3, 1.0, &mut rng).unwrap();
    let x = g.flat_index(&[8, 8, 8]);
    let r = analyzer.ladder().radius(0);
    let i_val = analyzer.campanato_i(&u, x, r).unwrap();
    let ddf = analyzer.double_diff_form(&u, x, r).unwrap();
    assert!((ddf - 2.0 * i_val).abs() <= 1e-12 * (2.0 * i_val).max(1e-30));
    // constants still average exactly and carry zero oscillation
    let c = VectorField::from_fns(&g, |i, _| i as f64 + 1.0);
    let mean = analyzer.local_mean(&c, x, r).unwrap();
    for a in 0..3 {
        assert!((mean[a] - (a as f64 + 1.0)).abs() < 1e-12);
    }
    // the scan agrees with the pointwise brute force on the single rung
    let scan = analyzer.seminorm_scan(&u, 0.5, ScanMode::CampanatoSqrt).unwrap();
    let mut brute = 0.0f64;
    for x in 0..g.point_count() {
        brute = brute.max(analyzer.campanato_i_level(&u, x, 0).sqrt() * r.powf(-0.5));
    }
    assert!(common::rel_diff(scan.value, brute) < 1e-9);
    // morrey case: the discrete ball measure approximates the unit ball
    let spec = SeminormSpec::new(-0.5).unwrap();
    let ones = VectorField::from_fns(&g, |i, _| if i == 0 { 1.0 } else { 0.0 });
    let m = analyzer.morrey_m(&ones, x, r, &spec).unwrap();
    let omega3 = 4.0 * PI / 3.0;
    assert!(common::rel_diff(m, omega3) < 0.1, "m {m} vs {omega3}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    /// The double-difference expansion equals exactly twice the oscillation.
    #[test]
    fn double_difference_is_twice_oscillation(seed in 0u64..500, level in 0usize..4) {
        let g = grid_128();
        let analyzer = Analyzer::new(&g).unwrap();
        let mut rng = rng::rng_from_seed(seed);
        let u = rng::random_divergence_free(&g, 8, 1.0, &mut rng).unwrap();
        let x = (rng::uniform_symmetric(&mut rng).abs() * (g.point_count() - 1) as f64) as usize;
        let r = analyzer.ladder().radius(level.min(analyzer.ladder().len() - 1));
        let i_val = analyzer.campanato_i(&u, x, r).unwrap();
        let ddf = analyzer.double_diff_form(&u, x, r).unwrap();
        prop_assert!((ddf - 2.0 * i_val).abs() <= 1e-12 * (2.0 * i_val).max(1e-30));
    }

    /// The gradient-variance functional is never positive.
    #[test]
    fn dissipation_is_nonpositive(seed in 0u64..500) {
        let g = Grid::new(2, 64, 2.0 * PI).unwrap();
        let analyzer = Analyzer::new(&g).unwrap();
        let mut rng = rng::rng_from_seed(seed ^ 0x77);
        let u = rng::random_divergence_free(&g, 6, 1.0, &mut rng).unwrap();
        let jac = Jacobian::of(&u).unwrap();
        let x = (rng::uniform_symmetric(&mut rng).abs() * (g.point_count() - 1) as f64) as usize;
        for level in 0..analyzer.ladder().len() {
            prop_assert!(analyzer.dissipation_with(&jac, x, level) <= 0.0);
        }
    }
}
