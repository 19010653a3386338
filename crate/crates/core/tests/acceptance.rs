//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line (run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria as well).

use std::f64::consts::PI;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vortex_core::bundle::{self, make_background, LineBundleData};
use vortex_core::equation::{self, FamilySpec};
use vortex_core::geometry::{make_grid, FieldKind, ScalarField, SurfaceGrid};
use vortex_core::solver::{
    continue_path, newton_solve, newton_solve_with_source, uniqueness_roundtrip, PathSpec,
};
use vortex_core::stability::{
    ahe_constant_euler, ahe_constant_formula, euler_characteristic, reduce_to_vortex,
    stability_margin, VortexBundleSpec, WhichBundle,
};

fn zero(grid: &SurfaceGrid) -> ScalarField {
    ScalarField::constant(grid, FieldKind::Function, 0.0)
}

fn report(criterion: u32, pass: bool, detail: &str) {
    println!(
        "criterion {criterion:02} {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
}

/// Criterion 1: for each family, Newton from psi=0 at t=0 with the
/// u-construction returns ||psi|| <= 1e-10.
#[test]
fn criterion_01_t0_exactness() {
    let grid = make_grid(64).unwrap();
    let cases: Vec<(&str, FamilySpec, f64)> = vec![
        (
            "general",
            FamilySpec::General {
                a: 3.0,
                b: 1.0,
                c: 0.5,
                d: 2.0,
                e: 4.0,
                k: 0.5,
            },
            0.0,
        ),
        ("bradlow", FamilySpec::Bradlow { tau: 4.0 }, 0.0),
        (
            "cym",
            FamilySpec::Cym {
                tau: 4.0,
                lambda: -1.0,
            },
            2.5,
        ),
        ("vbma", FamilySpec::Vbma { r1: 3, r2: 2 }, 0.0),
    ];
    let mut worst = 0.0f64;
    let mut pass = true;
    for (name, family, alpha) in &cases {
        let co = family.coefficients(*alpha).unwrap();
        let bundle = make_background(&grid, co.d / 2.0).unwrap();
        let u = equation::build_u(&co, &bundle, &bundle.theta0).unwrap();
        let p = equation::make_params(family.tag(), co, *alpha, 0.0, u).unwrap();
        let st = newton_solve(&p, &bundle, &grid, &zero(&grid), 1e-10, 5).unwrap();
        let norm = st.psi.linf();
        worst = worst.max(norm);
        pass &= norm <= 1e-10 && st.newton_iters <= 1;
        assert!(
            norm <= 1e-10 && st.newton_iters <= 1,
            "{name}: ||psi|| = {norm}, iters = {}",
            st.newton_iters
        );
    }
    report(
        1,
        pass,
        &format!("t=0 exactness, worst ||psi|| = {worst:.3e}"),
    );
}

/// Closed-form manufactured source for the vbma coefficients at t=1 with
/// psi* = 0.1 sin(2 pi x) cos(2 pi y): every derivative is analytic
/// (termwise theta series), so the continuum problem is grid-independent
/// and the recovery error measures the discretization alone.
fn manufactured_setup(
    n: usize,
    cap: f64,
) -> (SurfaceGrid, LineBundleData, ScalarField, ScalarField) {
    let grid = make_grid(n).unwrap();
    let derivs = bundle::background_with_derivatives(&grid, cap).unwrap();
    let bundle_data = make_background(&grid, cap).unwrap();
    let co = FamilySpec::Vbma { r1: 3, r2: 2 }.coefficients(0.0).unwrap();
    let (d, k) = (co.d, co.k);
    let len = grid.len();
    let mut source = vec![0.0; len];
    let mut psi_star = vec![0.0; len];
    for idx in 0..len {
        let (x, y) = grid.coords(idx);
        let ps = 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos();
        let px = 0.1 * 2.0 * PI * (2.0 * PI * x).cos() * (2.0 * PI * y).cos();
        let py = -0.1 * 2.0 * PI * (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        let lap_ps = -8.0 * PI * PI * ps;
        let em = (-ps).exp();
        let s0 = derivs.s0.values()[idx];
        let s0x = derivs.s0_x.values()[idx];
        let s0y = derivs.s0_y.values()[idx];
        let s0l = derivs.s0_lap.values()[idx];
        let s = s0 * em;
        let lap_s = em * (s0l - 2.0 * (s0x * px + s0y * py) + s0 * (px * px + py * py - lap_ps));
        let theta = 1.0 + lap_ps / (4.0 * PI);
        let denom = co.a + co.b * s - co.c * s * s - k * s * (d - s);
        source[idx] = theta * denom / (d - s) - k * lap_s / (4.0 * PI);
        psi_star[idx] = ps;
    }
    let source = ScalarField::from_values(&grid, FieldKind::Function, source).unwrap();
    let psi_star = ScalarField::from_values(&grid, FieldKind::Function, psi_star).unwrap();
    (grid, bundle_data, source, psi_star)
}

fn manufactured_error(n: usize) -> f64 {
    let family = FamilySpec::Vbma { r1: 3, r2: 2 };
    let cap = family.default_cap().unwrap();
    let (grid, bundle_data, source, psi_star) = manufactured_setup(n, cap);
    let p = family.params_at(&grid, &bundle_data, 0.0, 1.0).unwrap();
    let st = newton_solve_with_source(&p, &bundle_data, &grid, &zero(&grid), &source, 1e-10, 60)
        .unwrap();
    st.psi.linf_diff(&psi_star).unwrap()
}

/// Criterion 2: manufactured recovery at vbma coefficients, t=1. The first
/// clause (1e-8 at n=64) holds with orders to spare. The second clause
/// compares the two recovery errors, which for this spectrally exact
/// discretization both sit at machine epsilon (the discrete solution IS
/// psi* at either resolution), so the ratio is round-off against round-off.
#[test]
fn criterion_02_manufactured_recovery() {
    let err64 = manufactured_error(64);
    let err128 = manufactured_error(128);
    let clause1 = err64 <= 1e-8;
    let clause2 = err128 <= 0.25 * err64;
    report(
        2,
        clause1 && clause2,
        &format!(
            "manufactured recovery: err(n=64) = {err64:.3e} (<= 1e-8: {clause1}), \
             err(n=128) = {err128:.3e}, quarter-ratio clause: {clause2}"
        ),
    );
    assert!(clause1, "recovery error at n=64: {err64:.3e}");
    assert!(
        clause2,
        "err128 = {err128:.3e} vs quarter of err64 = {:.3e}: both errors are at \
         machine epsilon for the Fourier-exact discretization, so this clause \
         compares rounding noise; see the refinement analysis in the repository \
         notes",
        0.25 * err64
    );
}

/// Criterion 3: analytic Jacobian vs central finite differences, relative
/// 1e-5, on 10 seeded random smooth pairs.
#[test]
fn criterion_03_jacobian_consistency() {
    let grid = make_grid(64).unwrap();
    let family = FamilySpec::Vbma { r1: 3, r2: 2 };
    let bundle_data = make_background(&grid, 0.5).unwrap();
    let p = family.params_at(&grid, &bundle_data, 0.0, 0.7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut smooth = |amp: f64| {
        let modes: Vec<(f64, f64, f64, f64)> = (0..6)
            .map(|_| {
                (
                    rng.gen_range(-3..=3i32) as f64,
                    rng.gen_range(-3..=3i32) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let f = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
            modes
                .iter()
                .map(|&(kx, ky, a, ph)| a * (2.0 * PI * (kx * x + ky * y) + ph).sin())
                .sum::<f64>()
        });
        let scale = amp / f.linf().max(1e-12);
        f.map(|v| v * scale)
    };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let psi = smooth(0.2);
        let dpsi = smooth(0.15);
        let j = equation::jacobian_apply(&p, &bundle_data, &grid, &psi, &dpsi).unwrap();
        let eps = 1e-6;
        let plus = psi.zip_with(&dpsi, |a, b| a + eps * b).unwrap();
        let minus = psi.zip_with(&dpsi, |a, b| a - eps * b).unwrap();
        let rp = equation::residual(&p, &bundle_data, &grid, &plus).unwrap();
        let rm = equation::residual(&p, &bundle_data, &grid, &minus).unwrap();
        let fd = rp.zip_with(&rm, |a, b| (a - b) / (2.0 * eps)).unwrap();
        worst = worst.max(j.linf_diff(&fd).unwrap() / j.linf());
    }
    report(
        3,
        worst <= 1e-5,
        &format!("jacobian vs central FD, worst relative {worst:.3e}"),
    );
    assert!(worst <= 1e-5, "worst relative mismatch {worst:.3e}");
}

/// Criterion 4: degree conservation on every accepted state of every test
/// path (vbma t-path and cym alpha-path).
#[test]
fn criterion_04_degree_conservation() {
    let grid = make_grid(64).unwrap();
    let mut worst = 0.0f64;
    let mut all = Vec::new();

    let vbma = FamilySpec::Vbma { r1: 3, r2: 2 };
    let b1 = make_background(&grid, vbma.default_cap().unwrap()).unwrap();
    let spec1 = PathSpec::defaults_for(vec![(0.0, 0.0), (0.0, 1.0)]);
    all.extend(continue_path(&spec1, &vbma, &b1, &grid, &zero(&grid)).unwrap());

    let cym = FamilySpec::Cym {
        tau: 4.0,
        lambda: -1.0,
    };
    let b2 = make_background(&grid, cym.default_cap().unwrap()).unwrap();
    let spec2 = PathSpec::defaults_for(vec![(0.0, 1.0), (5.0, 1.0)]);
    all.extend(continue_path(&spec2, &cym, &b2, &grid, &zero(&grid)).unwrap());

    let mut pass = true;
    for st in &all {
        worst = worst.max(st.report.observed.degree_error);
        pass &= st.report.verdicts.degree;
    }
    report(
        4,
        pass,
        &format!(
            "degree conservation over {} accepted states, worst error {worst:.3e}",
            all.len()
        ),
    );
    assert!(pass && worst <= 1e-8, "worst degree error {worst:.3e}");
}

/// Criterion 5: vbma(3,2) path t: 0 -> 1 at n=64 completes in <= 50 steps
/// with max |phi|^2_h <= 1 + 1e-8 at every accepted step.
#[test]
fn criterion_05_lemma_monitor_on_vbma_path() {
    let grid = make_grid(64).unwrap();
    let family = FamilySpec::Vbma { r1: 3, r2: 2 };
    let bundle_data = make_background(&grid, family.default_cap().unwrap()).unwrap();
    let spec = PathSpec::defaults_for(vec![(0.0, 0.0), (0.0, 1.0)]);
    let states = continue_path(&spec, &family, &bundle_data, &grid, &zero(&grid)).unwrap();
    let max_s = states
        .iter()
        .map(|s| s.report.observed.max_s)
        .fold(0.0, f64::max);
    let pass = states.len() <= 50
        && max_s <= 1.0 + 1e-8
        && states.iter().all(|s| s.report.verdicts.phi_bound);
    report(
        5,
        pass,
        &format!(
            "vbma path: {} accepted steps, max |phi|^2_h = {max_s:.9}",
            states.len()
        ),
    );
    assert!(pass, "steps {}, max_s {max_s}", states.len());
}

/// Criterion 6: the bradlow(tau=4) solution satisfies
/// int s omega = 4 pi within 1e-6 and max s < 4.
#[test]
fn criterion_06_bradlow_integral_identity() {
    let grid = make_grid(64).unwrap();
    let family = FamilySpec::Bradlow { tau: 4.0 };
    let bundle_data = make_background(&grid, 2.0).unwrap();
    let p = family.params_at(&grid, &bundle_data, 0.0, 1.0).unwrap();
    let st = newton_solve(&p, &bundle_data, &grid, &zero(&grid), 1e-10, 40).unwrap();
    let s = bundle_data.s_of_psi(&st.psi).unwrap();
    let integral = grid.integrate(&s).unwrap();
    let gap = (integral - 4.0 * PI).abs();
    let pass = gap <= 1e-6 && s.max() < 4.0;
    report(
        6,
        pass,
        &format!(
            "bradlow integral: int s = {integral:.12} (4 pi + {gap:.2e}), max s = {:.6}",
            s.max()
        ),
    );
    assert!(pass, "gap {gap:.3e}, max s {}", s.max());
}

/// Criterion 7: cym(tau=4, lambda=-1) seeded by the bradlow solve at
/// alpha=0, continued to alpha=5, with every hypothesis flag passing and
/// b - (k+c) d exactly zero.
#[test]
fn criterion_07_cym_seeded_path() {
    let grid = make_grid(64).unwrap();
    let family = FamilySpec::Cym {
        tau: 4.0,
        lambda: -1.0,
    };
    let bundle_data = make_background(&grid, family.default_cap().unwrap()).unwrap();
    let spec = PathSpec::defaults_for(vec![(0.0, 1.0), (5.0, 1.0)]);
    let states = continue_path(&spec, &family, &bundle_data, &grid, &zero(&grid)).unwrap();
    let mut pass = true;
    for st in &states {
        let f = &st.report.flags;
        pass &= f.b_cd && f.b_kctd && f.de_a && st.report.theta0_is_omega;
        pass &= st.report.verdicts.phi_bound; // max s stays below tau
        let (alpha, t) = st.path_position;
        let co = family.coefficients(alpha).unwrap();
        let exact_zero = co.b - (co.k + co.c) * co.d;
        pass &= exact_zero == 0.0 && t == 1.0;
    }
    report(
        7,
        pass,
        &format!(
            "cym path alpha 0 -> 5: {} states, all flags pass, b-(k+c)d = 0 exactly",
            states.len()
        ),
    );
    assert!(pass);
}

/// Criterion 8: uniqueness round-trip with perturbation 0.5 sin(2 pi y)
/// <= 1e-6 at the endpoint, and two distinct initial guesses at the fixed
/// endpoint parameters agree within 1e-6.
#[test]
fn criterion_08_uniqueness_roundtrip() {
    let grid = make_grid(64).unwrap();
    let family = FamilySpec::Vbma { r1: 3, r2: 2 };
    let bundle_data = make_background(&grid, family.default_cap().unwrap()).unwrap();
    let spec = PathSpec::defaults_for(vec![(0.0, 0.0), (0.0, 1.0)]);
    let pert = ScalarField::from_fn(&grid, FieldKind::Function, |_, y| {
        0.5 * (2.0 * PI * y).sin()
    });
    let rt = uniqueness_roundtrip(&spec, &family, &bundle_data, &grid, &pert).unwrap();

    let forward = continue_path(&spec, &family, &bundle_data, &grid, &zero(&grid)).unwrap();
    let psi_end = &forward.last().unwrap().psi;
    let p_end = family.params_at(&grid, &bundle_data, 0.0, 1.0).unwrap();
    let init_a = psi_end
        .zip_with(
            &ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
                0.3 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
            }),
            |a, b| a + b,
        )
        .unwrap();
    let init_b = psi_end
        .zip_with(
            &ScalarField::from_fn(&grid, FieldKind::Function, |_, y| {
                -0.25 * (2.0 * PI * y).sin()
            }),
            |a, b| a + b,
        )
        .unwrap();
    let sol_a = newton_solve(&p_end, &bundle_data, &grid, &init_a, 1e-10, 40).unwrap();
    let sol_b = newton_solve(&p_end, &bundle_data, &grid, &init_b, 1e-10, 40).unwrap();
    let two_init_gap = sol_a.psi.linf_diff(&sol_b.psi).unwrap();

    let pass = rt.endpoint_discrepancy <= 1e-6 && two_init_gap <= 1e-6;
    report(
        8,
        pass,
        &format!(
            "roundtrip endpoint discrepancy {:.3e}, two-init agreement {two_init_gap:.3e}",
            rt.endpoint_discrepancy
        ),
    );
    assert!(
        pass,
        "roundtrip {:.3e}, two-init {two_init_gap:.3e}",
        rt.endpoint_discrepancy
    );
}

/// Criterion 9: Green representation residual <= 1e-10 at n=64 for 10
/// seeded random band-limited functions.
#[test]
fn criterion_09_green_representation() {
    let grid = make_grid(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let modes: Vec<(f64, f64, f64, f64)> = (0..8)
            .map(|_| {
                (
                    rng.gen_range(-8..=8i32) as f64,
                    rng.gen_range(-8..=8i32) as f64,
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(0.0..2.0 * PI),
                )
            })
            .collect();
        let f = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
            modes
                .iter()
                .map(|&(kx, ky, a, ph)| a * (2.0 * PI * (kx * x + ky * y) + ph).cos())
                .sum::<f64>()
        });
        worst = worst.max(grid.green_representation_check(&f).unwrap());
    }
    report(
        9,
        worst <= 1e-10,
        &format!("green representation, worst residual {worst:.3e}"),
    );
    assert!(worst <= 1e-10, "worst reconstruction residual {worst:.3e}");
}

/// Criterion 10: eliminated gradient pairing vs (i d s wedge dbar s)/s over
/// the region s > 0.01 max s, within 1e-6 at n=128.
#[test]
fn criterion_10_gradient_pairing_identity() {
    let grid = make_grid(128).unwrap();
    let bundle_data = make_background(&grid, 0.5).unwrap();
    let psi = ScalarField::from_fn(&grid, FieldKind::Function, |x, y| {
        0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).cos()
    });
    let gap = bundle_data
        .gradient_identity_residual(&grid, &psi, 0.01)
        .unwrap();
    report(
        10,
        gap <= 1e-6,
        &format!("gradient pairing identity gap {gap:.3e}"),
    );
    assert!(gap <= 1e-6, "identity gap {gap:.3e}");
}

/// Criterion 11: exact rational identities over the full sweep
/// g in 0..4, tau in {4,6,8}, k in 1..6, r1, r2 in 2..7.
#[test]
fn criterion_11_stability_sweep() {
    let mut count = 0usize;
    for g in 0..=3u32 {
        for &tau in &[4u64, 6, 8] {
            for k in 1..=5u32 {
                for r1 in 2..=6u32 {
                    for r2 in 2..=6u32 {
                        let spec = VortexBundleSpec {
                            g,
                            tau,
                            power_k: k,
                            r1,
                            r2,
                        };
                        let margin = stability_margin(&spec).unwrap();
                        let chi_e = euler_characteristic(&spec, WhichBundle::E).unwrap();
                        let chi_s = euler_characteristic(&spec, WhichBundle::S).unwrap();
                        assert_eq!(
                            &chi_e
                                - vortex_core::stability::Rational::from_integer(2.into()) * &chi_s,
                            margin,
                            "chi identity fails at {spec:?}"
                        );
                        let red = reduce_to_vortex(&spec).unwrap();
                        assert_eq!(
                            vortex_core::stability::Rational::from_integer(2.into())
                                * (&red.r1_shifted - &red.r2_shifted),
                            margin,
                            "R1-R2 identity fails at {spec:?}"
                        );
                        assert_eq!(
                            ahe_constant_formula(&spec).unwrap(),
                            ahe_constant_euler(&spec).unwrap(),
                            "AHE cross-check fails at {spec:?}"
                        );
                        count += 1;
                    }
                }
            }
        }
    }
    report(
        11,
        true,
        &format!("stability sweep: {count} spec combinations, zero-tolerance identities hold"),
    );
}

/// Criterion 12: theta background quality: periodicity <= 1e-12,
/// Poincare-Lelong residual <= 1e-4 away from the zero at n=128, and a
/// single zero at (1/2, 1/2) within one cell.
#[test]
fn criterion_12_theta_background() {
    // periodicity of the continuum evaluator (both axes, off-grid points)
    let mut periodicity = 0.0f64;
    for i in 0..40 {
        let x = 0.025 * i as f64 + 0.013;
        let y = 0.97 - 0.02 * i as f64;
        let v = bundle::section_density_raw(x, y);
        periodicity = periodicity.max((bundle::section_density_raw(x + 1.0, y) - v).abs());
        periodicity = periodicity.max((bundle::section_density_raw(x, y + 1.0) - v).abs());
    }

    let grid = make_grid(128).unwrap();
    let bundle_data = make_background(&grid, 0.5).unwrap();
    let pl = bundle_data.poincare_lelong_residual(&grid, 3).unwrap();

    let mut zero_idx = 0;
    let mut zero_min = f64::INFINITY;
    for (idx, &v) in bundle_data.s0.values().iter().enumerate() {
        if v < zero_min {
            zero_min = v;
            zero_idx = idx;
        }
    }
    let (zx, zy) = grid.coords(zero_idx);
    let zero_ok = (zx - 0.5).abs() <= grid.spacing() && (zy - 0.5).abs() <= grid.spacing();
    let unique = bundle_data
        .s0
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < 1e-6 * 0.5)
        .all(|(idx, _)| {
            let (x, y) = grid.coords(idx);
            (x - 0.5).abs() <= grid.spacing() && (y - 0.5).abs() <= grid.spacing()
        });

    let pass = periodicity <= 1e-12 && pl <= 1e-4 && zero_ok && unique;
    report(
        12,
        pass,
        &format!(
            "theta background: periodicity {periodicity:.2e}, Poincare-Lelong {pl:.2e}, zero at ({zx}, {zy})"
        ),
    );
    assert!(
        pass,
        "periodicity {periodicity:.2e}, PL {pl:.2e}, zero ({zx},{zy}), unique {unique}"
    );
}
