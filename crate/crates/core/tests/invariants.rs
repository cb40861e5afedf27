use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use hartman_watson::asian::{
    conditional_density, conditional_density_or_bound, marginal_density, AsianConfig,
    AsianMethod, ConditionalValue, GbmIntegralQuery, MarginalOptions,
};
use hartman_watson::asymptotics::{
    density_main, density_rough, exact_exponent, exponent_expansion, levy_density,
    log_density_crude,
};
use hartman_watson::inversion::{oracle_density, oracle_outcome, ContourSpec};
use hartman_watson::quadrature::{integrate_breakpoints, QuadOptions};
use hartman_watson::saddle::{curvature_m, solve_saddle};
use hartman_watson::specfun::{log_bessel_i, log_bessel_i_asymptotic, log_gamma_complex, principal_phase};
use hartman_watson::{HwError, HwParams};
use num_complex::Complex64;

fn p(r: f64) -> HwParams {
    HwParams::new(r).unwrap()
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

#[test]
fn asymptotic_bessel_gap_shrinks_like_one_over_order() {
    for arg in [0.0, FRAC_PI_4, -FRAC_PI_4, 0.9 * FRAC_PI_2, -0.9 * FRAC_PI_2] {
        let gaps: Vec<f64> = [20.0, 40.0, 80.0, 160.0]
            .iter()
            .map(|&m| {
                let nu = Complex64::from_polar(m, arg);
                let d = log_bessel_i_asymptotic(nu, 1.0).unwrap().to_log()
                    - log_bessel_i(nu, 1.0).unwrap().to_log();
                (Complex64::new(d.re, principal_phase(d.im)).exp() - 1.0).norm()
            })
            .collect();
        for w in gaps.windows(2) {
            let ratio = w[1] / w[0];
            assert!((0.3..=0.8).contains(&ratio), "arg {arg}: {gaps:?}");
        }
    }
}

#[test]
fn gamma_recurrence_on_a_grid() {
    for i in 0..10 {
        for j in 0..10 {
            let z = Complex64::new(0.1 + 7.3 * i as f64, -90.0 + 20.0 * j as f64);
            let gap = log_gamma_complex(z + 1.0).unwrap().to_log()
                - log_gamma_complex(z).unwrap().to_log()
                - z.ln();
            assert!(gap.re.abs() <= 1e-12 * z.norm().max(10.0), "{z}: {gap}");
            assert!(principal_phase(gap.im).abs() <= 1e-12 * z.norm().max(10.0), "{z}: {gap}");
        }
    }
}

#[test]
fn saddle_is_decreasing_in_t() {
    let grid = [1e-6, 1e-4, 1e-3, 1e-2, 0.05];
    for r in [0.5, 1.0, 2.0 * std::f64::consts::SQRT_2, 5.0] {
        let roots: Vec<f64> = grid.iter().map(|&t| solve_saddle(t, &p(r)).unwrap().u0).collect();
        assert!(strictly_decreasing(&roots), "r = {r}: {roots:?}");
    }
}

#[test]
fn scaled_saddle_and_curvature_tend_to_one() {
    let params = p(1.0);
    let mut root_gaps = Vec::new();
    let mut curvature_gaps = Vec::new();
    for t in [1e-2, 1e-3, 1e-4] {
        let sol = solve_saddle(t, &params).unwrap();
        let l = -t.ln();
        root_gaps.push((sol.u0 * 2.0 * t * t / (l * l) - 1.0).abs());
        let m = curvature_m(sol.u0, &params).unwrap();
        curvature_gaps.push((m * 2.0 * l * l / t.powi(3) - 1.0).abs());
    }
    assert!(strictly_decreasing(&root_gaps), "{root_gaps:?}");
    assert!(strictly_decreasing(&curvature_gaps), "{curvature_gaps:?}");
}

#[test]
fn main_and_rough_track_the_oracle() {
    let params = p(1.0);
    let oracle = oracle_density(0.02, &params, &ContourSpec::default()).unwrap().log_value;
    let main = density_main(0.02, &params).unwrap().log_value;
    let rough = density_rough(0.02, &params).unwrap().log_value;
    assert!((main - oracle).abs() <= 0.02 * oracle.abs());
    assert!((rough - oracle).abs() <= 0.05 * oracle.abs());
}

#[test]
fn rough_to_main_ratio_moves_toward_one() {
    let params = p(1.0);
    let gaps: Vec<f64> = [1e-3, 1e-4, 1e-6]
        .iter()
        .map(|&t| {
            let ratio = (density_rough(t, &params).unwrap().log_value
                - density_main(t, &params).unwrap().log_value)
                .exp();
            assert!((0.5..=2.0).contains(&ratio));
            (ratio - 1.0).abs()
        })
        .collect();
    assert!(strictly_decreasing(&gaps), "{gaps:?}");
}

#[test]
fn exponent_expansion_error_is_lower_order() {
    let params = p(1.0);
    let scaled: Vec<f64> = [1e-3, 1e-4, 1e-6]
        .iter()
        .map(|&t| {
            let sol = solve_saddle(t, &params).unwrap();
            ((exact_exponent(&sol) - exponent_expansion(t, &params).unwrap()) * t / -t.ln()).abs()
        })
        .collect();
    assert!(strictly_decreasing(&scaled), "{scaled:?}");
}

#[test]
fn main_over_crude_tends_to_one() {
    let params = p(1.0);
    let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
        .iter()
        .map(|&t| {
            (density_main(t, &params).unwrap().log_value / log_density_crude(t).unwrap() - 1.0).abs()
        })
        .collect();
    assert!(strictly_decreasing(&gaps), "{gaps:?}");
}

#[test]
fn thinner_than_levy() {
    let params = p(1.0);
    for t in [1e-2, 5e-3, 1e-3, 1e-4, 1e-6, 1e-10] {
        let main = density_main(t, &params).unwrap().log_value;
        assert!(main < levy_density(t).unwrap().log_value, "t = {t}");
    }
}

#[test]
fn oracle_is_positive_and_self_consistent() {
    let params = p(1.0);
    for t in [0.05, 0.02, 0.01] {
        let coarse = oracle_outcome(t, &params, &ContourSpec::default()).unwrap();
        let fine = oracle_outcome(t, &params, &ContourSpec::default().with_rel_tol(5e-11)).unwrap();
        assert!(coarse.density.log_value.is_finite());
        let change = (fine.density.log_value - coarse.density.log_value).exp_m1().abs();
        assert!(change <= coarse.rel_error.max(fine.rel_error), "t = {t}: {change}");
    }
}

#[test]
fn nearby_contours_agree() {
    let params = p(1.0);
    let u0 = solve_saddle(0.05, &params).unwrap().u0;
    let base = oracle_density(0.05, &params, &ContourSpec::default()).unwrap().log_value;
    for k in [0.9, 1.1] {
        let spec = ContourSpec { abscissa: Some(k * u0), ..ContourSpec::default() };
        let moved = oracle_density(0.05, &params, &spec).unwrap().log_value;
        assert!((moved - base).exp_m1().abs() <= 1e-6, "k = {k}");
    }
}

#[test]
fn distant_contours_never_answer_silently_wrong() {
    // far from the saddle the integrand cancels to many digits; the oracle
    // must either resolve the value or say that it could not
    let params = p(1.0);
    let u0 = solve_saddle(0.05, &params).unwrap().u0;
    let base = oracle_density(0.05, &params, &ContourSpec::default()).unwrap().log_value;
    for k in [0.5, 2.0] {
        let spec = ContourSpec { abscissa: Some(k * u0), ..ContourSpec::default() };
        match oracle_density(0.05, &params, &spec) {
            Ok(d) => assert!((d.log_value - base).exp_m1().abs() <= 1e-6, "k = {k}"),
            Err(HwError::ToleranceNotMet { .. }) => {}
            Err(e) => panic!("k = {k}: {e}"),
        }
    }
}

/// `∫ p(u) du` over `u ∈ [lo, hi]`, integrated in `s = log u`. Bounded points
/// count as zero and their bound goes into the returned error.
fn conditional_mass(t: f64, x: f64, lo: f64, hi: f64) -> (f64, f64) {
    let cfg = AsianConfig::default();
    let bounded = std::sync::Mutex::new(f64::NEG_INFINITY);
    let opts = QuadOptions { rel_tol: 1e-6, ..QuadOptions::default() };
    let res = integrate_breakpoints(
        |s: f64| {
            let q = GbmIntegralQuery { t, nu: 0.0, x, u: s.exp(), method: AsianMethod::Auto };
            match conditional_density_or_bound(&q, &cfg)? {
                ConditionalValue::Resolved(d) => Ok((d.log_value + s).exp()),
                ConditionalValue::Bounded { log_bound } => {
                    let mut b = bounded.lock().unwrap();
                    *b = b.max(log_bound + s);
                    Ok(0.0)
                }
            }
        },
        &[lo.ln(), 0.0, hi.ln()],
        &opts,
    )
    .unwrap();
    let missed = bounded.into_inner().unwrap().exp() * (hi / lo).ln();
    (res.value, res.abs_error + missed)
}

#[test]
fn conditional_density_normalizes() {
    for (t, x) in [(1.0, 0.0), (0.5, 0.0), (1.0, 0.5)] {
        let (mass, err) = conditional_mass(t, x, 1e-4, 50.0);
        assert!((mass - 1.0).abs() <= 1e-2, "(t, x) = ({t}, {x}): {mass} ± {err}");
    }
}

#[test]
fn conditional_density_is_positive() {
    let cfg = AsianConfig::default();
    for u in [0.05, 0.2, 1.0, 5.0, 20.0] {
        for x in [-1.0, 0.0, 1.0] {
            let q = GbmIntegralQuery { t: 1.0, nu: 0.3, x, u, method: AsianMethod::Auto };
            let d = conditional_density(&q, &cfg).unwrap();
            assert!(d.log_value.is_finite(), "u = {u}, x = {x}");
        }
    }
}

#[test]
fn oracle_and_main_agree_at_the_switch() {
    // at u <= 0.02 the order r = 1/u is so large that no saddle exists at
    // t = 0.05; those points are skipped, larger u are compared instead
    let cfg = AsianConfig::default();
    let query = |u, method| GbmIntegralQuery { t: 0.05, nu: 0.0, x: 0.0, u, method };
    for u in [0.01, 0.02] {
        let main = conditional_density(&query(u, AsianMethod::Main), &cfg);
        assert!(matches!(main, Err(HwError::NoSaddle { .. })), "u = {u}");
    }
    for u in [0.1, 0.5, 1.0] {
        let oracle = conditional_density(&query(u, AsianMethod::Oracle), &cfg).unwrap().log_value;
        let main = conditional_density(&query(u, AsianMethod::Main), &cfg).unwrap().log_value;
        assert!((oracle - main).abs() <= 0.1 * oracle.abs(), "u = {u}: {oracle} vs {main}");
    }
}

#[test]
fn marginal_left_tail_decays() {
    let cfg = AsianConfig::default();
    let opts = MarginalOptions::default();
    let small = marginal_density(1.0, 0.0, 1e-3, AsianMethod::Auto, &cfg, &opts).unwrap();
    let mid = marginal_density(1.0, 0.0, 0.5, AsianMethod::Auto, &cfg, &opts).unwrap();
    assert!(small.log_value.is_finite());
    assert!(small.log_value < mid.log_value);
}

#[test]
fn marginal_is_stable_under_refinement() {
    let cfg = AsianConfig::default();
    let coarse = MarginalOptions::default();
    let fine = MarginalOptions { rel_tol: 1e-9, max_nodes: 80_000, ..coarse };
    let a = marginal_density(1.0, 0.0, 0.7, AsianMethod::Auto, &cfg, &coarse).unwrap();
    let b = marginal_density(1.0, 0.0, 0.7, AsianMethod::Auto, &cfg, &fine).unwrap();
    assert!((a.log_value - b.log_value).abs() <= 1e-5);
}
