//! Values frozen from 40-digit evaluations (see `reference.py` in this
//! directory for the script that produced them).

#![allow(clippy::excessive_precision)]

use hartman_watson::inversion::{oracle_density, transform_integrand, ContourSpec};
use hartman_watson::saddle::solve_saddle;
use hartman_watson::specfun::{log_bessel_i, log_bessel_i_real, log_gamma_complex, principal_phase};
use hartman_watson::HwParams;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!(
        (got - want).abs() <= tol * want.abs().max(1.0),
        "{what}: got {got}, want {want}"
    );
}

fn assert_phase(got: f64, want: f64, tol: f64, what: &str) {
    let d = principal_phase(got - want);
    assert!(d.abs() <= tol * want.abs().max(1.0), "{what}: phase {got} vs {want}");
}

#[test]
fn log_gamma_values() {
    let cases = [
        (c(2.0, 3.0), -2.0928517530927333496, 2.3023965434668676262),
        (c(0.5, 0.5), 0.11238724280962311252, -0.75072920212205074465),
        (c(10.0, -7.0), 10.418194968645705788, -16.311795218824036624),
        (c(100.0, 250.0), 160.11582263715747573, 1267.3512927423766113),
        (c(0.1, 30.0), -47.565423555699172694, 71.406325063462139443),
        (c(1000.0, 1000.0), 5466.2225216299023761, 7039.33429191119332),
        (c(3.7, 0.0), 1.4280723266653881292, 0.0),
    ];
    for (z, re, im) in cases {
        let g = log_gamma_complex(z).unwrap();
        assert_close(g.log_modulus, re, 1e-13, &format!("log|Γ({z})|"));
        assert_phase(g.phase, im, 1e-13, &format!("arg Γ({z})"));
    }
}

#[test]
fn real_bessel_values() {
    let orders = [0.0, 0.5, 1.0, 2.5, 7.0, 13.3, 20.0];
    let radii = [0.5, 1.0, 5.0, 20.0];
    let table = [
        [0.061549719185481303941, 0.23591435850717864869, 3.3046817758225334338, 17.589610428244274291],
        [-0.53104008831178197809, -0.064351991073531798753, 3.2762971096179065817, 17.583195330018331757],
        [-1.3552054470253344645, -0.57064798749083128142, 3.1919420305456754634, 17.563954622519344304],
        [-4.6488876405687437878, -2.8629702657767536389, 2.6222658628966749347, 17.429461230076289684],
        [-18.221412776219336206, -13.345995653624480248, -1.3606697274726706779, 16.346256489504650782],
        [-41.76969170226063802, -32.537731662590286906, -10.718646616819525696, 13.216704380759066532],
        [-70.05852769395196747, -56.186658528812174855, -23.714161951995091412, 8.0673843725853344692],
    ];
    for (i, &nu) in orders.iter().enumerate() {
        for (j, &r) in radii.iter().enumerate() {
            let got = log_bessel_i_real(nu, r).unwrap();
            assert_close(got, table[i][j], 1e-13, &format!("log I_{nu}({r})"));
        }
    }
}

#[test]
fn complex_bessel_values() {
    let cases = [
        (c(0.5, 0.0), 1.0, -0.064351991073531798753, 0.0),
        (c(30.0, 40.0), 2.0, -53.132723377162203292, -0.26444630946888688569),
        (c(3.0, 4.0), 1.0, -1.9009085049140895614, -2.1904934183151361831),
        (c(50.0, -20.0), 0.7, -197.1040391071589808, -0.59404856320200328417),
        (c(2.0, 100.0), 3.0, 145.459123585377572, 2.8364854218372167824),
        (c(0.5, 0.1), 40.0, 37.23674833587849824, -0.0012660324624052607462),
    ];
    for (nu, r, re, im) in cases {
        let v = log_bessel_i(nu, r).unwrap();
        assert_close(v.log_modulus, re, 1e-12, &format!("log|I_{nu}({r})|"));
        assert_phase(v.phase, im, 1e-11, &format!("arg I_{nu}({r})"));
    }
}

#[test]
fn saddle_roots() {
    let p = HwParams::new(1.0).unwrap();
    for (t, u0) in [
        (0.1, 1018.8055239103024661),
        (0.02, 52400.58539702616649),
        (0.01, 265341.02437139643018),
    ] {
        let sol = solve_saddle(t, &p).unwrap();
        assert_close(sol.u0, u0, 1e-12, &format!("u0({t})"));
    }
}

#[test]
fn transform_at_the_saddle() {
    let p = HwParams::new(1.0).unwrap();
    for (t, want) in [(0.02, -727.82591401746080521), (0.1, -59.296811438898267521)] {
        let u0 = solve_saddle(t, &p).unwrap().u0;
        let v = transform_integrand(c(u0, 0.0), t, &p).unwrap();
        assert_close(v.log_modulus, want, 1e-12, &format!("transform at u0({t})"));
        assert_eq!(v.phase, 0.0);
    }
}

#[test]
fn oracle_log_densities() {
    let spec = ContourSpec::default();
    let p1 = HwParams::new(1.0).unwrap();
    for (t, want) in [
        (0.05, -179.07043936349692),
        (0.02, -720.9251664179512),
        (0.01, -1920.8326898370701),
        (0.005, -4909.688611467586),
        (1.0, -0.538268161276309295),
    ] {
        let got = oracle_density(t, &p1, &spec).unwrap().log_value;
        assert_close(got, want, 1e-9, &format!("log f_1({t})"));
    }
    let p2 = HwParams::new(2.0).unwrap();
    let got = oracle_density(0.5, &p2, &spec).unwrap().log_value;
    assert_close(got, 0.573569362985988171, 1e-9, "log f_2(0.5)");
}

#[test]
fn right_tail_log_densities() {
    let spec = ContourSpec::default();
    for (t, r, want) in [
        (1.0, 10.0, -15.4365154488375618),
        (1.0, 50.0, -94.9697176310595448),
        (1.0, 200.0, -394.87261079342984550),
        (0.2, 20.0, -18.0295740015756753),
    ] {
        let p = HwParams::new(r).unwrap();
        let got = oracle_density(t, &p, &spec).unwrap().log_value;
        assert_close(got, want, 1e-9, &format!("log f_{r}({t})"));
    }
}
