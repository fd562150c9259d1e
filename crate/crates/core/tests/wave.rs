use gk_core::rates::{derived_constants, ReactionPolynomial};
use gk_core::wave::{
    sigma_admissible, sigma_bound, solve_wave, verify_tails, wave_speed, WaveOptions,
};

/// Speed of `s (u - a)(b - u)(u - m)` obtained by rescaling to the
/// classical Nagumo equation: `sqrt(s / 2) (a + b - 2 m)`.
fn nagumo_speed(s: f64, a: f64, m: f64, b: f64) -> f64 {
    (s / 2.0).sqrt() * (a + b - 2.0 * m)
}

#[test]
fn nagumo_speed_matches_closed_form() {
    let f = ReactionPolynomial::cubic(1.0, 0.0, 0.25, 1.0).unwrap();
    let c = wave_speed(&f).unwrap();
    assert!((c - 0.353_553_390_593_273_8).abs() < 1e-6, "{c}");
}

#[test]
fn cubic_family_speeds() {
    for (s, a, m, b) in [
        (1.0, 0.25, 0.45, 0.75),
        (200.0, 0.25, 0.45, 0.75),
        (3.0, 0.1, 0.3, 0.9),
        (0.5, 0.2, 0.6, 0.7),
        (10.0, 0.3, 0.5, 0.7),
    ] {
        let f = ReactionPolynomial::cubic(s, a, m, b).unwrap();
        let c = wave_speed(&f).unwrap();
        let e = nagumo_speed(s, a, m, b);
        assert!(
            (c - e).abs() < 1e-6,
            "s={s} roots=({a},{m},{b}): {c} vs {e}"
        );
    }
}

#[test]
fn default_profile_properties() {
    let f = ReactionPolynomial::default_model(200.0).unwrap();
    let o = WaveOptions::automatic(&f).unwrap();
    let w = solve_wave(&f, o.z_max, o.h, o.tol).unwrap();
    assert!((w.c_star - nagumo_speed(200.0, 0.25, 0.45, 0.75)).abs() < 1e-6);
    let mid = w.len() / 2;
    assert!((w.u[mid] - 0.45).abs() < 1e-12);
    assert!((w.value(0.0) - 0.45).abs() < 1e-12);
    assert!(
        w.residual < 1e-6 * w.f_scale,
        "residual {} scale {}",
        w.residual,
        w.f_scale
    );
    let t = verify_tails(&w);
    assert!(t.passed, "{t:?}");

    let k = derived_constants(&f, 0.3, 0.7).unwrap();
    let sm = sigma_bound(&w, k.beta);
    assert!(sm > 0.0);
    assert!(sigma_admissible(&w, k.beta, sm * (1.0 - 1e-12)));
    assert!(!sigma_admissible(&w, k.beta, 2.0 * sm));
    assert!(sigma_bound(&w, 0.5 * k.beta) >= sm);
}
