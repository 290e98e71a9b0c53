//! Statistical properties of the ensemble runner against analytic oracles.

use phasenoise::analytic::{displaced_vacuum_offset, phase_noise_occupation_colored, phase_noise_occupation_white};
use phasenoise::quad::QuadConfig;
use phasenoise::sim::{run_ensemble, ModeStats, RunMode, RunOptions};
use phasenoise::{validate, NoiseSpec, SimConfig, SystemParams};

fn run(params: &SystemParams, noise: &NoiseSpec, cfg: &SimConfig, mode: RunMode) -> phasenoise::sim::EnsembleStats {
    let b = validate(params, noise, cfg).unwrap();
    run_ensemble(&b, mode, RunOptions::default()).unwrap().stats
}

fn within(m: &ModeStats, expected: f64, k: f64) -> bool {
    (m.occupation - expected).abs() <= k * m.occupation_se
}

#[test]
fn lab_and_displaced_frames_agree() {
    let (kappa, gl, n) = (1.0, 1e-3, 1e4);
    let p = SystemParams::with_photon_number(kappa, 0.5, gl, n);
    let noise = NoiseSpec::white(gl);
    let cfg = SimConfig::new(0.01, 100.0, 400, 21);
    let d = run(&p, &noise, &cfg, RunMode::Displaced);
    let l = run(&p, &noise, &cfg, RunMode::Lab);
    let (d, l) = (d.primary(), l.primary());
    let se = d.occupation_se.hypot(l.occupation_se);
    assert!((d.occupation - l.occupation).abs() < 3.0 * se, "{} vs {} (se {se})", d.occupation, l.occupation);
    // each frame against its own exact answer
    assert!(within(d, phase_noise_occupation_white(n, kappa, gl) + displaced_vacuum_offset(kappa, gl), 3.0));
    assert!(within(l, n * gl / kappa, 3.0));
}

#[test]
fn occupation_is_quadratic_in_amplitude() {
    let (kappa, gl) = (1.0, 1e-3);
    let noise = NoiseSpec::white(gl);
    let cfg = SimConfig::new(0.01, 100.0, 200, 8);
    let at = |n: f64| run(&SystemParams::with_photon_number(kappa, 0.2, gl, n), &noise, &cfg, RunMode::Displaced);
    let offset = displaced_vacuum_offset(kappa, gl);
    let (s1, s2) = (at(1e4), at(4e4));
    let (a, b) = (s1.primary(), s2.primary());
    let ratio = (b.occupation - offset) / (a.occupation - offset);
    let se = ratio * ((a.occupation_se / a.occupation).powi(2) + (b.occupation_se / b.occupation).powi(2)).sqrt();
    assert!((ratio - 4.0).abs() < 3.0 * se, "{ratio} ± {se}");
}

#[test]
fn narrow_line_heats_most_on_resonance() {
    let (kappa, w0) = (1.0, 5.0);
    let noise = NoiseSpec::lorentzian(0.05, w0, 0.1);
    let cfg = SimConfig::new(0.01, 100.0, 200, 3);
    let grid = [3.0, 4.0, 5.0, 6.0, 7.0];
    let occ: Vec<f64> = grid
        .iter()
        .map(|&d| {
            let p = SystemParams::with_photon_number(kappa, d, 0.0, 1e4);
            let s = run(&p, &noise, &cfg, RunMode::Displaced);
            let m = s.primary();
            let exact = phase_noise_occupation_colored(1e4, kappa, 0.0, d, &noise, &QuadConfig::default()).unwrap();
            assert!(within(m, exact, 4.0), "Δ={d}: {} ± {} vs {exact}", m.occupation, m.occupation_se);
            m.occupation
        })
        .collect();
    let best = occ.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
    assert!((grid[best] - w0).abs() <= 1.0, "{occ:?}");
}

#[test]
fn twin_difference_mode_is_suppressed() {
    let (kappa, gl, n) = (1.0, 1e-4, 1e8);
    let p = SystemParams::with_photon_number(kappa, 1.0, gl, n);
    let noise = NoiseSpec::white(gl);
    // the difference-mode step is exact at any dt; precision needs total time
    let cfg = SimConfig::new(0.09, 3000.0, 2000, 12);
    let twin = run(&p, &noise, &cfg, RunMode::Twin);
    let d = twin.primary();
    assert!(d.occupation + 3.0 * d.occupation_se < 10.0 * gl / kappa, "{} ± {}", d.occupation, d.occupation_se);

    let cfg = SimConfig::new(0.01, 100.0, 50, 12);
    let single = run(&p, &noise, &cfg, RunMode::Displaced);
    let s = single.primary();
    assert!(within(s, phase_noise_occupation_white(n, kappa, gl), 3.0));
    assert!(d.occupation <= s.occupation / (n / 10.0));
}

#[test]
fn common_mode_of_two_lab_cavities_matches_single() {
    let (kappa, gl, n) = (1.0, 1e-3, 1e4);
    let p = SystemParams::with_photon_number(kappa, 0.5, gl, n);
    let noise = NoiseSpec::white(gl);
    let cfg = SimConfig::new(0.01, 100.0, 200, 4);
    let two = run(&p, &noise, &cfg, RunMode::TwoCavityLab);
    assert_eq!(two.modes.iter().map(|m| m.label.as_str()).collect::<Vec<_>>(), ["a", "b", "sum", "diff"]);
    let sum = two.get("sum").unwrap();
    // the common mode sees amplitude √2α
    let single = run(&SystemParams::with_photon_number(kappa, 0.5, gl, 2.0 * n), &noise, &cfg, RunMode::Lab);
    let s = single.primary();
    let se = sum.occupation_se.hypot(s.occupation_se);
    assert!((sum.occupation - s.occupation).abs() < 3.0 * se, "{} vs {}", sum.occupation, s.occupation);
    let diff = two.get("diff").unwrap();
    assert!(diff.occupation < 0.01 * sum.occupation);
}

#[test]
fn thread_count_does_not_change_results() {
    let p = SystemParams::with_photon_number(1.0, 0.3, 1e-3, 1e4);
    let noise = NoiseSpec::lorentzian(1e-3, 0.5, 0.2);
    let cfg = SimConfig::new(0.02, 40.0, 12, 99);
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let wide = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = serial.install(|| run(&p, &noise, &cfg, RunMode::TwoCavityLab));
    let b = wide.install(|| run(&p, &noise, &cfg, RunMode::TwoCavityLab));
    assert_eq!(a, b);
}
