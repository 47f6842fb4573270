//! Cross-module scaling checks: engines swept in T and fed through `orderfit`.

use ddkit::finitebath::{dephasing_error, random_hamiltonian, sequence_propagator};
use ddkit::linalg::{hermitian_norm, unitarity_residual};
use ddkit::orderfit::{fit_order, make_time_grid, OrderFitResult, DEFAULT_CEILING, DEFAULT_FLOOR};
use ddkit::sequences::{
    generate_cdd_dephasing, generate_cdd_general, generate_cpmg, generate_cudd, generate_qdd, generate_udd,
};
use ddkit::spinboson::{coherence, coherence_deficit, BosonMode};
use ddkit::stateprotect::{protected_propagator, protection_error, random_protected_system};
use ddkit::PulseSequence;

fn fit(grid: &[f64], f: impl Fn(f64) -> f64) -> OrderFitResult {
    let pairs: Vec<(f64, f64)> = grid.iter().map(|&t| (t, f(t))).collect();
    fit_order(&pairs, DEFAULT_FLOOR, DEFAULT_CEILING).unwrap()
}

fn modes() -> Vec<BosonMode> {
    [(0.7, 0.3), (2.0, 0.2), (5.0, 0.1)]
        .iter()
        .map(|&(w, k)| BosonMode::new(w, k).unwrap())
        .collect()
}

#[test]
fn spin_boson_deficit_is_quadratic_in_delta() {
    let grid = make_time_grid(0.5, 24, 2f64.powf(0.25)).unwrap();
    let modes = modes();
    for n in 1..=4 {
        let r = fit(&grid, |t| {
            coherence_deficit(&modes, &generate_udd(n, t).unwrap()).unwrap()
        });
        assert!(r.valid, "N={n}: {r:?}");
        assert!(
            (r.slope - 2.0 * (n + 1) as f64).abs() <= 0.3,
            "N={n}: slope {}",
            r.slope
        );
    }
}

#[test]
fn spin_boson_traces_stay_in_unit_interval() {
    let modes = modes();
    for seq in [
        generate_udd(5, 7.0).unwrap(),
        generate_cdd_dephasing(3, 1.0).unwrap(),
    ] {
        let mut grid: Vec<f64> = (0..=200).map(|k| seq.total_time() * k as f64 / 200.0).collect();
        grid.extend(seq.times());
        grid.sort_by(f64::total_cmp);
        let tr = coherence(&modes, &seq, &grid).unwrap();
        assert_eq!(tr.values[0], 1.0);
        assert!(tr.values.iter().all(|l| (0.0..=1.0).contains(l)));
    }
}

#[test]
fn cpmg_repetition_reduces_error() {
    let h = random_hamiltonian(4, 1.0, 1.0, 5).unwrap().pure_dephasing();
    let errs: Vec<f64> = [1, 2, 4, 8, 16]
        .iter()
        .map(|&b| dephasing_error(&h, &generate_cpmg(b, 1.0).unwrap()).unwrap())
        .collect();
    for w in errs.windows(2) {
        assert!(w[1] < w[0], "{errs:?}");
    }
    // O(τ²) per block with blocks·τ fixed: halving τ quarters the error
    for w in errs[1..].windows(2) {
        let ratio = w[1] / w[0];
        assert!((0.2..0.3).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn udd_error_follows_factorial_shape() {
    let h = random_hamiltonian(4, 1.0, 1.0, 5).unwrap().pure_dephasing();
    let norm = hermitian_norm(&h.total()).unwrap();
    let t = 0.1;
    for n in 2..=6usize {
        let factorial: f64 = (1..=n).map(|k| k as f64).product();
        let e = dephasing_error(&h, &generate_udd(n, t).unwrap()).unwrap();
        let scaled = e * factorial / (norm * t).powi(n as i32);
        assert!(scaled > 0.0 && scaled < 1.0, "N={n}: {scaled}");
    }
}

#[test]
fn cdd_error_falls_faster_than_geometrically() {
    let h = random_hamiltonian(4, 1.0, 1.0, 5).unwrap().pure_dephasing();
    let errs: Vec<f64> = (1..=5)
        .map(|n| {
            dephasing_error(
                &h,
                &generate_cdd_dephasing(n, 1.0).unwrap().rescaled(0.5).unwrap(),
            )
            .unwrap()
        })
        .collect();
    let ratios: Vec<f64> = errs.windows(2).map(|w| w[1] / w[0]).collect();
    assert!(ratios.iter().all(|&r| r < 1.0), "{errs:?}");
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn protected_expectation_deficit_is_quadratic() {
    let grid = make_time_grid(2.0, 40, 2f64.powf(0.25)).unwrap();
    for dim in [4, 6, 8] {
        let sys = random_protected_system(dim, 1.0, 7 + dim as u64).unwrap();
        for n in 1..=4 {
            let r = fit(&grid, |t| {
                let u = protected_propagator(&sys, n, t).unwrap();
                protection_error(&sys, &u).unwrap().expectation_deficit()
            });
            assert!(r.valid, "D={dim} N={n}: {r:?}");
            assert!(
                r.slope >= 2.0 * (n + 1) as f64 - 0.5,
                "D={dim} N={n}: slope {}",
                r.slope
            );
        }
    }
}

#[test]
fn propagators_are_unitary() {
    let h = random_hamiltonian(8, 1.0, 1.0, 9).unwrap();
    let seqs: Vec<PulseSequence> = vec![
        generate_udd(7, 3.0).unwrap(),
        generate_cdd_general(2, 0.2).unwrap(),
        generate_qdd(3, 3, 2.0).unwrap(),
        generate_cudd(2, 2, 0.5).unwrap(),
    ];
    for seq in &seqs {
        let u = sequence_propagator(&h, seq).unwrap().unitary;
        assert!(unitarity_residual(&u) < 1e-10, "{}", seq.label());
    }
    let sys = random_protected_system(6, 1.0, 3).unwrap();
    for n in 0..=5 {
        assert!(unitarity_residual(&protected_propagator(&sys, n, 1.7).unwrap()) < 1e-10);
    }
}
