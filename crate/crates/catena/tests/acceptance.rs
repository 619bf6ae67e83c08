//! End-to-end acceptance gate.
//!
//! One test per release criterion, named so the harness output reads as a
//! pass/fail ledger. The expensive artifacts — full-resolution threshold
//! sweeps at production settings — are computed once and shared; the whole
//! binary takes a few hours of single-core time, dominated by the two
//! sweeps (hundreds of 120-second simulations).
//!
//! Criteria that merely *observe* shared artifacts (energy levels, drift,
//! growth morphology) re-verify them with fresh full-horizon runs rather
//! than trusting cached summaries.

use std::sync::OnceLock;

use catena::bridge_model::{make_geometry, BridgeParams, CableGeometry};
use catena::dynamics::{simulate, ModalState, ModelVariant, RunRecord, SimOptions};
use catena::envelope::{convex_envelope, GridFunction, ToleranceConfig};
use catena::experiments::{
    run_protocol, sweep, ExperimentSpec, SearchParams, ThresholdResult,
};
use catena::validation::run_all_suites;
use catena::variation::{directional_quotient, example_2_3_phi, example_2_3_zeta};

/// Production grid: cells across the span.
const N_CELLS: usize = 2048;
/// Production step (s).
const DT: f64 = 1e-3;
/// Reference critical amplitudes of the convexified model, modes 1..=10 (m).
const REFERENCE_THRESHOLDS: [f64; 10] =
    [4.09, 8.37, 4.89, 5.35, 4.25, 3.64, 3.65, 3.28, 2.31, 2.65];
/// Reference initial energy at the mode-9 threshold (J).
const REFERENCE_MODE9_ENERGY: f64 = 1.54e8;

fn setting() -> &'static (BridgeParams, CableGeometry) {
    static CELL: OnceLock<(BridgeParams, CableGeometry)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = BridgeParams::default();
        let geom = make_geometry(&p, N_CELLS).expect("reference geometry");
        (p, geom)
    })
}

fn template(variant: ModelVariant) -> ExperimentSpec {
    ExperimentSpec {
        model_variant: variant,
        ..ExperimentSpec::default()
    }
}

type SweepOutput = Vec<(usize, catena::Result<ThresholdResult>)>;

/// Full-resolution threshold sweep of the convexified model, modes 1–10.
fn convexified_sweep() -> &'static SweepOutput {
    static CELL: OnceLock<SweepOutput> = OnceLock::new();
    CELL.get_or_init(|| {
        let (p, geom) = setting();
        let modes: Vec<usize> = (1..=10).collect();
        sweep(
            &modes,
            &template(ModelVariant::Convexified),
            &SearchParams::default(),
            DT,
            geom,
            p,
            &SimOptions::default(),
        )
    })
}

/// Rigid-hanger sweep over the modes the variant comparison needs.
fn rigid_sweep() -> &'static SweepOutput {
    static CELL: OnceLock<SweepOutput> = OnceLock::new();
    CELL.get_or_init(|| {
        let (p, geom) = setting();
        sweep(
            &[1, 2, 3, 7, 8, 9, 10],
            &template(ModelVariant::Rigid),
            &SearchParams::default(),
            DT,
            geom,
            p,
            &SimOptions::default(),
        )
    })
}

fn found_threshold(out: &SweepOutput, mode: usize) -> &ThresholdResult {
    out.iter()
        .find(|(j, _)| *j == mode)
        .and_then(|(_, r)| r.as_ref().ok())
        .unwrap_or_else(|| panic!("threshold search for mode {mode} must succeed"))
}

/// Fresh full-horizon records at each convexified threshold (modes 1–10).
fn threshold_records() -> &'static Vec<(usize, RunRecord)> {
    static CELL: OnceLock<Vec<(usize, RunRecord)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let (p, geom) = setting();
        convexified_sweep()
            .iter()
            .map(|(mode, res)| {
                let found = res
                    .as_ref()
                    .unwrap_or_else(|e| panic!("mode {mode} sweep failed: {e}"));
                let spec = ExperimentSpec {
                    excited_mode: *mode,
                    amplitude: found.threshold,
                    ..template(ModelVariant::Convexified)
                };
                let (record, unstable) = run_protocol(&spec, DT, geom, p, &SimOptions::default())
                    .unwrap_or_else(|e| panic!("threshold re-run for mode {mode} failed: {e}"));
                assert!(
                    unstable,
                    "mode {mode}: the found threshold {} must re-classify unstable",
                    found.threshold
                );
                (*mode, record)
            })
            .collect()
    })
}

#[test]
fn criterion_01_convexified_thresholds_match_reference_within_15_percent() {
    let mut lines = String::new();
    let mut failed = false;
    for (mode, res) in convexified_sweep() {
        let reference = REFERENCE_THRESHOLDS[mode - 1];
        match res {
            Ok(t) => {
                let rel = (t.threshold - reference) / reference;
                let ok = rel.abs() <= 0.15;
                failed |= !ok;
                lines.push_str(&format!(
                    "  mode {mode:2}: found {:6.3} m vs reference {reference:5.2} m ({:+.1}%) {}\n",
                    t.threshold,
                    100.0 * rel,
                    if ok { "ok" } else { "OUT OF BAND" },
                ));
            }
            Err(e) => {
                failed = true;
                lines.push_str(&format!("  mode {mode:2}: search failed: {e}\n"));
            }
        }
    }
    println!("convexified thresholds vs reference:\n{lines}");
    assert!(!failed, "threshold comparison failed:\n{lines}");
}

#[test]
fn criterion_02_variant_ordering_low_modes_agree_high_modes_split() {
    let conv = convexified_sweep();
    let rigid = rigid_sweep();
    let mut lines = String::new();
    let mut failed = false;
    for mode in [1usize, 2, 3] {
        let c = found_threshold(conv, mode);
        let r = found_threshold(rigid, mode);
        let budget = SearchParams::default().resolution + 0.05 * c.threshold.max(r.threshold);
        let ok = (c.threshold - r.threshold).abs() <= budget;
        failed |= !ok;
        lines.push_str(&format!(
            "  mode {mode}: convexified {:6.3} m vs rigid {:6.3} m (budget {budget:.3} m) {}\n",
            c.threshold,
            r.threshold,
            if ok { "agree" } else { "DISAGREE" },
        ));
    }
    for mode in [7usize, 8, 9, 10] {
        let c = found_threshold(conv, mode);
        let r = found_threshold(rigid, mode);
        let ok = c.threshold < r.threshold;
        failed |= !ok;
        lines.push_str(&format!(
            "  mode {mode}: convexified {:6.3} m {} rigid {:6.3} m\n",
            c.threshold,
            if ok { "<" } else { "NOT BELOW" },
            r.threshold,
        ));
    }
    println!("variant comparison:\n{lines}");
    assert!(!failed, "variant ordering failed:\n{lines}");
}

#[test]
fn criterion_03_energy_at_mode_9_threshold_is_in_reference_band() {
    let t = found_threshold(convexified_sweep(), 9);
    let rel = (t.energy_at_threshold - REFERENCE_MODE9_ENERGY) / REFERENCE_MODE9_ENERGY;
    println!(
        "mode 9 threshold {:.3} m, initial energy {:.4e} J vs reference {:.2e} J ({:+.1}%)",
        t.threshold, t.energy_at_threshold, REFERENCE_MODE9_ENERGY, 100.0 * rel
    );
    assert!(
        rel.abs() <= 0.20,
        "mode-9 threshold energy {:.4e} J departs from {:.2e} J by {:+.1}%",
        t.energy_at_threshold,
        REFERENCE_MODE9_ENERGY,
        100.0 * rel
    );
}

#[test]
fn criterion_04_every_threshold_run_conserves_energy_to_4e_minus_3() {
    let mut lines = String::new();
    let mut failed = false;
    for (mode, record) in threshold_records() {
        let drift = record.summary.energy_drift;
        let ok = drift < 4e-3;
        failed |= !ok;
        lines.push_str(&format!(
            "  mode {mode:2}: relative drift {drift:.3e} {}\n",
            if ok { "ok" } else { "TOO LARGE" }
        ));
    }
    println!("energy drift across the threshold runs:\n{lines}");
    assert!(!failed, "energy conservation failed:\n{lines}");
}

#[test]
fn criterion_05_reference_stability_cases() {
    let (p, geom) = setting();
    let opts = SimOptions::default();

    let spec10 = ExperimentSpec {
        excited_mode: 10,
        amplitude: 0.75,
        ..template(ModelVariant::Convexified)
    };
    let (rec10, unstable10) = run_protocol(&spec10, DT, geom, p, &opts).expect("mode-10 run");
    let slack10 = rec10.summary.mean_slackening;
    println!(
        "mode 10 at 0.75 m: {}, mean slackening {:.2}%, drift {:.2e}",
        if unstable10 { "UNSTABLE" } else { "stable" },
        100.0 * slack10,
        rec10.summary.energy_drift
    );
    assert!(!unstable10, "the 0.75 m mode-10 run must stay stable");
    assert!(
        (0.10..=0.17).contains(&slack10),
        "mode-10 mean slackening {:.4} outside [0.10, 0.17]",
        slack10
    );
    assert!(rec10.summary.energy_drift < 4e-3);

    let spec9 = ExperimentSpec {
        excited_mode: 9,
        amplitude: 0.60,
        ..template(ModelVariant::Convexified)
    };
    let (rec9, unstable9) = run_protocol(&spec9, DT, geom, p, &opts).expect("mode-9 run");
    println!(
        "mode 9 at 0.60 m: {}, mean slackening {:.3e}, drift {:.2e}",
        if unstable9 { "UNSTABLE" } else { "stable" },
        rec9.summary.mean_slackening,
        rec9.summary.energy_drift
    );
    assert!(!unstable9, "the 0.60 m mode-9 run must stay stable");
    // Zero at the reference's two-decimal percent display: the run shows a
    // fleeting marginal crossing (order 1e-6) when secondary-mode curvature
    // momentarily cancels the rest-profile curvature, which prints as 0.00%.
    assert!(
        rec9.summary.mean_slackening < 5e-5,
        "mode-9 slackening {:.3e} must print as zero at reference precision",
        rec9.summary.mean_slackening
    );
    assert!(rec9.summary.energy_drift < 4e-3);
}

#[test]
fn criterion_06_second_torsional_mode_grows_most_at_high_mode_thresholds() {
    let records = threshold_records();
    let mut lines = String::new();
    let mut failed = false;
    for target in [9usize, 10] {
        let (_, record) = records
            .iter()
            .find(|(m, _)| *m == target)
            .expect("threshold record present");
        let maxima = &record.summary.theta_bar_max;
        let winner = maxima
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite maxima"))
            .map(|(i, _)| i + 1)
            .expect("at least one torsional mode");
        let ok = winner == 2;
        failed |= !ok;
        lines.push_str(&format!(
            "  mode {target}: torsional peaks {:?} → largest is mode {winner} {}\n",
            maxima
                .iter()
                .map(|v| format!("{v:.3e}"))
                .collect::<Vec<_>>(),
            if ok { "ok" } else { "NOT THE SECOND" },
        ));
    }
    println!("instability morphology at the high-mode thresholds:\n{lines}");
    assert!(!failed, "growth morphology failed:\n{lines}");
}

#[test]
fn criterion_07_one_sided_example_tangency_point_and_lopsided_quotients() {
    // Route 1: the tangency root of the chord condition.
    let zeta_root = example_2_3_zeta();
    assert!(
        (zeta_root - 0.25).abs() <= 0.01,
        "tangency root {zeta_root} departs from 0.25"
    );

    // Route 2: the envelope's affine-interval boundary on a fine grid.
    // The bump enters negatively, so its envelope's straight stretches end
    // where the tangent chords touch, at ±ζ.
    let n = 4000;
    let dip = GridFunction::sample(-2.0, 2.0, n, |x| -example_2_3_phi(x)).expect("valid grid");
    let env = convex_envelope(&dip, &ToleranceConfig::default()).expect("valid envelope");
    let right = env
        .affine_intervals
        .iter()
        .find(|&&(_, q)| q == n)
        .map(|&(p, _)| dip.x(p))
        .expect("a straight stretch must reach the right end");
    let left = env
        .affine_intervals
        .iter()
        .find(|&&(p, _)| p == 0)
        .map(|&(_, q)| dip.x(q))
        .expect("a straight stretch must reach the left end");
    println!(
        "tangency root {zeta_root:.6}; grid affine boundaries at {left:.4} and {right:.4}"
    );
    assert!(
        (right - 0.25).abs() <= 0.01,
        "right affine boundary {right} departs from 0.25"
    );
    assert!(
        (left + 0.25).abs() <= 0.01,
        "left affine boundary {left} departs from −0.25"
    );

    // Route 3: the two one-sided difference quotients of the perturbed
    // affine profile differ grossly: flat response to positive amplitudes,
    // the straightened bump's area to negative ones.
    let base = GridFunction::sample(-2.0, 2.0, n, |_| 0.0).expect("valid grid");
    let phi = GridFunction::sample(-2.0, 2.0, n, example_2_3_phi).expect("valid grid");
    let quotients =
        directional_quotient(&base, &phi, &[1e-4, -1e-4, 1e-6, -1e-6]).expect("valid quotients");
    let reference_left = -env.env.trapezoid();
    println!(
        "difference quotients: right {:.3e}, {:.3e}; left {:.3e}, {:.3e}; straightened-bump area {:.6e}",
        quotients[0], quotients[2], quotients[1], quotients[3], reference_left
    );
    for (&right_q, &left_q) in [(&quotients[0], &quotients[1]), (&quotients[2], &quotients[3])] {
        assert!(
            right_q.abs() < 1e-3 * left_q.abs(),
            "right quotient {right_q:e} is not negligible against the left {left_q:e}"
        );
    }
    // The left quotient approaches the negated area under the dip's
    // envelope (the perturbation enters with a negative sign there).
    let rel = (quotients[1] - reference_left).abs() / reference_left.abs();
    assert!(
        rel <= 0.01,
        "left quotient {:.6e} vs straightened-bump area {:.6e} (rel {rel:.2e})",
        quotients[1],
        reference_left
    );
}

#[test]
fn criterion_08_randomized_property_suites_pass_with_100_cases() {
    let outcomes = run_all_suites(0, 100);
    let mut lines = String::new();
    let mut failed = false;
    for o in &outcomes {
        failed |= !o.passed;
        lines.push_str(&format!(
            "  {}: {} ({} cases, worst {:.3e})\n",
            o.name,
            if o.passed { "PASS" } else { "FAIL" },
            o.cases,
            o.worst
        ));
        if !o.passed {
            lines.push_str(&format!("    {}\n", o.detail));
        }
    }
    println!("property suites:\n{lines}");
    assert!(!failed, "property suites failed:\n{lines}");
}

#[test]
fn criterion_09_linear_beam_periods_match_closed_form() {
    let (p, geom) = setting();
    let opts = SimOptions {
        include_cable: false,
        include_gravity: false,
        ..SimOptions::default()
    };
    let amp = 1.0;
    let coeff = ModalState::amplitude_to_coeff(p.L) * amp;
    let mut lines = String::new();
    let mut failed = false;
    for k in [1usize, 5, 10] {
        let mu = k as f64 * std::f64::consts::PI / p.L;
        let omega = (p.E * p.I / p.M).sqrt() * mu * mu;
        let period = std::f64::consts::TAU / omega;
        let horizon = 10.0 * period;
        // Land the final step exactly on the ten-period mark.
        let steps = (horizon / DT).ceil();
        let dt = horizon / steps;
        let mut ic = ModalState::rest(10, 1);
        ic.w_coeffs[k - 1] = coeff;
        let record = simulate(&ic, horizon, dt, geom, p, &opts).expect("linear run");
        let final_amp = record
            .w_bar_history
            .last()
            .expect("stored samples")[k - 1];
        // After ten exact periods the mode returns to its crest; a period
        // error ε shifts the phase by 20πε, so the return defect
        // 1 − cos(20πε) ≈ (20πε)²/2 bounds ε from above.
        let defect = ((amp - final_amp) / amp).max(0.0);
        let implied = (2.0 * defect).sqrt() / (20.0 * std::f64::consts::PI);
        let ok = implied < 1e-4;
        failed |= !ok;
        lines.push_str(&format!(
            "  k {k:2}: period {period:9.3} s, return defect {defect:.3e}, implied period error {implied:.3e} {}\n",
            if ok { "ok" } else { "TOO LARGE" }
        ));
    }
    println!("linear beam period check:\n{lines}");
    assert!(!failed, "linear period check failed:\n{lines}");
}
