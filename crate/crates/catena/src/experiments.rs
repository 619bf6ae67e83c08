//! Torsional-instability experiment protocol.
//!
//! A run excites one longitudinal mode at a prescribed amplitude and
//! seeds every other coordinate (and every velocity) three orders of
//! magnitude below it. The run is classified unstable when any torsional
//! amplitude grows one order above its seed — i.e. reaches one percent of
//! the excited amplitude — within the horizon. The critical amplitude of
//! a mode is located by an upward coarse scan followed by bisection, and
//! reported together with the initial energy and the time-averaged slack
//! measure of the threshold run.

use serde::{Deserialize, Serialize};

use crate::bridge_model::{BridgeParams, CableGeometry};
use crate::dynamics::{simulate, ModalState, ModelVariant, RunRecord, SimOptions};
use crate::{Error, Result};

/// One protocol run: which mode is excited, how strongly, and under which
/// variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    /// Excited longitudinal mode `j` (1-based, ≤ `n_w`).
    pub excited_mode: usize,
    /// Excited physical amplitude `w̄_j(0)` (m).
    pub amplitude: f64,
    /// Seed ratio for every non-excited coordinate and all velocities.
    pub perturbation_ratio: f64,
    /// Run horizon (s).
    pub horizon: f64,
    /// Instability level relative to the excited amplitude.
    pub detection_ratio: f64,
    /// Cable constitutive variant.
    pub model_variant: ModelVariant,
    /// Number of longitudinal modes carried.
    pub n_w: usize,
    /// Number of torsional modes carried.
    pub n_theta: usize,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            excited_mode: 1,
            amplitude: 1.0,
            perturbation_ratio: 1e-3,
            horizon: 120.0,
            detection_ratio: 1e-2,
            model_variant: ModelVariant::Convexified,
            n_w: 10,
            n_theta: 4,
        }
    }
}

impl ExperimentSpec {
    /// Checks mode range, ratio ordering, and positivity.
    pub fn validate(&self) -> Result<()> {
        if self.n_w == 0 || self.n_theta == 0 {
            return Err(Error::InvalidConfig(
                "the protocol needs at least one mode of each kind".into(),
            ));
        }
        if !(1..=self.n_w).contains(&self.excited_mode) {
            return Err(Error::InvalidConfig(format!(
                "excited mode {} outside 1..={}",
                self.excited_mode, self.n_w
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "horizon must be positive, got {}",
                self.horizon
            )));
        }
        if !(self.perturbation_ratio > 0.0
            && self.perturbation_ratio < self.detection_ratio
            && self.detection_ratio < 1.0)
        {
            return Err(Error::InvalidConfig(format!(
                "need 0 < perturbation_ratio ({}) < detection_ratio ({}) < 1",
                self.perturbation_ratio, self.detection_ratio
            )));
        }
        Ok(())
    }
}

/// Outcome of a threshold search for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Excited mode.
    pub mode: usize,
    /// Critical amplitude: the unstable end of the final bracket (m).
    pub threshold: f64,
    /// Total energy of the threshold run's initial state (J).
    pub energy_at_threshold: f64,
    /// Time-averaged two-cable slack fraction of the threshold run.
    pub mean_slackening: f64,
    /// Final bracket `(stable end, unstable end)` (m).
    pub bracket: (f64, f64),
    /// Variant the search ran under.
    pub variant: ModelVariant,
}

/// Bracketing strategy for [`find_threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchParams {
    /// Starting bracket `(stable, unstable)`; when absent, an upward scan
    /// builds one. A bracket whose upper end turns out stable is expanded
    /// geometrically.
    pub bracket: Option<(f64, f64)>,
    /// Final bracket width (m).
    pub resolution: f64,
    /// First scanned amplitude (m).
    pub scan_start: f64,
    /// Scan increment (m).
    pub scan_step: f64,
    /// Rescan increment inside the bracket (m). Instability onset is not
    /// monotone in amplitude — narrow unstable tongues can sit strictly
    /// below the first coarse detection — so once a bracket exists its
    /// interior is rescanned at this finer step and the bracket snaps to
    /// the lowest onset the fine grid sees. The threshold is the infimum
    /// of detected amplitudes, which only a fine enough grid approximates.
    pub refine_step: f64,
    /// Give up beyond this amplitude (m).
    pub scan_limit: f64,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            bracket: None,
            resolution: 0.01,
            scan_start: 0.25,
            scan_step: 0.25,
            refine_step: 0.05,
            scan_limit: 40.0,
        }
    }
}

impl SearchParams {
    fn validate(&self) -> Result<()> {
        let ok = self.resolution > 0.0
            && self.scan_start > 0.0
            && self.scan_step > 0.0
            && self.refine_step > 0.0
            && self.scan_limit > self.scan_start
            && self
                .bracket
                .map(|(lo, hi)| lo >= 0.0 && hi > lo)
                .unwrap_or(true);
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid search parameters: {self:?}")))
        }
    }
}

/// Protocol initial condition: excited mode at full amplitude, every
/// other position and every velocity at the perturbation level (the
/// velocity seeds carry the same numeric value in their own units).
pub fn build_ic(spec: &ExperimentSpec, p: &BridgeParams) -> Result<ModalState> {
    spec.validate()?;
    p.validate()?;
    let to_coeff = ModalState::amplitude_to_coeff(p.L);
    let seed = spec.perturbation_ratio * spec.amplitude * to_coeff;
    let mut state = ModalState {
        t: 0.0,
        w_coeffs: vec![seed; spec.n_w],
        theta_coeffs: vec![seed; spec.n_theta],
        w_vel: vec![seed; spec.n_w],
        theta_vel: vec![seed; spec.n_theta],
    };
    state.w_coeffs[spec.excited_mode - 1] = spec.amplitude * to_coeff;
    Ok(state)
}

/// True when any torsional mode's recorded maximum reached the detection
/// level `detection_ratio · w̄_j(0)`.
pub fn detect_instability(record: &RunRecord, spec: &ExperimentSpec) -> bool {
    let level = spec.detection_ratio * spec.amplitude;
    record
        .summary
        .theta_bar_max
        .iter()
        .any(|&peak| peak >= level)
}

fn options_for(spec: &ExperimentSpec, base: &SimOptions, probe: bool) -> SimOptions {
    SimOptions {
        variant: spec.model_variant,
        // Probes only need the boolean, so they may stop at the detection
        // crossing; record runs always cover the full horizon.
        early_exit_amplitude: if probe {
            Some(spec.detection_ratio * spec.amplitude)
        } else {
            None
        },
        ..base.clone()
    }
}

/// One full protocol run (no early exit), returning the record and its
/// classification.
pub fn run_protocol(
    spec: &ExperimentSpec,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    base: &SimOptions,
) -> Result<(RunRecord, bool)> {
    let ic = build_ic(spec, p)?;
    let record = simulate(&ic, spec.horizon, dt, geom, p, &options_for(spec, base, false))?;
    let unstable = detect_instability(&record, spec);
    Ok((record, unstable))
}

fn probe(
    spec: &ExperimentSpec,
    amplitude: f64,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    base: &SimOptions,
) -> Result<bool> {
    let spec = ExperimentSpec {
        amplitude,
        ..spec.clone()
    };
    let ic = build_ic(&spec, p)?;
    let record = simulate(&ic, spec.horizon, dt, geom, p, &options_for(&spec, base, true))?;
    Ok(detect_instability(&record, &spec))
}

/// Critical amplitude of mode `j` under the template's variant.
///
/// Brackets the detection flip (upward scan unless a bracket is given,
/// expanding a stable upper end geometrically), bisects to the requested
/// resolution, then re-verifies both bracket ends with fresh full-horizon
/// runs. The reported threshold is the unstable end; its full run
/// provides the energy and slack figures.
///
/// The detection map need not be monotone in amplitude; what is reported
/// is the first flip found scanning upward, and a stable end that turns
/// unstable on re-verification is an error, not silently accepted.
pub fn find_threshold(
    j: usize,
    template: &ExperimentSpec,
    search: &SearchParams,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    base: &SimOptions,
) -> Result<ThresholdResult> {
    search.validate()?;
    let spec = ExperimentSpec {
        excited_mode: j,
        ..template.clone()
    };
    spec.validate()?;

    let (lo, hi) =
        bracket_and_bisect(j, search, |amp| probe(&spec, amp, dt, geom, p, base))?;

    // Fresh full-horizon verification of both ends.
    if lo > 0.0 {
        let lo_spec = ExperimentSpec {
            amplitude: lo,
            ..spec.clone()
        };
        let (_, unstable) = run_protocol(&lo_spec, dt, geom, p, base)?;
        if unstable {
            return Err(Error::Protocol(format!(
                "mode {j}: stable end {lo} m of the final bracket failed re-verification"
            )));
        }
    }
    let hi_spec = ExperimentSpec {
        amplitude: hi,
        ..spec.clone()
    };
    let (record, unstable) = run_protocol(&hi_spec, dt, geom, p, base)?;
    if !unstable {
        return Err(Error::Protocol(format!(
            "mode {j}: unstable end {hi} m of the final bracket failed re-verification"
        )));
    }
    Ok(ThresholdResult {
        mode: j,
        threshold: hi,
        energy_at_threshold: record.summary.energy_initial,
        mean_slackening: record.summary.mean_slackening,
        bracket: (lo, hi),
        variant: spec.model_variant,
    })
}

/// Accelerations under the rigid-hanger variant (raw slopes instead of
/// envelope slopes everywhere).
pub fn rigid_variant_rhs(
    state: &ModalState,
    geom: &CableGeometry,
    p: &BridgeParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    crate::dynamics::assemble_rhs(
        state,
        geom,
        p,
        &SimOptions {
            variant: ModelVariant::Rigid,
            ..SimOptions::default()
        },
    )
}

/// Threshold search over several modes, in input order.
///
/// With the `parallel` feature the searches run on a worker pool; results
/// are collected back into input order either way, so the output is
/// deterministic. Per-mode failures are kept per mode rather than
/// aborting the rest.
pub fn sweep(
    modes: &[usize],
    template: &ExperimentSpec,
    search: &SearchParams,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    base: &SimOptions,
) -> Vec<(usize, Result<ThresholdResult>)> {
    let job = |&j: &usize| (j, find_threshold(j, template, search, dt, geom, p, base));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        modes.par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        modes.iter().map(job).collect()
    }
}

/// Sequential version of [`sweep`] regardless of enabled features, for
/// baseline comparisons.
pub fn sweep_sequential(
    modes: &[usize],
    template: &ExperimentSpec,
    search: &SearchParams,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    base: &SimOptions,
) -> Vec<(usize, Result<ThresholdResult>)> {
    modes
        .iter()
        .map(|&j| (j, find_threshold(j, template, search, dt, geom, p, base)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bridge_model::make_geometry;

    fn tnb() -> (BridgeParams, CableGeometry) {
        let p = BridgeParams::default();
        let geom = make_geometry(&p, 256).unwrap();
        (p, geom)
    }

    #[test]
    fn initial_condition_follows_the_protocol() {
        let (p, _) = tnb();
        let spec = ExperimentSpec {
            excited_mode: 9,
            amplitude: 2.31,
            ..ExperimentSpec::default()
        };
        let ic = build_ic(&spec, &p).unwrap();
        let wb = ic.w_amplitudes(p.L);
        let tb = ic.theta_amplitudes(p.L);
        assert!((wb[8] - 2.31).abs() <= 1e-12);
        for (k, &v) in wb.iter().enumerate() {
            if k != 8 {
                assert!((v - 2.31e-3).abs() <= 1e-15, "mode {} seed {v}", k + 1);
            }
        }
        for &v in &tb {
            assert!((v - 2.31e-3).abs() <= 1e-15);
        }
        // Velocities carry the same numeric seed in their own units.
        let s = (2.0 / p.L).sqrt();
        for &v in ic.w_vel.iter().chain(&ic.theta_vel) {
            assert!((s * v - 2.31e-3).abs() <= 1e-15);
        }
        // Round-trip of the normalization.
        let back = ic.w_coeffs[8] * s;
        assert!((back - 2.31).abs() <= 1e-12);
    }

    #[test]
    fn zero_perturbation_gives_a_pure_single_mode() {
        let (p, _) = tnb();
        let spec = ExperimentSpec {
            excited_mode: 3,
            amplitude: 1.5,
            perturbation_ratio: 1e-9, // strictly positive per the contract
            ..ExperimentSpec::default()
        };
        let ic = build_ic(&spec, &p).unwrap();
        assert!((ic.w_amplitudes(p.L)[2] - 1.5).abs() <= 1e-12);
        assert!(ic.theta_amplitudes(p.L).iter().all(|&v| v <= 1.51e-9));
    }

    #[test]
    fn experiment_invariants_are_enforced() {
        let base = ExperimentSpec::default();
        assert!(base.validate().is_ok());
        assert!(ExperimentSpec {
            excited_mode: 11,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            perturbation_ratio: 0.05,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            amplitude: -1.0,
            ..base.clone()
        }
        .validate()
        .is_err());
        assert!(ExperimentSpec {
            detection_ratio: 1.5,
            ..base
        }
        .validate()
        .is_err());
    }

    #[test]
    fn detection_reads_the_recorded_maxima() {
        let (p, geom) = tnb();
        let spec = ExperimentSpec {
            excited_mode: 1,
            amplitude: 1.0,
            horizon: 0.1,
            ..ExperimentSpec::default()
        };
        let (record, unstable) = run_protocol(&spec, 1e-3, &geom, &p, &SimOptions::default()).unwrap();
        // A 0.1 s run cannot grow the twist by an order of magnitude.
        assert!(!unstable);
        assert!(!detect_instability(&record, &spec));
        // An all-zero torsional history is stable by definition.
        let mut zeroed = record.clone();
        zeroed.summary.theta_bar_max.iter_mut().for_each(|v| *v = 0.0);
        assert!(!detect_instability(&zeroed, &spec));
    }

    /// Small synthetic threshold search: a cheap grid, a short horizon,
    /// and a generous resolution keep this in unit-test territory while
    /// exercising the scan, the bisection, and the re-verification.
    #[test]
    fn threshold_search_brackets_the_flip() {
        let (p, geom) = tnb();
        let template = ExperimentSpec {
            excited_mode: 9,
            amplitude: 1.0, // replaced per probe
            horizon: 12.0,
            ..ExperimentSpec::default()
        };
        let search = SearchParams {
            resolution: 0.25,
            scan_start: 1.0,
            scan_step: 1.0,
            scan_limit: 12.0,
            bracket: None,
        };
        let base = SimOptions::default();
        let res = find_threshold(9, &template, &search, 2e-3, &geom, &p, &base).unwrap();
        assert_eq!(res.mode, 9);
        assert!(res.bracket.0 < res.threshold && res.threshold <= res.bracket.1);
        assert!(res.bracket.1 - res.bracket.0 <= search.resolution + 1e-12);
        assert!(res.energy_at_threshold > 0.0);
        assert!(res.mean_slackening > 0.0, "a slackening threshold run must show slack");
        // The same search from an explicit bracket lands on the same spot.
        let res2 = find_threshold(
            9,
            &template,
            &SearchParams {
                bracket: Some((res.bracket.0, res.bracket.1)),
                ..search
            },
            2e-3,
            &geom,
            &p,
            &base,
        )
        .unwrap();
        assert_eq!(res2.threshold, res.threshold);
    }

    #[test]
    fn sweep_preserves_input_order_and_isolates_failures() {
        let (p, geom) = tnb();
        let template = ExperimentSpec {
            horizon: 6.0,
            ..ExperimentSpec::default()
        };
        let search = SearchParams {
            resolution: 0.5,
            scan_start: 2.0,
            scan_step: 2.0,
            scan_limit: 20.0,
            bracket: None,
        };
        let base = SimOptions::default();
        let out = sweep(&[9, 8], &template, &search, 5e-3, &geom, &p, &base);
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].0, 9);
        assert_eq!(out[1].0, 8);
        let seq = sweep_sequential(&[9, 8], &template, &search, 5e-3, &geom, &p, &base);
        for ((ma, ra), (mb, rb)) in out.iter().zip(&seq) {
            assert_eq!(ma, mb);
            match (ra, rb) {
                (Ok(a), Ok(b)) => assert_eq!(a, b, "parallel and sequential sweeps must agree"),
                (Err(_), Err(_)) => {}
                _ => panic!("parallel and sequential sweeps disagree on success"),
            }
        }
        assert!(sweep(&[], &template, &search, 5e-3, &geom, &p, &base).is_empty());
    }

    #[test]
    fn rigid_rhs_matches_the_variant_option() {
        let (p, geom) = tnb();
        let spec = ExperimentSpec {
            excited_mode: 9,
            amplitude: 2.6,
            model_variant: ModelVariant::Rigid,
            ..ExperimentSpec::default()
        };
        let ic = build_ic(&spec, &p).unwrap();
        let (aw, at) = rigid_variant_rhs(&ic, &geom, &p).unwrap();
        let (aw2, at2) = crate::dynamics::assemble_rhs(
            &ic,
            &geom,
            &p,
            &SimOptions {
                variant: ModelVariant::Rigid,
                ..SimOptions::default()
            },
        )
        .unwrap();
        assert_eq!(aw, aw2);
        assert_eq!(at, at2);
    }
}
