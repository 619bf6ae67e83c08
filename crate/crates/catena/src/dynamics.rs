//! Modal dynamics of the coupled deck–cable system.
//!
//! The deck state is a truncated Fourier expansion: longitudinal
//! displacement `w(x,t) = Σ_k w_k(t)·e_k(x)` and twist
//! `θ(x,t) = Σ_k θ_k(t)·e_k(x)` over the L²-normalized basis
//! `e_k(x) = √(2/L)·sin(kπx/L)`. Each acceleration evaluation
//! reconstructs the two hanger-constraint profiles on the grid, takes
//! their convex envelopes, converts envelope slopes into cable force
//! densities, and projects those back onto the basis. The projection
//! uses the exact summation-by-parts form `Σ_j (h_{j-1} − h_j)·seed_j`,
//! which telescopes identically to the cell-wise pairing of the force
//! with the variation field (the force density is constant on every
//! envelope chord, so interior chord nodes drop out).

use serde::{Deserialize, Serialize};

use crate::bridge_model::{deck_integral, BridgeParams, CableGeometry};
use crate::envelope::{convex_envelope, GridFunction, ToleranceConfig};
use crate::fastmath::sincos;
use crate::{Error, Result};

/// L²-normalized mode shape `e_k(x) = √(2/L)·sin(kπx/L)`.
pub fn mode_shape(k: usize, l: f64, x: f64) -> f64 {
    (2.0 / l).sqrt() * (k as f64 * std::f64::consts::PI * x / l).sin()
}

/// Mode shape evaluated at relative abscissa `x/L ∈ [0,1]`; sampling at
/// exact node ratios `j/n` avoids accumulated rounding in `x/L`.
pub(crate) fn mode_shape_rel(k: usize, l: f64, x_rel: f64) -> f64 {
    (2.0 / l).sqrt() * (k as f64 * std::f64::consts::PI * x_rel).sin()
}

/// Instantaneous modal state.
///
/// Coefficients multiply the L²-normalized basis; the physical amplitude
/// of mode `k` (meters of deck displacement, radians of twist) is
/// `√(2/L)` times the coefficient. Velocity vectors must match their
/// coefficient vectors in length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalState {
    /// Simulation time (s).
    pub t: f64,
    /// Longitudinal coefficients `w_k`.
    pub w_coeffs: Vec<f64>,
    /// Torsional coefficients `θ_k`.
    pub theta_coeffs: Vec<f64>,
    /// Longitudinal velocities `ẇ_k`.
    pub w_vel: Vec<f64>,
    /// Torsional velocities `θ̇_k`.
    pub theta_vel: Vec<f64>,
}

impl ModalState {
    /// All-zero state with the given mode counts.
    pub fn rest(n_w: usize, n_theta: usize) -> Self {
        Self {
            t: 0.0,
            w_coeffs: vec![0.0; n_w],
            theta_coeffs: vec![0.0; n_theta],
            w_vel: vec![0.0; n_w],
            theta_vel: vec![0.0; n_theta],
        }
    }

    /// Conversion factor from physical amplitude to coefficient.
    pub fn amplitude_to_coeff(l: f64) -> f64 {
        (l / 2.0).sqrt()
    }

    /// Physical longitudinal amplitudes `w̄_k = √(2/L)·w_k` (m).
    pub fn w_amplitudes(&self, l: f64) -> Vec<f64> {
        let s = (2.0 / l).sqrt();
        self.w_coeffs.iter().map(|&c| s * c).collect()
    }

    /// Physical torsional amplitudes `θ̄_k = √(2/L)·θ_k` (rad).
    pub fn theta_amplitudes(&self, l: f64) -> Vec<f64> {
        let s = (2.0 / l).sqrt();
        self.theta_coeffs.iter().map(|&c| s * c).collect()
    }

    /// Checks shape consistency and finiteness.
    pub fn validate(&self) -> Result<()> {
        if self.w_coeffs.is_empty() {
            return Err(Error::InvalidParameter(
                "state needs at least one longitudinal mode".into(),
            ));
        }
        if self.w_vel.len() != self.w_coeffs.len()
            || self.theta_vel.len() != self.theta_coeffs.len()
        {
            return Err(Error::InvalidParameter(
                "velocity vectors must match coefficient vectors in length".into(),
            ));
        }
        let all = self
            .w_coeffs
            .iter()
            .chain(&self.theta_coeffs)
            .chain(&self.w_vel)
            .chain(&self.theta_vel);
        for (i, &v) in all.enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "non-finite state entry at flat index {i}: {v}"
                )));
            }
        }
        if !self.t.is_finite() {
            return Err(Error::InvalidParameter(format!("non-finite time {}", self.t)));
        }
        Ok(())
    }
}

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Classical fourth-order Runge–Kutta (default).
    #[default]
    Rk4,
    /// Velocity Verlet: second order, symplectic, time-reversible.
    Verlet,
}

/// Cable constitutive variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    /// Envelope slopes: hangers go slack instead of pushing (default).
    #[default]
    Convexified,
    /// Raw profile slopes: hangers treated as rigid rods.
    Rigid,
}

/// Simulation options beyond the state, horizon, and step size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimOptions {
    /// Time-stepping scheme.
    pub integrator: Integrator,
    /// Cable constitutive variant.
    pub variant: ModelVariant,
    /// Seconds between stored samples (rounded to whole steps, min one).
    pub store_stride: f64,
    /// Envelope tolerances used in slack measurement and cross-checks.
    pub tolerances: ToleranceConfig,
    /// Include cable forces/energy (off isolates the linear beam).
    pub include_cable: bool,
    /// Include gravity load/energy.
    pub include_gravity: bool,
    /// Re-derive every right-hand side through the public envelope and
    /// variation API and assert agreement. Debug aid; slow.
    pub rhs_cross_check: bool,
    /// Stop as soon as the running maximal torsional amplitude (rad)
    /// reaches this level. The record is marked as an early exit.
    pub early_exit_amplitude: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            integrator: Integrator::Rk4,
            variant: ModelVariant::Convexified,
            store_stride: 0.01,
            tolerances: ToleranceConfig::default(),
            include_cable: true,
            include_gravity: true,
            rhs_cross_check: false,
            early_exit_amplitude: None,
        }
    }
}

/// Aggregates of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// Per-mode maximum of `|w̄_k(t)|` over every integrator step (m).
    pub w_bar_max: Vec<f64>,
    /// Per-mode maximum of `|θ̄_k(t)|` over every integrator step (rad).
    pub theta_bar_max: Vec<f64>,
    /// Mean over stored samples of the two cables' averaged slack
    /// fraction.
    pub mean_slackening: f64,
    /// Mean slack fraction of the α cable alone.
    pub mean_slackening_alpha: f64,
    /// Mean slack fraction of the β cable alone.
    pub mean_slackening_beta: f64,
    /// Energy at the initial state (J).
    pub energy_initial: f64,
    /// `|max E − min E| / |E(0)|` over every integrator step.
    pub energy_drift: f64,
    /// Time actually reached (equals the horizon unless exited early).
    pub final_time: f64,
    /// Whether the early-exit amplitude was reached.
    pub early_exit: bool,
}

/// Time series and aggregates produced by [`simulate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Stored sample times (s).
    pub times: Vec<f64>,
    /// Physical longitudinal amplitudes per stored sample (m).
    pub w_bar_history: Vec<Vec<f64>>,
    /// Physical torsional amplitudes per stored sample (rad).
    pub theta_bar_history: Vec<Vec<f64>>,
    /// Total energy per stored sample (J).
    pub energy: Vec<f64>,
    /// α-cable slack fraction per stored sample.
    pub slack_alpha: Vec<f64>,
    /// β-cable slack fraction per stored sample.
    pub slack_beta: Vec<f64>,
    /// Run aggregates.
    pub summary: RunSummary,
}

/// Zero-allocation evaluation workspace bound to one grid and parameter
/// set.
struct Workspace {
    n: usize,
    dx: f64,
    l: f64,
    ell: f64,
    n_w: usize,
    n_theta: usize,
    yhat: Vec<f64>,
    /// Mode table, row `k` holding `e_{k+1}` at all nodes.
    table: Vec<f64>,
    w_stiff: Vec<f64>,
    w_grav: Vec<f64>,
    th_stiff: Vec<f64>,
    w_elastic: Vec<f64>,
    th_elastic: Vec<f64>,
    inv_m: f64,
    th_accel_factor: f64,
    tension_coeff: f64,
    stretch_coeff: f64,
    rest_arc: f64,
    half_m: f64,
    th_inertia: f64,
    mg: f64,
    // Scratch buffers.
    w_node: Vec<f64>,
    th_node: Vec<f64>,
    sin_th: Vec<f64>,
    cos_th: Vec<f64>,
    q: [Vec<f64>; 2],
    chi_cells: [Vec<f64>; 2],
    div_w: Vec<f64>,
    div_t: Vec<f64>,
    hull: Vec<usize>,
    // Outputs of the latest evaluation.
    arc: [f64; 2],
    gamma: [f64; 2],
}

impl Workspace {
    fn new(
        geom: &CableGeometry,
        p: &BridgeParams,
        n_w: usize,
        n_theta: usize,
    ) -> Result<Self> {
        p.validate()?;
        let n = geom.rest_profile.n_cells();
        let l = p.L;
        if (geom.rest_profile.b - geom.rest_profile.a - l).abs() > 1e-9 * l {
            return Err(Error::InvalidParameter(format!(
                "geometry span {} does not match parameter span {l}",
                geom.rest_profile.b - geom.rest_profile.a
            )));
        }
        let kmax = n_w.max(n_theta);
        let mut table = vec![0.0; kmax * (n + 1)];
        for k in 1..=kmax {
            let row = &mut table[(k - 1) * (n + 1)..k * (n + 1)];
            for (j, v) in row.iter_mut().enumerate() {
                *v = mode_shape_rel(k, l, j as f64 / n as f64);
            }
        }
        let mu = |k: usize| k as f64 * std::f64::consts::PI / l;
        let w_stiff: Vec<f64> = (1..=n_w).map(|k| p.E * p.I * mu(k).powi(4)).collect();
        let w_grav: Vec<f64> = (1..=n_w)
            .map(|k| {
                if k % 2 == 1 {
                    -p.g * (2.0 * l).sqrt() * 2.0 / (k as f64 * std::f64::consts::PI)
                } else {
                    0.0
                }
            })
            .collect();
        let th_stiff: Vec<f64> = (1..=n_theta)
            .map(|k| (p.E * p.J * mu(k).powi(4) + p.G * p.K * mu(k).powi(2)) / p.ell)
            .collect();
        let w_elastic: Vec<f64> = (1..=n_w).map(|k| 0.5 * p.E * p.I * mu(k).powi(4)).collect();
        let th_elastic: Vec<f64> = (1..=n_theta)
            .map(|k| 0.5 * p.E * p.J * mu(k).powi(4) + 0.5 * p.G * p.K * mu(k).powi(2))
            .collect();
        Ok(Self {
            n,
            dx: geom.rest_profile.dx(),
            l,
            ell: p.ell,
            n_w,
            n_theta,
            yhat: geom.rest_profile.values.clone(),
            table,
            w_stiff,
            w_grav,
            th_stiff,
            w_elastic,
            th_elastic,
            inv_m: 1.0 / p.M,
            th_accel_factor: 3.0 / (p.M * p.ell),
            tension_coeff: p.H * geom.xi_bar,
            stretch_coeff: p.A * p.E_c / geom.L_c,
            rest_arc: geom.rest_arclength,
            half_m: 0.5 * p.M,
            th_inertia: p.M * p.ell * p.ell / 6.0,
            mg: p.M * p.g,
            w_node: vec![0.0; n + 1],
            th_node: vec![0.0; n + 1],
            sin_th: vec![0.0; n + 1],
            cos_th: vec![0.0; n + 1],
            q: [vec![0.0; n + 1], vec![0.0; n + 1]],
            chi_cells: [vec![0.0; n], vec![0.0; n]],
            div_w: vec![0.0; n + 1],
            div_t: vec![0.0; n + 1],
            hull: Vec::with_capacity(n + 1),
            arc: [0.0; 2],
            gamma: [0.0; 2],
        })
    }

    /// Lower-hull slopes of `q`, written as `χ(slope)` per cell; returns
    /// the hull's arc length. Pop condition identical to the public
    /// envelope construction.
    fn hull_chi(q: &[f64], dx: f64, hull: &mut Vec<usize>, chi_out: &mut [f64]) -> f64 {
        hull.clear();
        hull.push(0);
        for k in 1..q.len() {
            while hull.len() >= 2 {
                let i = hull[hull.len() - 2];
                let j = hull[hull.len() - 1];
                if (q[j] - q[i]) * ((k - i) as f64) >= (q[k] - q[i]) * ((j - i) as f64) {
                    hull.pop();
                } else {
                    break;
                }
            }
            hull.push(k);
        }
        let mut arc = 0.0;
        for w in hull.windows(2) {
            let (p0, p1) = (w[0], w[1]);
            let span = (p1 - p0) as f64 * dx;
            let s = (q[p1] - q[p0]) / span;
            let g = (1.0 + s * s).sqrt();
            arc += span * g;
            let c = s / g;
            for v in &mut chi_out[p0..p1] {
                *v = c;
            }
        }
        arc
    }

    /// Raw-slope variant (rigid hangers): `χ` of the finite-difference
    /// slope per cell; returns the profile's arc length.
    fn raw_chi(q: &[f64], dx: f64, chi_out: &mut [f64]) -> f64 {
        let mut arc = 0.0;
        for (i, v) in chi_out.iter_mut().enumerate() {
            let s = (q[i + 1] - q[i]) / dx;
            let g = (1.0 + s * s).sqrt();
            arc += dx * g;
            *v = s / g;
        }
        arc
    }

    /// Accelerations for the given coefficients. Also refreshes the
    /// constraint profiles, `χ` tables, arc lengths, and stretches, which
    /// [`Self::energy`] and the slack measurement then reuse.
    fn eval(
        &mut self,
        wc: &[f64],
        tc: &[f64],
        opts: &SimOptions,
        aw: &mut [f64],
        at: &mut [f64],
    ) {
        let n = self.n;
        if opts.include_cable {
            self.w_node.fill(0.0);
            for (k, &c) in wc[..self.n_w].iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let row = &self.table[k * (n + 1)..(k + 1) * (n + 1)];
                for (v, &e) in self.w_node.iter_mut().zip(row.iter()) {
                    *v += c * e;
                }
            }
            self.th_node.fill(0.0);
            for (k, &c) in tc[..self.n_theta].iter().enumerate() {
                if c == 0.0 {
                    continue;
                }
                let row = &self.table[k * (n + 1)..(k + 1) * (n + 1)];
                for (v, &e) in self.th_node.iter_mut().zip(row.iter()) {
                    *v += c * e;
                }
            }
            for j in 0..=n {
                let (s, c) = sincos(self.th_node[j]);
                self.sin_th[j] = s;
                self.cos_th[j] = c;
                let base = self.w_node[j] + self.yhat[j];
                let tors = self.ell * s;
                self.q[0][j] = base + tors;
                self.q[1][j] = base - tors;
            }
            for side in 0..2 {
                let arc = match opts.variant {
                    ModelVariant::Convexified => Self::hull_chi(
                        &self.q[side],
                        self.dx,
                        &mut self.hull,
                        &mut self.chi_cells[side],
                    ),
                    ModelVariant::Rigid => {
                        Self::raw_chi(&self.q[side], self.dx, &mut self.chi_cells[side])
                    }
                };
                self.arc[side] = arc;
                self.gamma[side] = arc - self.rest_arc;
            }
            let coeff_a = -(self.tension_coeff + self.stretch_coeff * self.gamma[0]);
            let coeff_b = -(self.tension_coeff + self.stretch_coeff * self.gamma[1]);
            // Exact summation-by-parts projection: only nodes where the
            // force density jumps contribute, and the basis functions
            // vanish at the boundary. The force density is constant on
            // every envelope chord, so slack stretches contribute exact
            // zeros here.
            for j in 1..n {
                let da = coeff_a * (self.chi_cells[0][j - 1] - self.chi_cells[0][j]);
                let db = coeff_b * (self.chi_cells[1][j - 1] - self.chi_cells[1][j]);
                self.div_w[j] = da + db;
                self.div_t[j] = (da - db) * self.cos_th[j];
            }
            // Unrolled dot products: four independent accumulators per
            // quantity break the floating-point addition dependency chain.
            // The regrouped summation order is fixed, so results stay
            // deterministic.
            for k in 0..self.n_w.max(self.n_theta) {
                let row = &self.table[k * (n + 1)..(k + 1) * (n + 1)];
                let mut w_acc = [0.0_f64; 4];
                let mut t_acc = [0.0_f64; 4];
                let mut j = 1;
                while j + 4 <= n {
                    for u in 0..4 {
                        w_acc[u] += self.div_w[j + u] * row[j + u];
                        t_acc[u] += self.div_t[j + u] * row[j + u];
                    }
                    j += 4;
                }
                while j < n {
                    w_acc[0] += self.div_w[j] * row[j];
                    t_acc[0] += self.div_t[j] * row[j];
                    j += 1;
                }
                let r_w = (w_acc[0] + w_acc[1]) + (w_acc[2] + w_acc[3]);
                let r_t = (t_acc[0] + t_acc[1]) + (t_acc[2] + t_acc[3]);
                if k < self.n_w {
                    aw[k] = r_w * self.inv_m;
                }
                if k < self.n_theta {
                    at[k] = r_t * self.th_accel_factor;
                }
            }
        } else {
            aw[..self.n_w].fill(0.0);
            at[..self.n_theta].fill(0.0);
            self.arc = [self.rest_arc; 2];
            self.gamma = [0.0; 2];
        }
        for k in 0..self.n_w {
            aw[k] -= self.w_stiff[k] * wc[k] * self.inv_m;
            if opts.include_gravity {
                aw[k] += self.w_grav[k];
            }
        }
        for k in 0..self.n_theta {
            at[k] -= self.th_stiff[k] * tc[k] * self.th_accel_factor;
        }
        if opts.rhs_cross_check {
            self.cross_check(wc, tc, opts, aw, at);
        }
    }

    /// Re-derives the cable part of the accelerations through the public
    /// envelope/variation API and asserts agreement with the fast path.
    fn cross_check(
        &mut self,
        wc: &[f64],
        tc: &[f64],
        opts: &SimOptions,
        aw: &[f64],
        at: &[f64],
    ) {
        use crate::variation::{g_theta_psi_pm, j_phi_pm};
        if !opts.include_cable {
            return;
        }
        let n = self.n;
        let theta_grid = GridFunction {
            a: 0.0,
            b: self.l,
            values: self.th_node.clone(),
        };
        let mut r_w = vec![0.0; self.n_w];
        let mut r_t = vec![0.0; self.n_theta];
        for side in 0..2 {
            let qf = GridFunction {
                a: 0.0,
                b: self.l,
                values: self.q[side].clone(),
            };
            let env = match opts.variant {
                ModelVariant::Convexified => convex_envelope(&qf, &opts.tolerances).unwrap(),
                ModelVariant::Rigid => {
                    // The rigid variant pairs forces with the raw seed
                    // directly; emulate via an envelope whose slopes are
                    // the raw slopes (every node in contact).
                    let mut env = convex_envelope(&qf, &opts.tolerances).unwrap();
                    env.env = qf.clone();
                    let dx = qf.dx();
                    env.slopes = qf.values.windows(2).map(|w| (w[1] - w[0]) / dx).collect();
                    env.contact_mask = vec![true; n + 1];
                    env.affine_intervals.clear();
                    env.hull_vertices = (0..=n).collect();
                    env
                }
            };
            let coeff = -(self.tension_coeff + self.stretch_coeff * self.gamma[side]);
            let h_cells: Vec<f64> = env.slopes.iter().map(|&s| {
                coeff * s / (1.0 + s * s).sqrt()
            }).collect();
            let sgn = if side == 0 { 1.0 } else { -1.0 };
            for k in 0..self.n_w.max(self.n_theta) {
                let row = &self.table[k * (n + 1)..(k + 1) * (n + 1)];
                let seed = GridFunction {
                    a: 0.0,
                    b: self.l,
                    values: row.to_vec(),
                };
                if k < self.n_w {
                    let field = j_phi_pm(&qf, &seed, &env, true).unwrap();
                    let total: f64 = h_cells
                        .iter()
                        .enumerate()
                        .map(|(i, &h)| h * (field.values.values[i + 1] - field.values.values[i]))
                        .sum();
                    r_w[k] += total;
                }
                if k < self.n_theta {
                    let field = g_theta_psi_pm(&theta_grid, &seed, &env, true).unwrap();
                    let total: f64 = h_cells
                        .iter()
                        .enumerate()
                        .map(|(i, &h)| h * (field.values.values[i + 1] - field.values.values[i]))
                        .sum();
                    r_t[k] += sgn * total;
                }
            }
        }
        for k in 0..self.n_w {
            let fast = aw[k]
                + self.w_stiff[k] * wc[k] * self.inv_m
                - if opts.include_gravity { self.w_grav[k] } else { 0.0 };
            let explicit = r_w[k] * self.inv_m;
            let scale = fast.abs().max(explicit.abs()).max(1.0);
            assert!(
                (fast - explicit).abs() <= 1e-8 * scale,
                "longitudinal RHS mismatch at mode {}: fast {fast} vs explicit {explicit}",
                k + 1
            );
        }
        for k in 0..self.n_theta {
            let fast = at[k] + self.th_stiff[k] * tc[k] * self.th_accel_factor;
            let explicit = r_t[k] * self.th_accel_factor;
            let scale = fast.abs().max(explicit.abs()).max(1.0);
            assert!(
                (fast - explicit).abs() <= 1e-8 * scale,
                "torsional RHS mismatch at mode {}: fast {fast} vs explicit {explicit}",
                k + 1
            );
        }
    }

    /// Total energy of the state whose profiles are currently loaded
    /// (i.e. right after [`Self::eval`] on the same coefficients).
    fn energy(&self, wc: &[f64], tc: &[f64], wv: &[f64], tv: &[f64], opts: &SimOptions) -> f64 {
        let mut e = 0.0;
        for &v in wv {
            e += self.half_m * v * v;
        }
        for &v in tv {
            e += self.th_inertia * v * v;
        }
        for (k, &c) in wc.iter().enumerate() {
            e += self.w_elastic[k] * c * c;
        }
        for (k, &c) in tc.iter().enumerate() {
            e += self.th_elastic[k] * c * c;
        }
        if opts.include_cable {
            e += self.tension_coeff * (self.arc[0] + self.arc[1] - 2.0 * self.rest_arc)
                + 0.5 * self.stretch_coeff
                    * (self.gamma[0] * self.gamma[0] + self.gamma[1] * self.gamma[1]);
        }
        if opts.include_gravity {
            e += self.mg * deck_integral(wc, self.l);
        }
        e
    }

    /// Slack fractions of the currently loaded profiles, measured through
    /// the public envelope call.
    fn slack_fractions(&self, opts: &SimOptions) -> (f64, f64) {
        if !opts.include_cable {
            return (0.0, 0.0);
        }
        // Rigid hangers never detach, so that variant reports no slack by
        // definition; only the convexified model measures affine stretches.
        if opts.variant == ModelVariant::Rigid {
            return (0.0, 0.0);
        }
        let mut out = [0.0; 2];
        for (side, frac) in out.iter_mut().enumerate() {
            let qf = GridFunction {
                a: 0.0,
                b: self.l,
                values: self.q[side].clone(),
            };
            let env = convex_envelope(&qf, &opts.tolerances).expect("finite profile");
            let total: f64 = env
                .affine_intervals
                .iter()
                .map(|&(p, q)| (q - p) as f64)
                .sum();
            *frac = total * self.dx / self.l;
        }
        (out[0], out[1])
    }
}

/// Accelerations `(ẅ_k, θ̈_k)` for a state.
///
/// Convenience wrapper that builds a fresh workspace; the integrator
/// reuses one across the whole run instead.
pub fn assemble_rhs(
    state: &ModalState,
    geom: &CableGeometry,
    p: &BridgeParams,
    opts: &SimOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    state.validate()?;
    let mut ws = Workspace::new(geom, p, state.w_coeffs.len(), state.theta_coeffs.len())?;
    let mut aw = vec![0.0; ws.n_w];
    let mut at = vec![0.0; ws.n_theta];
    ws.eval(&state.w_coeffs, &state.theta_coeffs, opts, &mut aw, &mut at);
    Ok((aw, at))
}

/// Integrator scratch: one stage's positions/velocities/accelerations.
struct Stage {
    pw: Vec<f64>,
    pt: Vec<f64>,
    vw: Vec<f64>,
    vt: Vec<f64>,
    aw: Vec<f64>,
    at: Vec<f64>,
}

impl Stage {
    fn new(n_w: usize, n_t: usize) -> Self {
        Self {
            pw: vec![0.0; n_w],
            pt: vec![0.0; n_t],
            vw: vec![0.0; n_w],
            vt: vec![0.0; n_t],
            aw: vec![0.0; n_w],
            at: vec![0.0; n_t],
        }
    }
}

fn axpy(out: &mut [f64], base: &[f64], h: f64, dir: &[f64]) {
    for ((o, &b), &d) in out.iter_mut().zip(base).zip(dir) {
        *o = b + h * d;
    }
}

/// One RK4 step from the state whose stage-1 accelerations are already in
/// `s1.aw/s1.at` (positions/velocities read from `state`).
#[allow(clippy::too_many_arguments)]
fn rk4_step(
    state: &mut ModalState,
    dt: f64,
    ws: &mut Workspace,
    opts: &SimOptions,
    s1: &Stage,
    s2: &mut Stage,
    s3: &mut Stage,
    s4: &mut Stage,
) {
    let h2 = 0.5 * dt;
    // Stage 2 at x + h/2·v1, v + h/2·a1.
    axpy(&mut s2.pw, &state.w_coeffs, h2, &state.w_vel);
    axpy(&mut s2.pt, &state.theta_coeffs, h2, &state.theta_vel);
    axpy(&mut s2.vw, &state.w_vel, h2, &s1.aw);
    axpy(&mut s2.vt, &state.theta_vel, h2, &s1.at);
    ws.eval(&s2.pw, &s2.pt, opts, &mut s2.aw, &mut s2.at);
    // Stage 3 at x + h/2·v2, v + h/2·a2.
    axpy(&mut s3.pw, &state.w_coeffs, h2, &s2.vw);
    axpy(&mut s3.pt, &state.theta_coeffs, h2, &s2.vt);
    axpy(&mut s3.vw, &state.w_vel, h2, &s2.aw);
    axpy(&mut s3.vt, &state.theta_vel, h2, &s2.at);
    ws.eval(&s3.pw, &s3.pt, opts, &mut s3.aw, &mut s3.at);
    // Stage 4 at x + h·v3, v + h·a3.
    axpy(&mut s4.pw, &state.w_coeffs, dt, &s3.vw);
    axpy(&mut s4.pt, &state.theta_coeffs, dt, &s3.vt);
    axpy(&mut s4.vw, &state.w_vel, dt, &s3.aw);
    axpy(&mut s4.vt, &state.theta_vel, dt, &s3.at);
    ws.eval(&s4.pw, &s4.pt, opts, &mut s4.aw, &mut s4.at);
    let h6 = dt / 6.0;
    let comb = |x: &mut [f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| {
        for i in 0..x.len() {
            x[i] += h6 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    };
    comb(&mut state.w_coeffs, &state.w_vel, &s2.vw, &s3.vw, &s4.vw);
    comb(&mut state.theta_coeffs, &state.theta_vel, &s2.vt, &s3.vt, &s4.vt);
    comb(&mut state.w_vel, &s1.aw, &s2.aw, &s3.aw, &s4.aw);
    comb(&mut state.theta_vel, &s1.at, &s2.at, &s3.at, &s4.at);
    state.t += dt;
}

/// One velocity-Verlet step; `s1` holds the accelerations at the current
/// state on entry and at the new state on exit.
fn verlet_step(
    state: &mut ModalState,
    dt: f64,
    ws: &mut Workspace,
    opts: &SimOptions,
    s1: &mut Stage,
    s2: &mut Stage,
) {
    let half_dt2 = 0.5 * dt * dt;
    for i in 0..state.w_coeffs.len() {
        state.w_coeffs[i] += dt * state.w_vel[i] + half_dt2 * s1.aw[i];
    }
    for i in 0..state.theta_coeffs.len() {
        state.theta_coeffs[i] += dt * state.theta_vel[i] + half_dt2 * s1.at[i];
    }
    ws.eval(&state.w_coeffs, &state.theta_coeffs, opts, &mut s2.aw, &mut s2.at);
    let hd = 0.5 * dt;
    for i in 0..state.w_vel.len() {
        state.w_vel[i] += hd * (s1.aw[i] + s2.aw[i]);
    }
    for i in 0..state.theta_vel.len() {
        state.theta_vel[i] += hd * (s1.at[i] + s2.at[i]);
    }
    std::mem::swap(&mut s1.aw, &mut s2.aw);
    std::mem::swap(&mut s1.at, &mut s2.at);
    state.t += dt;
}

/// Advances the state by one step of `dt`.
pub fn step(
    state: &mut ModalState,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    opts: &SimOptions,
) -> Result<()> {
    state.validate()?;
    if !(dt.is_finite() && dt != 0.0) {
        return Err(Error::InvalidParameter(format!("step size must be nonzero and finite, got {dt}")));
    }
    let (n_w, n_t) = (state.w_coeffs.len(), state.theta_coeffs.len());
    let mut ws = Workspace::new(geom, p, n_w, n_t)?;
    let mut s1 = Stage::new(n_w, n_t);
    let mut s2 = Stage::new(n_w, n_t);
    ws.eval(&state.w_coeffs, &state.theta_coeffs, opts, &mut s1.aw, &mut s1.at);
    match opts.integrator {
        Integrator::Rk4 => {
            let mut s3 = Stage::new(n_w, n_t);
            let mut s4 = Stage::new(n_w, n_t);
            rk4_step(state, dt, &mut ws, opts, &s1, &mut s2, &mut s3, &mut s4);
        }
        Integrator::Verlet => verlet_step(state, dt, &mut ws, opts, &mut s1, &mut s2),
    }
    check_finite(state, &ws)?;
    Ok(())
}

fn check_finite(state: &ModalState, ws: &Workspace) -> Result<()> {
    let bad = state
        .w_coeffs
        .iter()
        .chain(&state.theta_coeffs)
        .chain(&state.w_vel)
        .chain(&state.theta_vel)
        .any(|v| !v.is_finite());
    if bad {
        let s = (2.0 / ws.l).sqrt();
        let fmt = |coeffs: &[f64]| {
            coeffs
                .iter()
                .map(|&c| format!("{:.3e}", s * c))
                .collect::<Vec<_>>()
                .join(", ")
        };
        return Err(Error::NonFinite {
            t: state.t,
            diagnostic: format!(
                "state blew up: w̄ = [{}], θ̄ = [{}]; \
                 reduce the step size or the initial amplitude",
                fmt(&state.w_coeffs),
                fmt(&state.theta_coeffs)
            ),
        });
    }
    Ok(())
}

/// Integrates the state over `[ic.t, ic.t + t_final]`, recording stored
/// samples every `opts.store_stride` seconds (the initial and final
/// states are always stored).
///
/// Energy and per-mode running maxima are tracked at every integrator
/// step; slack fractions are measured at stored samples only.
pub fn simulate(
    ic: &ModalState,
    t_final: f64,
    dt: f64,
    geom: &CableGeometry,
    p: &BridgeParams,
    opts: &SimOptions,
) -> Result<RunRecord> {
    ic.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive and finite, got {dt}"
        )));
    }
    if !(t_final.is_finite() && t_final >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "horizon must be nonnegative and finite, got {t_final}"
        )));
    }
    if !(opts.store_stride.is_finite() && opts.store_stride > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "store stride must be positive, got {}",
            opts.store_stride
        )));
    }
    let (n_w, n_t) = (ic.w_coeffs.len(), ic.theta_coeffs.len());
    let mut ws = Workspace::new(geom, p, n_w, n_t)?;
    let n_steps = (t_final / dt).round() as usize;
    let store_every = (opts.store_stride / dt).round().max(1.0) as usize;

    let mut state = ic.clone();
    let mut s1 = Stage::new(n_w, n_t);
    let mut s2 = Stage::new(n_w, n_t);
    let mut s3 = Stage::new(n_w, n_t);
    let mut s4 = Stage::new(n_w, n_t);

    let cap = n_steps / store_every + 2;
    let mut record = RunRecord {
        times: Vec::with_capacity(cap),
        w_bar_history: Vec::with_capacity(cap),
        theta_bar_history: Vec::with_capacity(cap),
        energy: Vec::with_capacity(cap),
        slack_alpha: Vec::with_capacity(cap),
        slack_beta: Vec::with_capacity(cap),
        summary: RunSummary {
            w_bar_max: vec![0.0; n_w],
            theta_bar_max: vec![0.0; n_t],
            mean_slackening: 0.0,
            mean_slackening_alpha: 0.0,
            mean_slackening_beta: 0.0,
            energy_initial: 0.0,
            energy_drift: 0.0,
            final_time: ic.t,
            early_exit: false,
        },
    };
    let amp = (2.0 / ws.l).sqrt();
    let mut e_min = f64::INFINITY;
    let mut e_max = f64::NEG_INFINITY;
    let mut e0 = 0.0;
    let mut slack_sum = [0.0; 2];

    for step_idx in 0..=n_steps {
        ws.eval(&state.w_coeffs, &state.theta_coeffs, opts, &mut s1.aw, &mut s1.at);
        let e = ws.energy(&state.w_coeffs, &state.theta_coeffs, &state.w_vel, &state.theta_vel, opts);
        if step_idx == 0 {
            e0 = e;
        }
        e_min = e_min.min(e);
        e_max = e_max.max(e);
        for (m, &c) in record.summary.w_bar_max.iter_mut().zip(&state.w_coeffs) {
            *m = m.max((amp * c).abs());
        }
        let mut theta_peak = 0.0_f64;
        for (m, &c) in record.summary.theta_bar_max.iter_mut().zip(&state.theta_coeffs) {
            *m = m.max((amp * c).abs());
            theta_peak = theta_peak.max(*m);
        }
        let exiting = opts
            .early_exit_amplitude
            .map(|level| theta_peak >= level)
            .unwrap_or(false);
        if step_idx % store_every == 0 || step_idx == n_steps || exiting {
            let (sa, sb) = ws.slack_fractions(opts);
            record.times.push(state.t);
            record.w_bar_history.push(state.w_amplitudes(ws.l));
            record.theta_bar_history.push(state.theta_amplitudes(ws.l));
            record.energy.push(e);
            record.slack_alpha.push(sa);
            record.slack_beta.push(sb);
            slack_sum[0] += sa;
            slack_sum[1] += sb;
        }
        if exiting {
            record.summary.early_exit = true;
            record.summary.final_time = state.t;
            break;
        }
        if step_idx == n_steps {
            record.summary.final_time = state.t;
            break;
        }
        match opts.integrator {
            Integrator::Rk4 => {
                rk4_step(&mut state, dt, &mut ws, opts, &s1, &mut s2, &mut s3, &mut s4)
            }
            Integrator::Verlet => {
                // Reuses s1's accelerations; they are refreshed in place,
                // and the loop's next stage-1 eval recomputes them anyway
                // (keeping the bookkeeping identical across integrators).
                verlet_step(&mut state, dt, &mut ws, opts, &mut s1, &mut s2)
            }
        }
        check_finite(&state, &ws)?;
    }

    let samples = record.times.len() as f64;
    record.summary.mean_slackening_alpha = slack_sum[0] / samples;
    record.summary.mean_slackening_beta = slack_sum[1] / samples;
    record.summary.mean_slackening = 0.5 * (slack_sum[0] + slack_sum[1]) / samples;
    record.summary.energy_initial = e0;
    record.summary.energy_drift = (e_max - e_min) / e0.abs().max(f64::MIN_POSITIVE);
    Ok(record)
}
