//! Physical parameterization and cable mechanics.
//!
//! The deck hangs from two parabolic cables. Displacing the deck reshapes
//! each cable's hanger-constraint profile; the cable itself takes the
//! greatest convex minorant of that profile (hangers pull but cannot
//! push). Everything mechanical — stretch, restoring force density,
//! energy, slack measure — is a functional of that envelope.
//!
//! Sign convention: positive `w` points away from the ground (deck moving
//! toward the cables), the rest profile `ŷ` is convex with its minimum at
//! midspan, and gravity therefore enters the energy as `+Mg∫w`. Upward
//! deck motion dents the constraint profile and produces slack; at rest
//! the constraint is strictly convex and every hanger is taut.

use serde::{Deserialize, Serialize};

use crate::dynamics::{mode_shape_rel, ModalState};
use crate::envelope::{convex_envelope, EnvelopeResult, GridFunction, ToleranceConfig};
use crate::{Error, Result};

/// Which of the two cables a quantity refers to.
///
/// The α cable hangs the deck edge displaced by `w + ℓ sin θ`, the β cable
/// the edge displaced by `w − ℓ sin θ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CableSide {
    /// Edge at `w + ℓ sin θ`.
    Alpha,
    /// Edge at `w − ℓ sin θ`.
    Beta,
}

impl CableSide {
    /// Sign of the torsional term in this side's constraint.
    pub fn sign(self) -> f64 {
        match self {
            CableSide::Alpha => 1.0,
            CableSide::Beta => -1.0,
        }
    }
}

/// Physical constants of the bridge (SI units).
///
/// Defaults reproduce the historical narrow suspension bridge the model is
/// calibrated against. `y0` (tower height) enters every formula only as an
/// additive constant and is carried for reporting purposes.
#[allow(non_snake_case)]
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeParams {
    /// Deck Young modulus (Pa).
    pub E: f64,
    /// Cable Young modulus (Pa).
    pub E_c: f64,
    /// Shear modulus (Pa).
    pub G: f64,
    /// Span (m).
    pub L: f64,
    /// Deck half-width (m): hangers sit at `±ell` from the centerline.
    pub ell: f64,
    /// Cable sag (m).
    pub f_sag: f64,
    /// Second moment of area of the deck section (m⁴).
    pub I: f64,
    /// Torsional constant (m⁴).
    pub K: f64,
    /// Warping constant (m⁶).
    pub J: f64,
    /// Cable cross-section area (m²).
    pub A: f64,
    /// Deck linear mass density (kg/m).
    pub M: f64,
    /// Initial (dead-load) cable tension (N).
    pub H: f64,
    /// Gravitational acceleration (m/s²).
    pub g: f64,
    /// Tower height (m); additive constant only.
    pub y0: f64,
}

impl Default for BridgeParams {
    fn default() -> Self {
        Self {
            E: 2.0e11,
            E_c: 1.85e11,
            G: 8.1e10,
            L: 853.44,
            ell: 6.0,
            f_sag: 70.71,
            I: 0.154,
            K: 6.07e-6,
            J: 5.44,
            A: 0.1228,
            M: 7198.0,
            H: 4.5413e7,
            g: 9.81,
            // The towers rise about one sag above the deck; only reported,
            // never entering the mechanics.
            y0: 70.71,
        }
    }
}

impl BridgeParams {
    /// Checks that every structural constant is strictly positive and
    /// finite. The two pure loads — gravity `g` and the dead-load
    /// pretension `H` — may be zero, which turns the corresponding forcing
    /// off for diagnostic runs (an unloaded bridge at rest stays at rest).
    pub fn validate(&self) -> Result<()> {
        let strict = [
            ("E", self.E),
            ("E_c", self.E_c),
            ("G", self.G),
            ("L", self.L),
            ("ell", self.ell),
            ("f_sag", self.f_sag),
            ("I", self.I),
            ("K", self.K),
            ("J", self.J),
            ("A", self.A),
            ("M", self.M),
            ("y0", self.y0),
        ];
        for (name, v) in strict {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be strictly positive and finite, got {v}"
                )));
            }
        }
        for (name, v) in [("H", self.H), ("g", self.g)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be non-negative and finite, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Advisory check of the sag-to-span ratio against the customary
    /// design band [1/12, 1/8]. Returns a message when outside; callers
    /// should surface it as a warning, not an error.
    pub fn sag_ratio_warning(&self) -> Option<String> {
        let ratio = self.f_sag / self.L;
        if (1.0 / 12.0..=1.0 / 8.0).contains(&ratio) {
            None
        } else {
            Some(format!(
                "sag/span ratio {ratio:.5} lies outside the customary design band \
                 [{:.5}, {:.5}]",
                1.0 / 12.0,
                1.0 / 8.0
            ))
        }
    }
}

/// Rest geometry of one cable, precomputed on the simulation grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct CableGeometry {
    /// Offset-normalized rest profile `ŷ(x) = (4f/L²)x² − (4f/L)x`
    /// (convex, vanishing at both towers, minimum −f at midspan).
    pub rest_profile: GridFunction,
    /// Mean arc-length factor `ξ̄ = L_c/L` (closed form).
    pub xi_bar: f64,
    /// Maximal arc-length factor `ξ_M = √(1 + (4f/L)²)` at the towers.
    pub xi_max: f64,
    /// Rest cable length by the closed-form parabola arc length (m).
    pub L_c: f64,
    /// Rest profile arc length measured on the grid (m); the anchor that
    /// makes the discrete stretch and cable energy vanish exactly at rest.
    pub rest_arclength: f64,
    /// Deck half-width (m), copied from the parameters so constraint
    /// profiles can be formed from the geometry alone.
    pub ell: f64,
}

/// Local slope-to-force transfer `χ(v) = v/√(1 + v²)`; odd, `|χ| < 1`,
/// Lipschitz with constant 1.
pub fn chi(v: f64) -> f64 {
    v / (1.0 + v * v).sqrt()
}

/// Local arc-length density `√(1 + v²)`; Lipschitz with constant 1.
pub fn arc_density(v: f64) -> f64 {
    (1.0 + v * v).sqrt()
}

/// Arc length of a piecewise-linear profile with the given cell slopes.
pub(crate) fn polyline_arclength(slopes: &[f64], dx: f64) -> f64 {
    slopes.iter().map(|&s| dx * arc_density(s)).sum()
}

/// Builds the cable geometry on an `n_cells` grid.
///
/// The closed-form parabola arc length with `u = 4f/L` is
/// `L_c = (L/2)√(1+u²) + (L²/8f)·asinh(u)`, and `ξ̄ = L_c/L`.
pub fn make_geometry(p: &BridgeParams, n_cells: usize) -> Result<CableGeometry> {
    p.validate()?;
    let (l, f) = (p.L, p.f_sag);
    let rest_profile = GridFunction::sample(0.0, l, n_cells, |x| {
        (4.0 * f / (l * l)) * x * x - (4.0 * f / l) * x
    })?;
    let u = 4.0 * f / l;
    let xi_max = (1.0 + u * u).sqrt();
    let l_c = 0.5 * l * xi_max + (l * l / (8.0 * f)) * u.asinh();
    let dx = rest_profile.dx();
    let slopes: Vec<f64> = rest_profile
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]) / dx)
        .collect();
    let rest_arclength = polyline_arclength(&slopes, dx);
    Ok(CableGeometry {
        rest_profile,
        xi_bar: l_c / l,
        xi_max,
        L_c: l_c,
        rest_arclength,
        ell: p.ell,
    })
}

fn check_state_grid(u: &GridFunction, geom: &CableGeometry, what: &str) -> Result<()> {
    let rp = &geom.rest_profile;
    if u.values.len() != rp.values.len() || u.a != rp.a || u.b != rp.b {
        return Err(Error::InvalidParameter(format!(
            "{what} must live on the geometry grid [{}, {}] with {} nodes",
            rp.a,
            rp.b,
            rp.values.len()
        )));
    }
    Ok(())
}

/// Hanger-constraint profile `q = w ± ℓ sin θ + ŷ` for one cable.
///
/// # Errors
///
/// Grid mismatch against the geometry.
pub fn cable_constraint(
    w: &GridFunction,
    theta: &GridFunction,
    geom: &CableGeometry,
    side: CableSide,
) -> Result<GridFunction> {
    check_state_grid(w, geom, "w")?;
    check_state_grid(theta, geom, "theta")?;
    let sgn = side.sign();
    let values = w
        .values
        .iter()
        .zip(theta.values.iter())
        .zip(geom.rest_profile.values.iter())
        .map(|((&wv, &tv), &yv)| wv + sgn * geom.ell * tv.sin() + yv)
        .collect();
    Ok(GridFunction {
        a: w.a,
        b: w.b,
        values,
    })
}

/// Cable stretch `Γ(u)`: arc length of the envelope of `u + ŷ` minus the
/// rest arc length (both measured on the same grid, so `Γ(0) = 0`
/// exactly).
///
/// `u` is the total deck-edge displacement (`w ± ℓ sin θ`), vanishing at
/// the towers.
pub fn gamma_length(u: &GridFunction, geom: &CableGeometry) -> Result<f64> {
    check_state_grid(u, geom, "u")?;
    let profile = GridFunction {
        a: u.a,
        b: u.b,
        values: u
            .values
            .iter()
            .zip(geom.rest_profile.values.iter())
            .map(|(&uv, &yv)| uv + yv)
            .collect(),
    };
    let env = convex_envelope(&profile, &ToleranceConfig::default())?;
    Ok(polyline_arclength(&env.slopes, profile.dx()) - geom.rest_arclength)
}

/// Restoring force density exerted on the deck edge through one cable:
/// `h = −(Hξ̄ + (A·E_c/L_c)·Γ)·χ(envelope slope)`, sampled at the nodes
/// (interior nodes average the two adjacent cells' `χ`, endpoints take the
/// single adjacent cell).
pub fn h_force(
    w: &GridFunction,
    theta: &GridFunction,
    geom: &CableGeometry,
    p: &BridgeParams,
    side: CableSide,
) -> Result<GridFunction> {
    let q = cable_constraint(w, theta, geom, side)?;
    let env = convex_envelope(&q, &ToleranceConfig::default())?;
    let dx = q.dx();
    let gamma = polyline_arclength(&env.slopes, dx) - geom.rest_arclength;
    let coeff = -(p.H * geom.xi_bar + p.A * p.E_c / geom.L_c * gamma);
    let n = q.n_cells();
    let mut values = Vec::with_capacity(n + 1);
    values.push(coeff * chi(env.slopes[0]));
    for i in 1..n {
        values.push(coeff * 0.5 * (chi(env.slopes[i - 1]) + chi(env.slopes[i])));
    }
    values.push(coeff * chi(env.slopes[n - 1]));
    Ok(GridFunction {
        a: q.a,
        b: q.b,
        values,
    })
}

/// Total cable energy of a deck configuration:
/// tension term `Hξ̄·(arc_α + arc_β − 2·rest_arc)` plus elastic stretch
/// `(A·E_c/2L_c)·(Γ_α² + Γ_β²)`. Zero at rest by construction.
pub fn cable_energy(
    w: &GridFunction,
    theta: &GridFunction,
    geom: &CableGeometry,
    p: &BridgeParams,
) -> Result<f64> {
    let dx = geom.rest_profile.dx();
    let mut arcs = 0.0;
    let mut gamma_sq = 0.0;
    for side in [CableSide::Alpha, CableSide::Beta] {
        let q = cable_constraint(w, theta, geom, side)?;
        let env = convex_envelope(&q, &ToleranceConfig::default())?;
        let arc = polyline_arclength(&env.slopes, dx);
        arcs += arc;
        let gamma = arc - geom.rest_arclength;
        gamma_sq += gamma * gamma;
    }
    Ok(p.H * geom.xi_bar * (arcs - 2.0 * geom.rest_arclength)
        + p.A * p.E_c / (2.0 * geom.L_c) * gamma_sq)
}

/// Closed-form integral of the deck displacement `∫w dx` from modal
/// coefficients: `Σ_k w_k·√(2L)·(1 − (−1)^k)/(kπ)`.
pub(crate) fn deck_integral(w_coeffs: &[f64], l: f64) -> f64 {
    let mut acc = 0.0;
    for (idx, &wk) in w_coeffs.iter().enumerate() {
        let k = idx + 1;
        if k % 2 == 1 {
            acc += wk * (2.0 * l).sqrt() * 2.0 / (k as f64 * std::f64::consts::PI);
        }
    }
    acc
}

/// Total mechanical energy of a modal state: kinetic + deck elastic +
/// cable + gravitational (`+Mg∫w`; raising the deck costs energy in this
/// orientation). Modal elastic/kinetic terms use the closed-form basis
/// norms; cable terms use grid quadrature on the geometry grid.
pub fn total_energy(state: &ModalState, geom: &CableGeometry, p: &BridgeParams) -> Result<f64> {
    let l = p.L;
    let mut kinetic = 0.0;
    for &v in &state.w_vel {
        kinetic += 0.5 * p.M * v * v;
    }
    for &v in &state.theta_vel {
        kinetic += p.M * p.ell * p.ell / 6.0 * v * v;
    }
    let mut elastic = 0.0;
    for (idx, &wk) in state.w_coeffs.iter().enumerate() {
        let mu = (idx as f64 + 1.0) * std::f64::consts::PI / l;
        elastic += 0.5 * p.E * p.I * mu.powi(4) * wk * wk;
    }
    for (idx, &tk) in state.theta_coeffs.iter().enumerate() {
        let mu = (idx as f64 + 1.0) * std::f64::consts::PI / l;
        elastic += (0.5 * p.E * p.J * mu.powi(4) + 0.5 * p.G * p.K * mu.powi(2)) * tk * tk;
    }
    let n = geom.rest_profile.n_cells();
    let w = modal_to_grid(&state.w_coeffs, l, n);
    let theta = modal_to_grid(&state.theta_coeffs, l, n);
    let cable = cable_energy(&w, &theta, geom, p)?;
    let gravity = p.M * p.g * deck_integral(&state.w_coeffs, l);
    Ok(kinetic + elastic + cable + gravity)
}

/// Reconstructs a field `Σ_k c_k·e_k(x)` on the geometry grid.
pub(crate) fn modal_to_grid(coeffs: &[f64], l: f64, n_cells: usize) -> GridFunction {
    let mut values = vec![0.0; n_cells + 1];
    for (idx, &ck) in coeffs.iter().enumerate() {
        let k = idx + 1;
        for (j, v) in values.iter_mut().enumerate() {
            *v += ck * mode_shape_rel(k, l, j as f64 / n_cells as f64);
        }
    }
    GridFunction {
        a: 0.0,
        b: l,
        values,
    }
}

/// Slack measure per cable: summed lengths of the envelope's
/// strictly-above chord intervals, divided by the span.
pub fn slackening_fraction(
    env_alpha: &EnvelopeResult,
    env_beta: &EnvelopeResult,
    l: f64,
) -> (f64, f64) {
    let frac = |env: &EnvelopeResult| {
        let dx = env.env.dx();
        let total: f64 = env
            .affine_intervals
            .iter()
            .map(|&(p, q)| (q - p) as f64 * dx)
            .sum();
        total / l
    };
    (frac(env_alpha), frac(env_beta))
}
