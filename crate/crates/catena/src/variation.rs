//! One-sided variation fields of envelope-composed functionals.
//!
//! Perturbing a function changes its convex envelope only through the
//! envelope's contact structure: on contact stretches the envelope follows
//! the perturbation, while across a chord it can only respond through the
//! chord's endpoints. The fields built here encode that response. When no
//! chord touches the input in its interior (the "no-flat" condition) the
//! response is linear and two-sided; otherwise the left and right
//! responses differ and are built from one-sided hulls of the seed data
//! restricted to the contact nodes.

use crate::envelope::{convex_envelope, EnvelopeResult, GridFunction, ToleranceConfig};
use crate::{Error, Result};

/// Lower convex hull of `(nodes[i], vals[i])` for strictly increasing,
/// not necessarily equispaced node indices. Returns positions into the
/// input list; collinear middles are popped so chords are maximal.
fn lower_hull_sparse(nodes: &[usize], vals: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(8);
    for k in 0..nodes.len() {
        while hull.len() >= 2 {
            let j = hull[hull.len() - 1];
            let i = hull[hull.len() - 2];
            // Pop j when it lies on or above the chord i—k, using true node
            // separations as abscissae.
            let lhs = (vals[j] - vals[i]) * (nodes[k] - nodes[i]) as f64;
            let rhs = (vals[k] - vals[i]) * (nodes[j] - nodes[i]) as f64;
            if lhs >= rhs {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    hull
}

/// Which variation operator produced a field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VariationKind {
    /// Two-sided field of the plain envelope functional.
    J,
    /// Right-sided field (response to positive perturbation amplitudes).
    JPlus,
    /// Left-sided field (response to negative perturbation amplitudes).
    JMinus,
    /// Two-sided field of a composed functional (seed `φ·Λ′∘u`).
    G,
    /// Right-sided composed field (seed `ψ·cos θ`).
    GPlus,
    /// Left-sided composed field (seed `ψ·cos θ`).
    GMinus,
}

/// A variation field: node values plus the per-cell derivative.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationField {
    /// Field values on the same grid as the perturbed function.
    pub values: GridFunction,
    /// Per-cell derivative; constant across every interpolated stretch.
    pub deriv: Vec<f64>,
    /// Operator that produced this field.
    pub kind: VariationKind,
}

fn require_vanishing_ends(phi: &GridFunction, what: &str) -> Result<()> {
    let eps = 1e-12 * phi.sup_abs().max(1.0);
    let n = phi.n_cells();
    if phi.values[0].abs() > eps || phi.values[n].abs() > eps {
        return Err(Error::InvalidParameter(format!(
            "{what} must vanish at both interval ends, got {} and {}",
            phi.values[0], phi.values[n]
        )));
    }
    Ok(())
}

fn same_grid(a: &GridFunction, b: &GridFunction) -> Result<()> {
    if a.values.len() != b.values.len() || a.a != b.a || a.b != b.b {
        return Err(Error::InvalidParameter(format!(
            "grid mismatch: [{}, {}] with {} nodes vs [{}, {}] with {} nodes",
            a.a,
            a.b,
            a.values.len(),
            b.a,
            b.b,
            b.values.len()
        )));
    }
    Ok(())
}

/// Fills `out[p+1..q]` with the affine interpolation of `(p, vp)`–`(q, vq)`
/// and returns the chord slope, writing it into `deriv[p..q]`.
fn fill_chord(out: &mut [f64], deriv: &mut [f64], dx: f64, p: usize, q: usize, vp: f64, vq: f64) {
    let span = (q - p) as f64;
    #[allow(clippy::needless_range_loop)] // index enters the arithmetic
    for i in (p + 1)..q {
        out[i] = vp + ((i - p) as f64 / span) * (vq - vp);
    }
    let slope = (vq - vp) / (span * dx);
    for d in &mut deriv[p..q] {
        *d = slope;
    }
}

/// Shared core of the two-sided fields: seed values survive on the contact
/// set, affine interpolation of the seed's endpoint values replaces them
/// across every strictly-above chord.
fn interpolated_field(
    seed: &GridFunction,
    env: &EnvelopeResult,
    kind: VariationKind,
) -> VariationField {
    let dx = seed.dx();
    let mut values = seed.values.clone();
    let mut deriv: Vec<f64> = seed
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]) / dx)
        .collect();
    for &(p, q) in &env.affine_intervals {
        let (vp, vq) = (seed.values[p], seed.values[q]);
        fill_chord(&mut values, &mut deriv, dx, p, q, vp, vq);
    }
    VariationField {
        values: GridFunction {
            a: seed.a,
            b: seed.b,
            values,
        },
        deriv,
        kind,
    }
}

/// Shared core of the one-sided fields.
///
/// Within each multi-cell chord of the envelope, the seed is restricted to
/// the touching nodes (chord ends are always touching); the field is the
/// lower hull of that restriction for the right-sided variant and the
/// upper hull for the left-sided one, interpolated back onto every node of
/// the chord. Outside the chords the seed survives unchanged.
fn one_sided_field(
    seed: &GridFunction,
    env: &EnvelopeResult,
    positive: bool,
    kind: VariationKind,
) -> VariationField {
    let dx = seed.dx();
    let mut values = seed.values.clone();
    let mut deriv: Vec<f64> = seed
        .values
        .windows(2)
        .map(|w| (w[1] - w[0]) / dx)
        .collect();
    let mut nodes: Vec<usize> = Vec::new();
    let mut restricted: Vec<f64> = Vec::new();
    for pair in env.hull_vertices.windows(2) {
        let (v, u) = (pair[0], pair[1]);
        if u - v < 2 {
            continue;
        }
        nodes.clear();
        restricted.clear();
        for i in v..=u {
            if env.contact_mask[i] {
                nodes.push(i);
                // The upper hull of the seed is the negated lower hull of
                // the negated seed.
                restricted.push(if positive {
                    seed.values[i]
                } else {
                    -seed.values[i]
                });
            }
        }
        let hull = lower_hull_sparse(&nodes, &restricted);
        for seg in hull.windows(2) {
            let (p, q) = (nodes[seg[0]], nodes[seg[1]]);
            let (vp, vq) = if positive {
                (restricted[seg[0]], restricted[seg[1]])
            } else {
                (-restricted[seg[0]], -restricted[seg[1]])
            };
            values[p] = vp;
            values[q] = vq;
            fill_chord(&mut values, &mut deriv, dx, p, q, vp, vq);
        }
    }
    VariationField {
        values: GridFunction {
            a: seed.a,
            b: seed.b,
            values,
        },
        deriv,
        kind,
    }
}

/// Two-sided variation field of `∫(f + s·φ)**` at `s = 0`.
///
/// Requires the no-flat condition: every multi-cell chord of `f`'s
/// envelope must stay strictly below `f` in its interior, which is exactly
/// when the left and right responses coincide. `phi` must vanish at both
/// ends.
///
/// # Errors
///
/// [`Error::FlatChord`] when the condition fails (use [`j_phi_pm`] then),
/// [`Error::InvalidParameter`] on grid mismatch or non-vanishing `phi`.
pub fn j_phi(f: &GridFunction, phi: &GridFunction, env: &EnvelopeResult) -> Result<VariationField> {
    same_grid(f, phi)?;
    require_vanishing_ends(phi, "phi")?;
    ensure_noflat(f, env, "two-sided variation field")?;
    Ok(interpolated_field(phi, env, VariationKind::J))
}

fn ensure_noflat(f: &GridFunction, env: &EnvelopeResult, context: &str) -> Result<()> {
    if crate::envelope::check_noflat(f, env) {
        return Ok(());
    }
    // Locate one offending chord for the error message.
    for pair in env.hull_vertices.windows(2) {
        let (v, u) = (pair[0], pair[1]);
        if u - v >= 2 && env.contact_mask[(v + 1)..u].iter().any(|&c| c) {
            return Err(Error::FlatChord {
                start: v,
                end: u,
                context: context.to_string(),
            });
        }
    }
    unreachable!("check_noflat failed but no offending chord found");
}

/// One-sided variation fields of `∫(f + s·φ)**` as `s → 0^±`.
///
/// Works for any input; on chords that touch `f` in their interior the two
/// signs genuinely differ.
pub fn j_phi_pm(
    f: &GridFunction,
    phi: &GridFunction,
    env: &EnvelopeResult,
    positive: bool,
) -> Result<VariationField> {
    same_grid(f, phi)?;
    require_vanishing_ends(phi, "phi")?;
    let kind = if positive {
        VariationKind::JPlus
    } else {
        VariationKind::JMinus
    };
    Ok(one_sided_field(phi, env, positive, kind))
}

/// Two-sided variation field of `∫(Λ∘(u + s·φ))**`-type functionals.
///
/// The seed is `φ·(Λ′∘u)`; `env_of_f` must be the envelope of `Λ∘u` and
/// satisfy the no-flat condition.
///
/// # Errors
///
/// As [`j_phi`].
pub fn g_u_phi(
    u: &GridFunction,
    phi: &GridFunction,
    lambda_prime: impl Fn(f64) -> f64,
    env_of_f: &EnvelopeResult,
) -> Result<VariationField> {
    same_grid(u, phi)?;
    require_vanishing_ends(phi, "phi")?;
    ensure_noflat(u, env_of_f, "two-sided composed variation field")?;
    let seed = GridFunction {
        a: u.a,
        b: u.b,
        values: phi
            .values
            .iter()
            .zip(u.values.iter())
            .map(|(&p, &uv)| p * lambda_prime(uv))
            .collect(),
    };
    Ok(interpolated_field(&seed, env_of_f, VariationKind::G))
}

/// One-sided variation fields for the torsional coupling (seed `ψ·cos θ`).
///
/// `env` must be the envelope of the profile in which `θ` enters through
/// `ℓ·sin θ` (so the seed weight is the derivative `cos θ`).
pub fn g_theta_psi_pm(
    theta: &GridFunction,
    psi: &GridFunction,
    env: &EnvelopeResult,
    positive: bool,
) -> Result<VariationField> {
    same_grid(theta, psi)?;
    require_vanishing_ends(psi, "psi")?;
    let seed = GridFunction {
        a: theta.a,
        b: theta.b,
        values: psi
            .values
            .iter()
            .zip(theta.values.iter())
            .map(|(&p, &t)| p * t.cos())
            .collect(),
    };
    let kind = if positive {
        VariationKind::GPlus
    } else {
        VariationKind::GMinus
    };
    Ok(one_sided_field(&seed, env, positive, kind))
}

/// Difference quotients `[∫(f + s·φ)** − ∫f**]/s` for each requested `s`.
///
/// Probes the directional derivatives of the envelope functional; as
/// `s → 0^±` the quotients approach the integrals of the corresponding
/// one-sided fields.
pub fn directional_quotient(f: &GridFunction, phi: &GridFunction, s_values: &[f64]) -> Result<Vec<f64>> {
    same_grid(f, phi)?;
    let tol = ToleranceConfig::default();
    let base = convex_envelope(f, &tol)?.env.trapezoid();
    s_values
        .iter()
        .map(|&s| {
            if s == 0.0 {
                return Err(Error::InvalidParameter(
                    "difference quotient needs s ≠ 0".into(),
                ));
            }
            let perturbed = GridFunction {
                a: f.a,
                b: f.b,
                values: f
                    .values
                    .iter()
                    .zip(phi.values.iter())
                    .map(|(&fv, &pv)| fv + s * pv)
                    .collect(),
            };
            let env = convex_envelope(&perturbed, &tol)?;
            Ok((env.env.trapezoid() - base) / s)
        })
        .collect()
}

/// Exact cell-wise residual of the slope-projection reduction identity.
///
/// For `F` the running integral of `f`, the projection `T f` is constant
/// across every chord of `F`'s envelope, and the variation field of `F`
/// agrees with `φ` at chord ends, so
/// `Σ_cells (Tf)_cell·Δ(𝒥^φ) − Σ_cells (Tf)_cell·Δφ` telescopes to zero.
/// Returns the absolute value of that difference as computed, which should
/// be at round-off level for any input.
pub fn reduction_residual(f: &GridFunction, phi: &GridFunction, tol: &ToleranceConfig) -> Result<f64> {
    same_grid(f, phi)?;
    require_vanishing_ends(phi, "phi")?;
    let n = f.n_cells();
    let dx = f.dx();
    let mut big_f = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    big_f.push(0.0);
    for i in 0..n {
        acc += 0.5 * dx * (f.values[i] + f.values[i + 1]);
        big_f.push(acc);
    }
    let big_f = GridFunction {
        a: f.a,
        b: f.b,
        values: big_f,
    };
    let env = convex_envelope(&big_f, tol)?;
    let field = one_sided_field(phi, &env, true, VariationKind::JPlus);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for i in 0..n {
        let s = env.slopes[i];
        lhs += s * (field.values.values[i + 1] - field.values.values[i]);
        rhs += s * (phi.values[i + 1] - phi.values[i]);
    }
    Ok((lhs - rhs).abs())
}

/// Root of the tangency condition in the reference one-sided example.
///
/// The example perturbs an affine profile on `[−2, 2]` by the bump
/// `φ(x) = exp(1/(x²−1))` (extended by zero outside `(−1, 1)`). The upper
/// hull of the bump leaves `φ` at the point `ζ ∈ (0, 1)` where the chord
/// to the right interval end becomes tangent: `φ′(ζ) = φ(ζ)/(ζ − 2)`.
/// Solved by bisection to an interval of width 1e-10.
pub fn example_2_3_zeta() -> f64 {
    // Tangency residual, multiplied through by (ζ − 2) < 0 to avoid the
    // division: r(ζ) = φ′(ζ)·(ζ − 2) − φ(ζ), with the same sign change as
    // the rational form on (0, 1).
    let r = |z: f64| example_2_3_phi_prime(z) * (z - 2.0) - example_2_3_phi(z);
    let (mut lo, mut hi) = (0.01_f64, 0.9_f64);
    debug_assert!(r(lo) < 0.0 && r(hi) > 0.0, "bisection bracket must straddle");
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if r(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The reference example's bump function, zero outside `(−1, 1)`.
pub fn example_2_3_phi(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

/// Derivative of [`example_2_3_phi`] (zero outside `(−1, 1)`).
pub fn example_2_3_phi_prime(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let d = x * x - 1.0;
        example_2_3_phi(x) * (-2.0 * x) / (d * d)
    } else {
        0.0
    }
}
