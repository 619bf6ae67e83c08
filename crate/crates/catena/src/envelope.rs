//! Convex envelopes of uniformly sampled 1-D functions.
//!
//! The central object is the greatest convex minorant ("lower convex
//! envelope") of a grid function, together with the structure the rest of
//! the crate needs: where the envelope touches the samples (the contact
//! set), the maximal intervals over which it is a straight chord strictly
//! below the samples, and the per-cell slope field. A slope-projection
//! operator is built on top: project the running integral of a function
//! onto convex functions and differentiate back.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerances governing contact detection and convexity slack.
///
/// Both values are relative: they are multiplied by a scale derived from
/// the data (`max(1, ‖f‖_∞)` for contact, the slope magnitude for slope
/// comparisons) before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToleranceConfig {
    /// Relative tolerance for deciding that a sample lies on the envelope.
    pub eps_contact: f64,
    /// Relative slack allowed in discrete-convexity (slope monotonicity)
    /// checks.
    pub eps_slope: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        // Contact must be distinguished from chord sag, which for smooth
        // profiles is O(Δx²·‖f″‖) ≫ 1e-9·scale at the grid sizes used
        // here, while honest round-off stays well below it.
        Self {
            eps_contact: 1e-9,
            eps_slope: 1e-9,
        }
    }
}

impl ToleranceConfig {
    /// Absolute contact tolerance for data with sup-norm `sup_abs`.
    pub fn contact_abs(&self, sup_abs: f64) -> f64 {
        self.eps_contact * sup_abs.abs().max(1.0)
    }
}

/// A real function sampled at `N + 1` uniform abscissae on `[a, b]`.
///
/// Node `i` sits at `x_i = a + i·(b − a)/N`. Invariants (`b > a`, at least
/// three samples, all finite) are established by [`GridFunction::new`] and
/// re-checked by the operations that consume grid functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    /// Left end of the interval.
    pub a: f64,
    /// Right end of the interval (`b > a`).
    pub b: f64,
    /// Samples at the `N + 1` uniform nodes.
    pub values: Vec<f64>,
}

impl GridFunction {
    /// Builds a grid function, validating the type invariants.
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self> {
        let gf = Self { a, b, values };
        gf.validate()?;
        Ok(gf)
    }

    /// Samples `f` at the `n_cells + 1` uniform nodes of `[a, b]`.
    pub fn sample(a: f64, b: f64, n_cells: usize, mut f: impl FnMut(f64) -> f64) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 cells, got {n_cells}"
            )));
        }
        let dx = (b - a) / n_cells as f64;
        let values = (0..=n_cells).map(|i| f(a + i as f64 * dx)).collect();
        Self::new(a, b, values)
    }

    /// Checks the type invariants, returning a descriptive error on failure.
    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.b.is_finite() && self.b > self.a) {
            return Err(Error::InvalidGrid(format!(
                "interval [{}, {}] is not a finite, nondegenerate interval",
                self.a, self.b
            )));
        }
        if self.values.len() < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 samples (2 cells), got {}",
                self.values.len()
            )));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "non-finite sample {} at node {i}",
                self.values[i]
            )));
        }
        Ok(())
    }

    /// Number of cells `N` (one less than the number of nodes).
    pub fn n_cells(&self) -> usize {
        self.values.len() - 1
    }

    /// Uniform cell width `(b − a)/N`.
    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.n_cells() as f64
    }

    /// Abscissa of node `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.a + i as f64 * self.dx()
    }

    /// Sup norm of the samples.
    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Trapezoid-rule integral over `[a, b]`.
    pub fn trapezoid(&self) -> f64 {
        let n = self.n_cells();
        let interior: f64 = self.values[1..n].iter().sum();
        self.dx() * (0.5 * (self.values[0] + self.values[n]) + interior)
    }
}

/// Convex envelope of a grid function together with its contact structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeResult {
    /// The envelope sampled on the same grid as the input.
    pub env: GridFunction,
    /// Per-cell slopes of the envelope (`N` values); constant across every
    /// hull chord by construction.
    pub slopes: Vec<f64>,
    /// Per-node flags, true where the input touches its envelope within
    /// the contact tolerance. Always true at both ends.
    pub contact_mask: Vec<bool>,
    /// Maximal node-index ranges `[p, q]` (spanning at least two cells)
    /// over which the envelope is a single straight chord and the input
    /// lies strictly above it at every interior node.
    pub affine_intervals: Vec<(usize, usize)>,
    /// Node indices of the lower-hull vertices, in increasing order,
    /// always including both endpoints. Collinear interior samples are not
    /// vertices (chords are maximal).
    pub hull_vertices: Vec<usize>,
}

impl EnvelopeResult {
    /// Fraction of nodes that are not in contact with the envelope.
    ///
    /// Zero for convex input; approaches one when the envelope is a single
    /// chord strictly below the samples.
    pub fn non_contact_fraction(&self) -> f64 {
        let free = self.contact_mask.iter().filter(|&&c| !c).count();
        free as f64 / self.contact_mask.len() as f64
    }
}

/// Lower convex hull of `(i, values[i])` by a single monotone-chain pass.
///
/// Returns the vertex indices in increasing order, always including the
/// first and last node. A middle point collinear with its neighbors is
/// popped, so consecutive vertices always delimit maximal chords. The
/// turn test uses integer index differences (exact in f64) instead of
/// abscissa differences, so it is independent of the grid's absolute
/// position and width.
pub(crate) fn lower_hull_indices(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    let mut hull: Vec<usize> = Vec::with_capacity(16);
    for k in 0..n {
        let fk = values[k];
        while hull.len() >= 2 {
            let j = hull[hull.len() - 1];
            let i = hull[hull.len() - 2];
            // Pop j when it lies on or above the chord i—k:
            // (f_j − f_i)/(j − i) ≥ (f_k − f_i)/(k − i), cross-multiplied.
            let lhs = (values[j] - values[i]) * (k - i) as f64;
            let rhs = (fk - values[i]) * (j - i) as f64;
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

/// Greatest convex minorant of a sampled function.
///
/// Computes the lower convex hull of the sample points in a single O(N)
/// monotone-chain pass, interpolates it back onto the grid, and extracts
/// the contact mask and the maximal strictly-above-chord intervals.
///
/// # Errors
///
/// Rejects malformed grids (fewer than two cells, non-finite samples,
/// degenerate interval).
pub fn convex_envelope(f: &GridFunction, tol: &ToleranceConfig) -> Result<EnvelopeResult> {
    f.validate()?;
    let n = f.n_cells();
    let dx = f.dx();
    let hull = lower_hull_indices(&f.values);

    let mut env = vec![0.0; n + 1];
    let mut slopes = vec![0.0; n];
    for pair in hull.windows(2) {
        let (v, u) = (pair[0], pair[1]);
        let fv = f.values[v];
        let fu = f.values[u];
        let span = (u - v) as f64;
        let slope = (fu - fv) / (span * dx);
        env[v] = fv;
        #[allow(clippy::needless_range_loop)] // index enters the arithmetic
        for i in (v + 1)..u {
            // Affine combination with exact integer ratio, so vertices are
            // reproduced exactly and interior error is one rounding step.
            env[i] = fv + ((i - v) as f64 / span) * (fu - fv);
        }
        for s in &mut slopes[v..u] {
            *s = slope;
        }
    }
    env[n] = f.values[n];

    let eps = tol.contact_abs(f.sup_abs());
    let contact_mask: Vec<bool> = f
        .values
        .iter()
        .zip(env.iter())
        .map(|(&fv, &ev)| (fv - ev).abs() <= eps)
        .collect();

    let mut affine_intervals = Vec::new();
    for pair in hull.windows(2) {
        let (v, u) = (pair[0], pair[1]);
        if u - v < 2 {
            continue;
        }
        // Within one chord, maximal runs of non-contact interior nodes
        // become intervals delimited by the nearest touching node on each
        // side (a vertex or an interior contact node).
        let mut run_start: Option<usize> = None;
        #[allow(clippy::needless_range_loop)] // boundary case keyed on the index
        for i in (v + 1)..=u {
            let interior_free = i < u && !contact_mask[i];
            match (interior_free, run_start) {
                (true, None) => run_start = Some(i),
                (false, Some(s)) => {
                    affine_intervals.push((s - 1, i));
                    run_start = None;
                }
                _ => {}
            }
        }
    }

    Ok(EnvelopeResult {
        env: GridFunction {
            a: f.a,
            b: f.b,
            values: env,
        },
        slopes,
        contact_mask,
        affine_intervals,
        hull_vertices: hull,
    })
}

/// Projection of `f` onto slope fields of convex functions.
///
/// Integrates `f` with the trapezoid rule, takes the convex envelope of
/// the running integral, and returns its slope field as a grid function:
/// interior nodes carry the mean of the two adjacent cell slopes, the
/// endpoints carry the single adjacent cell slope. With this assignment
/// the trapezoid integral of the result equals the trapezoid integral of
/// `f` up to round-off (the cell sums telescope to the integral's
/// endpoint values, which are always hull vertices).
///
/// # Errors
///
/// Rejects malformed grids, as [`convex_envelope`].
pub fn operator_t(f: &GridFunction, tol: &ToleranceConfig) -> Result<GridFunction> {
    f.validate()?;
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
    let s = &env.slopes;
    let mut out = Vec::with_capacity(n + 1);
    out.push(s[0]);
    for i in 1..n {
        out.push(0.5 * (s[i - 1] + s[i]));
    }
    out.push(s[n - 1]);
    Ok(GridFunction {
        a: f.a,
        b: f.b,
        values: out,
    })
}

/// Tests whether every multi-cell chord of the envelope stays strictly
/// below the input at all interior nodes.
///
/// This is the discrete form of the condition under which the envelope-
/// composed energy terms admit two-sided (Gateaux) derivatives: no chord
/// may contain interior contact. Chords are taken from the hull vertex
/// list, so interior collinear samples (which are contact but not
/// vertices) are detected and make the check fail.
pub fn check_noflat(f: &GridFunction, env: &EnvelopeResult) -> bool {
    debug_assert_eq!(f.values.len(), env.contact_mask.len());
    for pair in env.hull_vertices.windows(2) {
        let (v, u) = (pair[0], pair[1]);
        if u - v < 2 {
            continue;
        }
        if env.contact_mask[(v + 1)..u].iter().any(|&c| c) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use crate::validation::envelope_oracle;

    use super::*;

    fn tol() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn grid_function_rejects_bad_inputs() {
        assert!(GridFunction::new(0.0, 1.0, vec![0.0, 1.0]).is_err(), "one cell");
        assert!(GridFunction::new(1.0, 1.0, vec![0.0; 5]).is_err(), "empty interval");
        assert!(GridFunction::new(1.0, 0.0, vec![0.0; 5]).is_err(), "reversed interval");
        assert!(
            GridFunction::new(0.0, 1.0, vec![0.0, f64::NAN, 0.0]).is_err(),
            "non-finite sample"
        );
        assert!(GridFunction::new(0.0, 1.0, vec![0.0, 1.0, 4.0]).is_ok());
    }

    #[test]
    fn convex_input_is_a_fixed_point() {
        let f = GridFunction::sample(-1.0, 1.0, 64, |x| x * x).unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        for i in 0..=64 {
            assert!(
                (r.env.values[i] - f.values[i]).abs() <= 1e-15,
                "node {i}: envelope {} differs from convex input {}",
                r.env.values[i],
                f.values[i]
            );
        }
        assert!(r.contact_mask.iter().all(|&c| c), "all nodes touch");
        assert!(r.affine_intervals.is_empty(), "no multi-cell chords");
        assert_eq!(r.hull_vertices.len(), 65, "every node is a vertex");
    }

    #[test]
    fn concave_input_collapses_to_the_chord() {
        let f = GridFunction::sample(0.0, 1.0, 50, |x| -x * (x - 1.0)).unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        for (i, &e) in r.env.values.iter().enumerate() {
            assert!(
                e.abs() <= 1e-15,
                "node {i}: chord of equal endpoints should be 0, got {e}"
            );
        }
        assert_eq!(r.hull_vertices, vec![0, 50]);
        assert_eq!(r.affine_intervals, vec![(0, 50)]);
        assert!(r.contact_mask[0] && r.contact_mask[50]);
        assert_eq!(
            r.contact_mask.iter().filter(|&&c| c).count(),
            2,
            "only the endpoints touch"
        );
    }

    #[test]
    fn double_well_bridges_the_middle() {
        let f = GridFunction::sample(-2.0, 2.0, 256, |x| (x * x - 1.0).powi(2)).unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        // Envelope is zero across [−1, 1] (nodes 64..=192) and follows the
        // wells outside.
        for i in 64..=192 {
            assert!(
                r.env.values[i].abs() <= 1e-12,
                "node {i}: expected flat zero chord, got {}",
                r.env.values[i]
            );
        }
        assert_eq!(
            r.affine_intervals,
            vec![(64, 192)],
            "single strictly-above chord between the wells"
        );
        assert!(check_noflat(&f, &r), "wells touch only at the chord ends");
    }

    #[test]
    fn matches_brute_force_oracle_on_rough_profiles() {
        for (case, freq) in [(1usize, 7.0), (2, 13.0), (3, 31.0)] {
            let f = GridFunction::sample(0.0, 3.0, 256, |x| {
                (freq * x).sin() + 0.3 * (0.7 * freq * x + 1.0).cos() + 0.1 * x
            })
            .unwrap();
            let r = convex_envelope(&f, &tol()).unwrap();
            let oracle = envelope_oracle(&f.values);
            for (i, (hull, want)) in r.env.values.iter().zip(&oracle).enumerate() {
                assert!(
                    (hull - want).abs() <= 1e-12,
                    "case {case}, node {i}: hull {hull} vs oracle {want}"
                );
            }
        }
    }

    #[test]
    fn envelope_is_idempotent_and_has_monotone_slopes() {
        let f = GridFunction::sample(0.0, 1.0, 200, |x| (17.0 * x).sin() * (1.0 - x) + x * x)
            .unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        let r2 = convex_envelope(&r.env, &tol()).unwrap();
        // Chord interpolation rounds each interior node once, so a node can
        // land one ulp below its chord and become a spurious vertex on the
        // second pass: idempotence holds to one rounding step per node, not
        // bit-for-bit.
        for (i, (&e2, &e)) in r2.env.values.iter().zip(r.env.values.iter()).enumerate() {
            assert!(
                (e2 - e).abs() <= 1e-14,
                "node {i}: envelope not idempotent ({e2} vs {e})"
            );
        }
        for w in r.slopes.windows(2) {
            assert!(
                w[1] >= w[0] - 1e-12,
                "slopes must be nondecreasing: {} then {}",
                w[0],
                w[1]
            );
        }
    }

    #[test]
    fn collinear_middles_are_contact_but_not_vertices() {
        // Piecewise function equal to its envelope on an affine stretch:
        // hull keeps only the stretch's ends as vertices, so the no-flat
        // check must fail even though the samples touch the envelope.
        let f = GridFunction::new(0.0, 4.0, vec![2.0, 1.0, 1.0, 1.0, 2.0]).unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        assert_eq!(r.hull_vertices, vec![0, 1, 3, 4]);
        assert!(r.contact_mask.iter().all(|&c| c));
        assert!(r.affine_intervals.is_empty(), "no strictly-above chords");
        assert!(!check_noflat(&f, &r), "flat contact chord must fail");
    }

    #[test]
    fn chord_with_interior_contact_splits_affine_intervals() {
        // A wide concave arch whose midpoint is pulled down onto the chord:
        // the hull spans 0..8 in one chord, the touching midpoint splits
        // the strictly-above region into two intervals.
        let mut values: Vec<f64> = (0..=8)
            .map(|i| {
                let x = i as f64 / 8.0;
                4.0 * x * (1.0 - x)
            })
            .collect();
        values[4] = 0.0;
        let f = GridFunction::new(0.0, 1.0, values).unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        assert_eq!(r.hull_vertices, vec![0, 8], "midpoint is not a vertex");
        assert_eq!(r.affine_intervals, vec![(0, 4), (4, 8)]);
        assert!(!check_noflat(&f, &r), "interior contact violates no-flat");
    }

    #[test]
    fn strictly_convex_input_passes_noflat_vacuously() {
        let f = GridFunction::sample(0.0, 1.0, 32, |x| (x - 0.3).powi(2)).unwrap();
        let r = convex_envelope(&f, &tol()).unwrap();
        assert!(check_noflat(&f, &r));
    }

    #[test]
    fn operator_t_fixes_constants() {
        let f = GridFunction::sample(0.0, 2.0, 40, |_| 3.25).unwrap();
        let t = operator_t(&f, &tol()).unwrap();
        for (i, &v) in t.values.iter().enumerate() {
            assert!(
                (v - 3.25).abs() <= 1e-12,
                "node {i}: T of a constant should be the constant, got {v}"
            );
        }
    }

    #[test]
    fn operator_t_annihilates_a_full_sine_period() {
        // The running integral of sin on [0, 2π] is 1 − cos ≥ 0 with zero
        // endpoint values, so its envelope is identically zero.
        let f = GridFunction::sample(0.0, 2.0 * std::f64::consts::PI, 128, f64::sin).unwrap();
        let t = operator_t(&f, &tol()).unwrap();
        for (i, &v) in t.values.iter().enumerate() {
            assert!(v.abs() <= 1e-12, "node {i}: expected 0, got {v}");
        }
    }

    #[test]
    fn operator_t_preserves_the_integral() {
        let f = GridFunction::sample(-1.0, 2.5, 257, |x| {
            (5.0 * x).sin() + 0.25 * x * x - 0.4 * (11.0 * x).cos()
        })
        .unwrap();
        let t = operator_t(&f, &tol()).unwrap();
        let lhs = t.trapezoid();
        let rhs = f.trapezoid();
        assert!(
            (lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0),
            "∫Tf = {lhs} differs from ∫f = {rhs}"
        );
    }
}
