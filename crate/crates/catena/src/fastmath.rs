//! Branch-light `sin`/`cos` evaluation for the integrator hot loop.
//!
//! Each right-hand-side evaluation needs the sine and cosine of the twist
//! angle at every grid node; at production resolution that is ~10⁹ calls
//! per simulated run, which dominates the runtime if done through libm
//! twice per node. Twist angles are small (well inside ±π/2 except in
//! blown-up runs), so a minimax kernel on |x| ≤ π/4 with one quadrant
//! fold covers the hot path; anything larger falls back to the standard
//! library.

// Canonical minimax coefficient digit strings, kept verbatim even where
// they carry more digits than one f64 ULP.
#![allow(clippy::excessive_precision)]

const S1: f64 = -1.66666666666666324348e-01;
const S2: f64 = 8.33333333332248946124e-03;
const S3: f64 = -1.98412698298579493134e-04;
const S4: f64 = 2.75573137070700676789e-06;
const S5: f64 = -2.50507602534068634195e-08;
const S6: f64 = 1.58969099521155010221e-10;
const C1: f64 = 4.16666666666666019037e-02;
const C2: f64 = -1.38888888888741095749e-03;
const C3: f64 = 2.48015872894767294178e-05;
const C4: f64 = -2.75573143513906633035e-07;
const C5: f64 = 2.08757232129817482790e-09;
const C6: f64 = -1.13596475577881948265e-11;

/// Polynomial kernel for sin on |x| ≤ π/4 (|error| < 1 ulp).
#[inline(always)]
fn kernel_sin(x: f64) -> f64 {
    let z = x * x;
    let r = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    x + (z * x) * (S1 + z * r)
}

/// Polynomial kernel for cos on |x| ≤ π/4 (|error| < 1 ulp).
#[inline(always)]
fn kernel_cos(x: f64) -> f64 {
    let z = x * x;
    let r = z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    w + (((1.0 - w) - hz) + z * r)
}

/// Fused kernel: both polynomials share `x²` and their independent
/// evaluation chains pipeline side by side.
#[inline(always)]
fn kernel_both(x: f64) -> (f64, f64) {
    let z = x * x;
    let rs = S2 + z * (S3 + z * (S4 + z * (S5 + z * S6)));
    let rc = z * (C1 + z * (C2 + z * (C3 + z * (C4 + z * (C5 + z * C6)))));
    let s = x + (z * x) * (S1 + z * rs);
    let hz = 0.5 * z;
    let w = 1.0 - hz;
    let c = w + (((1.0 - w) - hz) + z * rc);
    (s, c)
}

/// Simultaneous `(sin x, cos x)`.
///
/// Exact odd/even symmetry by construction: the kernels see only `x²` and
/// odd powers, so `sincos(-x)` is bitwise `(-s, c)`. This keeps mirrored
/// twist states on exactly mirrored trajectories.
#[inline(always)]
pub(crate) fn sincos(x: f64) -> (f64, f64) {
    let a = x.abs();
    if a <= std::f64::consts::FRAC_PI_4 {
        kernel_both(x)
    } else if a <= std::f64::consts::FRAC_PI_2 {
        // sin(a) = cos(π/2 − a), cos(a) = sin(π/2 − a); restore the sign
        // of the odd component.
        let t = std::f64::consts::FRAC_PI_2 - a;
        let s = kernel_cos(t);
        (if x < 0.0 { -s } else { s }, kernel_sin(t))
    } else {
        (x.sin(), x.cos())
    }
}

#[cfg(test)]
mod tests {
    use super::sincos;

    #[test]
    fn matches_libm_over_the_working_range() {
        let mut x = -3.2;
        while x <= 3.2 {
            let (s, c) = sincos(x);
            assert!(
                (s - x.sin()).abs() <= 4e-16,
                "sin mismatch at {x}: {s} vs {}",
                x.sin()
            );
            assert!(
                (c - x.cos()).abs() <= 4e-16,
                "cos mismatch at {x}: {c} vs {}",
                x.cos()
            );
            x += 1.03e-3;
        }
    }

    #[test]
    fn symmetry_is_bitwise() {
        let mut x = 7.7e-4;
        while x <= 1.6 {
            let (sp, cp) = sincos(x);
            let (sn, cn) = sincos(-x);
            assert_eq!(sn.to_bits(), (-sp).to_bits(), "odd symmetry at {x}");
            assert_eq!(cn.to_bits(), cp.to_bits(), "even symmetry at {x}");
            x += 7.7e-4;
        }
        // At zero the sign bit of the zero is not preserved, but both
        // signed zeros map to the same (value-equal) result, which is all
        // the mirror argument needs.
        assert_eq!(sincos(0.0), sincos(-0.0));
        assert_eq!(sincos(0.0).0, 0.0);
        assert_eq!(sincos(0.0).1, 1.0);
    }

    #[test]
    fn pythagorean_identity_holds_tightly() {
        for i in 0..2000 {
            let x = -1.5 + 1.5e-3 * i as f64;
            let (s, c) = sincos(x);
            assert!((s * s + c * c - 1.0).abs() <= 4e-16, "identity fails at {x}");
        }
    }
}
