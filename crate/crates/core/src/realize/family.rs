//! The arctan equivariant family.
//!
//! For a length `a`, `h_a(u) = (a/π)(π/2 + arctan(a·u))` maps ℝ onto
//! `(0, a)`. Transitions are `φ_J^I = τ_J ∘ h_{|J|} ∘ h_{|I|}⁻¹ ∘ τ_I⁻¹` with
//! `τ` the translations, so `φ_K^J ∘ φ_J^I = φ_K^I` holds identically. In the
//! offset `s ∈ [0, a]`, with `θ = πs/a` and `r = b/a`:
//!
//! ```text
//! φ(s)  = (b/π) · atan2(sin θ, r cos θ)
//! φ'(s) = r² / (sin²θ + r² cos²θ)
//! ```
//!
//! The derivative lies between `1` and `r²`, equals `r²` at the centre and
//! tends to `1` at both ends.

use crate::error::{Error, Result};
use std::f64::consts::PI;

/// Intervals shorter than this are mapped affinely; raw circle coordinates
/// cannot resolve their interior.
pub const TINY_INTERVAL: f64 = 1e-12;

/// Image offset in `[0, b]` of the offset `s ∈ [0, a]`, and whether the
/// affine fallback was used.
pub fn phi_offset(a: f64, b: f64, s: f64) -> (f64, bool) {
    if s <= 0.0 {
        return (0.0, false);
    }
    if s >= a {
        return (b, false);
    }
    if a == b {
        return (s, false);
    }
    if a < TINY_INTERVAL || b < TINY_INTERVAL {
        return ((s / a * b).clamp(0.0, b), true);
    }
    // Reflect so that the evaluation always happens on the left half, where
    // atan2 has full relative precision.
    let (s, flip) = if s > 0.5 * a { (a - s, true) } else { (s, false) };
    let theta = PI * s / a;
    let r = b / a;
    let v = (b / PI) * theta.sin().atan2(r * theta.cos());
    if flip {
        ((b - v).clamp(0.0, b), false)
    } else {
        (v.clamp(0.0, b), false)
    }
}

/// `φ'` at the offset `s ∈ [0, a]`; always the analytic value.
pub fn dphi_offset(a: f64, b: f64, s: f64) -> f64 {
    if a == b {
        return 1.0;
    }
    let s = s.clamp(0.0, a);
    let s = if s > 0.5 * a { a - s } else { s };
    let theta = PI * s / a;
    let r = b / a;
    let (sn, cs) = theta.sin_cos();
    r * r / (sn * sn + r * r * cs * cs)
}

fn check(lo: f64, hi: f64) -> Result<f64> {
    let len = hi - lo;
    if !(len > 0.0) || !len.is_finite() {
        return Err(Error::DegenerateInterval { lo, hi });
    }
    Ok(len)
}

fn offset_in(i: (f64, f64), t: f64) -> Result<f64> {
    let a = check(i.0, i.1)?;
    if !(t >= i.0 && t <= i.1) {
        return Err(Error::OutsideInterval { t, lo: i.0, hi: i.1 });
    }
    Ok((t - i.0).min(a))
}

/// `φ_J^I(t)` for compact intervals `I = [i.0, i.1]`, `J = [j.0, j.1]`.
pub fn phi(i: (f64, f64), j: (f64, f64), t: f64) -> Result<f64> {
    let s = offset_in(i, t)?;
    let b = check(j.0, j.1)?;
    if t == i.1 {
        return Ok(j.1);
    }
    Ok(j.0 + phi_offset(i.1 - i.0, b, s).0)
}

/// `Dφ_J^I(t)`.
pub fn dphi(i: (f64, f64), j: (f64, f64), t: f64) -> Result<f64> {
    let s = offset_in(i, t)?;
    let b = check(j.0, j.1)?;
    Ok(dphi_offset(i.1 - i.0, b, s))
}

/// `(φ_J^I)⁻¹ = φ_I^J`.
pub fn phi_inverse(i: (f64, f64), j: (f64, f64), u: f64) -> Result<f64> {
    phi(j, i, u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_transition() {
        for t in [0.0, 0.1, 0.5, 0.99, 1.0] {
            assert_eq!(phi((0.0, 1.0), (0.0, 1.0), t).unwrap(), t);
            assert_eq!(dphi((0.0, 1.0), (0.0, 1.0), t).unwrap(), 1.0);
        }
    }

    #[test]
    fn doubling_midpoint() {
        assert!((phi((0.0, 1.0), (0.0, 2.0), 0.5).unwrap() - 1.0).abs() < 1e-15);
        assert!((dphi((0.0, 1.0), (0.0, 2.0), 0.5).unwrap() - 4.0).abs() < 1e-12);
        // Finite-difference oracle.
        let h = 1e-6;
        let fd =
            (phi((0.0, 1.0), (0.0, 2.0), 0.5 + h).unwrap() - phi((0.0, 1.0), (0.0, 2.0), 0.5 - h).unwrap()) / (2.0 * h);
        assert!((fd - 4.0).abs() / 4.0 < 1e-5);
    }

    #[test]
    fn closed_form_matches_model_composition() {
        // Independent oracle: h_b ∘ h_a⁻¹ evaluated literally.
        let (a, b) = (0.3, 1.7);
        let h = |len: f64, u: f64| (len / PI) * (PI / 2.0 + (len * u).atan());
        let h_inv = |len: f64, t: f64| (PI * t / len - PI / 2.0).tan() / len;
        for k in 1..20 {
            let s = a * k as f64 / 20.0;
            let direct = h(b, h_inv(a, s));
            assert!((phi_offset(a, b, s).0 - direct).abs() < 1e-12, "s = {s}");
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            phi((0.0, 1.0), (0.0, 2.0), 1.5),
            Err(Error::OutsideInterval { .. })
        ));
        assert!(matches!(
            phi((1.0, 1.0), (0.0, 2.0), 1.0),
            Err(Error::DegenerateInterval { .. })
        ));
    }

    #[test]
    fn inverse_round_trip() {
        let (i, j) = ((0.2, 0.5), (3.0, 7.0));
        for k in 0..=10 {
            let t = 0.2 + 0.03 * k as f64;
            let u = phi(i, j, t).unwrap();
            assert!((phi_inverse(i, j, u).unwrap() - t).abs() < 1e-14);
        }
    }
}
