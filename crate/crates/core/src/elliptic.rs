//! Carlson symmetric elliptic integrals and the Legendre incomplete forms
//! built on them.
//!
//! Everything here uses the *parameter* convention `m = k^2`:
//!
//! ```text
//! F(phi | m)     = ∫_0^phi dθ / sqrt(1 - m sin²θ)
//! Π(n; phi | m)  = ∫_0^phi dθ / ((1 - n sin²θ) sqrt(1 - m sin²θ))
//! ```
//!
//! Passing a modulus `k` where `m` is expected is the classic bug with these
//! functions; every caller in this crate passes `m`.
//!
//! The duplication loops follow Carlson's algorithms with the usual
//! fifth/seventh order series; iteration stops once the relative spread of
//! the arguments is small enough for the truncated series to be exact to
//! double precision.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 64;

const RF_SPREAD: f64 = 0.0025;
const RC_SPREAD: f64 = 0.0012;
const RJ_SPREAD: f64 = 0.0015;

/// Slack allowed on the amplitude range to absorb rounding in callers.
const AMPLITUDE_SLACK: f64 = 1e-12;

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "{name} must be finite and non-negative, got {v}"
        )))
    }
}

fn check_xyz(x: f64, y: f64, z: f64) -> Result<()> {
    check_nonneg("x", x)?;
    check_nonneg("y", y)?;
    check_nonneg("z", z)?;
    let zeros = [x, y, z].iter().filter(|v| **v == 0.0).count();
    if zeros > 1 {
        return Err(Error::Domain("at most one of x, y, z may be zero".into()));
    }
    Ok(())
}

/// `RF(x, y, z) = ½ ∫_0^∞ dt / sqrt((t+x)(t+y)(t+z))`.
pub fn carlson_rf(x: f64, y: f64, z: f64) -> Result<f64> {
    check_xyz(x, y, z)?;
    rf_unchecked(x, y, z)
}

fn rf_unchecked(mut x: f64, mut y: f64, mut z: f64) -> Result<f64> {
    const C1: f64 = 1.0 / 24.0;
    const C2: f64 = 0.1;
    const C3: f64 = 3.0 / 44.0;
    const C4: f64 = 1.0 / 14.0;

    for _ in 0..MAX_ITERATIONS {
        let (sx, sy, sz) = (x.sqrt(), y.sqrt(), z.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        x = 0.25 * (x + lambda);
        y = 0.25 * (y + lambda);
        z = 0.25 * (z + lambda);
        let ave = (x + y + z) / 3.0;
        let dx = (ave - x) / ave;
        let dy = (ave - y) / ave;
        let dz = (ave - z) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()) <= RF_SPREAD {
            let e2 = dx * dy - dz * dz;
            let e3 = dx * dy * dz;
            return Ok((1.0 + (C1 * e2 - C2 - C3 * e3) * e2 + C4 * e3) / ave.sqrt());
        }
    }
    Err(Error::EllipticNoConvergence)
}

/// `RC(x, y) = RF(x, y, y)`; for `y < 0` the Cauchy principal value.
pub fn carlson_rc(x: f64, y: f64) -> Result<f64> {
    check_nonneg("x", x)?;
    if !(y.is_finite() && y != 0.0) {
        return Err(Error::Domain(format!(
            "y must be finite and non-zero, got {y}"
        )));
    }
    rc_unchecked(x, y)
}

fn rc_unchecked(x: f64, y: f64) -> Result<f64> {
    const C1: f64 = 0.3;
    const C2: f64 = 1.0 / 7.0;
    const C3: f64 = 0.375;
    const C4: f64 = 9.0 / 22.0;

    let (mut xt, mut yt, w) = if y > 0.0 {
        (x, y, 1.0)
    } else {
        (x - y, -y, x.sqrt() / (x - y).sqrt())
    };
    for _ in 0..MAX_ITERATIONS {
        let lambda = 2.0 * xt.sqrt() * yt.sqrt() + yt;
        xt = 0.25 * (xt + lambda);
        yt = 0.25 * (yt + lambda);
        let ave = (xt + yt + yt) / 3.0;
        let s = (yt - ave) / ave;
        if s.abs() <= RC_SPREAD {
            return Ok(w * (1.0 + s * s * (C1 + s * (C2 + s * (C3 + s * C4)))) / ave.sqrt());
        }
    }
    Err(Error::EllipticNoConvergence)
}

/// `RJ(x, y, z, p) = 3/2 ∫_0^∞ dt / ((t+p) sqrt((t+x)(t+y)(t+z)))`.
///
/// Negative `p` yields the Cauchy principal value.
pub fn carlson_rj(x: f64, y: f64, z: f64, p: f64) -> Result<f64> {
    check_xyz(x, y, z)?;
    if !(p.is_finite() && p != 0.0) {
        return Err(Error::Domain(format!(
            "p must be finite and non-zero, got {p}"
        )));
    }
    rj_unchecked(x, y, z, p)
}

fn rj_unchecked(x: f64, y: f64, z: f64, p: f64) -> Result<f64> {
    const C1: f64 = 3.0 / 14.0;
    const C2: f64 = 1.0 / 3.0;
    const C3: f64 = 3.0 / 22.0;
    const C4: f64 = 3.0 / 26.0;
    const C5: f64 = 0.75 * C3;
    const C6: f64 = 1.5 * C4;
    const C7: f64 = 0.5 * C2;
    const C8: f64 = C3 + C3;

    // Negative p: transform to a positive-p integral plus RC/RF terms.
    let (mut xt, mut yt, mut zt, mut pt, pv) = if p > 0.0 {
        (x, y, z, p, None)
    } else {
        let lo = x.min(y).min(z);
        let hi = x.max(y).max(z);
        let mid = x + y + z - lo - hi;
        let a = 1.0 / (mid - p);
        let b = a * (hi - mid) * (mid - lo);
        let pt = mid + b;
        let rho = lo * hi / mid;
        let tau = p * pt / mid;
        let rcx = rc_unchecked(rho, tau)?;
        (lo, mid, hi, pt, Some((a, b, rcx)))
    };
    let (x0, y0, z0) = (xt, yt, zt);

    let mut sum = 0.0;
    let mut fac = 1.0;
    for _ in 0..MAX_ITERATIONS {
        let (sx, sy, sz) = (xt.sqrt(), yt.sqrt(), zt.sqrt());
        let lambda = sx * (sy + sz) + sy * sz;
        let alpha = pt * (sx + sy + sz) + sx * sy * sz;
        let alpha = alpha * alpha;
        let beta = pt * (pt + lambda) * (pt + lambda);
        sum += fac * rc_unchecked(alpha, beta)?;
        fac *= 0.25;
        xt = 0.25 * (xt + lambda);
        yt = 0.25 * (yt + lambda);
        zt = 0.25 * (zt + lambda);
        pt = 0.25 * (pt + lambda);
        let ave = 0.2 * (xt + yt + zt + pt + pt);
        let dx = (ave - xt) / ave;
        let dy = (ave - yt) / ave;
        let dz = (ave - zt) / ave;
        let dp = (ave - pt) / ave;
        if dx.abs().max(dy.abs()).max(dz.abs()).max(dp.abs()) <= RJ_SPREAD {
            let ea = dx * (dy + dz) + dy * dz;
            let eb = dx * dy * dz;
            let ec = dp * dp;
            let ed = ea - 3.0 * ec;
            let ee = eb + 2.0 * dp * (ea - ec);
            let series = 1.0
                + ed * (-C1 + C5 * ed - C6 * ee)
                + eb * (C7 + dp * (-C8 + dp * C4))
                + dp * ea * (C2 - dp * C3)
                - C2 * dp * ec;
            let ans = 3.0 * sum + fac * series / (ave * ave.sqrt());
            return Ok(match pv {
                None => ans,
                Some((a, b, rcx)) => a * (b * ans + 3.0 * (rcx - rf_unchecked(x0, y0, z0)?)),
            });
        }
    }
    Err(Error::EllipticNoConvergence)
}

fn check_amplitude(phi: f64) -> Result<f64> {
    if (-AMPLITUDE_SLACK..=FRAC_PI_2 + AMPLITUDE_SLACK).contains(&phi) {
        Ok(phi.clamp(0.0, FRAC_PI_2))
    } else {
        Err(Error::Domain(format!("amplitude {phi} outside [0, pi/2]")))
    }
}

fn check_parameter(m: f64) -> Result<()> {
    if (0.0..1.0).contains(&m) {
        Ok(())
    } else {
        Err(Error::Domain(format!("parameter m = {m} outside [0, 1)")))
    }
}

/// Incomplete elliptic integral of the first kind, `F(phi | m)`.
pub fn legendre_f(phi: f64, m: f64) -> Result<f64> {
    let phi = check_amplitude(phi)?;
    check_parameter(m)?;
    if phi == 0.0 {
        return Ok(0.0);
    }
    let (s, c) = phi.sin_cos();
    let s2 = s * s;
    Ok(s * rf_unchecked(c * c, 1.0 - m * s2, 1.0)?)
}

/// Incomplete elliptic integral of the third kind, `Π(n; phi | m)`.
///
/// Requires `1 - n sin²phi > 0`; negative characteristics are fine.
pub fn legendre_pi(n: f64, phi: f64, m: f64) -> Result<f64> {
    let phi = check_amplitude(phi)?;
    check_parameter(m)?;
    if !n.is_finite() {
        return Err(Error::Domain(format!(
            "characteristic n = {n} is not finite"
        )));
    }
    if phi == 0.0 {
        return Ok(0.0);
    }
    let (s, c) = phi.sin_cos();
    let s2 = s * s;
    let p = 1.0 - n * s2;
    if !(p > 0.0) {
        return Err(Error::Domain(format!(
            "1 - n sin^2(phi) = {p} must be positive"
        )));
    }
    let y = 1.0 - m * s2;
    let f = s * rf_unchecked(c * c, y, 1.0)?;
    if n == 0.0 {
        return Ok(f);
    }
    Ok(f + n / 3.0 * s2 * s * rj_unchecked(c * c, y, 1.0, p)?)
}

/// `F(phi | m)` and `RJ(cos²phi, 1 - m sin²phi, 1, 1 - n sin²phi)` sharing
/// one argument setup; the building blocks of `Π` for callers that need to
/// combine them without cancellation.
pub(crate) fn first_kind_and_rj(n: f64, phi: f64, m: f64) -> Result<(f64, f64, f64)> {
    let phi = check_amplitude(phi)?;
    check_parameter(m)?;
    let (s, c) = phi.sin_cos();
    let s2 = s * s;
    let p = 1.0 - n * s2;
    if !(p > 0.0) {
        return Err(Error::Domain(format!(
            "1 - n sin^2(phi) = {p} must be positive"
        )));
    }
    if phi == 0.0 {
        return Ok((0.0, 0.0, s));
    }
    let y = 1.0 - m * s2;
    let f = s * rf_unchecked(c * c, y, 1.0)?;
    let rj = rj_unchecked(c * c, y, 1.0, p)?;
    Ok((f, rj, s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn equal_arguments() {
        assert_eq!(carlson_rf(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(close(carlson_rf(4.0, 4.0, 4.0).unwrap(), 0.5, 1e-15));
        assert!(close(carlson_rj(1.0, 1.0, 1.0, 1.0).unwrap(), 1.0, 1e-15));
        assert!(close(carlson_rj(4.0, 4.0, 4.0, 4.0).unwrap(), 0.125, 1e-15));
        assert!(close(carlson_rc(4.0, 4.0).unwrap(), 0.5, 1e-15));
    }

    #[test]
    fn rc_closed_forms() {
        // RC(0, 1/4) = pi, RC(9/4, 2) = ln 2, RC(1/4, -2) = ln(2)/3 (DLMF 19.2.17-19).
        assert!(close(carlson_rc(0.0, 0.25).unwrap(), PI, 1e-14));
        assert!(close(carlson_rc(2.25, 2.0).unwrap(), 2f64.ln(), 1e-14));
        assert!(close(
            carlson_rc(0.25, -2.0).unwrap(),
            2f64.ln() / 3.0,
            1e-14
        ));
    }

    #[test]
    fn domain_errors() {
        assert!(carlson_rf(-1.0, 1.0, 1.0).is_err());
        assert!(carlson_rf(0.0, 0.0, 1.0).is_err());
        assert!(carlson_rj(1.0, 1.0, 1.0, 0.0).is_err());
        assert!(legendre_f(2.0, 0.5).is_err());
        assert!(legendre_f(1.0, 1.0).is_err());
        assert!(legendre_pi(1.0, FRAC_PI_2, 0.5).is_err());
    }

    #[test]
    fn legendre_reductions() {
        assert!(close(legendre_f(FRAC_PI_2, 0.0).unwrap(), FRAC_PI_2, 1e-15));
        assert_eq!(legendre_f(0.0, 0.7).unwrap(), 0.0);
        assert!(close(legendre_pi(0.0, 0.8, 0.0).unwrap(), 0.8, 1e-15));
        // Π(n; phi | 0) = atan(sqrt(1-n) tan phi) / sqrt(1-n) for n < 1.
        let n: f64 = -0.6;
        let phi: f64 = 1.1;
        let expected = ((1.0 - n).sqrt() * phi.tan()).atan() / (1.0 - n).sqrt();
        assert!(close(legendre_pi(n, phi, 0.0).unwrap(), expected, 1e-14));
    }

    proptest! {
        #[test]
        fn rf_is_symmetric(x in 0.0f64..10.0, y in 0.01f64..10.0, z in 0.01f64..10.0) {
            let v = carlson_rf(x, y, z).unwrap();
            prop_assert!(close(carlson_rf(y, z, x).unwrap(), v, 1e-14));
            prop_assert!(close(carlson_rf(z, x, y).unwrap(), v, 1e-14));
        }

        #[test]
        fn pi_with_zero_characteristic_is_f(phi in 0.0f64..FRAC_PI_2, m in 0.0f64..0.99) {
            prop_assert!(close(legendre_pi(0.0, phi, m).unwrap(), legendre_f(phi, m).unwrap(), 1e-15));
        }

        #[test]
        fn increasing_in_amplitude(phi in 0.0f64..1.5, dphi in 1e-6f64..0.07, n in -5.0f64..0.9, m in 0.0f64..0.99) {
            prop_assert!(legendre_f(phi + dphi, m).unwrap() > legendre_f(phi, m).unwrap());
            prop_assert!(legendre_pi(n, phi + dphi, m).unwrap() > legendre_pi(n, phi, m).unwrap());
        }
    }
}
