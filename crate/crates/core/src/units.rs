//! Unit conversions between GHz, rad/s and degrees.

use std::f64::consts::PI;

/// One GHz expressed in rad/s.
pub const GHZ_TO_RAD_PER_S: f64 = 2.0 * PI * 1e9;

#[inline]
pub fn ghz_to_angular(f_ghz: f64) -> f64 {
    f_ghz * GHZ_TO_RAD_PER_S
}

#[inline]
pub fn angular_to_ghz(omega: f64) -> f64 {
    omega / GHZ_TO_RAD_PER_S
}

/// Linear magnitude to power dB (20·log10).
#[inline]
pub fn to_db(linear: f64) -> f64 {
    20.0 * linear.log10()
}

#[inline]
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

/// Principal square root with the branch cut pinned: the result has a
/// positive real part, or a non-negative imaginary part when the real part
/// vanishes. `num_complex` follows the sign of a negative zero imaginary part,
/// which would flip the branch labelling for exactly negative real arguments.
pub fn principal_sqrt(z: num_complex::Complex64) -> num_complex::Complex64 {
    let z = num_complex::Complex64::new(z.re, if z.im == 0.0 { 0.0 } else { z.im });
    let r = z.sqrt();
    if r.re == 0.0 && r.im < 0.0 {
        -r
    } else {
        r
    }
}
