//! Free-space Stokes kernels with `r = x - y`.
//!
//! Physical constants such as `1/(4πη)` are left to the callers.

use nalgebra::Matrix3;

use crate::error::{Error, Result};
use crate::geometry::Vec3;

pub type Mat3 = Matrix3<f64>;

fn separation(x: &Vec3, y: &Vec3) -> Result<(Vec3, f64)> {
    let r = x - y;
    let d = r.norm();
    if d == 0.0 {
        return Err(Error::Singularity);
    }
    Ok((r, d))
}

/// Stokeslet `U(r) (I + 𝕣)` with `U = 1/|r|` and `𝕣 = r rᵀ/|r|²`.
pub fn single_layer(x: &Vec3, y: &Vec3) -> Result<Mat3> {
    let (r, d) = separation(x, y)?;
    Ok(stokeslet(&r, d))
}

/// `H(r; n) 𝕣` with `H = <r, n>/|r|³`.
pub fn double_layer(x: &Vec3, y: &Vec3, n: &Vec3) -> Result<Mat3> {
    let (r, d) = separation(x, y)?;
    Ok(r * r.transpose() * (r.dot(n) / (d * d * d * d * d)))
}

/// Pressure kernels: `P(r) = 2r/|r|³` and `𝐏(r) n = 4U³(3𝕣 - I) n`.
pub fn pressure_kernels(x: &Vec3, y: &Vec3, n: &Vec3) -> Result<(Vec3, Vec3)> {
    let (r, _) = separation(x, y)?;
    Ok(pressure_kernels_r(&r, n))
}

/// Pressure kernels for a given non-zero separation `r = x - y`.
pub fn pressure_kernels_r(r: &Vec3, n: &Vec3) -> (Vec3, Vec3) {
    let d = r.norm();
    let d3 = d * d * d;
    let p = r * (2.0 / d3);
    let pn = (r * (3.0 * r.dot(n) / (d * d)) - n) * (4.0 / d3);
    (p, pn)
}

pub(crate) fn stokeslet(r: &Vec3, d: f64) -> Mat3 {
    let inv = 1.0 / d;
    let inv3 = inv * inv * inv;
    Mat3::identity() * inv + r * r.transpose() * inv3
}

/// Stokeslet entries in row-major order.
#[inline]
pub fn single_layer_entries(x: &Vec3, y: &Vec3) -> [f64; 9] {
    single_layer_entries_r(&(x - y))
}

/// Stokeslet entries for a given separation `r = x - y`.
#[inline]
pub fn single_layer_entries_r(r: &Vec3) -> [f64; 9] {
    let d2 = r.norm_squared();
    let inv = 1.0 / d2.sqrt();
    let inv3 = inv / d2;
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = r[i] * r[j] * inv3;
        }
        out[4 * i] += inv;
    }
    out
}

/// `H 𝕣` entries in row-major order.
#[inline]
pub fn double_layer_entries(x: &Vec3, y: &Vec3, n: &Vec3) -> [f64; 9] {
    double_layer_entries_r(&(x - y), n)
}

/// `H 𝕣` entries for a given separation `r = x - y`.
#[inline]
pub fn double_layer_entries_r(r: &Vec3, n: &Vec3) -> [f64; 9] {
    let d2 = r.norm_squared();
    let h = r.dot(n) / (d2 * d2 * d2.sqrt());
    let mut out = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            out[3 * i + j] = h * r[i] * r[j];
        }
    }
    out
}

pub fn entries_to_mat(e: &[f64; 9]) -> Mat3 {
    Mat3::from_row_slice(e)
}
