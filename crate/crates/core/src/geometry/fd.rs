//! Central finite differences with fourth-order stencils.

use crate::error::{check_dim, check_finite, Result};
use crate::geometry::linalg::{axpy, norm};

/// Default step `1e-4 (1 + |p|)`.
pub fn fd_step(p: &[f64]) -> f64 {
    1e-4 * (1.0 + norm(p))
}

fn shifted(p: &[f64], v: &[f64], s: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    axpy(s, v, &mut q);
    q
}

fn combine(terms: &[(f64, Vec<f64>)], denom: f64) -> Vec<f64> {
    let n = terms[0].1.len();
    let mut out = vec![0.0; n];
    for (c, f) in terms {
        axpy(*c, f, &mut out);
    }
    out.iter_mut().for_each(|x| *x /= denom);
    out
}

/// Directional derivative `d/ds f(p + s v)` at `s = 0`, fallible `f`, explicit step.
pub fn try_fd_directional_with_step<F>(f: &F, p: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let fp2 = f(&shifted(p, v, 2.0 * h))?;
    let fp1 = f(&shifted(p, v, h))?;
    let fm1 = f(&shifted(p, v, -h))?;
    let fm2 = f(&shifted(p, v, -2.0 * h))?;
    Ok(combine(
        &[(-1.0, fp2), (8.0, fp1), (-8.0, fm1), (1.0, fm2)],
        12.0 * h,
    ))
}

/// Directional derivative with the default step and input validation.
pub fn try_fd_directional<F>(f: &F, p: &[f64], v: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    check_dim(p.len(), v.len())?;
    check_finite("p", p)?;
    check_finite("v", v)?;
    try_fd_directional_with_step(f, p, v, fd_step(p))
}

/// Directional derivative of a vector-valued map, fourth-order central stencil.
pub fn fd_directional_derivative<F>(f: F, p: &[f64], v: &[f64]) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    try_fd_directional(&|x: &[f64]| Ok(f(x)), p, v)
}

/// Scalar convenience wrapper.
pub fn fd_scalar<F>(f: F, p: &[f64], v: &[f64]) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    Ok(fd_directional_derivative(|x| vec![f(x)], p, v)?[0])
}

/// One Richardson step on top of the fourth-order stencil (sixth order overall).
pub fn try_fd_richardson<F>(f: &F, p: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let coarse = try_fd_directional_with_step(f, p, v, h)?;
    let fine = try_fd_directional_with_step(f, p, v, 0.5 * h)?;
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(a, b)| (16.0 * a - b) / 15.0)
        .collect())
}

/// Second directional derivative `d^2/ds^2 f(p + s v)`.
pub fn try_fd_second<F>(f: &F, p: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let f0 = f(p)?;
    let fp2 = f(&shifted(p, v, 2.0 * h))?;
    let fp1 = f(&shifted(p, v, h))?;
    let fm1 = f(&shifted(p, v, -h))?;
    let fm2 = f(&shifted(p, v, -2.0 * h))?;
    Ok(combine(
        &[
            (-1.0, fp2),
            (16.0, fp1),
            (-30.0, f0),
            (16.0, fm1),
            (-1.0, fm2),
        ],
        12.0 * h * h,
    ))
}

/// Mixed second derivative `d^2/ds dt f(p + s u + t v)`, nested fourth-order stencils.
pub fn try_fd_mixed<F>(f: &F, p: &[f64], u: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>> + ?Sized,
{
    let inner = |q: &[f64]| try_fd_directional_with_step(f, q, v, h);
    try_fd_directional_with_step(&inner, p, u, h)
}
