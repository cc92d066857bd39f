//! Holomorphic charts `φ_{k0} : U_{k0} → C²` centred at the fixed points `P_{k0}`,
//! where `U_{k0} = {w_i ≠ 0 for i < k0, z_j ≠ 0 for j > k0}`.

use num_complex::Complex64;

use super::{horizontal_project, AleParams, QuotientPoint};
use crate::error::{check_finite, LmcfError, Result};
use crate::geometry::fd::try_fd_directional_with_step;
use crate::geometry::linalg::dot;
use crate::geometry::QuaternionicPoint;

fn gap(params: &AleParams, i: usize, k0: usize) -> f64 {
    (2.0 * (params.h()[i] - params.h()[k0]).abs()).sqrt()
}

fn check_k0(params: &AleParams, k0: usize) -> Result<()> {
    if k0 > params.n() {
        return Err(LmcfError::OutsideDomain(format!(
            "k0 = {k0} exceeds n = {}",
            params.n()
        )));
    }
    Ok(())
}

/// Smallest of the moduli that must be nonzero on `U_{k0}`, relative to the chart scale.
pub fn chart_domain_margin(params: &AleParams, k0: usize, p: &QuaternionicPoint) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..k0 {
        m = m.min(p.w[i].norm() / gap(params, i, k0));
    }
    for j in k0 + 1..=params.n() {
        m = m.min(p.z[j].norm() / gap(params, j, k0));
    }
    m
}

/// `u1 = z_{k0} Π_{i<k0} sqrt(2(h_{k0}-h_i))/w_i Π_{j>k0} z_j/sqrt(2(h_j-h_{k0}))`,
/// `u2 = w_{k0} Π_{i<k0} w_i/sqrt(2(h_{k0}-h_i)) Π_{j>k0} sqrt(2(h_j-h_{k0}))/z_j`.
pub fn local_chart(
    params: &AleParams,
    k0: usize,
    p: &QuaternionicPoint,
) -> Result<(Complex64, Complex64)> {
    check_k0(params, k0)?;
    if p.len() != params.n() + 1 {
        return Err(LmcfError::Dimension {
            expected: params.n() + 1,
            got: p.len(),
        });
    }
    let margin = chart_domain_margin(params, k0, p);
    if margin < 1e-12 {
        return Err(LmcfError::OutsideChart {
            k0,
            reason: format!("a required coordinate vanishes (margin {margin:.3e})"),
        });
    }
    let mut u1 = p.z[k0];
    let mut u2 = p.w[k0];
    for i in 0..k0 {
        let g = gap(params, i, k0);
        u1 *= g / p.w[i];
        u2 *= p.w[i] / g;
    }
    for j in k0 + 1..=params.n() {
        let g = gap(params, j, k0);
        u1 *= p.z[j] / g;
        u2 *= g / p.z[j];
    }
    Ok((u1, u2))
}

/// Representative of the fixed point `P_k`.
pub fn fixed_point(params: &AleParams, k: usize) -> Result<QuotientPoint> {
    check_k0(params, k)?;
    let n = params.n();
    let z: Vec<f64> = (0..=n)
        .map(|i| if i > k { gap(params, i, k) } else { 0.0 })
        .collect();
    let w: Vec<f64> = (0..=n)
        .map(|i| if i < k { gap(params, i, k) } else { 0.0 })
        .collect();
    QuotientPoint::new(params, QuaternionicPoint::from_real(&z, &w)?)
}

/// `s` solving `½ (A e^{2s} - B e^{-2s}) = r`, and `ds/dr`.
fn scale_exponent(a: f64, b: f64, r: f64) -> Option<(f64, f64)> {
    let root = (r * r + a * b).sqrt();
    let x = if r >= 0.0 {
        if a <= 0.0 {
            return None;
        }
        (r + root) / a
    } else {
        if b <= 0.0 {
            return None;
        }
        b / (root - r)
    };
    if !(x > 0.0) || !x.is_finite() || root == 0.0 {
        return None;
    }
    Some((0.5 * x.ln(), 0.5 / root))
}

/// Inverse chart: a representative in `μ_K⁻¹(α, 0)` with `φ_{k0} = (u1, u2)`.
///
/// Starts from the `K_C`-orbit representative with `z_i w_i = u1 u2` for all `i`
/// and moves along the real part of `K_C` onto the moment level; the common
/// level `y` is found by a monotone one-dimensional solve.
pub fn chart_inverse(
    params: &AleParams,
    k0: usize,
    u1: Complex64,
    u2: Complex64,
) -> Result<QuotientPoint> {
    check_k0(params, k0)?;
    check_finite("u", &[u1.re, u1.im, u2.re, u2.im])?;
    let n = params.n();
    let h = params.h();
    let prod = u1 * u2;
    let mut z = vec![Complex64::new(0.0, 0.0); n + 1];
    let mut w = vec![Complex64::new(0.0, 0.0); n + 1];
    for i in 0..=n {
        if i < k0 {
            let g = gap(params, i, k0);
            z[i] = prod / g;
            w[i] = Complex64::new(g, 0.0);
        } else if i == k0 {
            z[i] = u1;
            w[i] = u2;
        } else {
            let g = gap(params, i, k0);
            z[i] = Complex64::new(g, 0.0);
            w[i] = prod / g;
        }
    }
    let a: Vec<f64> = z.iter().map(|c| c.norm_sqr()).collect();
    let b: Vec<f64> = w.iter().map(|c| c.norm_sqr()).collect();

    // Admissible interval for y from the coordinates with a vanishing modulus.
    let mut y_lo = f64::NEG_INFINITY;
    let mut y_hi = f64::INFINITY;
    for i in (0..=n).filter(|&i| i != k0) {
        if a[i] == 0.0 {
            y_hi = y_hi.min(-h[i]);
        }
        if b[i] == 0.0 {
            y_lo = y_lo.max(-h[i]);
        }
    }

    let total = |y: f64| -> Option<(f64, f64)> {
        let mut s = 0.0;
        let mut ds = 0.0;
        for i in (0..=n).filter(|&i| i != k0) {
            let (si, dsi) = scale_exponent(a[i], b[i], y + h[i])?;
            s += si;
            ds += dsi;
        }
        Some((s, ds))
    };
    // G(y) is strictly decreasing; its root is the common level.
    let g_of = |y: f64| -> Option<(f64, f64)> {
        let (s, ds) = total(y)?;
        let e_minus = (-2.0 * s).exp();
        let e_plus = (2.0 * s).exp();
        let g = 0.5 * (a[k0] * e_minus - b[k0] * e_plus) - (y + h[k0]);
        let dg = -(a[k0] * e_minus + b[k0] * e_plus) * ds - 1.0;
        Some((g, dg))
    };

    let y0 = -h[k0];
    let (g0, _) = g_of(y0).ok_or_else(|| LmcfError::NumericalDomain("chart level start".into()))?;
    let (mut lo, mut hi);
    if g0 == 0.0 {
        lo = y0;
        hi = y0;
    } else {
        let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
        let bound = if dir > 0.0 { y_hi } else { y_lo };
        let mut step = 1.0;
        let mut prev = y0;
        loop {
            let mut cand = prev + dir * step;
            if bound.is_finite() && (cand - bound) * dir >= 0.0 {
                cand = 0.5 * (prev + bound);
            }
            match g_of(cand) {
                Some((g, _)) if g * g0 <= 0.0 => {
                    lo = prev.min(cand);
                    hi = prev.max(cand);
                    break;
                }
                Some(_) => {
                    prev = cand;
                    step *= 2.0;
                }
                None => {
                    return Err(LmcfError::NumericalDomain("chart level bracket".into()));
                }
            }
            if step > 1e12 || (bound.is_finite() && (bound - prev).abs() < 1e-300) {
                return Err(LmcfError::NumericalDomain("chart level bracket".into()));
            }
        }
    }
    let mut y = 0.5 * (lo + hi);
    for _ in 0..200 {
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + y.abs()) {
            break;
        }
        let (g, dg) = g_of(y).ok_or_else(|| LmcfError::NumericalDomain("chart level".into()))?;
        if g == 0.0 {
            break;
        }
        if g > 0.0 {
            lo = y;
        } else {
            hi = y;
        }
        let newton = y - g / dg;
        y = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    let (s_total, _) = total(y).ok_or_else(|| LmcfError::NumericalDomain("chart level".into()))?;
    for i in 0..=n {
        let s = if i == k0 {
            -s_total
        } else {
            scale_exponent(a[i], b[i], y + h[i]).unwrap().0
        };
        let e = s.exp();
        z[i] *= e;
        w[i] /= e;
    }
    QuotientPoint::new(params, QuaternionicPoint::new(z, w)?)
}

/// Largest `|g_ij - δ_ij|` of [`chart_metric`] over `directions` points at
/// chart radius `r`, for each radius. Measured, not bounded: the frame is
/// orthonormal only at `P_{k0}` itself.
pub fn chart_distortion(
    params: &AleParams,
    k0: usize,
    radii: &[f64],
    directions: usize,
) -> Result<Vec<(f64, f64)>> {
    check_k0(params, k0)?;
    radii
        .iter()
        .map(|&r| {
            let mut worst: f64 = 0.0;
            for j in 0..directions {
                // Spread over S³ via two angles.
                let th = std::f64::consts::TAU * j as f64 / directions as f64;
                let ph = 0.5 * th + 0.3;
                let u = [
                    r * th.cos() * ph.cos(),
                    r * th.cos() * ph.sin(),
                    r * th.sin() * (2.0 * ph).cos(),
                    r * th.sin() * (2.0 * ph).sin(),
                ];
                let g = chart_metric(params, k0, &u)?;
                for (a, row) in g.iter().enumerate() {
                    for (b, v) in row.iter().enumerate() {
                        let d = if a == b { 1.0 } else { 0.0 };
                        worst = worst.max((v - d).abs());
                    }
                }
            }
            Ok((r, worst))
        })
        .collect()
}

/// Integer weights `(λ1, λ2)` of `H_{a,b}` on the chart at `P_{k0}`:
/// `λ1 = a(n + 1 - k0) + b`, `λ2 = -a(n - k0) - b`.
pub fn chart_weights(n: usize, k0: usize, a: i64, b: i64) -> (i64, i64) {
    let n = n as i64;
    let k = k0 as i64;
    (a * (n + 1 - k) + b, -a * (n - k) - b)
}

fn chart_real(params: &AleParams, k0: usize, u: &[f64]) -> Result<Vec<f64>> {
    Ok(chart_inverse(
        params,
        k0,
        Complex64::new(u[0], u[1]),
        Complex64::new(u[2], u[3]),
    )?
    .to_real())
}

/// Quotient metric in real chart coordinates `(Re u1, Im u1, Re u2, Im u2)`.
pub fn chart_metric(params: &AleParams, k0: usize, u: &[f64; 4]) -> Result<[[f64; 4]; 4]> {
    let base = chart_real(params, k0, u)?;
    let h = 1e-4 * (1.0 + u.iter().map(|x| x * x).sum::<f64>().sqrt());
    let f = |q: &[f64]| chart_real(params, k0, q);
    let mut lifts = Vec::with_capacity(4);
    for a in 0..4 {
        let mut e = [0.0; 4];
        e[a] = 1.0;
        let d = try_fd_directional_with_step(&f, u, &e, h)?;
        lifts.push(horizontal_project(&base, &d));
    }
    let mut g = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            g[a][b] = dot(&lifts[a], &lifts[b]);
        }
    }
    Ok(g)
}

/// Differential of the chart applied to a lift, in real chart coordinates.
pub fn chart_pushforward(
    params: &AleParams,
    k0: usize,
    p: &QuaternionicPoint,
    v: &[f64],
) -> Result<[f64; 4]> {
    let x = p.to_real();
    let f = |q: &[f64]| -> Result<Vec<f64>> {
        let rep = QuaternionicPoint::from_interleaved(q)?;
        let (u1, u2) = local_chart(params, k0, &rep)?;
        Ok(vec![u1.re, u1.im, u2.re, u2.im])
    };
    let scale = crate::geometry::linalg::norm(v).max(1e-300);
    let unit: Vec<f64> = v.iter().map(|c| c / scale).collect();
    let h = 1e-5 * (1.0 + crate::geometry::linalg::norm(&x));
    let d = try_fd_directional_with_step(&f, &x, &unit, h)?;
    Ok([d[0] * scale, d[1] * scale, d[2] * scale, d[3] * scale])
}
