//! Moment polygon of the residual torus action and reconstruction of points
//! from their moment image.

use serde::Serialize;

use super::{act_sheet, AleParams, QuotientPoint, Sheet, SubtorusAction};
use crate::error::{check_finite, LmcfError, Result};
use crate::geometry::linalg::{dot, RANK_TOL};
use crate::geometry::QuaternionicPoint;

/// Points closer than this to a stratum are placed on it.
pub const STRATUM_TOL: f64 = 1e-9;
/// Points closer than this, but not within `STRATUM_TOL`, are ambiguous.
pub const AMBIGUITY_TOL: f64 = 1e-6;

/// `f_y(d) = ½ Σ [ sqrt((y + h_i)² + d²) + (y + h_i) ]`.
pub fn f_y(params: &AleParams, y: f64, d: f64) -> f64 {
    0.5 * params
        .h()
        .iter()
        .map(|h| {
            let a = y + h;
            (a * a + d * d).sqrt() + a
        })
        .sum::<f64>()
}

/// `f_y(0) = Σ max(y + h_i, 0)`, the left boundary of the polygon at height `y`.
pub fn polygon_floor(params: &AleParams, y: f64) -> f64 {
    params.h().iter().map(|h| (y + h).max(0.0)).sum()
}

/// `f_y(d) - f_y(0)` without cancellation.
fn excess(params: &AleParams, y: f64, d: f64) -> f64 {
    0.5 * params
        .h()
        .iter()
        .map(|h| {
            let a = (y + h).abs();
            d * d / ((a * a + d * d).sqrt() + a).max(f64::MIN_POSITIVE)
        })
        .sum::<f64>()
}

fn excess_derivative(params: &AleParams, y: f64, d: f64) -> f64 {
    0.5 * params
        .h()
        .iter()
        .map(|h| {
            let a = y + h;
            let r = (a * a + d * d).sqrt();
            if r == 0.0 {
                1.0
            } else {
                d / r
            }
        })
        .sum::<f64>()
}

/// Solves `f_y(d) = x` for `d ≥ 0`.
pub fn solve_d0(params: &AleParams, x: f64, y: f64) -> Result<f64> {
    check_finite("(x, y)", &[x, y])?;
    let floor = polygon_floor(params, y);
    let target = x - floor;
    let tol = 1e-12 * (1.0 + x.abs() + y.abs());
    if target < -tol {
        return Err(LmcfError::OutsidePolygon { x, y });
    }
    // Points within rounding of the boundary lie on it; solving there would
    // return d ~ sqrt(rounding) instead of 0.
    if target <= tol {
        return Ok(0.0);
    }
    let m = (params.n() + 1) as f64;
    // (n+1) d / 2 - Σ|y + h_i| / 2 ≤ excess ≤ (n+1) d / 2.
    let mut lo = 2.0 * target / m;
    let sum_abs: f64 = params.h().iter().map(|h| (y + h).abs()).sum();
    let mut hi = (2.0 * target + sum_abs) / m;
    if excess(params, y, lo) > target {
        lo = 0.0;
    }
    let mut d = 0.5 * (lo + hi);
    for _ in 0..200 {
        let g = excess(params, y, d) - target;
        if g.abs() <= 1e-15 * (1.0 + target) {
            break;
        }
        if g > 0.0 {
            hi = d;
        } else {
            lo = d;
        }
        let dg = excess_derivative(params, y, d);
        let newton = d - g / dg;
        d = if dg > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 1e-17 * hi.max(1e-300) {
            break;
        }
    }
    Ok(d)
}

/// `(|z_i|², |w_i|²)` for a point with moment image `(·, y)` and `z_i w_i = d`.
pub fn moduli(params: &AleParams, y: f64, d: f64) -> (Vec<f64>, Vec<f64>) {
    let mut zs = Vec::with_capacity(params.n() + 1);
    let mut ws = Vec::with_capacity(params.n() + 1);
    for h in params.h() {
        let a = y + h;
        let r = (a * a + d * d).sqrt();
        let (z, w) = if a >= 0.0 {
            (r + a, if r + a > 0.0 { d * d / (r + a) } else { 0.0 })
        } else {
            (d * d / (r - a), r - a)
        };
        zs.push(z);
        ws.push(w);
    }
    (zs, ws)
}

/// Real representative with `μ_G = (x, y)` on the requested sheet.
///
/// On the `++` sheet all entries are non-negative; other sheets are its images
/// under the corresponding element of `G_R`.
pub fn solve_level(params: &AleParams, x: f64, y: f64, sheet: Sheet) -> Result<QuotientPoint> {
    let d = solve_d0(params, x, y)?;
    let (zs, ws) = moduli(params, y, d);
    let rep = QuaternionicPoint::from_real(
        &zs.iter().map(|v| v.sqrt()).collect::<Vec<_>>(),
        &ws.iter().map(|v| v.sqrt()).collect::<Vec<_>>(),
    )?;
    QuotientPoint::new(params, act_sheet(&rep, sheet))
}

/// Moment map `μ_G = (½ Σ |z_i|², ½(|z_k|² - |w_k|²) - h_k)` of the residual torus.
pub fn mu_g(params: &AleParams, p: &QuaternionicPoint) -> Result<(f64, f64)> {
    if p.len() != params.n() + 1 {
        return Err(LmcfError::Dimension {
            expected: params.n() + 1,
            got: p.len(),
        });
    }
    let x = 0.5 * p.z.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let ys: Vec<f64> = (0..=params.n())
        .map(|k| 0.5 * (p.z[k].norm_sqr() - p.w[k].norm_sqr()) - params.h()[k])
        .collect();
    let lo = ys.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo > 1e-10 * (1.0 + x + hi.abs()) {
        return Err(LmcfError::CorruptPoint(format!(
            "y_k spread {:.3e} exceeds tolerance",
            hi - lo
        )));
    }
    Ok((x, ys.iter().sum::<f64>() / ys.len() as f64))
}

/// Vertex `v_k = (Σ_{i>k} (h_i - h_k), -h_k)`, the image of the fixed point `P_k`.
pub fn vertex(params: &AleParams, k: usize) -> (f64, f64) {
    let h = params.h();
    let x: f64 = h.iter().skip(k + 1).map(|hi| hi - h[k]).sum();
    // `+ 0.0` normalizes negative zero.
    (x + 0.0, -h[k] + 0.0)
}

/// Slope `dy/dx` of edge `l_k` as `[num, den]`; `l_{n+1}` is vertical.
pub fn edge_slope(n: usize, k: usize) -> [i64; 2] {
    [1, (n + 1 - k) as i64]
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PolygonEdge {
    pub k: usize,
    pub slope: [i64; 2],
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct MomentPolygon {
    pub n: usize,
    pub h: Vec<f64>,
    pub vertices: Vec<[f64; 2]>,
    pub edges: Vec<PolygonEdge>,
}

pub fn polygon(params: &AleParams) -> MomentPolygon {
    let n = params.n();
    MomentPolygon {
        n,
        h: params.h().to_vec(),
        vertices: (0..=n)
            .map(|k| {
                let (x, y) = vertex(params, k);
                [x, y]
            })
            .collect(),
        edges: (0..=n + 1)
            .map(|k| PolygonEdge {
                k,
                slope: edge_slope(n, k),
            })
            .collect(),
    }
}

/// Where a moment image sits in the polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stratum {
    Interior,
    /// Relative interior of edge `l_k`.
    Edge(usize),
    Vertex(usize),
}

fn dist_to_ray(px: f64, py: f64, o: (f64, f64), dir: (f64, f64), bounded: Option<f64>) -> f64 {
    let nd = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
    let (ux, uy) = (dir.0 / nd, dir.1 / nd);
    let mut t = (px - o.0) * ux + (py - o.1) * uy;
    t = t.max(0.0);
    if let Some(len) = bounded {
        t = t.min(len);
    }
    ((px - o.0 - t * ux).powi(2) + (py - o.1 - t * uy).powi(2)).sqrt()
}

fn dist_to_edge(params: &AleParams, k: usize, x: f64, y: f64) -> f64 {
    let n = params.n();
    if k == 0 {
        dist_to_ray(x, y, vertex(params, 0), ((n + 1) as f64, 1.0), None)
    } else if k == n + 1 {
        dist_to_ray(x, y, vertex(params, n), (0.0, -1.0), None)
    } else {
        let a = vertex(params, k - 1);
        let b = vertex(params, k);
        let dir = (b.0 - a.0, b.1 - a.1);
        let len = (dir.0 * dir.0 + dir.1 * dir.1).sqrt();
        dist_to_ray(x, y, a, dir, Some(len))
    }
}

/// Places `(x, y) ∈ Δ` in its stratum.
pub fn classify_stratum(params: &AleParams, x: f64, y: f64) -> Result<Stratum> {
    check_finite("(x, y)", &[x, y])?;
    let scale = 1.0 + x.abs() + y.abs();
    if x < polygon_floor(params, y) - 1e-12 * scale {
        return Err(LmcfError::OutsidePolygon { x, y });
    }
    let n = params.n();
    for k in 0..=n {
        let (vx, vy) = vertex(params, k);
        let d = ((x - vx).powi(2) + (y - vy).powi(2)).sqrt();
        if d < STRATUM_TOL * scale {
            return Ok(Stratum::Vertex(k));
        }
        if d < AMBIGUITY_TOL * scale {
            return Err(LmcfError::BoundaryAmbiguity {
                stratum: format!("v_{k}"),
                distance: d,
            });
        }
    }
    for k in 0..=n + 1 {
        let d = dist_to_edge(params, k, x, y);
        if d < STRATUM_TOL * scale {
            return Ok(Stratum::Edge(k));
        }
        if d < AMBIGUITY_TOL * scale {
            return Err(LmcfError::BoundaryAmbiguity {
                stratum: format!("l_{k}"),
                distance: d,
            });
        }
    }
    Ok(Stratum::Interior)
}

/// Identity component of the stabilizer in `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Isotropy {
    Trivial,
    /// The circle `H_{a,b}`.
    Circle {
        a: i64,
        b: i64,
    },
    Full,
}

/// Expected isotropy of a stratum.
pub fn stratum_isotropy(n: usize, s: Stratum) -> Isotropy {
    match s {
        Stratum::Interior => Isotropy::Trivial,
        Stratum::Edge(k) => Isotropy::Circle {
            a: 1,
            b: -((n + 1 - k) as i64),
        },
        Stratum::Vertex(_) => Isotropy::Full,
    }
}

/// Isotropy from the moment image, cross-checked against the vanishing pattern
/// of the representative.
pub fn isotropy(params: &AleParams, p: &QuotientPoint) -> Result<(Stratum, Isotropy)> {
    let (x, y) = mu_g(params, p.rep())?;
    let s = classify_stratum(params, x, y)?;
    let n = params.n();
    let rep = p.rep();
    let scale = 1.0 + x.abs() + y.abs();
    let zero_tol = AMBIGUITY_TOL * scale;
    let (z_zero, w_zero): (Vec<bool>, Vec<bool>) = match s {
        Stratum::Interior => (vec![false; n + 1], vec![false; n + 1]),
        Stratum::Edge(k) => (
            (0..=n).map(|i| i < k).collect(),
            (0..=n).map(|i| i >= k).collect(),
        ),
        Stratum::Vertex(k) => (
            (0..=n).map(|i| i <= k).collect(),
            (0..=n).map(|i| i >= k).collect(),
        ),
    };
    for i in 0..=n {
        let checks = [(rep.z[i], z_zero[i], "z"), (rep.w[i], w_zero[i], "w")];
        for (c, should_vanish, name) in checks {
            let small = c.norm_sqr() <= zero_tol;
            let strictly_nonzero = c.norm_sqr() > 0.0;
            if should_vanish && !small {
                return Err(LmcfError::CorruptPoint(format!(
                    "{name}_{i} = {c} should vanish on {s:?}"
                )));
            }
            if !should_vanish && !strictly_nonzero {
                return Err(LmcfError::CorruptPoint(format!(
                    "{name}_{i} vanishes off the expected pattern for {s:?}"
                )));
            }
        }
    }
    Ok((s, stratum_isotropy(n, s)))
}

/// Isotropy read off from the rank of the infinitesimal action: the kernel of
/// `(c₀, c₁) ↦ c₀ p₀^# + c₁ p₁^#` restricted to horizontal vectors.
pub fn generator_isotropy(p: &QuotientPoint) -> Result<Isotropy> {
    let x = p.to_real();
    let g0 = super::horizontal_project(&x, &SubtorusAction { a: 1, b: 0 }.ambient_generator(&x));
    let g1 = super::horizontal_project(&x, &SubtorusAction { a: 0, b: 1 }.ambient_generator(&x));
    let gram = [
        [dot(&g0, &g0), dot(&g0, &g1)],
        [dot(&g0, &g1), dot(&g1, &g1)],
    ];
    let tr = gram[0][0] + gram[1][1];
    let det = gram[0][0] * gram[1][1] - gram[0][1] * gram[0][1];
    let scale = 1.0 + x.iter().map(|v| v * v).sum::<f64>();
    if tr <= RANK_TOL * scale {
        return Ok(Isotropy::Full);
    }
    let lam_min = det / tr;
    if lam_min > 1e-8 * tr {
        return Ok(Isotropy::Trivial);
    }
    // Kernel direction of the 2x2 Gram matrix, scaled to primitive integers.
    let (c0, c1) = if gram[0][0] >= gram[1][1] {
        (-gram[0][1], gram[0][0])
    } else {
        (gram[1][1], -gram[0][1])
    };
    if c0.abs() < 1e-9 * c1.abs() {
        return Ok(Isotropy::Circle { a: 0, b: 1 });
    }
    let ratio = c1 / c0;
    let b = ratio.round();
    if (ratio - b).abs() > 1e-6 {
        return Err(LmcfError::CorruptPoint(format!(
            "non-integral isotropy slope {ratio}"
        )));
    }
    Ok(Isotropy::Circle { a: 1, b: b as i64 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertices_for_n2() {
        let p = AleParams::unit(2).unwrap();
        let poly = polygon(&p);
        assert_eq!(poly.vertices, vec![[3.0, 0.0], [1.0, -1.0], [0.0, -2.0]]);
        assert_eq!(poly.edges[3].slope, [1, 0]);
        assert_eq!(poly.edges[0].slope, [1, 3]);
    }

    #[test]
    fn solve_level_vertex_example() {
        let p = AleParams::unit(1).unwrap();
        assert_eq!(solve_d0(&p, 1.0, 0.0).unwrap(), 0.0);
        let q = solve_level(&p, 1.0, 0.0, Sheet::PP).unwrap();
        assert_eq!(q.rep().z[0].norm(), 0.0);
        assert!((q.rep().z[1].norm() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn solve_level_interior_example() {
        let p = AleParams::unit(1).unwrap();
        let d = solve_d0(&p, 2.0, 0.0).unwrap();
        assert!((d - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn outside_polygon() {
        let p = AleParams::unit(1).unwrap();
        assert!(matches!(
            solve_level(&p, 0.0, 5.0, Sheet::PP),
            Err(LmcfError::OutsidePolygon { .. })
        ));
    }

    #[test]
    fn corrupt_point_detected() {
        let p = AleParams::unit(1).unwrap();
        let q = QuaternionicPoint::from_real(&[1.0, 3.0], &[0.0, 0.0]).unwrap();
        assert!(matches!(mu_g(&p, &q), Err(LmcfError::CorruptPoint(_))));
    }

    #[test]
    fn strata_and_ambiguity() {
        let p = AleParams::unit(1).unwrap();
        assert_eq!(classify_stratum(&p, 1.0, 0.0).unwrap(), Stratum::Vertex(0));
        assert_eq!(classify_stratum(&p, 0.5, -0.5).unwrap(), Stratum::Edge(1));
        assert_eq!(classify_stratum(&p, 5.0, 0.0).unwrap(), Stratum::Interior);
        assert!(matches!(
            classify_stratum(&p, 5.0 + 1e-7, 2.0),
            Err(LmcfError::BoundaryAmbiguity { .. })
        ));
    }
}
