//! Mean curvature, second fundamental form and Lagrangian angle of immersed
//! patches, computed by finite differences independently of the moment-map
//! construction.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{LmcfError, Result};
use crate::geometry::fd::{try_fd_directional_with_step, try_fd_mixed, try_fd_second};
use crate::geometry::linalg::{dot, gram_orthonormalize, norm, sub};
use crate::geometry::AmbientModel;

type PatchFn<'a> = dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a;

/// A parametrized immersion `u ↦ F(u)` into real ambient coordinates.
pub struct ImmersedPatch<'a> {
    pub param_dim: usize,
    pub map: Box<PatchFn<'a>>,
    /// Finite-difference step in parameter space.
    pub step: f64,
    /// Apply one Richardson extrapolation to every derivative.
    pub richardson: bool,
}

impl<'a> ImmersedPatch<'a> {
    pub fn new<F>(param_dim: usize, step: f64, map: F) -> Self
    where
        F: Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a,
    {
        Self {
            param_dim,
            map: Box::new(map),
            step,
            richardson: false,
        }
    }

    pub fn with_richardson(mut self) -> Self {
        self.richardson = true;
        self
    }

    pub fn eval(&self, u: &[f64]) -> Result<Vec<f64>> {
        (self.map)(u)
    }

    fn unit(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.param_dim];
        e[i] = 1.0;
        e
    }

    fn extrapolate<G>(&self, g: G) -> Result<Vec<f64>>
    where
        G: Fn(f64) -> Result<Vec<f64>>,
    {
        let coarse = g(self.step)?;
        if !self.richardson {
            return Ok(coarse);
        }
        let fine = g(0.5 * self.step)?;
        Ok(fine
            .iter()
            .zip(&coarse)
            .map(|(f, c)| (16.0 * f - c) / 15.0)
            .collect())
    }

    /// Coordinate tangent vectors `∂_i F`.
    pub fn tangents(&self, u: &[f64]) -> Result<Vec<Vec<f64>>> {
        let f = |x: &[f64]| self.eval(x);
        (0..self.param_dim)
            .map(|i| self.extrapolate(|h| try_fd_directional_with_step(&f, u, &self.unit(i), h)))
            .collect()
    }

    /// Second derivatives `∂_i ∂_j F` for `i ≤ j`, stored symmetric.
    pub fn hessian(&self, u: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        let f = |x: &[f64]| self.eval(x);
        let m = self.param_dim;
        let mut out = vec![vec![Vec::new(); m]; m];
        for i in 0..m {
            for j in i..m {
                let d = if i == j {
                    self.extrapolate(|h| try_fd_second(&f, u, &self.unit(i), h))?
                } else {
                    self.extrapolate(|h| try_fd_mixed(&f, u, &self.unit(i), &self.unit(j), h))?
                };
                out[j][i] = d.clone();
                out[i][j] = d;
            }
        }
        Ok(out)
    }
}

/// Extrinsic curvature data at one parameter value.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    /// `|A|` with respect to the ambient metric.
    pub sff_norm: f64,
    pub tangents: Vec<Vec<f64>>,
}

fn invert(g: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let m = g.len();
    let mat = nalgebra::DMatrix::from_fn(m, m, |i, j| g[i][j]);
    let inv = mat
        .try_inverse()
        .ok_or_else(|| LmcfError::DegenerateFrame("singular induced metric".into()))?;
    Ok((0..m)
        .map(|i| (0..m).map(|j| inv[(i, j)]).collect())
        .collect())
}

fn mat_vec(g: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    g.iter().map(|row| dot(row, v)).collect()
}

/// Ambient metric as a matrix field in the patch's target coordinates.
pub type MetricField<'a> = dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>> + Sync + 'a;

/// Mean curvature vector and `|A|` in a Riemannian target `(R^N, G)`.
///
/// Christoffel symbols come from central differences of `G` with step
/// `metric_step`; pass `None` for a flat Euclidean target.
pub fn curvature_in_metric(
    patch: &ImmersedPatch,
    u: &[f64],
    metric: Option<(&MetricField, f64)>,
) -> Result<CurvatureSample> {
    let x = patch.eval(u)?;
    let big_n = x.len();
    let jac = patch.tangents(u)?;
    let hess = patch.hessian(u)?;
    let m = patch.param_dim;

    let identity = || {
        (0..big_n)
            .map(|i| (0..big_n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect()
    };
    let gmat: Vec<Vec<f64>> = match metric {
        Some((field, _)) => field(&x)?,
        None => identity(),
    };
    let ip = |a: &[f64], b: &[f64]| dot(a, &mat_vec(&gmat, b));

    // Covariant second derivatives ∇_i ∂_j = ∂_i∂_j F + Γ(∂_i F, ∂_j F).
    let mut cov = hess.clone();
    if let Some((field, h)) = metric {
        let ginv = invert(&gmat)?;
        let mut dg: Vec<Vec<Vec<f64>>> = Vec::with_capacity(big_n);
        for c in 0..big_n {
            let mut e = vec![0.0; big_n];
            e[c] = 1.0;
            let flat_field =
                |q: &[f64]| -> Result<Vec<f64>> { Ok(field(q)?.into_iter().flatten().collect()) };
            let d = try_fd_directional_with_step(&flat_field, &x, &e, h)?;
            dg.push(
                (0..big_n)
                    .map(|r| d[r * big_n..(r + 1) * big_n].to_vec())
                    .collect(),
            );
        }
        // Γ^a_{bc} = ½ G^{ad} (∂_b G_{dc} + ∂_c G_{db} - ∂_d G_{bc}).
        let christoffel = |v: &[f64], w: &[f64]| -> Vec<f64> {
            let mut lower = vec![0.0; big_n];
            for (d, lower_d) in lower.iter_mut().enumerate() {
                let mut s = 0.0;
                for b in 0..big_n {
                    if v[b] == 0.0 {
                        continue;
                    }
                    for c in 0..big_n {
                        s += v[b] * w[c] * (dg[b][d][c] + dg[c][d][b] - dg[d][b][c]);
                    }
                }
                *lower_d = 0.5 * s;
            }
            mat_vec(&ginv, &lower)
        };
        for i in 0..m {
            for j in 0..m {
                let gamma = christoffel(&jac[i], &jac[j]);
                cov[i][j] = cov[i][j].iter().zip(&gamma).map(|(a, b)| a + b).collect();
            }
        }
    }

    let induced: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| ip(&jac[i], &jac[j])).collect())
        .collect();
    let ginv_ind = invert(&induced)?;
    let normal = |v: &[f64]| -> Vec<f64> {
        let coeff: Vec<f64> = (0..m).map(|i| ip(&jac[i], v)).collect();
        let c = mat_vec(&ginv_ind, &coeff);
        let mut out = v.to_vec();
        for i in 0..m {
            for (o, t) in out.iter_mut().zip(&jac[i]) {
                *o -= c[i] * t;
            }
        }
        out
    };
    let a: Vec<Vec<Vec<f64>>> = (0..m)
        .map(|i| (0..m).map(|j| normal(&cov[i][j])).collect())
        .collect();
    let mut hvec = vec![0.0; big_n];
    for i in 0..m {
        for j in 0..m {
            for (hv, aij) in hvec.iter_mut().zip(&a[i][j]) {
                *hv += ginv_ind[i][j] * aij;
            }
        }
    }
    let mut a2 = 0.0;
    for i in 0..m {
        for j in 0..m {
            for k in 0..m {
                for l in 0..m {
                    a2 += ginv_ind[i][k] * ginv_ind[j][l] * ip(&a[i][j], &a[k][l]);
                }
            }
        }
    }
    Ok(CurvatureSample {
        point: x,
        mean_curvature: hvec,
        sff_norm: a2.max(0.0).sqrt(),
        tangents: jac,
    })
}

/// Mean curvature in Euclidean space.
pub fn mean_curvature_flat(patch: &ImmersedPatch, u: &[f64]) -> Result<CurvatureSample> {
    curvature_in_metric(patch, u, None)
}

/// Mean curvature in chart coordinates carrying a sampled metric.
pub fn mean_curvature_chart(
    patch: &ImmersedPatch,
    u: &[f64],
    metric: &MetricField,
    metric_step: f64,
) -> Result<CurvatureSample> {
    curvature_in_metric(patch, u, Some((metric, metric_step)))
}

/// Relative error `|H - target| / max(|H|, |target|)`.
pub fn relative_error(h: &[f64], target: &[f64]) -> f64 {
    let scale = norm(h).max(norm(target)).max(1e-300);
    norm(&sub(h, target)) / scale
}

/// Component of `v` normal to the span of `tangents` (Euclidean).
pub fn normal_part(v: &[f64], tangents: &[Vec<f64>]) -> Result<Vec<f64>> {
    let basis = gram_orthonormalize(tangents, dot)?;
    Ok(crate::geometry::linalg::project_off(v, &basis))
}

/// Holomorphic volume on the oriented orthonormalized tangent frame at `u`.
pub fn oriented_volume<M: AmbientModel + ?Sized>(
    model: &M,
    patch: &ImmersedPatch,
    u: &[f64],
) -> Result<Complex64> {
    let p = patch.eval(u)?;
    let jac = patch.tangents(u)?;
    if jac.len() != model.complex_dim() {
        return Err(LmcfError::Dimension {
            expected: model.complex_dim(),
            got: jac.len(),
        });
    }
    let frame = gram_orthonormalize(&jac, |a, b| model.metric(&p, a, b))?;
    Ok(model.holomorphic_volume(&p, &frame))
}

/// Lagrangian angle `θ` with `Ω|_L = e^{iθ} vol_L`, in `(-π, π]`.
pub fn lagrangian_angle<M: AmbientModel + ?Sized>(
    model: &M,
    patch: &ImmersedPatch,
    u: &[f64],
) -> Result<f64> {
    let v = oriented_volume(model, patch, u)?;
    if (v.norm() - 1.0).abs() > 1e-4 {
        return Err(LmcfError::DegenerateFrame(format!(
            "patch is not Lagrangian: |Ω| = {}",
            v.norm()
        )));
    }
    Ok(v.arg())
}

/// Parameter-space derivatives of the Lagrangian angle.
pub fn angle_derivatives<M: AmbientModel + ?Sized>(
    model: &M,
    patch: &ImmersedPatch,
    u: &[f64],
) -> Result<Vec<f64>> {
    let base = oriented_volume(model, patch, u)?;
    let h = patch.step;
    (0..patch.param_dim)
        .map(|i| {
            let at = |s: f64| -> Result<f64> {
                let mut q = u.to_vec();
                q[i] += s;
                Ok((oriented_volume(model, patch, &q)? / base).arg())
            };
            Ok((-at(2.0 * h)? + 8.0 * at(h)? - 8.0 * at(-h)? + at(-2.0 * h)?) / (12.0 * h))
        })
        .collect()
}

/// `|grad θ - (its component along the last tangent)| / |grad θ|`, with the
/// gradient taken for the induced metric. When the last parameter is the
/// torus direction this measures how far `grad θ` is from `ξ₀^#`.
pub fn angle_gradient_residual<M: AmbientModel + ?Sized>(
    model: &M,
    patch: &ImmersedPatch,
    u: &[f64],
) -> Result<f64> {
    let p = patch.eval(u)?;
    let jac = patch.tangents(u)?;
    let m = patch.param_dim;
    let dtheta = angle_derivatives(model, patch, u)?;
    let induced: Vec<Vec<f64>> = (0..m)
        .map(|i| (0..m).map(|j| model.metric(&p, &jac[i], &jac[j])).collect())
        .collect();
    let coeff = mat_vec(&invert(&induced)?, &dtheta);
    let mut grad = vec![0.0; p.len()];
    for i in 0..m {
        for (g, t) in grad.iter_mut().zip(&jac[i]) {
            *g += coeff[i] * t;
        }
    }
    let gn = model.metric(&p, &grad, &grad).sqrt();
    if gn == 0.0 {
        return Ok(0.0);
    }
    let last = &jac[m - 1];
    let c = model.metric(&p, &grad, last) / model.metric(&p, last, last);
    let resid: Vec<f64> = grad.iter().zip(last).map(|(g, l)| g - c * l).collect();
    Ok(model.metric(&p, &resid, &resid).sqrt() / gn)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_sphere_mean_curvature() {
        // Unit sphere in R^3: H = -2 x.
        let patch = ImmersedPatch::new(2, 1e-3, |u: &[f64]| {
            Ok(vec![
                u[0].sin() * u[1].cos(),
                u[0].sin() * u[1].sin(),
                u[0].cos(),
            ])
        });
        let s = mean_curvature_flat(&patch, &[1.0, 0.3]).unwrap();
        let target: Vec<f64> = s.point.iter().map(|x| -2.0 * x).collect();
        assert!(relative_error(&s.mean_curvature, &target) < 1e-6);
        assert!((s.sff_norm - 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn cylinder_mean_curvature() {
        let patch = ImmersedPatch::new(2, 1e-3, |u: &[f64]| {
            Ok(vec![2.0 * u[0].cos(), 2.0 * u[0].sin(), u[1]])
        });
        let s = mean_curvature_flat(&patch, &[0.4, 1.0]).unwrap();
        let target = vec![-0.5 * 0.4f64.cos(), -0.5 * 0.4f64.sin(), 0.0];
        assert!(relative_error(&s.mean_curvature, &target) < 1e-6);
    }

    #[test]
    fn flat_metric_in_chart_agrees() {
        let patch = ImmersedPatch::new(2, 1e-3, |u: &[f64]| {
            Ok(vec![
                u[0].sin() * u[1].cos(),
                u[0].sin() * u[1].sin(),
                u[0].cos(),
            ])
        });
        let eye = |_: &[f64]| {
            Ok(vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ])
        };
        let a = mean_curvature_flat(&patch, &[0.7, 0.2]).unwrap();
        let b = mean_curvature_chart(&patch, &[0.7, 0.2], &eye, 1e-3).unwrap();
        assert!(relative_error(&a.mean_curvature, &b.mean_curvature) < 1e-12);
    }
}
