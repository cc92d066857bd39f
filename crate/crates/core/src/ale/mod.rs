//! Hyperkähler quotients `M(α, 0) = μ_K⁻¹(α, 0) / K` of type `A_n`, where
//! `K ⊂ T^{n+1}` is the kernel of the product map acting on `H^{n+1}` by
//! `(z_i ζ_i, w_i ζ_i⁻¹)`.
//!
//! Points are carried as representatives in `H^{n+1}` in the interleaved real
//! layout of [`QuaternionicPoint::to_real`]. Tangent vectors are lifts; all
//! metric quantities use their horizontal parts.

mod chart;
mod involution;
mod level;

pub use chart::{
    chart_distortion, chart_domain_margin, chart_inverse, chart_metric, chart_pushforward,
    chart_weights, fixed_point, local_chart,
};
pub(crate) use involution::UnionFind;
pub use involution::{
    gluing_pairs, quotient_real_distance, sigma, sigma_tangent, FixedSurfaceTopology,
};
pub use level::{
    classify_stratum, edge_slope, f_y, generator_isotropy, isotropy, moduli, mu_g, polygon,
    polygon_floor, solve_d0, solve_level, vertex, Isotropy, MomentPolygon, Stratum,
};

use num_complex::Complex64;

use crate::error::{check_finite, LmcfError, Result};
use crate::geometry::linalg::{dot, min_norm_solve, orthonormal_span, project_off};
use crate::geometry::{c_get, c_set, AmbientModel, QuaternionicPoint};

/// Tolerance on `|μ_K - (α, 0)|` for accepting a representative.
pub const LEVEL_TOL: f64 = 1e-9;

/// Parameters `α ∈ (R_{>0})^n` with partial sums `h_i = h_{i-1} + α_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct AleParams {
    n: usize,
    alpha: Vec<f64>,
    h: Vec<f64>,
}

impl AleParams {
    pub fn new(alpha: Vec<f64>, h0: f64) -> Result<Self> {
        if alpha.is_empty() {
            return Err(LmcfError::Dimension {
                expected: 1,
                got: 0,
            });
        }
        check_finite("alpha", &alpha)?;
        check_finite("h0", &[h0])?;
        if let Some(i) = alpha.iter().position(|&a| a <= 0.0) {
            return Err(LmcfError::OutsideDomain(format!(
                "alpha[{i}] = {} must be positive",
                alpha[i]
            )));
        }
        let mut h = vec![h0];
        for a in &alpha {
            h.push(h.last().unwrap() + a);
        }
        Ok(Self {
            n: alpha.len(),
            alpha,
            h,
        })
    }

    /// `h = (0, 1, ..., n)`.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n], 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Real length of a representative, `4(n + 1)`.
    pub fn real_len(&self) -> usize {
        4 * (self.n + 1)
    }
}

/// Element `(ε₀, ε₁)` of the real points `G_R = {±1}²` of the residual torus,
/// labelling the four sheets of the fixed surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sheet {
    pub eps0: i8,
    pub eps1: i8,
}

impl Sheet {
    pub const PP: Sheet = Sheet { eps0: 1, eps1: 1 };
    pub const MP: Sheet = Sheet { eps0: -1, eps1: 1 };
    pub const PM: Sheet = Sheet { eps0: 1, eps1: -1 };
    pub const MM: Sheet = Sheet { eps0: -1, eps1: -1 };
    pub const ALL: [Sheet; 4] = [Sheet::PP, Sheet::MP, Sheet::PM, Sheet::MM];

    pub fn index(self) -> usize {
        Sheet::ALL.iter().position(|s| *s == self).unwrap()
    }

    pub fn label(self) -> &'static str {
        ["++", "-+", "+-", "--"][self.index()]
    }

    /// Composition in `G_R`.
    pub fn compose(self, other: Sheet) -> Sheet {
        Sheet {
            eps0: self.eps0 * other.eps0,
            eps1: self.eps1 * other.eps1,
        }
    }
}

impl serde::Serialize for Sheet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// A validated representative of a point of `M(α, 0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientPoint {
    rep: QuaternionicPoint,
}

impl QuotientPoint {
    pub fn new(params: &AleParams, rep: QuaternionicPoint) -> Result<Self> {
        if rep.len() != params.n + 1 {
            return Err(LmcfError::Dimension {
                expected: params.n + 1,
                got: rep.len(),
            });
        }
        let r = level_residual(params, &rep);
        if r > LEVEL_TOL * (1.0 + rep.norm_sqr()) {
            return Err(LmcfError::CorruptPoint(format!(
                "moment level residual {r:.3e}"
            )));
        }
        Ok(Self { rep })
    }

    pub fn rep(&self) -> &QuaternionicPoint {
        &self.rep
    }

    pub fn into_rep(self) -> QuaternionicPoint {
        self.rep
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.rep.to_real()
    }
}

/// `μ_K` in the basis dual to `f_i = e_i - e_{i-1}`: real part and complex part.
pub fn mu_k(p: &QuaternionicPoint) -> (Vec<f64>, Vec<Complex64>) {
    let n = p.len() - 1;
    let mut re = Vec::with_capacity(n);
    let mut cx = Vec::with_capacity(n);
    for i in 1..=n {
        re.push(
            0.5 * (p.z[i].norm_sqr() - p.w[i].norm_sqr() - p.z[i - 1].norm_sqr()
                + p.w[i - 1].norm_sqr()),
        );
        cx.push(-Complex64::i() * (p.z[i] * p.w[i] - p.z[i - 1] * p.w[i - 1]));
    }
    (re, cx)
}

/// Largest deviation of `μ_K(p)` from `(α, 0)`.
pub fn level_residual(params: &AleParams, p: &QuaternionicPoint) -> f64 {
    let (re, cx) = mu_k(p);
    let a = re
        .iter()
        .zip(&params.alpha)
        .map(|(x, a)| (x - a).abs())
        .fold(0.0, f64::max);
    let b = cx.iter().map(|c| c.norm()).fold(0.0, f64::max);
    a.max(b)
}

/// Regularity of `(α, β)` for the `K`-moment map: regular iff it avoids every
/// wall `W_{i,j} ⊗ Im H`, i.e. for each `i < j` some real component of
/// `Σ_{k=i+1}^{j} (α_k, β_k)` is nonzero.
pub fn is_regular_value(alpha: &[f64], beta: &[Complex64]) -> Result<bool> {
    if alpha.len() != beta.len() {
        return Err(LmcfError::Dimension {
            expected: alpha.len(),
            got: beta.len(),
        });
    }
    check_finite("alpha", alpha)?;
    let n = alpha.len();
    let scale = 1.0
        + alpha
            .iter()
            .map(|a| a.abs())
            .chain(beta.iter().map(|b| b.norm()))
            .fold(0.0, f64::max);
    let tol = 1e-12 * scale;
    for i in 0..n {
        let mut sa = 0.0;
        let mut sb = Complex64::new(0.0, 0.0);
        for k in i..n {
            sa += alpha[k];
            sb += beta[k];
            if sa.abs() <= tol && sb.norm() <= tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Real Jacobian of `μ_K` (3n rows) at an interleaved representative.
pub fn constraint_jacobian(p: &[f64]) -> Vec<Vec<f64>> {
    let m = p.len() / 4;
    let n = m - 1;
    let zi = |i: usize| 2 * i;
    let wi = |i: usize| 2 * (m + i);
    let mut rows = Vec::with_capacity(3 * n);
    for k in 1..=n {
        let mut r = vec![0.0; p.len()];
        for (idx, sign) in [(k, 1.0), (k - 1, -1.0)] {
            r[zi(idx)] += sign * p[zi(idx)];
            r[zi(idx) + 1] += sign * p[zi(idx) + 1];
            r[wi(idx)] -= sign * p[wi(idx)];
            r[wi(idx) + 1] -= sign * p[wi(idx) + 1];
        }
        rows.push(r);
    }
    // d(z w) = w dz + z dw; μ_C = -i (z_k w_k - z_{k-1} w_{k-1}).
    for part in 0..2 {
        for k in 1..=n {
            let mut r = vec![0.0; p.len()];
            for (idx, sign) in [(k, 1.0), (k - 1, -1.0)] {
                let z = c_get(p, idx);
                let w = c_get(p, m + idx);
                let dirs = [
                    (zi(idx), w),
                    (zi(idx) + 1, Complex64::i() * w),
                    (wi(idx), z),
                    (wi(idx) + 1, Complex64::i() * z),
                ];
                for (col, dzw) in dirs {
                    let d = -Complex64::i() * dzw * sign;
                    r[col] += if part == 0 { d.re } else { d.im };
                }
            }
            rows.push(r);
        }
    }
    rows
}

/// Tangent vectors `(i z_j, -i w_j)` generated by the `K` basis `f_j`.
pub fn k_orbit_tangents(p: &[f64]) -> Vec<Vec<f64>> {
    let m = p.len() / 4;
    let e = |j: usize| {
        let mut v = vec![0.0; p.len()];
        c_set(&mut v, j, Complex64::i() * c_get(p, j));
        c_set(&mut v, m + j, -Complex64::i() * c_get(p, m + j));
        v
    };
    (1..m)
        .map(|j| {
            let a = e(j);
            let b = e(j - 1);
            a.iter().zip(&b).map(|(x, y)| x - y).collect()
        })
        .collect()
}

/// Orthogonal projection off the `K`-orbit directions.
pub fn horizontal_project(p: &[f64], v: &[f64]) -> Vec<f64> {
    let basis = orthonormal_span(&k_orbit_tangents(p));
    project_off(v, &basis)
}

/// Projection onto the tangent space of the level set `μ_K = const`.
pub fn level_tangent_project(p: &[f64], v: &[f64]) -> Result<Vec<f64>> {
    let jac = constraint_jacobian(p);
    let jv: Vec<f64> = jac.iter().map(|r| dot(r, v)).collect();
    let corr = min_norm_solve(&jac, p.len(), &jv)?;
    Ok(v.iter().zip(&corr).map(|(a, b)| a - b).collect())
}

/// Quotient metric on two lifts at a representative; no level check.
pub fn quotient_metric_raw(p: &QuaternionicPoint, v1: &[f64], v2: &[f64]) -> Result<f64> {
    let x = p.to_real();
    if v1.len() != x.len() || v2.len() != x.len() {
        return Err(LmcfError::Dimension {
            expected: x.len(),
            got: v1.len().min(v2.len()),
        });
    }
    let basis = orthonormal_span(&k_orbit_tangents(&x));
    Ok(dot(&project_off(v1, &basis), &project_off(v2, &basis)))
}

/// Quotient metric on lifts tangent to `μ_K⁻¹(α, 0)`.
pub fn quotient_metric_at(
    params: &AleParams,
    p: &QuotientPoint,
    v1: &[f64],
    v2: &[f64],
) -> Result<f64> {
    let x = p.to_real();
    if v1.len() != params.real_len() || v2.len() != params.real_len() {
        return Err(LmcfError::Dimension {
            expected: params.real_len(),
            got: v1.len(),
        });
    }
    check_finite("v1", v1)?;
    check_finite("v2", v2)?;
    let jac = constraint_jacobian(&x);
    for v in [v1, v2] {
        let r = jac.iter().map(|row| dot(row, v).abs()).fold(0.0, f64::max);
        let scale = crate::geometry::linalg::norm(v) * (1.0 + crate::geometry::linalg::norm(&x));
        if r > 1e-8 * scale.max(1e-300) {
            return Err(LmcfError::NotTangent(r));
        }
    }
    quotient_metric_raw(p.rep(), v1, v2)
}

/// Action of `(γ₀, γ₁) ∈ G = T^{n+1}/K`: `z₀ γ₀γ₁`, `z_i γ₀` for `i ≥ 1`, `w₀ γ₁⁻¹`.
pub fn act_g(p: &QuaternionicPoint, gamma0: Complex64, gamma1: Complex64) -> QuaternionicPoint {
    let mut q = p.clone();
    q.z[0] *= gamma0 * gamma1;
    for zi in q.z.iter_mut().skip(1) {
        *zi *= gamma0;
    }
    q.w[0] /= gamma1;
    q
}

/// Applies a sheet element of `G_R`.
pub fn act_sheet(p: &QuaternionicPoint, s: Sheet) -> QuaternionicPoint {
    act_g(
        p,
        Complex64::new(s.eps0 as f64, 0.0),
        Complex64::new(s.eps1 as f64, 0.0),
    )
}

/// The circle subgroup `H_{a,b} = {(e^{ias}, e^{ibs})}` of `G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubtorusAction {
    pub a: i64,
    pub b: i64,
}

impl SubtorusAction {
    /// Requires `gcd(a, b) = 1` and `b ≠ -l a` for `l = 0, ..., n + 1`.
    pub fn new(a: i64, b: i64, n: usize) -> Result<Self> {
        if num_integer::gcd(a, b) != 1 {
            return Err(LmcfError::OutsideDomain(format!(
                "a = {a}, b = {b} are not coprime"
            )));
        }
        for l in 0..=(n as i64 + 1) {
            if b == -l * a {
                return Err(LmcfError::OutsideDomain(format!(
                    "b = -{l} a: H_(a,b) is the isotropy of an edge of the moment polygon"
                )));
            }
        }
        Ok(Self { a, b })
    }

    /// Ambient generator `(i(a+b) z₀, i a z_i; -i b w₀, 0, ...)` of `ξ₀`.
    pub fn ambient_generator(&self, p: &[f64]) -> Vec<f64> {
        let m = p.len() / 4;
        let (a, b) = (self.a as f64, self.b as f64);
        let mut v = vec![0.0; p.len()];
        c_set(&mut v, 0, Complex64::i() * (a + b) * c_get(p, 0));
        for i in 1..m {
            c_set(&mut v, i, Complex64::i() * a * c_get(p, i));
        }
        c_set(&mut v, m, -Complex64::i() * b * c_get(p, m));
        v
    }

    /// `exp(s ξ₀)` as an element of `G`.
    pub fn element(&self, s: f64) -> (Complex64, Complex64) {
        (
            Complex64::cis(self.a as f64 * s),
            Complex64::cis(self.b as f64 * s),
        )
    }

    pub fn act(&self, p: &QuaternionicPoint, s: f64) -> QuaternionicPoint {
        let (g0, g1) = self.element(s);
        act_g(p, g0, g1)
    }

    /// Which non-trivial element of `G_R` lies in `H_{a,b}`.
    pub fn real_element(&self) -> Sheet {
        Sheet {
            eps0: if self.a % 2 == 0 { 1 } else { -1 },
            eps1: if self.b % 2 == 0 { 1 } else { -1 },
        }
    }
}

/// `⟨μ_G, w^{a,b}⟩ = a x + b y` with `y` averaged over the index `k`.
pub fn subtorus_moment(params: &AleParams, action: SubtorusAction, p: &[f64]) -> f64 {
    let m = params.n + 1;
    let mut x = 0.0;
    let mut y = 0.0;
    for i in 0..m {
        let z = c_get(p, i).norm_sqr();
        let w = c_get(p, m + i).norm_sqr();
        x += 0.5 * z;
        y += 0.5 * (z - w) - params.h[i];
    }
    action.a as f64 * x + action.b as f64 * y / m as f64
}

/// The quotient `M(α, 0)` with the `H_{a,b}` action, as an [`AmbientModel`].
#[derive(Debug, Clone)]
pub struct AleModel {
    pub params: AleParams,
    pub action: SubtorusAction,
}

impl AleModel {
    pub fn new(params: AleParams, action: SubtorusAction) -> Self {
        Self { params, action }
    }
}

impl AmbientModel for AleModel {
    fn real_dim(&self) -> usize {
        self.params.real_len()
    }
    fn complex_dim(&self) -> usize {
        2
    }
    fn metric(&self, p: &[f64], u: &[f64], v: &[f64]) -> f64 {
        let basis = orthonormal_span(&k_orbit_tangents(p));
        dot(&project_off(u, &basis), &project_off(v, &basis))
    }
    fn complex_structure(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        crate::geometry::flat_complex_structure(&horizontal_project(p, v))
    }
    fn holomorphic_volume(&self, p: &[f64], frame: &[Vec<f64>]) -> Complex64 {
        let m = self.params.n + 1;
        let u = horizontal_project(p, &frame[0]);
        let v = horizontal_project(p, &frame[1]);
        (0..m)
            .map(|i| c_get(&u, i) * c_get(&v, m + i) - c_get(&v, i) * c_get(&u, m + i))
            .sum()
    }
    fn generator(&self, p: &[f64]) -> Vec<f64> {
        horizontal_project(p, &self.action.ambient_generator(p))
    }
    fn moment(&self, p: &[f64]) -> f64 {
        subtorus_moment(&self.params, self.action, p)
    }
    fn character(&self) -> f64 {
        self.action.a as f64
    }
    fn tangent_project(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        match level_tangent_project(p, v) {
            Ok(t) => horizontal_project(p, &t),
            Err(_) => vec![0.0; v.len()],
        }
    }
}

/// The lift `(u, v) ↦ (u, …, u; v, …, v)/√(n+1)` of `C² → μ_K⁻¹(0, 0)`.
pub fn orbifold_lift(n: usize, u: Complex64, v: Complex64) -> QuaternionicPoint {
    let s = 1.0 / ((n + 1) as f64).sqrt();
    QuaternionicPoint {
        z: vec![u * s; n + 1],
        w: vec![v * s; n + 1],
    }
}

/// Differential of [`orbifold_lift`] on a real tangent vector of `C²`.
pub fn orbifold_lift_tangent(n: usize, du: Complex64, dv: Complex64) -> Vec<f64> {
    orbifold_lift(n, du, dv).to_real()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regular_value_examples() {
        let c = |x: f64| Complex64::new(x, 0.0);
        assert!(is_regular_value(&[1.0, 1.0], &[c(0.0), c(0.0)]).unwrap());
        assert!(!is_regular_value(&[1.0, -1.0], &[c(0.0), c(0.0)]).unwrap());
        assert!(is_regular_value(&[1.0, -1.0], &[c(0.0), c(1.0)]).unwrap());
        assert!(!is_regular_value(&[0.0, 0.0], &[c(0.0), c(0.0)]).unwrap());
        assert!(!is_regular_value(&[0.0], &[c(0.0)]).unwrap());
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(AleParams::new(vec![1.0, 0.0], 0.0).is_err());
        assert_eq!(AleParams::unit(2).unwrap().h(), &[0.0, 1.0, 2.0]);
    }

    #[test]
    fn subtorus_validation() {
        assert!(SubtorusAction::new(1, 1, 1).is_ok());
        assert!(SubtorusAction::new(2, 4, 1).is_err());
        assert!(SubtorusAction::new(1, -2, 1).is_err());
        assert!(SubtorusAction::new(1, 0, 3).is_err());
        assert!(SubtorusAction::new(0, 1, 3).is_ok());
    }

    #[test]
    fn real_element_parity() {
        assert_eq!(
            SubtorusAction::new(2, 1, 1).unwrap().real_element(),
            Sheet::PM
        );
        assert_eq!(
            SubtorusAction::new(1, 2, 1).unwrap().real_element(),
            Sheet::MP
        );
        assert_eq!(
            SubtorusAction::new(1, 1, 1).unwrap().real_element(),
            Sheet::MM
        );
    }
}
