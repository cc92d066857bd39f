//! Flat shrinker and translator models on complex Euclidean space with their
//! closed-form mean curvature data.
//!
//! Shrinker: `C^d` with `z_j ↦ z_j e^{i λ_j t}`, moment `½ Σ λ_j |z_j|²`, `a_H = Σ λ_j`.
//! Translator: `C^{d+1}` with the same rotation on the first `d` slots and
//! `z_{d+1} ↦ z_{d+1} + i t`, moment `½ Σ λ_j |z_j|² + Re z_{d+1}`.
//! In both cases the real slice `L` is the real subspace.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, check_finite, LmcfError, Result};
use crate::geometry::{
    c_get, c_set, flat_complex_structure, flat_metric, flat_volume, AmbientModel,
};

#[derive(Debug, Clone, PartialEq)]
pub struct ShrinkerModel {
    weights: Vec<i64>,
}

impl ShrinkerModel {
    /// Weights must be nonzero integers.
    pub fn new(weights: Vec<i64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(LmcfError::Dimension {
                expected: 1,
                got: 0,
            });
        }
        if let Some(i) = weights.iter().position(|&l| l == 0) {
            return Err(LmcfError::OutsideDomain(format!(
                "weight lambda[{i}] is zero"
            )));
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum::<i64>() as f64
    }

    fn lam(&self, i: usize) -> f64 {
        self.weights[i] as f64
    }

    /// Moment map restricted to the real slice.
    pub fn real_moment(&self, x: &[f64]) -> f64 {
        0.5 * x
            .iter()
            .enumerate()
            .map(|(i, v)| self.lam(i) * v * v)
            .sum::<f64>()
    }

    /// Positive definite or negative definite weights.
    pub fn is_definite(&self) -> bool {
        self.weights.iter().all(|&l| l > 0) || self.weights.iter().all(|&l| l < 0)
    }

    /// Constant with `|χ_x| ≤ K / |x|`.
    pub fn decay_constant(&self) -> f64 {
        let max = self.weights.iter().map(|l| l.abs()).max().unwrap() as f64;
        let min = self.weights.iter().map(|l| l.abs()).min().unwrap() as f64;
        self.weight_sum().abs() * max / (min * min)
    }

    /// Acts on an interleaved point of `C^d` by `exp(s ξ₀)`.
    pub fn act(&self, p: &[f64], s: f64) -> Vec<f64> {
        let mut out = p.to_vec();
        for j in 0..self.dim() {
            c_set(&mut out, j, c_get(p, j) * Complex64::cis(self.lam(j) * s));
        }
        out
    }

    /// The immersion `(x, s) ↦ exp(s ξ₀) x` of `V_c × H`.
    pub fn immerse(&self, x: &[f64], s: f64) -> Vec<f64> {
        let p: Vec<f64> = x.iter().flat_map(|&r| [r, 0.0]).collect();
        self.act(&p, s)
    }

    /// Point of `V_c` along the direction given by hyperspherical angles
    /// (`d - 1` of them), radially scaled onto the level.
    pub fn level_point(&self, c: f64, angles: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim() - 1, angles.len())?;
        let u = hyperspherical(angles);
        let q = self.real_moment(&u);
        if q == 0.0 || q.signum() != c.signum() || c == 0.0 {
            return Err(LmcfError::OutsideDomain(format!(
                "direction does not meet the level c = {c}"
            )));
        }
        let s = (c / q).sqrt();
        Ok(u.iter().map(|v| v * s).collect())
    }
}

/// Unit vector `(cos φ1, sin φ1 cos φ2, ..., sin φ1 ⋯ sin φ_{d-1})`.
pub fn hyperspherical(angles: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles.len() + 1);
    let mut prod = 1.0;
    for a in angles {
        out.push(prod * a.cos());
        prod *= a.sin();
    }
    out.push(prod);
    out
}

/// `χ_x = -(Σλ / Σ λ_i² x_i²) (λ_1 x_1, ..., λ_d x_d)`.
pub fn shrinker_chi(model: &ShrinkerModel, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(model.dim(), x.len())?;
    check_finite("x", x)?;
    let denom: f64 = x
        .iter()
        .enumerate()
        .map(|(i, v)| (model.lam(i) * v).powi(2))
        .sum();
    if denom == 0.0 {
        return Err(LmcfError::OutsideDomain(
            "x = 0 is excluded from the real slice".into(),
        ));
    }
    let f = -model.weight_sum() / denom;
    Ok(x.iter()
        .enumerate()
        .map(|(i, v)| f * model.lam(i) * v)
        .collect())
}

/// Self-similarity constant `α_c = -Σλ / (2c)`.
pub fn shrinker_alpha_c(model: &ShrinkerModel, c: f64) -> Result<f64> {
    if !c.is_finite() {
        return Err(LmcfError::NumericalDomain(format!("c = {c}")));
    }
    if c == 0.0 {
        return Err(LmcfError::OutsideDomain("c = 0 is the cone level".into()));
    }
    Ok(-model.weight_sum() / (2.0 * c))
}

impl AmbientModel for ShrinkerModel {
    fn real_dim(&self) -> usize {
        2 * self.dim()
    }
    fn complex_dim(&self) -> usize {
        self.dim()
    }
    fn metric(&self, _p: &[f64], u: &[f64], v: &[f64]) -> f64 {
        flat_metric(u, v)
    }
    fn complex_structure(&self, _p: &[f64], v: &[f64]) -> Vec<f64> {
        flat_complex_structure(v)
    }
    fn holomorphic_volume(&self, _p: &[f64], frame: &[Vec<f64>]) -> Complex64 {
        flat_volume(frame)
    }
    fn generator(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for j in 0..self.dim() {
            c_set(&mut out, j, Complex64::i() * self.lam(j) * c_get(p, j));
        }
        out
    }
    fn moment(&self, p: &[f64]) -> f64 {
        0.5 * (0..self.dim())
            .map(|j| self.lam(j) * c_get(p, j).norm_sqr())
            .sum::<f64>()
    }
    fn character(&self) -> f64 {
        self.weight_sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatorModel {
    weights: Vec<i64>,
}

impl TranslatorModel {
    /// Zero weights are allowed: those coordinates are simply not rotated.
    pub fn new(weights: Vec<i64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(LmcfError::Dimension {
                expected: 1,
                got: 0,
            });
        }
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    /// Number of rotated coordinates `d`; the slice has dimension `d + 1`.
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum::<i64>() as f64
    }

    fn lam(&self, i: usize) -> f64 {
        self.weights[i] as f64
    }

    pub fn real_moment(&self, x: &[f64]) -> f64 {
        let d = self.dim();
        0.5 * (0..d).map(|i| self.lam(i) * x[i] * x[i]).sum::<f64>() + x[d]
    }

    pub fn act(&self, p: &[f64], s: f64) -> Vec<f64> {
        let mut out = p.to_vec();
        for j in 0..self.dim() {
            c_set(&mut out, j, c_get(p, j) * Complex64::cis(self.lam(j) * s));
        }
        out[2 * self.dim() + 1] += s;
        out
    }

    pub fn immerse(&self, x: &[f64], s: f64) -> Vec<f64> {
        let p: Vec<f64> = x.iter().flat_map(|&r| [r, 0.0]).collect();
        self.act(&p, s)
    }

    /// The graph point `(x, c - ½ Σ λ x²)` of `V_c`.
    pub fn level_point(&self, c: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut p = x.to_vec();
        p.push(0.0);
        let last = c - self.real_moment(&p);
        p[self.dim()] = last;
        Ok(p)
    }
}

/// `χ_x = -(Σλ / (1 + Σ λ_i² x_i²)) (λ_1 x_1, ..., λ_d x_d, 1)`.
pub fn translator_chi(model: &TranslatorModel, x: &[f64]) -> Result<Vec<f64>> {
    let d = model.dim();
    check_dim(d + 1, x.len())?;
    check_finite("x", x)?;
    let denom = 1.0 + (0..d).map(|i| (model.lam(i) * x[i]).powi(2)).sum::<f64>();
    let f = -model.weight_sum() / denom;
    let mut out: Vec<f64> = (0..d).map(|i| f * model.lam(i) * x[i]).collect();
    out.push(f);
    Ok(out)
}

/// Translation velocity `u = (0, ..., 0, -Σλ)` in the real slice.
pub fn translator_u(model: &TranslatorModel) -> Vec<f64> {
    let mut u = vec![0.0; model.dim() + 1];
    u[model.dim()] = -model.weight_sum();
    u
}

impl AmbientModel for TranslatorModel {
    fn real_dim(&self) -> usize {
        2 * (self.dim() + 1)
    }
    fn complex_dim(&self) -> usize {
        self.dim() + 1
    }
    fn metric(&self, _p: &[f64], u: &[f64], v: &[f64]) -> f64 {
        flat_metric(u, v)
    }
    fn complex_structure(&self, _p: &[f64], v: &[f64]) -> Vec<f64> {
        flat_complex_structure(v)
    }
    fn holomorphic_volume(&self, _p: &[f64], frame: &[Vec<f64>]) -> Complex64 {
        flat_volume(frame)
    }
    fn generator(&self, p: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; p.len()];
        for j in 0..self.dim() {
            c_set(&mut out, j, Complex64::i() * self.lam(j) * c_get(p, j));
        }
        out[2 * self.dim() + 1] = 1.0;
        out
    }
    fn moment(&self, p: &[f64]) -> f64 {
        let d = self.dim();
        0.5 * (0..d)
            .map(|j| self.lam(j) * c_get(p, j).norm_sqr())
            .sum::<f64>()
            + p[2 * d]
    }
    fn character(&self) -> f64 {
        self.weight_sum()
    }
}

/// A flat model of either kind.
#[derive(Debug, Clone, PartialEq)]
pub enum FlatModel {
    Shrinker(ShrinkerModel),
    Translator(TranslatorModel),
}

impl FlatModel {
    pub fn slice_dim(&self) -> usize {
        match self {
            FlatModel::Shrinker(m) => m.dim(),
            FlatModel::Translator(m) => m.dim() + 1,
        }
    }

    pub fn real_moment(&self, x: &[f64]) -> f64 {
        match self {
            FlatModel::Shrinker(m) => m.real_moment(x),
            FlatModel::Translator(m) => m.real_moment(x),
        }
    }

    pub fn weight_sum(&self) -> f64 {
        match self {
            FlatModel::Shrinker(m) => m.weight_sum(),
            FlatModel::Translator(m) => m.weight_sum(),
        }
    }

    pub fn chi(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            FlatModel::Shrinker(m) => shrinker_chi(m, x),
            FlatModel::Translator(m) => translator_chi(m, x),
        }
    }

    pub fn ambient(&self) -> &dyn AmbientModel {
        match self {
            FlatModel::Shrinker(m) => m,
            FlatModel::Translator(m) => m,
        }
    }

    pub fn immerse(&self, x: &[f64], s: f64) -> Vec<f64> {
        match self {
            FlatModel::Shrinker(m) => m.immerse(x, s),
            FlatModel::Translator(m) => m.immerse(x, s),
        }
    }
}

/// Deterministic sample of `count` points of `V_c` in the real slice.
///
/// Shrinker levels use random directions scaled radially onto the quadric,
/// skipping directions too close to the asymptotic cone. Translator levels
/// sample graph coordinates uniformly in `[-2, 2]^d`.
pub fn level_set_sample(
    model: &FlatModel,
    c: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if !c.is_finite() {
        return Err(LmcfError::NumericalDomain(format!("c = {c}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match model {
        FlatModel::Shrinker(m) => {
            if c == 0.0 {
                if m.is_definite() {
                    return Err(LmcfError::EmptyLevel("c = 0 meets only the origin".into()));
                }
                return Err(LmcfError::OutsideDomain(
                    "c = 0 is the singular cone level".into(),
                ));
            }
            if m.is_definite() && (m.weights()[0] as f64).signum() != c.signum() {
                return Err(LmcfError::EmptyLevel(format!(
                    "moment has the sign of the weights, level c = {c} is unreachable"
                )));
            }
            let lmax = m.weights().iter().map(|l| l.abs()).max().unwrap() as f64;
            let mut out = Vec::with_capacity(count);
            let mut attempts = 0usize;
            while out.len() < count {
                attempts += 1;
                if attempts > 10_000 * (count + 1) {
                    return Err(LmcfError::EmptyLevel("rejection sampling exhausted".into()));
                }
                let u: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let r2: f64 = u.iter().map(|v| v * v).sum();
                if !(1e-6..=1.0).contains(&r2) {
                    continue;
                }
                let u: Vec<f64> = u.iter().map(|v| v / r2.sqrt()).collect();
                let q = m.real_moment(&u);
                if q.signum() != c.signum() || q.abs() < 0.025 * lmax {
                    continue;
                }
                let s = (c / q).sqrt();
                out.push(u.iter().map(|v| v * s).collect());
            }
            Ok(out)
        }
        FlatModel::Translator(m) => (0..count)
            .map(|_| {
                let x: Vec<f64> = (0..m.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
                m.level_point(c, &x)
            })
            .collect(),
    }
}
