use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{check_dim, check_finite, LmcfError, Result};
use crate::geometry::fd::try_fd_directional;
use crate::geometry::linalg::{dot, gram_orthonormalize, max_abs};

/// Reads complex entry `i` of an interleaved real vector `[re0, im0, re1, im1, ...]`.
#[inline]
pub fn c_get(x: &[f64], i: usize) -> Complex64 {
    Complex64::new(x[2 * i], x[2 * i + 1])
}

#[inline]
pub fn c_set(x: &mut [f64], i: usize, c: Complex64) {
    x[2 * i] = c.re;
    x[2 * i + 1] = c.im;
}

/// A finite vector in C^m.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        for (i, c) in entries.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(LmcfError::NumericalDomain(format!("entry {i} = {c}")));
            }
        }
        Ok(Self(entries))
    }

    pub fn from_real_parts(x: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&r| Complex64::new(r, 0.0)).collect())
    }

    pub fn from_interleaved(x: &[f64]) -> Result<Self> {
        if x.len() % 2 != 0 {
            return Err(LmcfError::Dimension {
                expected: x.len() + 1,
                got: x.len(),
            });
        }
        Self::new((0..x.len() / 2).map(|i| c_get(x, i)).collect())
    }

    pub fn to_interleaved(&self) -> Vec<f64> {
        self.0.iter().flat_map(|c| [c.re, c.im]).collect()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A point `(z, w)` of H^{n+1} = C^{n+1} x C^{n+1}.
#[derive(Debug, Clone, PartialEq)]
pub struct QuaternionicPoint {
    pub z: Vec<Complex64>,
    pub w: Vec<Complex64>,
}

impl QuaternionicPoint {
    pub fn new(z: Vec<Complex64>, w: Vec<Complex64>) -> Result<Self> {
        check_dim(z.len(), w.len())?;
        ComplexVector::new(z.clone())?;
        ComplexVector::new(w.clone())?;
        Ok(Self { z, w })
    }

    pub fn from_real(z: &[f64], w: &[f64]) -> Result<Self> {
        Self::new(
            z.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
            w.iter().map(|&r| Complex64::new(r, 0.0)).collect(),
        )
    }

    /// Number of quaternionic coordinates, `n + 1`.
    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    /// Interleaved real layout: z entries first, then w entries.
    pub fn to_real(&self) -> Vec<f64> {
        self.z
            .iter()
            .chain(&self.w)
            .flat_map(|c| [c.re, c.im])
            .collect()
    }

    pub fn from_interleaved(x: &[f64]) -> Result<Self> {
        if x.len() % 4 != 0 {
            return Err(LmcfError::Dimension {
                expected: 4 * (x.len() / 4 + 1),
                got: x.len(),
            });
        }
        let m = x.len() / 4;
        Self::new(
            (0..m).map(|i| c_get(x, i)).collect(),
            (0..m).map(|i| c_get(x, m + i)).collect(),
        )
    }

    /// Componentwise complex conjugate.
    pub fn conj(&self) -> Self {
        Self {
            z: self.z.iter().map(|c| c.conj()).collect(),
            w: self.w.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.z.iter().chain(&self.w).map(|c| c.norm_sqr()).sum()
    }
}

/// A Kähler manifold with Calabi-Yau volume form and a Hamiltonian circle
/// action, presented in real coordinates.
///
/// Points and tangent vectors are real arrays of length `real_dim()`. For a
/// Kähler quotient these are lifts to the ambient space; every bilinear form
/// below is evaluated on the horizontal parts. The acting torus is
/// one-dimensional and the Lie algebra element is a multiple of the fixed
/// generator `ξ₀`.
pub trait AmbientModel: Sync {
    fn real_dim(&self) -> usize;
    /// Complex dimension of the Kähler manifold.
    fn complex_dim(&self) -> usize;
    fn metric(&self, p: &[f64], u: &[f64], v: &[f64]) -> f64;
    fn complex_structure(&self, p: &[f64], v: &[f64]) -> Vec<f64>;
    /// `ω(u, v) = g(I u, v)`.
    fn kahler_form(&self, p: &[f64], u: &[f64], v: &[f64]) -> f64 {
        self.metric(p, &self.complex_structure(p, u), v)
    }
    /// Holomorphic volume form on `complex_dim()` real tangent vectors.
    fn holomorphic_volume(&self, p: &[f64], frame: &[Vec<f64>]) -> Complex64;
    /// Fundamental vector field of `ξ₀` at `p`.
    fn generator(&self, p: &[f64]) -> Vec<f64>;
    /// `⟨μ(p), ξ₀⟩`.
    fn moment(&self, p: &[f64]) -> f64;
    /// `⟨a_H, ξ₀⟩`, the character by which the action rotates the volume form.
    fn character(&self) -> f64;
    /// Maps an arbitrary vector at `p` to a tangent vector of the model.
    fn tangent_project(&self, _p: &[f64], v: &[f64]) -> Vec<f64> {
        v.to_vec()
    }
}

/// Wraps a model and rescales its holomorphic volume form by a constant.
pub struct ScaledVolume<'a, M: AmbientModel + ?Sized> {
    pub inner: &'a M,
    pub factor: Complex64,
}

impl<M: AmbientModel + ?Sized> AmbientModel for ScaledVolume<'_, M> {
    fn real_dim(&self) -> usize {
        self.inner.real_dim()
    }
    fn complex_dim(&self) -> usize {
        self.inner.complex_dim()
    }
    fn metric(&self, p: &[f64], u: &[f64], v: &[f64]) -> f64 {
        self.inner.metric(p, u, v)
    }
    fn complex_structure(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        self.inner.complex_structure(p, v)
    }
    fn holomorphic_volume(&self, p: &[f64], frame: &[Vec<f64>]) -> Complex64 {
        self.factor * self.inner.holomorphic_volume(p, frame)
    }
    fn generator(&self, p: &[f64]) -> Vec<f64> {
        self.inner.generator(p)
    }
    fn moment(&self, p: &[f64]) -> f64 {
        self.inner.moment(p)
    }
    fn character(&self) -> f64 {
        self.inner.character()
    }
    fn tangent_project(&self, p: &[f64], v: &[f64]) -> Vec<f64> {
        self.inner.tangent_project(p, v)
    }
}

/// Builds a unitary frame `(e_1, ..., e_n)` at `p` from candidate vectors:
/// `{e_j, I e_j}` is orthonormal for the model metric.
pub fn unitary_frame<M: AmbientModel + ?Sized>(
    model: &M,
    p: &[f64],
    candidates: &[Vec<f64>],
) -> Result<Vec<Vec<f64>>> {
    let n = model.complex_dim();
    let mut real_basis: Vec<Vec<f64>> = Vec::new();
    let mut frame = Vec::new();
    for c in candidates {
        if frame.len() == n {
            break;
        }
        let v = model.tangent_project(p, c);
        let mut trial = real_basis.clone();
        trial.push(v);
        let Ok(orth) = gram_orthonormalize(&trial, |a, b| model.metric(p, a, b)) else {
            continue;
        };
        let e = orth.last().unwrap().clone();
        let ie = model.complex_structure(p, &e);
        real_basis.push(e.clone());
        real_basis.push(ie);
        // Re-orthonormalize to absorb rounding in I e.
        real_basis = gram_orthonormalize(&real_basis, |a, b| model.metric(p, a, b))?;
        frame.push(e);
    }
    if frame.len() < n {
        return Err(LmcfError::DegenerateFrame(format!(
            "only {} of {} complex directions found",
            frame.len(),
            n
        )));
    }
    Ok(frame)
}

/// `| |Ω(e_1, ..., e_n)| - 1 |` on a unitary frame; the frame itself is checked first.
pub fn check_calabi_yau_normalization<M: AmbientModel + ?Sized>(
    model: &M,
    p: &[f64],
    frame: &[Vec<f64>],
) -> Result<f64> {
    check_dim(model.complex_dim(), frame.len())?;
    let mut reals = Vec::new();
    for e in frame {
        check_dim(model.real_dim(), e.len())?;
        reals.push(e.clone());
        reals.push(model.complex_structure(p, e));
    }
    for (i, a) in reals.iter().enumerate() {
        for (j, b) in reals.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            let got = model.metric(p, a, b);
            if (got - want).abs() > 1e-8 {
                return Err(LmcfError::DegenerateFrame(format!(
                    "frame is not unitary: g(e{i}, e{j}) = {got}"
                )));
            }
        }
    }
    Ok((model.holomorphic_volume(p, frame).norm() - 1.0).abs())
}

/// Largest residuals of the structural identities over a sample of points.
#[derive(Debug, Clone, Default, Serialize)]
pub struct InvariantReport {
    pub metric_symmetry: f64,
    pub complex_structure_square: f64,
    pub kahler_antisymmetry: f64,
    pub compatibility: f64,
    pub moment_identity: f64,
    pub samples: usize,
}

impl InvariantReport {
    pub fn max_residual(&self) -> f64 {
        [
            self.metric_symmetry,
            self.complex_structure_square,
            self.kahler_antisymmetry,
            self.compatibility,
            self.moment_identity,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Checks `g` symmetric, `I² = -1`, `ω` antisymmetric, `g(Iu, Iv) = g(u, v)` and
/// `d⟨μ, ξ₀⟩(v) = -ω(ξ₀^#, v)` on random tangent vectors at every point.
pub fn check_model_invariants<M: AmbientModel + ?Sized>(
    model: &M,
    points: &[Vec<f64>],
    seed: u64,
) -> Result<InvariantReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = model.real_dim();
    let mut rep = InvariantReport {
        samples: points.len(),
        ..Default::default()
    };
    for p in points {
        check_dim(dim, p.len())?;
        check_finite("point", p)?;
        let mut rand_tangent = || {
            let raw: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            model.tangent_project(p, &raw)
        };
        let u = rand_tangent();
        let v = rand_tangent();
        let scale = (model.metric(p, &u, &u) * model.metric(p, &v, &v))
            .sqrt()
            .max(1e-300);
        rep.metric_symmetry = rep
            .metric_symmetry
            .max((model.metric(p, &u, &v) - model.metric(p, &v, &u)).abs() / scale);
        let iu = model.complex_structure(p, &u);
        let iiu = model.complex_structure(p, &iu);
        let hu = model.tangent_project(p, &u);
        let resid: Vec<f64> = iiu.iter().zip(&hu).map(|(a, b)| a + b).collect();
        let unorm = model.metric(p, &u, &u).sqrt().max(1e-300);
        rep.complex_structure_square = rep
            .complex_structure_square
            .max(model.metric(p, &resid, &resid).sqrt() / unorm);
        rep.kahler_antisymmetry = rep
            .kahler_antisymmetry
            .max((model.kahler_form(p, &u, &v) + model.kahler_form(p, &v, &u)).abs() / scale);
        let iv = model.complex_structure(p, &v);
        rep.compatibility = rep
            .compatibility
            .max((model.metric(p, &iu, &iv) - model.metric(p, &u, &v)).abs() / scale);
        let xi = model.generator(p);
        let dmu = try_fd_directional(&|q: &[f64]| Ok(vec![model.moment(q)]), p, &v)?[0];
        let expected = -model.kahler_form(p, &xi, &v);
        let mscale = (model.metric(p, &xi, &xi) * model.metric(p, &v, &v))
            .sqrt()
            .max(1e-12);
        rep.moment_identity = rep.moment_identity.max((dmu - expected).abs() / mscale);
    }
    Ok(rep)
}

/// Euclidean structure on C^m in interleaved coordinates.
pub fn flat_metric(u: &[f64], v: &[f64]) -> f64 {
    dot(u, v)
}

/// Multiplication by `i` in interleaved coordinates.
pub fn flat_complex_structure(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for k in 0..v.len() / 2 {
        out[2 * k] = -v[2 * k + 1];
        out[2 * k + 1] = v[2 * k];
    }
    out
}

/// `dz_1 ∧ ... ∧ dz_m` evaluated on `m` real vectors in interleaved coordinates.
pub fn flat_volume(frame: &[Vec<f64>]) -> Complex64 {
    let m = frame.len();
    let mat: Vec<Vec<Complex64>> = (0..m)
        .map(|r| (0..m).map(|c| c_get(&frame[c], r)).collect())
        .collect();
    complex_det(mat)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn complex_det(mut a: Vec<Vec<Complex64>>) -> Complex64 {
    let n = a.len();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[piv][col].norm() == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if piv != col {
            a.swap(piv, col);
            det = -det;
        }
        det *= a[col][col];
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                let t = a[col][c];
                a[r][c] -= f * t;
            }
        }
    }
    det
}

/// Largest entrywise absolute difference.
pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    max_abs(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn det_of_diagonal() {
        let d = complex_det(vec![
            vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.0)],
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 3.0)],
        ]);
        assert!((d - Complex64::new(0.0, 6.0)).norm() < 1e-15);
    }

    #[test]
    fn quaternionic_round_trip() {
        let p = QuaternionicPoint::new(
            vec![Complex64::new(1.0, 2.0), Complex64::new(3.0, 4.0)],
            vec![Complex64::new(5.0, 6.0), Complex64::new(7.0, 8.0)],
        )
        .unwrap();
        assert_eq!(
            QuaternionicPoint::from_interleaved(&p.to_real()).unwrap(),
            p
        );
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let r = QuaternionicPoint::new(vec![Complex64::new(1.0, 0.0)], vec![]);
        assert!(matches!(r, Err(LmcfError::Dimension { .. })));
    }
}
