//! Invariant checks shared by the `verify` command and the test suites. Each
//! check measures one residual and compares it with a fixed threshold.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::ale::{
    chart_pushforward, local_chart, mu_g, polygon_floor, solve_level, AleModel, AleParams, Sheet,
    SubtorusAction,
};
use crate::curvature::{
    lagrangian_angle, mean_curvature_chart, mean_curvature_flat, normal_part, relative_error,
    ImmersedPatch,
};
use crate::error::{LmcfError, Result};
use crate::flat::{shrinker_alpha_c, translator_u, FlatModel};
use crate::flow::{chi_general, integrate_flow, AleSlice, IntegratorConfig, SliceFlow};
use crate::geometry::linalg::norm;
use crate::geometry::{AmbientModel, QuaternionicPoint};
use crate::singularity::{level_segment, seed_at, BlowupWeights, LevelSegment};

/// Outcome of one invariant check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    /// Passes when `measured < threshold`.
    pub fn below(name: &str, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured < threshold,
            note: None,
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// Patch `(v, s) ↦ exp(s ξ₀) x(v)` of `V_c × H` for a flat model, where `v`
/// are hyperspherical angles (shrinker) or graph coordinates (translator).
pub fn flat_level_patch<'a>(model: &'a FlatModel, c: f64) -> ImmersedPatch<'a> {
    let m = match model {
        FlatModel::Shrinker(s) => s.dim(),
        FlatModel::Translator(t) => t.dim() + 1,
    };
    ImmersedPatch::new(m, 1e-3, move |u: &[f64]| {
        let (v, s) = u.split_at(m - 1);
        let x = match model {
            FlatModel::Shrinker(sh) => sh.level_point(c, v)?,
            FlatModel::Translator(tr) => tr.level_point(c, v)?,
        };
        Ok(model.immerse(&x, s[0]))
    })
}

/// Random parameters of [`flat_level_patch`] whose level point stays away from
/// the asymptotic cone.
pub fn flat_patch_samples(
    model: &FlatModel,
    c: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * (count + 1) {
            return Err(LmcfError::EmptyLevel(format!(
                "no usable samples on the level c = {c}"
            )));
        }
        let u: Vec<f64> = match model {
            FlatModel::Shrinker(sh) => {
                let d = sh.dim();
                let mut u: Vec<f64> = (0..d - 1)
                    .map(|_| rng.gen_range(0.15..std::f64::consts::PI - 0.15))
                    .collect();
                if d == 2 {
                    u[0] = rng.gen_range(0.0..2.0 * std::f64::consts::PI);
                }
                let dir = crate::flat::hyperspherical(&u);
                let lmax = sh.weights().iter().map(|l| l.abs()).max().unwrap() as f64;
                let q = sh.real_moment(&dir);
                if q.signum() != c.signum() || q.abs() < 0.05 * lmax {
                    continue;
                }
                u
            }
            FlatModel::Translator(tr) => (0..tr.dim()).map(|_| rng.gen_range(-1.5..1.5)).collect(),
        };
        let mut u = u;
        u.push(rng.gen_range(0.0..2.0 * std::f64::consts::PI));
        out.push(u);
    }
    Ok(out)
}

/// `|H - α_c pos^⊥|` (shrinker) or `|H - u^⊥|` (translator), relative to
/// `|H|`; absolute `|H|` when the target vanishes.
pub fn soliton_residual(model: &FlatModel, c: f64, samples: &[Vec<f64>]) -> Result<f64> {
    let patch = flat_level_patch(model, c).with_richardson();
    let mut worst: f64 = 0.0;
    for u in samples {
        let s = mean_curvature_flat(&patch, u)?;
        let target = match model {
            FlatModel::Shrinker(sh) => {
                let alpha = shrinker_alpha_c(sh, c)?;
                normal_part(&s.point, &s.tangents)?
                    .iter()
                    .map(|v| alpha * v)
                    .collect::<Vec<_>>()
            }
            FlatModel::Translator(tr) => {
                let u: Vec<f64> = translator_u(tr).iter().flat_map(|&r| [r, 0.0]).collect();
                normal_part(&u, &s.tangents)?
            }
        };
        let err = if norm(&target) == 0.0 {
            norm(&s.mean_curvature)
        } else {
            relative_error(&s.mean_curvature, &target)
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

/// `|H - R_{h*} χ_p| / |H|` for the flat construction; absolute `|H|` when
/// `χ` vanishes.
pub fn flat_pushforward_residual(model: &FlatModel, c: f64, samples: &[Vec<f64>]) -> Result<f64> {
    let patch = flat_level_patch(model, c).with_richardson();
    let m = patch.param_dim;
    let mut worst: f64 = 0.0;
    for u in samples {
        let s = mean_curvature_flat(&patch, u)?;
        let (v, sv) = u.split_at(m - 1);
        let x = match model {
            FlatModel::Shrinker(sh) => sh.level_point(c, v)?,
            FlatModel::Translator(tr) => tr.level_point(c, v)?,
        };
        let chi = model.chi(&x)?;
        let pushed: Vec<f64> = model
            .immerse(&chi, sv[0])
            .iter()
            .zip(model.immerse(&vec![0.0; chi.len()], sv[0]))
            .map(|(a, b)| a - b)
            .collect();
        let err = if norm(&pushed) == 0.0 {
            norm(&s.mean_curvature)
        } else {
            relative_error(&s.mean_curvature, &pushed)
        };
        worst = worst.max(err);
    }
    Ok(worst)
}

/// Distance between angles on the circle.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

/// Lagrangian angle against `Σλ s - π/2`, up to one global frame sign.
#[derive(Debug, Clone, Serialize)]
pub struct AngleReport {
    pub max_error: f64,
    /// `+1` if the frame orientation `(V_c, H)` matched directly, `-1` if the
    /// opposite orientation (angle shifted by `π`) matched.
    pub frame_sign: i8,
}

pub fn angle_formula_check(model: &FlatModel, c: f64, samples: &[Vec<f64>]) -> Result<AngleReport> {
    let patch = flat_level_patch(model, c);
    let m = patch.param_dim;
    let sum = model.weight_sum();
    let mut errs = [0.0f64; 2];
    for u in samples {
        let theta = lagrangian_angle(model.ambient(), &patch, u)?;
        let formula = sum * u[m - 1] - std::f64::consts::FRAC_PI_2;
        errs[0] = errs[0].max(angle_distance(theta, formula));
        errs[1] = errs[1].max(angle_distance(theta, formula + std::f64::consts::PI));
    }
    let (max_error, frame_sign) = if errs[0] <= errs[1] {
        (errs[0], 1)
    } else {
        (errs[1], -1)
    };
    Ok(AngleReport {
        max_error,
        frame_sign,
    })
}

/// Largest drift-law residual over a projected integration.
pub fn drift_residual<F: SliceFlow + ?Sized>(
    flow: &F,
    seeds: &[Vec<f64>],
    c0: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<f64> {
    Ok(integrate_flow(flow, seeds, c0, horizon, cfg)?.max_drift())
}

/// Ratio of unprojected drift residuals at steps `h` and `h/2`; about 16 for
/// a fourth-order scheme.
pub fn rk4_order_ratio<F: SliceFlow + ?Sized>(
    flow: &F,
    seeds: &[Vec<f64>],
    c0: f64,
    horizon: f64,
    step: f64,
) -> Result<(f64, f64, f64)> {
    let run = |h: f64| -> Result<f64> {
        let cfg = IntegratorConfig {
            step: h,
            project: false,
            approach_fraction: 1.0,
            ..Default::default()
        };
        let tr = integrate_flow(flow, seeds, c0, horizon, &cfg)?;
        Ok(tr
            .drift
            .last()
            .unwrap()
            .iter()
            .fold(0.0, |m, d| m.max(d.abs())))
    };
    let coarse = run(step)?;
    let fine = run(0.5 * step)?;
    Ok((coarse, fine, coarse / fine))
}

/// Evolved image point `F_t(u)`: the seed `seed_of(v)` flowed to time `t`
/// and moved by `exp(s ξ₀)`, with `u = (v, s)`.
pub fn flowed_patch<'a, F, S>(
    flow: &'a F,
    c0: f64,
    t: f64,
    cfg: IntegratorConfig,
    seed_of: S,
    param_dim: usize,
) -> ImmersedPatch<'a>
where
    F: SliceFlow + ?Sized,
    S: Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a,
{
    ImmersedPatch::new(param_dim, 1e-3, move |u: &[f64]| {
        let (v, s) = u.split_at(param_dim - 1);
        let seed = seed_of(v)?;
        let x = if t > 0.0 {
            let tr = integrate_flow(flow, &[seed], c0, t, &cfg)?;
            tr.points.last().unwrap()[0].clone()
        } else {
            seed
        };
        Ok(flow.act(&flow.embed(&x), s[0]))
    })
}

/// Largest `|ω(v, w)|` over random unit tangent pairs of a patch.
pub fn kahler_pullback<M: AmbientModel + ?Sized>(
    model: &M,
    patch: &ImmersedPatch,
    points: &[Vec<f64>],
    pairs_per_point: usize,
    seed: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for u in points {
        let p = patch.eval(u)?;
        let jac = patch.tangents(u)?;
        let combo = |rng: &mut ChaCha8Rng| -> Vec<f64> {
            let mut v = vec![0.0; p.len()];
            for t in &jac {
                let c: f64 = rng.gen_range(-1.0..1.0);
                for (vi, ti) in v.iter_mut().zip(t) {
                    *vi += c * ti;
                }
            }
            let n = model.metric(&p, &v, &v).sqrt();
            v.iter().map(|x| x / n).collect()
        };
        for _ in 0..pairs_per_point {
            let v = combo(&mut rng);
            let w = combo(&mut rng);
            worst = worst.max(model.kahler_form(&p, &v, &w).abs());
        }
    }
    Ok(worst)
}

/// Seeds of an ALE level as a function of the arc parameter on one sheet.
pub fn ale_seed_fn<'a>(
    params: &'a AleParams,
    seg: &'a LevelSegment,
    sheet: Sheet,
) -> impl Fn(&[f64]) -> Result<Vec<f64>> + Sync + 'a {
    move |v: &[f64]| Ok(seed_at(params, seg, v[0], sheet)?.point)
}

/// Largest `|μ_G(solve_level(x, y)) - (x, y)|` over random polygon points.
pub fn polygon_roundtrip(params: &AleParams, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = params.h();
    let (ylo, yhi) = (-h[params.n()] - 2.0, -h[0] + 2.0);
    let mut worst: f64 = 0.0;
    for i in 0..count {
        let y = rng.gen_range(ylo..yhi);
        let x = polygon_floor(params, y) + rng.gen_range(0.0..3.0);
        let sheet = Sheet::ALL[i % 4];
        let q = solve_level(params, x, y, sheet)?;
        let (x2, y2) = mu_g(params, q.rep())?;
        worst = worst.max((x2 - x).abs().max((y2 - y).abs()));
    }
    Ok(worst)
}

/// Chart-tier comparison of the oracle mean curvature with the pushforward of
/// `χ`, at level points inside the chart at `P_{k0}`. Returns the largest
/// relative error and the number of points compared.
pub fn ale_chart_curvature(
    params: &AleParams,
    action: SubtorusAction,
    c: f64,
    k0: usize,
    arc_params: &[f64],
    sheet: Sheet,
) -> Result<(f64, usize)> {
    let seg = level_segment(params, action, c)?;
    let w = BlowupWeights::new(params.n(), action, k0)?;
    let (l1, l2) = (w.lambda1 as f64, w.lambda2 as f64);
    let chart_of = |s: f64| -> Result<(f64, f64, QuaternionicPoint)> {
        let x = seed_at(params, &seg, s, sheet)?.point;
        let half = x.len() / 2;
        let rep = QuaternionicPoint::from_real(&x[..half], &x[half..])?;
        let (u1, u2) = local_chart(params, k0, &rep)?;
        Ok((u1.re, u2.re, rep))
    };
    let patch = ImmersedPatch::new(2, 1e-3, |u: &[f64]| {
        let (x1, x2, _) = chart_of(u[0])?;
        Ok(vec![
            x1 * (l1 * u[1]).cos(),
            x1 * (l1 * u[1]).sin(),
            x2 * (l2 * u[1]).cos(),
            x2 * (l2 * u[1]).sin(),
        ])
    });
    let metric = |x: &[f64]| -> Result<Vec<Vec<f64>>> {
        let g = crate::ale::chart_metric(params, k0, &[x[0], x[1], x[2], x[3]])?;
        Ok(g.iter().map(|r| r.to_vec()).collect())
    };
    let model = AleModel::new(params.clone(), action);
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for &s in arc_params {
        let (_, _, rep) = chart_of(s)?;
        let h = mean_curvature_chart(&patch, &[s, 0.0], &metric, 1e-4)?;
        let chi = chi_general(&model, &rep.to_real())?;
        let pushed = chart_pushforward(params, k0, &rep, &chi)?;
        worst = worst.max(relative_error(&h.mean_curvature, &pushed));
        count += 1;
    }
    Ok((worst, count))
}

/// ALE slice flow with a character bias (nonzero only in negative controls).
pub fn ale_flow(params: &AleParams, action: SubtorusAction, bias: f64) -> AleSlice {
    let mut f = AleSlice::new(params.clone(), action);
    f.character_bias = bias;
    f
}
