//! Evolution of real-slice seeds along the vector field `χ = I(α ξ₀^#)`,
//! `α = ⟨a_H, ξ₀⟩ / g(ξ₀^#, ξ₀^#)`, and assembly of the evolved Lagrangians
//! `F_t(p, h) = γ_p(t) h`.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::ale::{AleModel, AleParams, SubtorusAction};
use crate::error::{check_finite, LmcfError, Result};
use crate::flat::FlatModel;
use crate::geometry::linalg::{dot, min_norm_solve};
use crate::geometry::{c_get, AmbientModel, QuaternionicPoint};

/// Largest admissible drift-law residual along an integrated trajectory.
pub const DRIFT_BUDGET: f64 = 1e-8;

/// Neighbour stretching beyond this factor flags a trajectory for reseeding.
pub const RESEED_STRETCH: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    /// Base RK4 step.
    pub step: f64,
    /// Newton tolerance for the projection back onto the real slice.
    pub projection_tol: f64,
    pub max_newton: usize,
    /// Integration halts at `t_s - stop_margin * t_s` before a singular time `t_s`.
    pub stop_margin: f64,
    /// Near a singular time the step is capped at this fraction of the remaining gap.
    pub approach_fraction: f64,
    /// Disable the per-step projection (used for convergence studies).
    pub project: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            step: 1e-3,
            projection_tol: 1e-12,
            max_newton: 25,
            stop_margin: 1e-6,
            approach_fraction: 0.02,
            project: true,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |f: &str, m: &str| {
            Err(LmcfError::Config {
                path: format!("integrator.{f}"),
                message: m.into(),
            })
        };
        if !(self.step > 0.0 && self.step.is_finite()) {
            return bad("step", "must be positive");
        }
        if !(self.projection_tol > 0.0) {
            return bad("projection_tol", "must be positive");
        }
        if self.max_newton == 0 {
            return bad("max_newton", "must be at least 1");
        }
        if !(self.stop_margin > 0.0 && self.stop_margin < 1.0) {
            return bad("stop_margin", "must lie in (0, 1)");
        }
        if !(self.approach_fraction > 0.0 && self.approach_fraction <= 1.0) {
            return bad("approach_fraction", "must lie in (0, 1]");
        }
        Ok(())
    }
}

/// `χ_p` from an ambient model, with an explicit character value.
pub fn chi_with_character<M: AmbientModel + ?Sized>(
    model: &M,
    p: &[f64],
    character: f64,
) -> Result<Vec<f64>> {
    check_finite("p", p)?;
    let xi = model.generator(p);
    let n2 = model.metric(p, &xi, &xi);
    let scale = 1.0 + dot(p, p);
    if !(n2 > 1e-26 * scale) {
        return Err(LmcfError::FixedPointHit { t: f64::NAN });
    }
    let alpha = character / n2;
    let scaled: Vec<f64> = xi.iter().map(|v| alpha * v).collect();
    Ok(model.complex_structure(p, &scaled))
}

/// `χ_p = I(α_p ξ₀^#)` for any [`AmbientModel`].
pub fn chi_general<M: AmbientModel + ?Sized>(model: &M, p: &[f64]) -> Result<Vec<f64>> {
    chi_with_character(model, p, model.character())
}

/// A Lagrangian real slice `L` with the flow vector field restricted to it.
pub trait SliceFlow: Sync {
    fn dim(&self) -> usize;
    /// Embeds a slice point into the ambient model coordinates.
    fn embed(&self, x: &[f64]) -> Vec<f64>;
    fn ambient(&self) -> &dyn AmbientModel;
    /// Character used to build `χ`; differs from `drift_rate` only for fixtures.
    fn chi_character(&self) -> f64 {
        self.drift_rate()
    }
    /// `⟨a_H, ξ₀⟩`, the rate in the drift law `μ(γ(t)) = c₀ - t a_H`.
    fn drift_rate(&self) -> f64 {
        self.ambient().character()
    }
    fn chi(&self, x: &[f64]) -> Result<Vec<f64>> {
        let v = chi_with_character(self.ambient(), &self.embed(x), self.chi_character())?;
        Ok((0..self.dim()).map(|i| v[2 * i]).collect())
    }
    fn moment(&self, x: &[f64]) -> f64 {
        self.ambient().moment(&self.embed(x))
    }
    /// Equations cutting out the slice inside `R^dim`; empty for a linear slice.
    fn constraints(&self, _x: &[f64]) -> Vec<f64> {
        Vec::new()
    }
    fn constraint_jacobian(&self, _x: &[f64]) -> Vec<Vec<f64>> {
        Vec::new()
    }
    /// Positive times at which the evolving level meets a singular point.
    fn singular_times(&self, c0: f64) -> Vec<f64>;
    /// Acts by `exp(s ξ₀)` on an ambient point.
    fn act(&self, p: &[f64], s: f64) -> Vec<f64>;
}

/// Flat model slice `R^d ⊂ C^d` (or `R^{d+1}` for translators).
pub struct FlatSlice {
    pub model: FlatModel,
    /// Added to the character when building `χ`; zero except in negative controls.
    pub character_bias: f64,
}

impl FlatSlice {
    pub fn new(model: FlatModel) -> Self {
        Self {
            model,
            character_bias: 0.0,
        }
    }
}

impl SliceFlow for FlatSlice {
    fn dim(&self) -> usize {
        self.model.slice_dim()
    }
    fn embed(&self, x: &[f64]) -> Vec<f64> {
        x.iter().flat_map(|&r| [r, 0.0]).collect()
    }
    fn ambient(&self) -> &dyn AmbientModel {
        self.model.ambient()
    }
    fn chi_character(&self) -> f64 {
        self.drift_rate() + self.character_bias
    }
    fn moment(&self, x: &[f64]) -> f64 {
        self.model.real_moment(x)
    }
    fn singular_times(&self, c0: f64) -> Vec<f64> {
        match &self.model {
            FlatModel::Shrinker(m) => {
                let a = m.weight_sum();
                if a != 0.0 && c0 / a > 0.0 {
                    vec![c0 / a]
                } else {
                    Vec::new()
                }
            }
            FlatModel::Translator(_) => Vec::new(),
        }
    }
    fn act(&self, p: &[f64], s: f64) -> Vec<f64> {
        match &self.model {
            FlatModel::Shrinker(m) => m.act(p, s),
            FlatModel::Translator(m) => m.act(p, s),
        }
    }
}

/// Real slice of an ALE quotient: real representatives `(z, w) ∈ R^{2(n+1)}`
/// satisfying the real moment equations.
pub struct AleSlice {
    pub model: AleModel,
    pub character_bias: f64,
}

impl AleSlice {
    pub fn new(params: AleParams, action: SubtorusAction) -> Self {
        Self {
            model: AleModel::new(params, action),
            character_bias: 0.0,
        }
    }

    pub fn params(&self) -> &AleParams {
        &self.model.params
    }

    pub fn action(&self) -> SubtorusAction {
        self.model.action
    }

    /// Real coordinates of a real representative.
    pub fn from_rep(p: &QuaternionicPoint) -> Vec<f64> {
        p.z.iter().chain(&p.w).map(|c| c.re).collect()
    }

    pub fn to_rep(&self, x: &[f64]) -> QuaternionicPoint {
        let m = self.params().n() + 1;
        QuaternionicPoint::from_real(&x[..m], &x[m..]).expect("finite slice point")
    }
}

impl SliceFlow for AleSlice {
    fn dim(&self) -> usize {
        2 * (self.params().n() + 1)
    }
    fn embed(&self, x: &[f64]) -> Vec<f64> {
        x.iter().flat_map(|&r| [r, 0.0]).collect()
    }
    fn ambient(&self) -> &dyn AmbientModel {
        &self.model
    }
    fn chi_character(&self) -> f64 {
        self.drift_rate() + self.character_bias
    }
    fn constraints(&self, x: &[f64]) -> Vec<f64> {
        let m = self.params().n() + 1;
        let (z, w) = x.split_at(m);
        let alpha = self.params().alpha();
        let mut out = Vec::with_capacity(2 * (m - 1));
        for k in 1..m {
            out.push(
                0.5 * (z[k] * z[k] - w[k] * w[k] - z[k - 1] * z[k - 1] + w[k - 1] * w[k - 1])
                    - alpha[k - 1],
            );
        }
        for k in 1..m {
            out.push(z[k] * w[k] - z[k - 1] * w[k - 1]);
        }
        out
    }
    fn constraint_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let m = self.params().n() + 1;
        let mut rows = Vec::with_capacity(2 * (m - 1));
        for k in 1..m {
            let mut r = vec![0.0; 2 * m];
            r[k] = x[k];
            r[k - 1] = -x[k - 1];
            r[m + k] = -x[m + k];
            r[m + k - 1] = x[m + k - 1];
            rows.push(r);
        }
        for k in 1..m {
            let mut r = vec![0.0; 2 * m];
            r[k] = x[m + k];
            r[m + k] = x[k];
            r[k - 1] = -x[m + k - 1];
            r[m + k - 1] = -x[k - 1];
            rows.push(r);
        }
        rows
    }
    fn singular_times(&self, c0: f64) -> Vec<f64> {
        match crate::singularity::singular_schedule(self.params(), self.action(), c0) {
            Ok(s) => s.times.into_iter().filter(|t| *t > 0.0).collect(),
            Err(_) => Vec::new(),
        }
    }
    fn act(&self, p: &[f64], s: f64) -> Vec<f64> {
        let rep = QuaternionicPoint::from_interleaved(p).expect("finite representative");
        self.action().act(&rep, s).to_real()
    }
}

/// Why integration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum HaltReason {
    Horizon,
    NearSingularity { singular_time: f64 },
}

/// Samples `γ_p(t)` on a shared time grid for every seed.
#[derive(Debug, Clone, Serialize)]
pub struct FlowTrajectory {
    pub times: Vec<f64>,
    /// `points[i][s]` is seed `s` at `times[i]`.
    pub points: Vec<Vec<Vec<f64>>>,
    /// `drift[i][s] = μ(γ_s(t_i)) - (c₀(s) - t_i a_H)`.
    pub drift: Vec<Vec<f64>>,
    /// Initial moment value of each seed.
    pub c0: Vec<f64>,
    pub drift_rate: f64,
    pub halt: HaltReason,
    /// Largest Newton iteration count used by any projection.
    pub max_newton_used: usize,
    /// Largest ratio of a neighbour gap (consecutive seeds) to its initial value.
    pub max_stretch: f64,
    /// Set when `max_stretch` exceeds [`RESEED_STRETCH`]: the sampled level
    /// should be regenerated at the current `c_t` before further analysis.
    pub needs_reseed: bool,
}

impl FlowTrajectory {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().flatten().fold(0.0, |m, d| m.max(d.abs()))
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn seed_count(&self) -> usize {
        self.c0.len()
    }

    /// Positions of every seed at sample `i`.
    pub fn snapshot(&self, i: usize) -> &[Vec<f64>] {
        &self.points[i]
    }

    /// Sample index closest to time `t`.
    pub fn index_near(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, ti) in self.times.iter().enumerate() {
            if (ti - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Drift residuals must stay within [`DRIFT_BUDGET`] and times must increase.
    pub fn check_invariants(&self) -> Result<()> {
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LmcfError::CorruptPoint(
                "times are not strictly increasing".into(),
            ));
        }
        let d = self.max_drift();
        if !(d < DRIFT_BUDGET) {
            return Err(LmcfError::CorruptPoint(format!(
                "drift residual {d:.3e} exceeds budget"
            )));
        }
        Ok(())
    }

    /// One JSON object per (time, seed).
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for (i, t) in self.times.iter().enumerate() {
            for (s, p) in self.points[i].iter().enumerate() {
                let rec = serde_json::json!({
                    "t": t,
                    "seed_index": s,
                    "point": p,
                    "drift_residual": self.drift[i][s],
                });
                writeln!(out, "{rec}")?;
            }
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let dim = self
            .points
            .first()
            .and_then(|p| p.first())
            .map_or(0, |p| p.len());
        let mut header = vec!["t".to_string(), "seed_index".to_string()];
        header.extend((0..dim).map(|i| format!("x{i}")));
        header.push("drift_residual".into());
        writeln!(out, "{}", header.join(","))?;
        for (i, t) in self.times.iter().enumerate() {
            for (s, p) in self.points[i].iter().enumerate() {
                let mut row = vec![fmt_f64(*t), s.to_string()];
                row.extend(p.iter().map(|v| fmt_f64(*v)));
                row.push(fmt_f64(self.drift[i][s]));
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

/// Shortest representation that round-trips (at most 17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    serde_json::to_string(&v).unwrap_or_else(|_| v.to_string())
}

/// Time grid with base step, refined geometrically toward a singular time.
pub fn time_grid(
    cfg: &IntegratorConfig,
    horizon: f64,
    singular: Option<f64>,
) -> (Vec<f64>, HaltReason) {
    let (t_end, halt) = match singular {
        Some(ts) if ts - cfg.stop_margin * ts <= horizon => (
            ts - cfg.stop_margin * ts,
            HaltReason::NearSingularity { singular_time: ts },
        ),
        _ => (horizon, HaltReason::Horizon),
    };
    let mut ts = vec![0.0];
    let mut t = 0.0;
    while t < t_end {
        let mut h = cfg.step;
        if let Some(s) = singular {
            if s > t {
                h = h.min(cfg.approach_fraction * (s - t));
            }
        }
        let mut next = t + h;
        if next > t_end || t_end - next < 1e-3 * h {
            next = t_end;
        }
        ts.push(next);
        t = next;
    }
    (ts, halt)
}

fn project<F: SliceFlow + ?Sized>(
    flow: &F,
    x: &mut [f64],
    cfg: &IntegratorConfig,
) -> Result<usize> {
    let scale = 1.0 + dot(x, x).sqrt();
    for it in 0..=cfg.max_newton {
        let c = flow.constraints(x);
        if c.is_empty() {
            return Ok(0);
        }
        let r = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if r <= cfg.projection_tol * scale {
            return Ok(it);
        }
        if it == cfg.max_newton {
            return Err(LmcfError::ProjectionFailure {
                iterations: it,
                residual: r,
            });
        }
        let jac = flow.constraint_jacobian(x);
        let dx = min_norm_solve(&jac, x.len(), &c)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
    }
    unreachable!()
}

fn rk4_step<F: SliceFlow + ?Sized>(flow: &F, x: &[f64], h: f64) -> Result<Vec<f64>> {
    let k1 = flow.chi(x)?;
    let x2: Vec<f64> = x.iter().zip(&k1).map(|(a, k)| a + 0.5 * h * k).collect();
    let k2 = flow.chi(&x2)?;
    let x3: Vec<f64> = x.iter().zip(&k2).map(|(a, k)| a + 0.5 * h * k).collect();
    let k3 = flow.chi(&x3)?;
    let x4: Vec<f64> = x.iter().zip(&k3).map(|(a, k)| a + h * k).collect();
    let k4 = flow.chi(&x4)?;
    Ok((0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Integrates every seed with classical RK4 on a shared grid, projecting back
/// onto the slice after each step. Halts at `horizon`, or shortly before the
/// first positive singular time of the level `c0` if that comes first.
pub fn integrate_flow<F: SliceFlow + ?Sized>(
    flow: &F,
    seeds: &[Vec<f64>],
    c0: f64,
    horizon: f64,
    cfg: &IntegratorConfig,
) -> Result<FlowTrajectory> {
    cfg.validate()?;
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(LmcfError::Config {
            path: "horizon".into(),
            message: "must be positive".into(),
        });
    }
    if seeds.is_empty() {
        return Err(LmcfError::EmptyLevel("no seeds".into()));
    }
    for s in seeds {
        if s.len() != flow.dim() {
            return Err(LmcfError::Dimension {
                expected: flow.dim(),
                got: s.len(),
            });
        }
        check_finite("seed", s)?;
    }
    let singular = flow
        .singular_times(c0)
        .into_iter()
        .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))));
    let (times, halt) = time_grid(cfg, horizon, singular);
    let rate = flow.drift_rate();

    let per_seed: Vec<Result<(Vec<Vec<f64>>, Vec<f64>, f64, usize)>> = seeds
        .par_iter()
        .map(|seed| {
            let mut x = seed.clone();
            let mut newton_max = if cfg.project {
                project(flow, &mut x, cfg)?
            } else {
                0
            };
            let c0s = flow.moment(&x);
            let mut pts = Vec::with_capacity(times.len());
            let mut drift = Vec::with_capacity(times.len());
            pts.push(x.clone());
            drift.push(0.0);
            for w in times.windows(2) {
                let h = w[1] - w[0];
                x = rk4_step(flow, &x, h).map_err(|e| match e {
                    LmcfError::FixedPointHit { .. } => LmcfError::FixedPointHit { t: w[0] },
                    other => other,
                })?;
                if cfg.project {
                    newton_max = newton_max.max(project(flow, &mut x, cfg)?);
                }
                check_finite("trajectory", &x)?;
                drift.push(flow.moment(&x) - (c0s - w[1] * rate));
                pts.push(x.clone());
            }
            Ok((pts, drift, c0s, newton_max))
        })
        .collect();

    let mut points = vec![Vec::with_capacity(seeds.len()); times.len()];
    let mut drift = vec![Vec::with_capacity(seeds.len()); times.len()];
    let mut c0s = Vec::with_capacity(seeds.len());
    let mut max_newton_used = 0;
    for r in per_seed {
        let (pts, dr, c, nm) = r?;
        for (i, (p, d)) in pts.into_iter().zip(dr).enumerate() {
            points[i].push(p);
            drift[i].push(d);
        }
        c0s.push(c);
        max_newton_used = max_newton_used.max(nm);
    }
    let max_stretch = neighbour_stretch(&points);
    Ok(FlowTrajectory {
        times,
        points,
        drift,
        c0: c0s,
        drift_rate: rate,
        halt,
        max_newton_used,
        max_stretch,
        needs_reseed: max_stretch > RESEED_STRETCH,
    })
}

fn neighbour_stretch(points: &[Vec<Vec<f64>>]) -> f64 {
    let gap = |p: &[f64], q: &[f64]| {
        p.iter()
            .zip(q)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    };
    let Some(first) = points.first() else {
        return 1.0;
    };
    let initial: Vec<f64> = first.windows(2).map(|w| gap(&w[0], &w[1])).collect();
    let mut worst: f64 = 1.0;
    for snap in points {
        for (j, w) in snap.windows(2).enumerate() {
            if initial[j] > 0.0 {
                worst = worst.max(gap(&w[0], &w[1]) / initial[j]);
            }
        }
    }
    worst
}

/// Points `F_t(p, h)` of the evolved Lagrangian at sample `index`, one for
/// each seed and each `s` in `h_params` (with `h = exp(s ξ₀)`).
pub fn product_immersion<F: SliceFlow + ?Sized>(
    flow: &F,
    traj: &FlowTrajectory,
    index: usize,
    h_params: &[f64],
) -> Vec<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.seed_count() * h_params.len());
    for x in &traj.points[index] {
        let p = flow.embed(x);
        for &s in h_params {
            out.push(flow.act(&p, s));
        }
    }
    out
}

/// Largest `|Im χ|` relative to `|χ|` over the given ambient points:
/// `χ` must be tangent to the real slice.
pub fn chi_imaginary_part<M: AmbientModel + ?Sized>(model: &M, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in points {
        let v = chi_general(model, p)?;
        let m = v.len() / 2;
        let im = (0..m).map(|i| c_get(&v, i).im.powi(2)).sum::<f64>().sqrt();
        let re = (0..m).map(|i| c_get(&v, i).re.powi(2)).sum::<f64>().sqrt();
        worst = worst.max(im / re.max(1e-300));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::ShrinkerModel;

    #[test]
    fn grid_refines_toward_singularity() {
        let cfg = IntegratorConfig::default();
        let (ts, halt) = time_grid(&cfg, 10.0, Some(1.0));
        assert!(matches!(halt, HaltReason::NearSingularity { .. }));
        assert!((ts.last().unwrap() - (1.0 - 1e-6)).abs() < 1e-15);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn round_circle_shrinks() {
        let flow = FlatSlice::new(FlatModel::Shrinker(ShrinkerModel::new(vec![1, 1]).unwrap()));
        let seeds = vec![vec![2f64.sqrt(), 0.0], vec![1.0, 1.0]];
        let traj = integrate_flow(&flow, &seeds, 1.0, 0.25, &IntegratorConfig::default()).unwrap();
        let last = traj.points.last().unwrap();
        for p in last {
            let r2 = p[0] * p[0] + p[1] * p[1];
            assert!((r2 - (2.0 - 4.0 * 0.25)).abs() < 1e-10);
        }
        assert!(traj.max_drift() < 1e-10);
    }
}
