//! Singularities of the ALE flows: the schedule of times at which the moving
//! level meets a fixed point, the level segment and its sheet census, blow-up
//! weights, rescaled slices and type-I curvature statistics.

use num_complex::Complex64;
use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::ale::{
    act_sheet, chart_domain_margin, chart_inverse, chart_metric, chart_weights, gluing_pairs,
    local_chart, polygon_floor, quotient_real_distance, solve_level, subtorus_moment, vertex,
    AleParams, QuotientPoint, Sheet, SubtorusAction, UnionFind,
};
use crate::curvature::{curvature_in_metric, ImmersedPatch, MetricField};
use crate::error::{check_finite, LmcfError, Result};
use crate::flat::ShrinkerModel;
use crate::flow::AleSlice;
use crate::geometry::QuaternionicPoint;

/// Window radius for rescaled comparisons and the default type-I radius factor.
pub const WINDOW_RADIUS: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleCase {
    /// `b/a > 0`: times increase with `k`.
    SlopePositive,
    /// `-(n+1) < b/a < 0`, non-integer: times rise to a peak at `m₀`.
    SlopeIntermediate,
    /// `b/a < -(n+1)`: times decrease with `k`.
    SlopeSteep,
    /// `a = 0`: the flow does not move.
    Static,
}

/// Times `t_k` at which the level `c_t = c₀ - t a` passes through `v_k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSchedule {
    pub case: ScheduleCase,
    pub times: Vec<f64>,
    /// Vertex where the flow first becomes singular, if it ever does.
    pub k0: Option<usize>,
    pub m0: Option<usize>,
    pub i0: Option<usize>,
    pub j0: Option<usize>,
    /// First positive singular time.
    pub first_singular: Option<f64>,
    /// The initial level misses the real slice entirely.
    pub empty: bool,
}

/// `a x_k + b y_k`, the `H`-moment of the vertex `v_k`.
pub fn vertex_moment(params: &AleParams, action: SubtorusAction, k: usize) -> f64 {
    let (x, y) = vertex(params, k);
    action.a as f64 * x + action.b as f64 * y
}

fn fixed_level_tol(params: &AleParams, c0: f64) -> f64 {
    1e-12 * (1.0 + c0.abs() + params.h().iter().map(|h| h.abs()).sum::<f64>())
}

fn check_off_fixed_levels(params: &AleParams, action: SubtorusAction, c0: f64) -> Result<()> {
    check_finite("c0", &[c0])?;
    let tol = fixed_level_tol(params, c0);
    for k in 0..=params.n() {
        if (vertex_moment(params, action, k) - c0).abs() <= tol {
            return Err(LmcfError::OnFixedLevel { c: c0 });
        }
    }
    Ok(())
}

/// `m₀`, the unique integer with `n + b/a < m₀ < n + 1 + b/a`, computed exactly.
pub fn peak_index(n: usize, a: i64, b: i64) -> Option<usize> {
    if a == 0 {
        return None;
    }
    let r = Ratio::new(b, a);
    let lo = Ratio::from_integer(n as i64) + r;
    if lo.is_integer() {
        return None;
    }
    let m = lo.floor().to_integer() + 1;
    if m < 0 || m > n as i64 || Ratio::from_integer(m) >= lo + 1 {
        return None;
    }
    Some(m as usize)
}

/// The singular-time schedule of the flow starting at level `c0`.
pub fn singular_schedule(
    params: &AleParams,
    action: SubtorusAction,
    c0: f64,
) -> Result<SingularSchedule> {
    check_off_fixed_levels(params, action, c0)?;
    let n = params.n();
    if action.a == 0 {
        return Ok(SingularSchedule {
            case: ScheduleCase::Static,
            times: Vec::new(),
            k0: None,
            m0: None,
            i0: None,
            j0: None,
            first_singular: None,
            empty: false,
        });
    }
    let a = action.a as f64;
    let times: Vec<f64> = (0..=n)
        .map(|k| (c0 - vertex_moment(params, action, k)) / a)
        .collect();
    // H_{a,b} = H_{-a,-b}, so classify by the ratio alone.
    let r = Ratio::new(action.b, action.a);
    let t = |k: i64| -> f64 {
        if k < 0 {
            f64::NEG_INFINITY
        } else if k as usize > n {
            f64::INFINITY
        } else {
            times[k as usize]
        }
    };
    let mut out = SingularSchedule {
        case: ScheduleCase::SlopePositive,
        times: times.clone(),
        k0: None,
        m0: None,
        i0: None,
        j0: None,
        first_singular: None,
        empty: false,
    };
    if r > Ratio::from_integer(0) {
        let k0 = (0..=n as i64 + 1)
            .find(|&k| t(k - 1) < 0.0 && 0.0 < t(k))
            .unwrap() as usize;
        out.i0 = Some(k0);
        if k0 <= n {
            out.k0 = Some(k0);
            out.first_singular = Some(times[k0]);
        }
    } else if r < Ratio::from_integer(-(n as i64 + 1)) {
        out.case = ScheduleCase::SlopeSteep;
        // Decreasing times: t_{-1} = +∞, t_{n+1} = -∞.
        let td = |k: i64| {
            if k < 0 {
                f64::INFINITY
            } else if k as usize > n {
                f64::NEG_INFINITY
            } else {
                times[k as usize]
            }
        };
        let j0 = (0..=n as i64 + 1)
            .find(|&k| td(k - 1) > 0.0 && 0.0 > td(k))
            .unwrap() as usize;
        out.j0 = Some(j0);
        if j0 >= 1 {
            out.k0 = Some(j0 - 1);
            out.first_singular = Some(times[j0 - 1]);
        }
    } else {
        out.case = ScheduleCase::SlopeIntermediate;
        let m0 = peak_index(n, action.a, action.b)
            .ok_or_else(|| LmcfError::OutsideDomain(format!("b/a = {r} has no peak index")))?;
        out.m0 = Some(m0);
        if times[m0] < 0.0 {
            out.empty = true;
            return Ok(out);
        }
        let i0 = (0..=m0 as i64)
            .find(|&k| t(k - 1) < 0.0 && 0.0 < t(k))
            .unwrap() as usize;
        let td = |k: i64| {
            if k as usize > n {
                f64::NEG_INFINITY
            } else {
                times[k as usize]
            }
        };
        let j0 = (m0 as i64 + 1..=n as i64 + 1)
            .find(|&k| td(k - 1) > 0.0 && 0.0 > td(k))
            .unwrap() as usize;
        out.i0 = Some(i0);
        out.j0 = Some(j0);
        let (k0, ts) = if times[i0] <= times[j0 - 1] {
            (i0, times[i0])
        } else {
            (j0 - 1, times[j0 - 1])
        };
        out.k0 = Some(k0);
        out.first_singular = Some(ts);
    }
    Ok(out)
}

/// Chart weights of `H_{a,b}` at `P_{k0}`, with the matching flat shrinker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlowupWeights {
    pub lambda1: i64,
    pub lambda2: i64,
    pub k0: usize,
}

impl BlowupWeights {
    pub fn new(n: usize, action: SubtorusAction, k0: usize) -> Result<Self> {
        if k0 > n {
            return Err(LmcfError::OutsideDomain(format!(
                "k0 = {k0} exceeds n = {n}"
            )));
        }
        let (lambda1, lambda2) = chart_weights(n, k0, action.a, action.b);
        Ok(Self {
            lambda1,
            lambda2,
            k0,
        })
    }

    /// The flat model `C²` with weights `(λ1, λ2)`.
    pub fn shrinker(&self) -> Result<ShrinkerModel> {
        ShrinkerModel::new(vec![self.lambda1, self.lambda2])
    }
}

/// One case of the sign check over the integer grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignCase {
    pub n: usize,
    pub a: i64,
    pub b: i64,
    pub m0: usize,
    pub peak_positive: bool,
    pub others_mixed: bool,
    /// `t_k` increases exactly for `k < m₀` (sign of `λ2^{(k)}`).
    pub unimodal_at_m0: bool,
}

impl SignCase {
    pub fn holds(&self) -> bool {
        self.peak_positive && self.others_mixed && self.unimodal_at_m0
    }
}

/// Every `(n, a, b)` with `n ≤ n_max`, `1 ≤ a ≤ a_max`, `gcd(a, b) = 1` and
/// `b/a ∈ (-(n+1), 0)` non-integer, checked in integer arithmetic.
pub fn sign_grid(n_max: usize, a_max: i64) -> Vec<SignCase> {
    let mut out = Vec::new();
    for n in 1..=n_max {
        for a in 1..=a_max {
            for b in (-(n as i64 + 1) * a + 1)..0 {
                if num_integer::gcd(a, b) != 1 || b % a == 0 {
                    continue;
                }
                let m0 = peak_index(n, a, b).expect("window contains an integer");
                let (p1, p2) = chart_weights(n, m0, a, b);
                let mut others_mixed = true;
                let mut unimodal = true;
                for k in 0..=n {
                    let (l1, l2) = chart_weights(n, k, a, b);
                    if k != m0 && l1 * l2 >= 0 {
                        others_mixed = false;
                    }
                    // t_{k+1} - t_k has the sign of -λ2^{(k)}.
                    if k < n && ((k < m0) != (l2 < 0)) {
                        unimodal = false;
                    }
                }
                out.push(SignCase {
                    n,
                    a,
                    b,
                    m0,
                    peak_positive: p1 > 0 && p2 > 0,
                    others_mixed,
                    unimodal_at_m0: unimodal,
                });
            }
        }
    }
    out
}

/// Edge `l_k` containing the boundary point of the polygon at height `y`.
pub fn edge_at_height(params: &AleParams, y: f64) -> Option<usize> {
    let h = params.h();
    if y > -h[0] {
        return Some(0);
    }
    for k in 1..=params.n() {
        if y > -h[k] && y < -h[k - 1] {
            return Some(k);
        }
    }
    if y < -h[params.n()] {
        return Some(params.n() + 1);
    }
    None
}

/// `r_c = {a x + b y = c} ∩ Δ`, a segment or a ray, parametrized by arc length.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSegment {
    pub start: [f64; 2],
    pub start_edge: usize,
    /// Far endpoint and its edge; `None` for a ray.
    pub end: Option<([f64; 2], usize)>,
    /// Unit direction from `start`.
    pub direction: [f64; 2],
}

impl LevelSegment {
    pub fn length(&self) -> f64 {
        match self.end {
            Some((e, _)) => {
                ((e[0] - self.start[0]).powi(2) + (e[1] - self.start[1]).powi(2)).sqrt()
            }
            None => f64::INFINITY,
        }
    }

    pub fn point(&self, s: f64) -> (f64, f64) {
        (
            self.start[0] + s * self.direction[0],
            self.start[1] + s * self.direction[1],
        )
    }

    pub fn is_ray(&self) -> bool {
        self.end.is_none()
    }

    /// Edges met by the segment: one for a ray, two for a segment.
    pub fn edges(&self) -> Vec<usize> {
        let mut e = vec![self.start_edge];
        if let Some((_, k)) = self.end {
            e.push(k);
        }
        e
    }
}

fn unit(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

/// Intersection of the level `{⟨μ_G, w^{a,b}⟩ = c}` with the moment polygon.
pub fn level_segment(params: &AleParams, action: SubtorusAction, c: f64) -> Result<LevelSegment> {
    check_off_fixed_levels(params, action, c)?;
    let (a, b) = (action.a as f64, action.b as f64);
    let edge = |y: f64| {
        edge_at_height(params, y).ok_or(LmcfError::BoundaryAmbiguity {
            stratum: "vertex".into(),
            distance: 0.0,
        })
    };
    if action.a == 0 {
        let y = c / b;
        let x = polygon_floor(params, y);
        return Ok(LevelSegment {
            start: [x, y],
            start_edge: edge(y)?,
            end: None,
            direction: [1.0, 0.0],
        });
    }
    let g = |y: f64| (c - b * y) / a - polygon_floor(params, y);
    let n = params.n();
    let ys: Vec<f64> = params.h().iter().rev().map(|h| -h).collect();
    let gs: Vec<f64> = ys.iter().map(|&y| g(y)).collect();
    let left_slope = -b / a;
    let right_slope = -b / a - (n as f64 + 1.0);
    let last = ys.len() - 1;

    // Lower end of {G ≥ 0}: None means unbounded below.
    let lower: Option<f64> = if left_slope < 0.0 {
        None
    } else if gs[0] > 0.0 {
        Some(ys[0] - gs[0] / left_slope)
    } else if let Some(i) = (0..last).find(|&i| gs[i] < 0.0 && gs[i + 1] > 0.0) {
        Some(ys[i] + (ys[i + 1] - ys[i]) * (-gs[i]) / (gs[i + 1] - gs[i]))
    } else if right_slope > 0.0 {
        Some(ys[last] - gs[last] / right_slope)
    } else {
        return Err(LmcfError::EmptyLevel(format!(
            "level c = {c} misses the polygon"
        )));
    };
    let upper: Option<f64> = if right_slope > 0.0 {
        None
    } else if gs[last] > 0.0 {
        Some(ys[last] - gs[last] / right_slope)
    } else if let Some(i) = (0..last).rev().find(|&i| gs[i] > 0.0 && gs[i + 1] < 0.0) {
        Some(ys[i] + (ys[i + 1] - ys[i]) * gs[i] / (gs[i] - gs[i + 1]))
    } else if left_slope < 0.0 {
        Some(ys[0] - gs[0] / left_slope)
    } else {
        return Err(LmcfError::EmptyLevel(format!(
            "level c = {c} misses the polygon"
        )));
    };
    let at = |y: f64| [(c - b * y) / a, y];
    let up = unit([-b / a, 1.0]);
    match (lower, upper) {
        (Some(lo), Some(hi)) => {
            if !(hi > lo) {
                return Err(LmcfError::EmptyLevel(format!(
                    "level c = {c} misses the polygon"
                )));
            }
            Ok(LevelSegment {
                start: at(lo),
                start_edge: edge(lo)?,
                end: Some((at(hi), edge(hi)?)),
                direction: up,
            })
        }
        (Some(lo), None) => Ok(LevelSegment {
            start: at(lo),
            start_edge: edge(lo)?,
            end: None,
            direction: up,
        }),
        (None, Some(hi)) => Ok(LevelSegment {
            start: at(hi),
            start_edge: edge(hi)?,
            end: None,
            direction: [-up[0], -up[1]],
        }),
        (None, None) => Err(LmcfError::EmptyLevel(
            "level is unbounded in both directions".into(),
        )),
    }
}

/// A seed of `V_c` in real-slice coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSeed {
    pub sheet: Sheet,
    /// Arc-length parameter along the level segment.
    pub s: f64,
    pub point: Vec<f64>,
}

/// Real-slice point over the segment parameter `s` on the given sheet.
pub fn seed_at(params: &AleParams, seg: &LevelSegment, s: f64, sheet: Sheet) -> Result<LevelSeed> {
    let (x, y) = seg.point(s);
    let q = solve_level(params, x, y, sheet)?;
    Ok(LevelSeed {
        sheet,
        s,
        point: AleSlice::from_rep(q.rep()),
    })
}

/// Arc-length parameters clustered quadratically toward the segment ends,
/// which spaces the seeds evenly in the chart coordinates near an edge.
pub fn seed_parameters(seg: &LevelSegment, per_sheet: usize, ray_extent: f64) -> Vec<f64> {
    let m = per_sheet.max(2);
    (0..m)
        .map(|j| {
            let f = j as f64 / (m - 1) as f64;
            if seg.is_ray() {
                ray_extent * f * f
            } else {
                0.5 * seg.length() * (1.0 - (std::f64::consts::PI * f).cos())
            }
        })
        .collect()
}

/// `per_sheet` seeds on each of the four sheets over `r_c`.
pub fn sample_level(
    params: &AleParams,
    action: SubtorusAction,
    c: f64,
    per_sheet: usize,
    ray_extent: f64,
) -> Result<Vec<LevelSeed>> {
    let seg = level_segment(params, action, c)?;
    let ss = seed_parameters(&seg, per_sheet, ray_extent);
    let mut out = Vec::with_capacity(4 * ss.len());
    for sheet in Sheet::ALL {
        for &s in &ss {
            out.push(seed_at(params, &seg, s, sheet)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentTopology {
    /// Each component is a line.
    Line,
    /// Each component is a circle.
    Circle,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentCensus {
    pub count: usize,
    pub topology: ComponentTopology,
    /// Sheets making up each component, in canonical order.
    pub components: Vec<Vec<Sheet>>,
    /// Edges of the polygon met by `r_c`.
    pub edges: Vec<usize>,
    /// The element of `G_R ∩ H_{a,b}` identifying pairs of points of `V_c × H`.
    pub real_element: Sheet,
}

fn sheet_classes(uf: &mut UnionFind) -> Vec<Vec<Sheet>> {
    let mut groups: Vec<(usize, Vec<Sheet>)> = Vec::new();
    for s in Sheet::ALL {
        let r = uf.find(s.index());
        match groups.iter_mut().find(|(root, _)| *root == r) {
            Some((_, g)) => g.push(s),
            None => groups.push((r, vec![s])),
        }
    }
    groups.into_iter().map(|(_, g)| g).collect()
}

/// Components of `V_c` from the sheet gluing rules at the ends of `r_c`.
pub fn component_census(
    params: &AleParams,
    action: SubtorusAction,
    c: f64,
) -> Result<ComponentCensus> {
    let seg = level_segment(params, action, c)?;
    let mut uf = UnionFind::new(4);
    for k in seg.edges() {
        for (s, t) in gluing_pairs(params.n(), k) {
            uf.union(s.index(), t.index());
        }
    }
    let components = sheet_classes(&mut uf);
    Ok(ComponentCensus {
        count: components.len(),
        topology: if seg.is_ray() {
            ComponentTopology::Line
        } else {
            ComponentTopology::Circle
        },
        components,
        edges: seg.edges(),
        real_element: action.real_element(),
    })
}

/// Components of a sampled `V_c`, joining consecutive samples on a sheet and
/// samples on different sheets that coincide as points of the quotient.
pub fn numeric_component_count(
    params: &AleParams,
    action: SubtorusAction,
    c: f64,
    per_sheet: usize,
) -> Result<usize> {
    let seeds = sample_level(params, action, c, per_sheet, 2.0)?;
    let m = seeds.len() / 4;
    let mut uf = UnionFind::new(seeds.len());
    for s in 0..4 {
        for j in 1..m {
            uf.union(s * m + j - 1, s * m + j);
        }
    }
    let reps: Vec<Vec<f64>> = seeds
        .iter()
        .map(|sd| {
            let half = sd.point.len() / 2;
            QuaternionicPoint::from_real(&sd.point[..half], &sd.point[half..]).map(|q| q.to_real())
        })
        .collect::<Result<_>>()?;
    for j in 0..m {
        for s in 0..4 {
            for t in s + 1..4 {
                let (p, q) = (&reps[s * m + j], &reps[t * m + j]);
                let scale = 1.0 + p.iter().map(|v| v * v).sum::<f64>().sqrt();
                if quotient_real_distance(p, q) < 1e-9 * scale {
                    uf.union(s * m + j, t * m + j);
                }
            }
        }
    }
    Ok(uf.classes())
}

/// Multiplicities of the sampled map `V_c × H → M`, `(p, e^{isξ₀}) ↦ p e^{isξ₀}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Multiplicity {
    pub min: usize,
    pub max: usize,
    pub samples: usize,
}

/// Counts coincident image points over interior seeds and an even grid of
/// `fiber` torus parameters. Points are compared through the chart at the
/// vertex with the largest domain margin over the seeds, each chart
/// coordinate to its own relative tolerance.
pub fn image_multiplicity(
    params: &AleParams,
    action: SubtorusAction,
    c: f64,
    per_sheet: usize,
    fiber: usize,
) -> Result<Multiplicity> {
    if fiber % 2 != 0 || fiber == 0 {
        return Err(LmcfError::Config {
            path: "fiber".into(),
            message: "must be even and positive".into(),
        });
    }
    let seg = level_segment(params, action, c)?;
    let mut ss = seed_parameters(&seg, per_sheet + 2, 2.0);
    // Interior of the polygon only: drop the endpoints on edges.
    ss.remove(0);
    if !seg.is_ray() {
        ss.pop();
    }
    let reps: Vec<QuotientPoint> = ss
        .iter()
        .map(|&s| {
            let (x, y) = seg.point(s);
            solve_level(params, x, y, Sheet::PP)
        })
        .collect::<Result<_>>()?;
    // Moduli, hence chart margins, agree across sheets and along the orbit.
    let margin = |k: usize| {
        reps.iter()
            .map(|q| chart_domain_margin(params, k, q.rep()))
            .fold(f64::INFINITY, f64::min)
    };
    let k0 = (0..=params.n())
        .max_by(|&i, &j| margin(i).total_cmp(&margin(j)))
        .unwrap();
    let mut keys: Vec<[Complex64; 2]> = Vec::new();
    for sheet in Sheet::ALL {
        for q in &reps {
            let q = act_sheet(q.rep(), sheet);
            for j in 0..fiber {
                let t = 2.0 * std::f64::consts::PI * j as f64 / fiber as f64;
                let (u1, u2) = local_chart(params, k0, &action.act(&q, t))?;
                keys.push([u1, u2]);
            }
        }
    }
    let close = |a: Complex64, b: Complex64| (a - b).norm() <= 1e-8 * (1.0 + a.norm());
    let counts: Vec<usize> = keys
        .par_iter()
        .map(|k| {
            keys.iter()
                .filter(|o| close(k[0], o[0]) && close(k[1], o[1]))
                .count()
        })
        .collect();
    Ok(Multiplicity {
        min: *counts.iter().min().unwrap(),
        max: *counts.iter().max().unwrap(),
        samples: keys.len(),
    })
}

/// Radius along direction `θ` in the real chart plane at which the moment
/// reaches `target`, searched on `(0, rho_max]`.
fn chart_radius(
    params: &AleParams,
    action: SubtorusAction,
    k0: usize,
    target: f64,
    theta: f64,
    rho_max: f64,
) -> Result<Option<f64>> {
    let psi = |rho: f64| -> Result<f64> {
        let q = chart_inverse(
            params,
            k0,
            Complex64::new(rho * theta.cos(), 0.0),
            Complex64::new(rho * theta.sin(), 0.0),
        )?;
        Ok(subtorus_moment(params, action, &q.to_real()) - target)
    };
    let s0 = psi(0.0)?.signum();
    let steps = 48;
    let mut lo = 0.0;
    let mut hi = None;
    for i in 1..=steps {
        let r = rho_max * i as f64 / steps as f64;
        if psi(r)?.signum() != s0 {
            hi = Some(r);
            break;
        }
        lo = r;
    }
    let Some(mut hi) = hi else { return Ok(None) };
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if psi(mid)?.signum() == s0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// The rescaled level and flowed points near `P_{k0}`, compared with the
/// limit quadric `½ λ1 v1² + ½ λ2 v2² = a` on the real plane `|v| ≤ 5`.
#[derive(Debug, Clone, Serialize)]
pub struct RescaledSlice {
    pub tau: f64,
    /// Rescaled flowed points inside the window.
    pub flow_points: Vec<[f64; 2]>,
    /// Rescaled points of the level `V_{c_t}` inside the window.
    pub level_points: Vec<[f64; 2]>,
    /// Symmetric max-min distance between the samples and the quadric.
    pub distance: f64,
    /// Largest distance from a flowed point to the quadric.
    pub flow_distance: f64,
}

type Polyline = Vec<Vec<[f64; 2]>>;

fn polyline(points: &[Option<[f64; 2]>], closed: bool) -> Polyline {
    let mut runs: Polyline = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for p in points {
        match p {
            Some(q) => cur.push(*q),
            None => {
                if !cur.is_empty() {
                    runs.push(std::mem::take(&mut cur));
                }
            }
        }
    }
    if !cur.is_empty() {
        if closed && points[0].is_some() && !runs.is_empty() {
            cur.extend(runs.remove(0));
        } else if closed && runs.is_empty() && cur.len() == points.len() {
            cur.push(cur[0]);
        }
        runs.push(cur);
    }
    runs
}

fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 == 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    };
    ((p[0] - a[0] - t * d[0]).powi(2) + (p[1] - a[1] - t * d[1]).powi(2)).sqrt()
}

fn polyline_distance(p: [f64; 2], lines: &Polyline) -> f64 {
    let mut best = f64::INFINITY;
    for run in lines {
        if run.len() == 1 {
            best = best.min(((p[0] - run[0][0]).powi(2) + (p[1] - run[0][1]).powi(2)).sqrt());
        }
        for w in run.windows(2) {
            best = best.min(segment_distance(p, w[0], w[1]));
        }
    }
    best
}

fn in_window(p: &[f64; 2]) -> bool {
    p[0].hypot(p[1]) <= WINDOW_RADIUS
}

/// Radius of the quadric `½ λ1 v1² + ½ λ2 v2² = a` along `θ`.
pub fn quadric_radius(l1: f64, l2: f64, a: f64, theta: f64) -> Option<f64> {
    let q = 0.5 * (l1 * theta.cos().powi(2) + l2 * theta.sin().powi(2));
    (q * a > 0.0).then(|| (a / q).sqrt())
}

/// Rescales `V_{c_t}` and the flowed points `flow` (real-slice coordinates)
/// near `P_{k0}` by `1/√τ`, `τ = t_{k0} - t`, using `angles` radial samples.
pub fn rescaled_slice(
    params: &AleParams,
    action: SubtorusAction,
    c0: f64,
    k0: usize,
    t: f64,
    flow: &[Vec<f64>],
    angles: usize,
) -> Result<RescaledSlice> {
    let sched = singular_schedule(params, action, c0)?;
    let tk = *sched
        .times
        .get(k0)
        .ok_or_else(|| LmcfError::OutsideDomain(format!("k0 = {k0}")))?;
    let tau = tk - t;
    if !(tau > 0.0) {
        return Err(LmcfError::OutsideDomain(format!(
            "t = {t} is not before t_{k0} = {tk}"
        )));
    }
    let w = BlowupWeights::new(params.n(), action, k0)?;
    let (l1, l2, a) = (w.lambda1 as f64, w.lambda2 as f64, action.a as f64);
    let target = c0 - a * t;
    let sq = tau.sqrt();
    // Sample slightly beyond the window so that edge points have neighbours.
    let reach = 1.25 * WINDOW_RADIUS;
    let thetas: Vec<f64> = (0..angles)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / angles as f64)
        .collect();
    let level: Vec<Option<[f64; 2]>> = thetas
        .par_iter()
        .map(|&th| {
            Ok(chart_radius(params, action, k0, target, th, reach * sq)?
                .map(|r| [r * th.cos() / sq, r * th.sin() / sq]))
        })
        .collect::<Result<_>>()?;
    let quad: Vec<Option<[f64; 2]>> = thetas
        .iter()
        .map(|&th| {
            quadric_radius(l1, l2, a, th)
                .filter(|r| *r <= reach)
                .map(|r| [r * th.cos(), r * th.sin()])
        })
        .collect();
    let mut flow_points = Vec::new();
    for x in flow {
        let half = x.len() / 2;
        let rep = QuaternionicPoint::from_real(&x[..half], &x[half..])?;
        let Ok((u1, u2)) = local_chart(params, k0, &rep) else {
            continue;
        };
        let v = [u1.re / sq, u2.re / sq];
        if in_window(&v) {
            flow_points.push(v);
        }
    }
    let level_points: Vec<[f64; 2]> = level.iter().flatten().copied().filter(in_window).collect();
    if level_points.is_empty() && flow_points.is_empty() {
        return Err(LmcfError::EmptyWindow);
    }
    let quad_line = polyline(&quad, true);
    let level_line = polyline(&level, true);
    let to_quad = |p: &[f64; 2]| polyline_distance(*p, &quad_line);
    let flow_distance = flow_points.iter().map(to_quad).fold(0.0, f64::max);
    let d1 = level_points
        .iter()
        .map(to_quad)
        .fold(flow_distance, f64::max);
    let d2 = quad
        .iter()
        .flatten()
        .filter(|p| in_window(p))
        .map(|p| polyline_distance(*p, &level_line))
        .fold(0.0, f64::max);
    Ok(RescaledSlice {
        tau,
        flow_points,
        level_points,
        distance: d1.max(d2),
        flow_distance,
    })
}

/// `sup |A_t| · √τ` over the part of the evolved Lagrangian inside the
/// chart ball of radius `R √τ` about the singular point.
#[derive(Debug, Clone, Serialize)]
pub struct TypeOneSample {
    pub tau: f64,
    pub sup_a: f64,
    pub product: f64,
    pub points: usize,
}

fn type_one_from_radius<R>(
    tau: f64,
    radius: f64,
    weights: (f64, f64),
    rho: R,
    metric: Option<(&MetricField, f64)>,
    angles: usize,
) -> Result<TypeOneSample>
where
    R: Fn(f64) -> Result<Option<f64>> + Sync,
{
    let (l1, l2) = weights;
    let sq = tau.sqrt();
    let thetas: Vec<f64> = (0..angles)
        .map(|j| 2.0 * std::f64::consts::PI * j as f64 / angles as f64)
        .collect();
    let values: Vec<Option<f64>> = thetas
        .par_iter()
        .map(|&th| -> Result<Option<f64>> {
            match rho(th)? {
                Some(r) if r <= radius * sq => {}
                _ => return Ok(None),
            }
            let patch = ImmersedPatch::new(2, 1e-3, |u: &[f64]| {
                let r = rho(u[0])?.ok_or(LmcfError::EmptyWindow)?;
                let (x1, x2) = (r * u[0].cos(), r * u[0].sin());
                Ok(vec![
                    x1 * (l1 * u[1]).cos(),
                    x1 * (l1 * u[1]).sin(),
                    x2 * (l2 * u[1]).cos(),
                    x2 * (l2 * u[1]).sin(),
                ])
            });
            // Angles whose difference stencil leaves the window are dropped.
            match curvature_in_metric(&patch, &[th, 0.0], metric) {
                Ok(c) => Ok(Some(c.sff_norm)),
                Err(LmcfError::EmptyWindow | LmcfError::OutsideChart { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<_>>()?;
    let inside: Vec<f64> = values.into_iter().flatten().collect();
    if inside.is_empty() {
        return Err(LmcfError::EmptyWindow);
    }
    let sup_a = inside.iter().copied().fold(0.0, f64::max);
    Ok(TypeOneSample {
        tau,
        sup_a,
        product: sup_a * sq,
        points: inside.len(),
    })
}

/// Type-I statistic for the flat shrinker `C²` with weights `λ` at `c = τ Σλ`.
pub fn type_one_flat(
    weights: (i64, i64),
    tau: f64,
    radius: f64,
    angles: usize,
) -> Result<TypeOneSample> {
    let (l1, l2) = (weights.0 as f64, weights.1 as f64);
    let c = tau * (l1 + l2);
    type_one_from_radius(
        tau,
        radius,
        (l1, l2),
        |th| Ok(quadric_radius(l1, l2, c, th)),
        None,
        angles,
    )
}

/// Type-I statistic on the ALE flow at `τ = t_{k0} - t`, with the second
/// fundamental form taken in the chart metric at `P_{k0}`.
pub fn type_one_ale(
    params: &AleParams,
    action: SubtorusAction,
    c0: f64,
    k0: usize,
    tau: f64,
    radius: f64,
    angles: usize,
) -> Result<TypeOneSample> {
    let sched = singular_schedule(params, action, c0)?;
    let tk = *sched
        .times
        .get(k0)
        .ok_or_else(|| LmcfError::OutsideDomain(format!("k0 = {k0}")))?;
    let w = BlowupWeights::new(params.n(), action, k0)?;
    let target = c0 - action.a as f64 * (tk - tau);
    let rho_max = 1.25 * radius * tau.sqrt();
    let metric = |x: &[f64]| -> Result<Vec<Vec<f64>>> {
        let g = chart_metric(params, k0, &[x[0], x[1], x[2], x[3]])?;
        Ok(g.iter().map(|r| r.to_vec()).collect())
    };
    type_one_from_radius(
        tau,
        radius,
        (w.lambda1 as f64, w.lambda2 as f64),
        |th| chart_radius(params, action, k0, target, th, rho_max),
        Some((&metric, 1e-3 * tau.sqrt())),
        angles,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_example() {
        let p = AleParams::unit(1).unwrap();
        let act = SubtorusAction::new(1, 1, 1).unwrap();
        let s = singular_schedule(&p, act, 2.0).unwrap();
        assert_eq!(s.times, vec![1.0, 3.0]);
        assert_eq!(
            (s.case, s.k0, s.first_singular),
            (ScheduleCase::SlopePositive, Some(0), Some(1.0))
        );
    }

    #[test]
    fn peak_example() {
        assert_eq!(peak_index(2, 2, -3), Some(1));
    }

    #[test]
    fn weights_examples() {
        let w = BlowupWeights::new(2, SubtorusAction::new(2, -3, 2).unwrap(), 1).unwrap();
        assert_eq!((w.lambda1, w.lambda2), (1, 1));
        let w = BlowupWeights::new(2, SubtorusAction::new(2, -3, 2).unwrap(), 0).unwrap();
        assert_eq!((w.lambda1, w.lambda2), (3, -1));
    }

    #[test]
    fn segment_is_ray_for_positive_slope() {
        let p = AleParams::unit(1).unwrap();
        let act = SubtorusAction::new(1, 1, 1).unwrap();
        let seg = level_segment(&p, act, 2.0).unwrap();
        assert!(seg.is_ray());
        assert_eq!(seg.start_edge, 0);
        assert!((seg.start[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn on_vertex_level() {
        let p = AleParams::unit(1).unwrap();
        let act = SubtorusAction::new(1, 1, 1).unwrap();
        assert!(matches!(
            singular_schedule(&p, act, 1.0),
            Err(LmcfError::OnFixedLevel { .. })
        ));
    }
}
