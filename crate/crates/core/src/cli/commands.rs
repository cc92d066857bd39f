//! The four commands, each turning a scenario into in-memory artifacts.

use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Horizon, OutputKind, ScenarioConfig};
use super::{Artifact, Outcome};
use crate::ale::{
    chart_distortion, gluing_pairs, polygon as moment_polygon, AleModel, AleParams, Sheet,
    SubtorusAction,
};
use crate::error::{LmcfError, Result};
use crate::flat::{level_set_sample, FlatModel};
use crate::flow::{fmt_f64, integrate_flow, FlatSlice, FlowTrajectory, SliceFlow, DRIFT_BUDGET};
use crate::singularity::{
    component_census, level_segment, numeric_component_count, rescaled_slice, sample_level,
    seed_at, singular_schedule, type_one_ale, type_one_flat, BlowupWeights, ComponentCensus,
    LevelSegment, RescaledSlice, ScheduleCase, TypeOneSample, WINDOW_RADIUS,
};
use crate::verify::{
    ale_chart_curvature, ale_flow, ale_seed_fn, angle_formula_check, flat_level_patch,
    flat_patch_samples, flat_pushforward_residual, flowed_patch, kahler_pullback,
    polygon_roundtrip, soliton_residual, Check,
};

/// Blow-up scales `τ = t_{k0} - t`.
pub const BLOWUP_TAUS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];
const BLOWUP_ANGLES: usize = 1440;
const TYPE_ONE_ANGLES: usize = 720;
/// Chart radii at which the metric distortion about `P_{k0}` is reported.
const DISTORTION_RADII: [f64; 5] = [1e-3, 1e-2, 1e-1, 0.3, 1.0];
/// Relative accuracy tier of the flat finite-difference oracle.
pub const FLAT_TIER: f64 = 1e-4;
/// Relative accuracy tier of the chart oracle on ALE quotients.
pub const CHART_TIER: f64 = 1e-2;
const PULLBACK_BUDGET: f64 = 1e-8;
const ANGLE_BUDGET: f64 = 1e-6;
const MINIMAL_BUDGET: f64 = 1e-6;
const ROUNDTRIP_BUDGET: f64 = 1e-9;
const RAY_EXTENT: f64 = 2.0;

fn flat_slice(cfg: &ScenarioConfig, model: FlatModel) -> FlatSlice {
    let mut f = FlatSlice::new(model);
    f.character_bias = cfg.a_h_offset;
    f
}

/// Horizon to integrate to: the configured value, or just before the first
/// singular time, or `1` when the flow never becomes singular.
pub fn resolve_horizon(cfg: &ScenarioConfig, flow: &dyn SliceFlow) -> f64 {
    match cfg.horizon {
        Horizon::Fixed(t) => t,
        Horizon::Auto => flow
            .singular_times(cfg.c0)
            .into_iter()
            .filter(|t| *t > 0.0)
            .fold(None, |m: Option<f64>, t| Some(m.map_or(t, |m| m.min(t))))
            .map_or(1.0, |t| 0.999 * t),
    }
}

fn ale_seeds(
    params: &AleParams,
    action: SubtorusAction,
    c: f64,
    per_sheet: usize,
) -> Result<Vec<Vec<f64>>> {
    Ok(sample_level(params, action, c, per_sheet, RAY_EXTENT)?
        .into_iter()
        .map(|s| s.point)
        .collect())
}

fn runtime(e: LmcfError) -> LmcfError {
    match e {
        LmcfError::Config { path, message } => {
            LmcfError::CorruptPoint(format!("{path}: {message}"))
        }
        other => other,
    }
}

#[derive(Serialize)]
struct FlowSummary {
    model: &'static str,
    c0: f64,
    horizon: f64,
    final_time: f64,
    halt: crate::flow::HaltReason,
    drift_rate: f64,
    seeds: usize,
    samples: usize,
    max_drift_residual: f64,
    drift_budget: f64,
    drift_within_budget: bool,
    max_newton_used: usize,
    max_stretch: f64,
    needs_reseed: bool,
}

fn model_name(cfg: &ScenarioConfig) -> &'static str {
    match cfg.model {
        super::ModelConfig::Shrinker { .. } => "shrinker",
        super::ModelConfig::Translator { .. } => "translator",
        super::ModelConfig::Ale { .. } => "ale",
    }
}

fn trajectory_artifacts(
    cfg: &ScenarioConfig,
    horizon: f64,
    tr: &FlowTrajectory,
) -> Result<Vec<Artifact>> {
    let mut out = Vec::new();
    for kind in &cfg.outputs {
        match kind {
            OutputKind::Jsonl => {
                let mut buf = Vec::new();
                tr.write_jsonl(&mut buf)?;
                out.push(Artifact::new("trajectory.jsonl", buf));
            }
            OutputKind::Csv => {
                let mut buf = Vec::new();
                tr.write_csv(&mut buf)?;
                out.push(Artifact::new("trajectory.csv", buf));
            }
            OutputKind::Summary => {
                let d = tr.max_drift();
                out.push(Artifact::json(
                    "summary.json",
                    &FlowSummary {
                        model: model_name(cfg),
                        c0: cfg.c0,
                        horizon,
                        final_time: tr.final_time(),
                        halt: tr.halt,
                        drift_rate: tr.drift_rate,
                        seeds: tr.seed_count(),
                        samples: tr.times.len(),
                        max_drift_residual: d,
                        drift_budget: DRIFT_BUDGET,
                        drift_within_budget: d < DRIFT_BUDGET,
                        max_newton_used: tr.max_newton_used,
                        max_stretch: tr.max_stretch,
                        needs_reseed: tr.needs_reseed,
                    },
                ));
            }
            OutputKind::Plot => {
                let mut s = String::from("# t max|drift residual|\n");
                for (t, d) in tr.times.iter().zip(&tr.drift) {
                    let m = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                    s.push_str(&format!("{} {}\n", fmt_f64(*t), fmt_f64(m)));
                }
                out.push(Artifact::new("drift.dat", s));
            }
        }
    }
    Ok(out)
}

/// Integrates the seeds of the initial level up to the resolved horizon.
pub fn integrate(cfg: &ScenarioConfig) -> Result<(f64, FlowTrajectory)> {
    match cfg.flat_model() {
        Some(model) => {
            let f = flat_slice(cfg, model);
            let seeds = level_set_sample(&f.model, cfg.c0, cfg.seeds, cfg.seed)?;
            let h = resolve_horizon(cfg, &f);
            Ok((h, integrate_flow(&f, &seeds, cfg.c0, h, &cfg.integrator)?))
        }
        None => {
            let (params, action) = cfg.ale()?;
            let f = ale_flow(&params, action, cfg.a_h_offset);
            let seeds = ale_seeds(&params, action, cfg.c0, cfg.seeds)?;
            let h = resolve_horizon(cfg, &f);
            Ok((h, integrate_flow(&f, &seeds, cfg.c0, h, &cfg.integrator)?))
        }
    }
}

/// `lmcf flow`: integrate the seeds of the initial level and export them.
pub fn flow(cfg: &ScenarioConfig) -> Result<Outcome> {
    let (horizon, tr) = integrate(cfg)?;
    Ok(Outcome {
        artifacts: trajectory_artifacts(cfg, horizon, &tr)?,
        violated: Vec::new(),
    })
}

/// The moment polygon, its sheet gluing and plot data.
pub fn polygon_artifacts(params: &AleParams) -> Vec<Artifact> {
    let poly = moment_polygon(params);
    let n = params.n();
    let gluing: serde_json::Map<String, serde_json::Value> = (0..=n + 1)
        .map(|k| {
            let pairs: Vec<[&str; 2]> = gluing_pairs(n, k)
                .iter()
                .map(|(s, t)| [s.label(), t.label()])
                .collect();
            (k.to_string(), json!(pairs))
        })
        .collect();
    let doc = json!({
        "n": poly.n,
        "h": poly.h,
        "vertices": poly.vertices,
        "edges": poly.edges,
        "gluing": gluing,
    });
    let mut dat = String::from("# x y (vertices v_0 .. v_n)\n");
    for v in &poly.vertices {
        dat.push_str(&format!("{} {}\n", fmt_f64(v[0]), fmt_f64(v[1])));
    }
    // Unbounded edges: l_0 leaves v_0 along (n+1, 1), l_{n+1} leaves v_n downward.
    let reach = 2.0 + poly.h.iter().fold(0.0f64, |m, h| m.max(h.abs()));
    let (v0, vn) = (poly.vertices[0], poly.vertices[n]);
    let d = ((n + 1) as f64).hypot(1.0);
    let mut rays = String::from("# x y (edge l_0, then edge l_n+1)\n");
    rays.push_str(&format!("{} {}\n", fmt_f64(v0[0]), fmt_f64(v0[1])));
    rays.push_str(&format!(
        "{} {}\n\n",
        fmt_f64(v0[0] + reach * (n + 1) as f64 / d),
        fmt_f64(v0[1] + reach / d)
    ));
    rays.push_str(&format!("{} {}\n", fmt_f64(vn[0]), fmt_f64(vn[1])));
    rays.push_str(&format!("{} {}\n", fmt_f64(vn[0]), fmt_f64(vn[1] - reach)));
    vec![
        Artifact::json("polygon.json", &doc),
        Artifact::new("polygon.dat", dat),
        Artifact::new("polygon_rays.dat", rays),
    ]
}

/// `lmcf polygon`.
pub fn polygon(cfg: &ScenarioConfig) -> Result<Outcome> {
    let (params, _) = cfg.ale()?;
    Ok(Outcome {
        artifacts: polygon_artifacts(&params),
        violated: Vec::new(),
    })
}

/// True when the end of `seg` (not its start) lies nearer `v_{k0}`.
fn ends_near(params: &AleParams, seg: &LevelSegment, k0: usize) -> bool {
    let v = crate::ale::vertex(params, k0);
    let dist = |p: [f64; 2]| (p[0] - v.0).hypot(p[1] - v.1);
    match seg.end {
        Some((e, _)) => dist(e) < dist(seg.start),
        None => false,
    }
}

/// Seeds packed toward the end of `r_{c0}` that converges to `v_{k0}`.
pub fn blowup_seeds(
    params: &AleParams,
    action: SubtorusAction,
    c0: f64,
    k0: usize,
) -> Result<Vec<Vec<f64>>> {
    let seg: LevelSegment = level_segment(params, action, c0)?;
    let from_end = ends_near(params, &seg, k0);
    let len = seg.length();
    let mut ss = vec![0.0];
    ss.extend((0..24).map(|j| 10f64.powf(-(j as f64) / 2.0)));
    let mut out = Vec::new();
    for sheet in Sheet::ALL {
        for &s in &ss {
            if s > len {
                continue;
            }
            let s = if from_end { len - s } else { s };
            out.push(seed_at(params, &seg, s, sheet)?.point);
        }
    }
    Ok(out)
}

#[derive(Serialize)]
struct CensusPair {
    c: f64,
    census: Option<ComponentCensus>,
    numeric_count: Option<usize>,
}

fn census_at(params: &AleParams, action: SubtorusAction, c: f64) -> CensusPair {
    CensusPair {
        c,
        census: component_census(params, action, c).ok(),
        numeric_count: numeric_component_count(params, action, c, 24).ok(),
    }
}

#[derive(Serialize)]
struct DistanceEntry {
    tau: f64,
    distance: f64,
    flow_distance: f64,
    flow_points: usize,
    level_points: usize,
}

/// `lmcf blowup`: singular schedule and the rescaled convergence series.
pub fn blowup(cfg: &ScenarioConfig) -> Result<Outcome> {
    let (params, action) = cfg.ale()?;
    let no_schedule = |why: &str| LmcfError::Config {
        path: "model".into(),
        message: format!("no singularity schedule: {why}"),
    };
    if action.a == 0 {
        return Err(no_schedule("a = 0 gives a static flow"));
    }
    let sched = singular_schedule(&params, action, cfg.c0).map_err(|e| match e {
        LmcfError::OnFixedLevel { .. } => LmcfError::Config {
            path: "c0".into(),
            message: e.to_string(),
        },
        other => other,
    })?;
    debug_assert_ne!(sched.case, ScheduleCase::Static);
    let (Some(k0), Some(tk)) = (sched.k0, sched.first_singular) else {
        return Err(no_schedule("the level never reaches a fixed point"));
    };
    let weights = BlowupWeights::new(params.n(), action, k0)?;
    let a = action.a as f64;
    let delta = 1e-3 * tk.max(1.0);
    let census = json!({
        "initial": census_at(&params, action, cfg.c0),
        "before": census_at(&params, action, cfg.c0 - a * (tk - delta)),
        "after": census_at(&params, action, cfg.c0 - a * (tk + delta)),
    });

    let f = ale_flow(&params, action, cfg.a_h_offset);
    let seeds = blowup_seeds(&params, action, cfg.c0, k0)?;
    let mut distances = Vec::new();
    let mut slices: Vec<RescaledSlice> = Vec::new();
    for &tau in BLOWUP_TAUS.iter().filter(|t| **t < tk) {
        let t = tk - tau;
        let tr = integrate_flow(&f, &seeds, cfg.c0, t, &cfg.integrator).map_err(runtime)?;
        let pts = tr.points.last().unwrap();
        let sl = rescaled_slice(
            &params,
            action,
            cfg.c0,
            k0,
            tr.final_time(),
            pts,
            BLOWUP_ANGLES,
        )?;
        distances.push(DistanceEntry {
            tau: sl.tau,
            distance: sl.distance,
            flow_distance: sl.flow_distance,
            flow_points: sl.flow_points.len(),
            level_points: sl.level_points.len(),
        });
        slices.push(sl);
    }
    let decreasing =
        distances.len() >= 2 && distances.windows(2).all(|w| w[1].distance < w[0].distance);
    let type_one: Vec<TypeOneSample> = BLOWUP_TAUS
        .iter()
        .filter(|t| **t < tk)
        .map(|&tau| {
            type_one_ale(
                &params,
                action,
                cfg.c0,
                k0,
                tau,
                WINDOW_RADIUS,
                TYPE_ONE_ANGLES,
            )
        })
        .collect::<Result<_>>()?;
    let flat_type_one: Vec<TypeOneSample> = BLOWUP_TAUS
        .iter()
        .map(|&tau| {
            type_one_flat(
                (weights.lambda1, weights.lambda2),
                tau,
                WINDOW_RADIUS,
                TYPE_ONE_ANGLES,
            )
        })
        .collect::<Result<_>>()?;
    let constant = type_one.iter().fold(0.0f64, |m, s| m.max(s.product));
    let distortion: Vec<Value> = chart_distortion(&params, k0, &DISTORTION_RADII, 16)?
        .into_iter()
        .map(|(r, d)| json!({"radius": r, "max_deviation": d}))
        .collect();

    let report = json!({
        "schedule": sched,
        "weights": weights,
        "census": census,
        "window_radius": WINDOW_RADIUS,
        "distance_series": distances,
        "distance_decreasing": decreasing,
        "type_one_series": type_one,
        "type_one_constant": constant,
        "flat_type_one_series": flat_type_one,
        "chart_distortion": distortion,
    });

    let mut dist_dat = String::from("# tau distance\n");
    for d in &distances {
        dist_dat.push_str(&format!("{} {}\n", fmt_f64(d.tau), fmt_f64(d.distance)));
    }
    let mut t1_dat = String::from("# tau sup|A|*sqrt(tau)\n");
    for s in &type_one {
        t1_dat.push_str(&format!("{} {}\n", fmt_f64(s.tau), fmt_f64(s.product)));
    }
    let mut artifacts = vec![
        Artifact::json("blowup.json", &report),
        Artifact::new("distance.dat", dist_dat),
        Artifact::new("type_one.dat", t1_dat),
    ];
    if let Some(sl) = slices.last() {
        let mut lvl = String::from("# v1 v2 (rescaled level at the smallest tau)\n");
        for p in &sl.level_points {
            lvl.push_str(&format!("{} {}\n", fmt_f64(p[0]), fmt_f64(p[1])));
        }
        let mut fl = String::from("# v1 v2 (rescaled flowed points at the smallest tau)\n");
        for p in &sl.flow_points {
            fl.push_str(&format!("{} {}\n", fmt_f64(p[0]), fmt_f64(p[1])));
        }
        artifacts.push(Artifact::new("rescaled_level.dat", lvl));
        artifacts.push(Artifact::new("rescaled_flow.dat", fl));
    }
    Ok(Outcome {
        artifacts,
        violated: Vec::new(),
    })
}

fn flat_checks(cfg: &ScenarioConfig, model: FlatModel) -> Result<Vec<Check>> {
    let c = cfg.c0;
    let samples = flat_patch_samples(&model, c, 200, cfg.seed)?;
    let minimal = model.weight_sum() == 0.0 && matches!(model, FlatModel::Shrinker(_));
    let mut checks = Vec::new();
    let sol = soliton_residual(&model, c, &samples)?;
    checks.push(if minimal {
        Check::below("soliton_identity", sol, MINIMAL_BUDGET)
            .with_note("minimal case: absolute |H|")
    } else {
        Check::below("soliton_identity", sol, FLAT_TIER).with_note("flat tier 1e-4, relative")
    });
    let push = flat_pushforward_residual(&model, c, &samples)?;
    checks.push(Check::below(
        "mean_curvature_pushforward",
        push,
        if minimal { MINIMAL_BUDGET } else { FLAT_TIER },
    ));
    let angle = angle_formula_check(&model, c, &samples)?;
    checks.push(
        Check::below("lagrangian_angle", angle.max_error, ANGLE_BUDGET)
            .with_note(format!("frame sign {:+}", angle.frame_sign)),
    );
    let omega = {
        let patch = flat_level_patch(&model, c);
        kahler_pullback(model.ambient(), &patch, &samples[..20], 50, cfg.seed)?
    };
    checks.push(Check::below("lagrangian_pullback", omega, PULLBACK_BUDGET));

    let (_, tr) = integrate(cfg)?;
    checks.push(Check::below("drift_law", tr.max_drift(), DRIFT_BUDGET));
    Ok(checks)
}

fn ale_checks(cfg: &ScenarioConfig) -> Result<(Vec<Check>, Vec<String>)> {
    let (params, action) = cfg.ale()?;
    let mut checks = Vec::new();
    let mut skipped = Vec::new();
    checks.push(Check::below(
        "polygon_roundtrip",
        polygon_roundtrip(&params, 500, cfg.seed)?,
        ROUNDTRIP_BUDGET,
    ));

    let (_, tr) = integrate(cfg)?;
    checks.push(Check::below("drift_law", tr.max_drift(), DRIFT_BUDGET));

    let f = ale_flow(&params, action, cfg.a_h_offset);
    let seg = level_segment(&params, action, cfg.c0)?;
    let span = seg.length().min(RAY_EXTENT);
    let pts: Vec<Vec<f64>> = (0..10)
        .map(|i| vec![span * (0.05 + 0.09 * i as f64), 0.37 * i as f64])
        .collect();
    let model = AleModel::new(params.clone(), action);
    let patch = flowed_patch(
        &f,
        cfg.c0,
        0.5 * tr.final_time(),
        cfg.integrator,
        ale_seed_fn(&params, &seg, Sheet::PP),
        2,
    );
    checks.push(Check::below(
        "lagrangian_pullback",
        kahler_pullback(&model, &patch, &pts, 20, cfg.seed)?,
        PULLBACK_BUDGET,
    ));

    match singular_schedule(&params, action, cfg.c0)?.k0 {
        Some(k0) if action.a != 0 => {
            // measured from the end nearest the vertex, where the chart is valid
            let len = seg.length();
            let from_end = ends_near(&params, &seg, k0);
            let arcs: Vec<f64> = [0.02, 0.1, 0.3, 0.6]
                .iter()
                .map(|s| if from_end { len - s * span } else { s * span })
                .collect();
            match ale_chart_curvature(&params, action, cfg.c0, k0, &arcs, Sheet::PP) {
                Ok((err, _)) => checks.push(
                    Check::below("chart_mean_curvature", err, CHART_TIER)
                        .with_note("chart tier 1e-2 class"),
                ),
                Err(LmcfError::OutsideChart { .. }) => {
                    skipped.push("chart_mean_curvature: level outside the chart".into())
                }
                Err(e) => return Err(e),
            }
        }
        _ => skipped.push("chart_mean_curvature: no singular vertex".into()),
    }
    Ok((checks, skipped))
}

/// `lmcf verify`: invariant checks, failing with the violated names.
pub fn verify(cfg: &ScenarioConfig) -> Result<Outcome> {
    let (checks, skipped) = match cfg.flat_model() {
        Some(model) => (flat_checks(cfg, model)?, Vec::new()),
        None => ale_checks(cfg)?,
    };
    let violated: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name.clone())
        .collect();
    let mut table = format!(
        "{:<28} {:>12} {:>10}  result\n",
        "check", "measured", "threshold"
    );
    for c in &checks {
        table.push_str(&format!(
            "{:<28} {:>12.3e} {:>10.0e}  {}{}\n",
            c.name,
            c.measured,
            c.threshold,
            if c.passed { "pass" } else { "FAIL" },
            c.note
                .as_deref()
                .map(|n| format!(" ({n})"))
                .unwrap_or_default()
        ));
    }
    for s in &skipped {
        table.push_str(&format!("skipped: {s}\n"));
    }
    let report = json!({
        "model": model_name(cfg),
        "checks": checks,
        "skipped": skipped,
        "violated": violated,
        "tiers": {"flat": FLAT_TIER, "chart": CHART_TIER},
    });
    Ok(Outcome {
        artifacts: vec![
            Artifact::json("verify.json", &report),
            Artifact::new("verify.txt", table),
        ],
        violated,
    })
}
