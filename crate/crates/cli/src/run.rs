//! Executes a resolved config: one or more geometry cases, each producing a
//! set of named artifacts.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cutquad::optimizer::sweep_to_csv;
use cutquad::quadrature::CSV_HEADER;
use cutquad::scaling::counts_to_csv;
use cutquad::{
    assemble_scheme, compare_counts, equal_order_sweep, measure_surface_fraction, optimize, partition_element,
    rule_of_thumb, subcell_census, BoxCell, BoxRuleKind, ErrorModel, GeometrySpec, Marking, OptimizeOptions,
    PolynomialSpace, QuadratureScheme, StopRule, ThumbRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, Run};
use crate::{svg, Failure};

/// File name to contents, in a fixed order.
pub type Artifacts = BTreeMap<String, String>;

fn name_of<T: serde::Serialize>(v: T) -> String {
    serde_json::to_value(v).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default()
}

pub fn cases(cfg: &ExperimentConfig) -> Vec<GeometrySpec> {
    let Some(sw) = &cfg.sweep else { return vec![cfg.geometry.clone()] };
    let GeometrySpec::Ellipsoid { r1, r2, phi_deg, dim } = cfg.geometry;
    let or = |v: &Vec<f64>, base: f64| if v.is_empty() { vec![base] } else { v.clone() };
    let mut out = Vec::new();
    if !(sw.r1.is_empty() && sw.r2.is_empty() && sw.phi_deg.is_empty()) || sw.random_cases == 0 {
        for &a in &or(&sw.r1, r1) {
            for &b in &or(&sw.r2, r2) {
                for &phi in &or(&sw.phi_deg, phi_deg) {
                    out.push(GeometrySpec::Ellipsoid { r1: a, r2: b, phi_deg: phi, dim });
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for _ in 0..sw.random_cases {
        let (a, b, phi) = (rng.gen_range(0.2..1.2), rng.gen_range(0.2..1.2), rng.gen_range(0.0..180.0));
        out.push(GeometrySpec::Ellipsoid { r1: a, r2: b, phi_deg: phi, dim });
    }
    out
}

struct Panel {
    label: String,
    scheme: QuadratureScheme,
    error: f64,
}

/// Computes every artifact of one geometry case.
pub fn run_case(cfg: &ExperimentConfig, geometry: &GeometrySpec, with_svg: bool) -> Result<Artifacts, Failure> {
    let d = geometry.dim();
    let field = geometry.build()?;
    let p = partition_element(&*field, &BoxCell::unit(d), cfg.rho_max)?;
    if p.outside {
        return Err(cutquad::Error::NotCut.into());
    }
    let mut files = Artifacts::new();
    let mut results = Vec::new();
    let mut panels = Vec::new();
    files.insert("partition.json".into(), serde_json::to_string_pretty(&p.to_json()).unwrap_or_default());

    let needs_model = cfg.runs.iter().any(|r| *r != Run::Counts);
    let model = if needs_model { Some(ErrorModel::new(&p, PolynomialSpace::new(cfg.k(), d, cfg.norm))?) } else { None };

    let mut sweeps = Vec::new();
    let mut thumbs = format!("{CSV_HEADER}\nstrategy,degrees,points,error\n");
    for run in &cfg.runs {
        match (run, &model) {
            (Run::Adaptive, Some(m)) => {
                let stop = match (cfg.budget, cfg.target_error) {
                    (Some(b), _) => StopRule::Budget(b),
                    (_, Some(e)) => StopRule::TargetError(e),
                    _ => unreachable!("validated"),
                };
                for marking in cfg.marking.to_vec() {
                    let t = optimize(&p, m, OptimizeOptions::new(marking, stop))?;
                    let tag = name_of(marking);
                    files.insert(format!("trace_{tag}.csv"), t.to_csv());
                    let scheme = assemble_scheme(&p, &t.final_idx, BoxRuleKind::Gauss)?;
                    files.insert(format!("scheme_adaptive_{tag}.csv"), scheme.to_csv());
                    results.push(json!({
                        "run": format!("adaptive_{tag}"),
                        "points": t.last().total_points,
                        "error": t.last().e_total,
                        "iterations": t.iterations(),
                        "termination": name_of(t.termination),
                    }));
                    let label = if marking == Marking::SubCell { "sub-cell marking" } else { "level marking" };
                    panels.push(Panel { label: label.into(), scheme, error: t.last().e_total });
                }
            }
            (Run::EqualGauss | Run::EqualUniform, Some(m)) => {
                let kind = if *run == Run::EqualGauss { BoxRuleKind::Gauss } else { BoxRuleKind::Uniform };
                let rows = equal_order_sweep(&p, m, kind, cfg.max_index)?;
                let at = rows[cfg.index];
                let tag = name_of(run);
                let idx = cutquad::RuleIndexList {
                    indices: p.cells().iter().map(|c| cfg.index.min(cutquad::RuleFamily::of(c).max_index())).collect(),
                };
                let scheme = assemble_scheme(&p, &idx, kind)?;
                files.insert(format!("scheme_{tag}.csv"), scheme.to_csv());
                results.push(json!({"run": tag, "index": cfg.index, "points": at.total_points, "error": at.e_total}));
                panels.push(Panel { label: format!("{} order {}", name_of(kind), cfg.index + 1), scheme, error: at.e_total });
                sweeps.push((kind, rows));
            }
            (Run::ThumbA | Run::ThumbB, Some(m)) => {
                let strategy = if *run == Run::ThumbA { ThumbRule::MinimalLowering } else { ThumbRule::UniformLowering };
                let (deg, idx) = rule_of_thumb(&p, strategy, cfg.k_max);
                let scheme = assemble_scheme(&p, &idx, BoxRuleKind::Gauss)?;
                let e = m.evaluate(&scheme).e_total;
                let degrees: Vec<String> = deg.iter().map(usize::to_string).collect();
                let _ = writeln!(thumbs, "{},{},{},{e:e}", name_of(strategy), degrees.join(" "), scheme.total());
                let tag = name_of(run);
                files.insert(format!("scheme_{tag}.csv"), scheme.to_csv());
                results.push(json!({"run": tag, "degrees": deg, "points": scheme.total(), "error": e}));
                panels.push(Panel { label: format!("rule of thumb {}", name_of(strategy)), scheme, error: e });
            }
            (Run::Counts, _) => {
                let rows = compare_counts(&*field, &BoxCell::unit(d), cfg.rho_max, cfg.index)?;
                files.insert("counts.csv".into(), counts_to_csv(&rows));
            }
            (_, None) => unreachable!("model built for every run but counts"),
        }
    }
    if !sweeps.is_empty() {
        files.insert("sweep.csv".into(), sweep_to_csv(&sweeps));
    }
    if cfg.runs.iter().any(|r| matches!(r, Run::ThumbA | Run::ThumbB)) {
        files.insert("thumb.csv".into(), thumbs);
    }

    let sf = measure_surface_fraction(&p);
    let summary = json!({
        "geometry": geometry,
        "rho_max": cfg.rho_max,
        "k": cfg.k(),
        "norm": cfg.norm,
        "census": subcell_census(&p),
        "volume_fraction": sf.eta,
        "surface_measure": sf.s,
        "results": results,
    });
    files.insert("summary.json".into(), serde_json::to_string_pretty(&summary).unwrap_or_default());

    if with_svg && d == 2 && !panels.is_empty() {
        let panels: Vec<_> = panels.iter().map(|q| (q.label.as_str(), &q.scheme, q.error)).collect();
        files.insert("figure.svg".into(), svg::render(&p, &panels));
    }
    Ok(files)
}

fn write_all(dir: &Path, files: &Artifacts) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    for (name, body) in files {
        fs::write(dir.join(name), body)?;
    }
    Ok(())
}

/// Runs every case and writes its artifacts. A single case goes straight into
/// `out`; sweep cases go into `out/case_NNN` with an index in `out/cases.csv`.
pub fn run(cfg: &ExperimentConfig, out: &Path, with_svg: bool) -> Result<Vec<String>, Failure> {
    if cfg.sweep.is_none() {
        let files = run_case(cfg, &cfg.geometry, with_svg)?;
        write_all(out, &files)?;
        return Ok(files.keys().cloned().collect());
    }
    let cases = cases(cfg);
    let outcomes: Vec<Result<Artifacts, Failure>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, g)| {
            let files = run_case(cfg, g, with_svg)?;
            write_all(&out.join(format!("case_{i:03}")), &files)?;
            Ok(files)
        })
        .collect();
    let mut index = format!("{CSV_HEADER}\ncase,r1,r2,phi_deg,status,points,error\n");
    let mut written = Vec::new();
    for (i, (g, o)) in cases.iter().zip(&outcomes).enumerate() {
        let GeometrySpec::Ellipsoid { r1, r2, phi_deg, .. } = g;
        let _ = write!(index, "{i},{r1},{r2},{phi_deg},");
        match o {
            Ok(files) => {
                let first = files
                    .get("summary.json")
                    .and_then(|s| serde_json::from_str::<Value>(s).ok())
                    .and_then(|v| v["results"].get(0).cloned());
                match first {
                    Some(r) => {
                        let _ = writeln!(index, "ok,{},{:e}", r["points"], r["error"].as_f64().unwrap_or(f64::NAN));
                    }
                    None => {
                        let _ = writeln!(index, "ok,,");
                    }
                }
                written.extend(files.keys().map(|k| format!("case_{i:03}/{k}")));
            }
            Err(f) => {
                let _ = writeln!(index, "{},,", f.kind);
            }
        }
    }
    fs::create_dir_all(out)?;
    fs::write(out.join("cases.csv"), index)?;
    written.push("cases.csv".into());
    Ok(written)
}
