//! Command-line front end: scenario file loading, run orchestration,
//! search benchmarking, and SVG trace plots.

use std::fs;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use mp_bench::PlantConfig;
use mp_bench::build_bench_registry;
use mp_bench::PlantState;
use mp_exec::{run_scenario, summary_json, trace_csv, ExecConfig, RunTrace, Scenario};
use mp_refine::{refine_path, RefineConfig};
use mp_search::{parallel_best_path, CostModel, GoalSpec, SearchConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Scenario file could not be parsed; the message names the offending key.
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("run error: {0}")]
    Run(String),
}

fn default_cost() -> CostModel {
    CostModel::uniform(9, 0.1)
}

/// Top-level scenario file: plant model, planner knobs, and the scenario
/// itself. Every section except `scenario` may be omitted and defaults apply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub plant: PlantConfig,
    #[serde(default = "default_cost")]
    pub cost: CostModel,
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub exec: ExecConfig,
    pub scenario: Scenario,
}

pub fn scenario_file_from_str(text: &str) -> Result<ScenarioFile, CliError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
    file.plant
        .validate()
        .map_err(|e| CliError::Schema(e.to_string()))?;
    file.search
        .validate()
        .map_err(|e| CliError::Schema(e.to_string()))?;
    Ok(file)
}

pub fn load_scenario_file(path: &Path) -> Result<ScenarioFile, CliError> {
    let text = fs::read_to_string(path)?;
    scenario_file_from_str(&text)
        .map_err(|e| match e {
            CliError::Schema(msg) => CliError::Schema(format!("{}: {}", path.display(), msg)),
            other => other,
        })
}

/// Built-in stand-to-walk scenario used as the default benchmark workload.
pub fn nominal_scenario_file() -> ScenarioFile {
    ScenarioFile {
        plant: PlantConfig::default(),
        cost: default_cost(),
        search: SearchConfig {
            dt_slack_s: 1.0,
            rng_seed: 1,
            ..SearchConfig::default()
        },
        refine: RefineConfig::default(),
        exec: ExecConfig::default(),
        scenario: Scenario {
            initial_state: PlantState::resting(0.08),
            goal: GoalSpec {
                primitive: mp_core::PrimitiveId("walk".into()),
                xi: vec![0.25, 0.2, 0.0, 0.0],
            },
            disturbances: Vec::new(),
            duration_s: 10.0,
            dt_s: 0.001,
        },
    }
}

/// Run the scenario described by `file` and return the full trace.
pub fn run_scenario_file(file: &ScenarioFile) -> Result<RunTrace, CliError> {
    let registry =
        build_bench_registry(&file.plant).map_err(|e| CliError::Schema(e.to_string()))?;
    run_scenario(
        &file.scenario,
        &file.exec,
        &registry,
        &file.cost,
        &file.search,
        &file.refine,
    )
    .map_err(|e| CliError::Run(e.to_string()))
}

/// Write `trace.csv`, `plans.json`, and `summary.json` into `dir`.
pub fn write_run_outputs(trace: &RunTrace, dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("trace.csv"), trace_csv(trace))?;
    fs::write(
        dir.join("plans.json"),
        serde_json::to_string_pretty(&mp_exec::plans_json(trace)).expect("serialize plans"),
    )?;
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&summary_json(trace)).expect("serialize summary"),
    )?;
    Ok(())
}

/// Timed repeated planner runs; reports wall-clock latency statistics.
pub fn bench_search(file: &ScenarioFile, repeats: usize) -> Result<serde_json::Value, CliError> {
    if repeats == 0 {
        return Err(CliError::Run("repeats must be positive".into()));
    }
    let registry =
        build_bench_registry(&file.plant).map_err(|e| CliError::Schema(e.to_string()))?;
    let k = file.exec.k_parallel.max(1);
    let mut latencies_ms = Vec::with_capacity(repeats);
    let mut failures = 0usize;
    for i in 0..repeats {
        let mut cfg = file.search.clone();
        cfg.rng_seed = file.search.rng_seed.wrapping_add(i as u64);
        let started = Instant::now();
        let result = parallel_best_path(
            &file.scenario.goal,
            &file.scenario.initial_state,
            &registry,
            &file.cost,
            &cfg,
            k,
            |path| refine_path(&path, &registry, &file.cost, &file.refine).unwrap_or(path),
        );
        latencies_ms.push(started.elapsed().as_secs_f64() * 1e3);
        if result.is_err() {
            failures += 1;
        }
    }
    let mut sorted = latencies_ms.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite latency"));
    let pick = |q: f64| -> f64 {
        let idx = ((q * sorted.len() as f64).ceil() as usize).max(1) - 1;
        sorted[idx.min(sorted.len() - 1)]
    };
    Ok(serde_json::json!({
        "repeats": repeats,
        "failures": failures,
        "min_ms": sorted[0],
        "median_ms": pick(0.5),
        "p95_ms": pick(0.95),
        "max_ms": sorted[sorted.len() - 1],
    }))
}

/// One parsed row of a trace CSV, limited to the fields the plot needs.
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub t_s: f64,
    pub h_m: f64,
    pub vx_mps: f64,
    pub vz_mps: f64,
    pub deviation: f64,
    pub active_primitive: String,
    pub replanning: bool,
    pub violation: bool,
    pub fallback: bool,
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, CliError> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::Run("trace is empty".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    let idx = |name: &str| -> Result<usize, CliError> {
        cols.iter()
            .position(|c| *c == name)
            .ok_or_else(|| CliError::Run(format!("trace is missing column {name}")))
    };
    let (i_t, i_h, i_vx, i_vz) = (idx("t_s")?, idx("h_m")?, idx("vx_mps")?, idx("vz_mps")?);
    let (i_prim, i_replan, i_viol, i_fall, i_dev) = (
        idx("active_primitive")?,
        idx("replanning")?,
        idx("violation")?,
        idx("fallback")?,
        idx("deviation")?,
    );
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(CliError::Run(format!(
                "trace row {} has {} fields, expected {}",
                n + 2,
                fields.len(),
                cols.len()
            )));
        }
        let num = |i: usize| -> Result<f64, CliError> {
            fields[i]
                .parse::<f64>()
                .map_err(|_| CliError::Run(format!("trace row {}: bad number {:?}", n + 2, fields[i])))
        };
        rows.push(TraceRow {
            t_s: num(i_t)?,
            h_m: num(i_h)?,
            vx_mps: num(i_vx)?,
            vz_mps: num(i_vz)?,
            deviation: num(i_dev)?,
            active_primitive: fields[i_prim].to_string(),
            replanning: fields[i_replan] == "1",
            violation: fields[i_viol] == "1",
            fallback: fields[i_fall] == "1",
        });
    }
    if rows.is_empty() {
        return Err(CliError::Run("trace has no data rows".into()));
    }
    Ok(rows)
}

fn band_color(primitive: &str) -> &'static str {
    match primitive {
        "lie" => "#c6dbef",
        "stand" => "#9ecae1",
        "walk" => "#a1d99b",
        "land" => "#fdae6b",
        _ => "#d9d9d9",
    }
}

/// Render a timeline SVG: state traces, active-primitive bands, and
/// replan-request markers.
pub fn plot_svg(rows: &[TraceRow]) -> Result<String, CliError> {
    if rows.is_empty() {
        return Err(CliError::Run("trace has no data rows".into()));
    }
    const W: f64 = 960.0;
    const H: f64 = 420.0;
    const ML: f64 = 50.0;
    const MR: f64 = 20.0;
    const MT: f64 = 20.0;
    const MB: f64 = 60.0;
    let t_min = rows.first().expect("nonempty").t_s;
    let t_max = rows.last().expect("nonempty").t_s.max(t_min + 1e-9);
    let sx = |t: f64| ML + (t - t_min) / (t_max - t_min) * (W - ML - MR);

    let series: [(&str, &str, fn(&TraceRow) -> f64); 4] = [
        ("h_m", "#08519c", |r| r.h_m),
        ("vx_mps", "#006d2c", |r| r.vx_mps),
        ("vz_mps", "#a50f15", |r| r.vz_mps),
        ("deviation", "#54278f", |r| r.deviation),
    ];
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for r in rows {
        for (_, _, f) in &series {
            y_lo = y_lo.min(f(r));
            y_hi = y_hi.max(f(r));
        }
    }
    if !(y_lo.is_finite() && y_hi.is_finite()) {
        return Err(CliError::Run("trace contains non-finite values".into()));
    }
    let pad = 0.05 * (y_hi - y_lo).max(1e-6);
    let (y_lo, y_hi) = (y_lo - pad, y_hi + pad);
    let sy = |v: f64| MT + (y_hi - v) / (y_hi - y_lo) * (H - MT - MB);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"11\">\n"
    ));
    svg.push_str(&format!(
        "<rect x=\"0\" y=\"0\" width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n"
    ));

    // Active-primitive bands along the bottom strip, one rect per contiguous
    // stretch of the same primitive.
    let band_y = H - MB + 18.0;
    let band_h = 16.0;
    let mut start = 0usize;
    for i in 1..=rows.len() {
        if i == rows.len() || rows[i].active_primitive != rows[start].active_primitive {
            let x0 = sx(rows[start].t_s);
            let x1 = sx(rows[i - 1].t_s);
            let name = &rows[start].active_primitive;
            svg.push_str(&format!(
                "<rect class=\"band\" data-primitive=\"{name}\" x=\"{x0:.2}\" y=\"{band_y:.2}\" \
                 width=\"{:.2}\" height=\"{band_h}\" fill=\"{}\" stroke=\"#666\" stroke-width=\"0.5\"/>\n",
                (x1 - x0).max(1.0),
                band_color(name)
            ));
            if x1 - x0 > 30.0 {
                svg.push_str(&format!(
                    "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">{name}</text>\n",
                    (x0 + x1) / 2.0,
                    band_y + band_h - 4.0
                ));
            }
            start = i;
        }
    }

    // Replan markers: dashed vertical line where a replanning stretch begins.
    for i in 0..rows.len() {
        if rows[i].replanning && (i == 0 || !rows[i - 1].replanning) {
            let x = sx(rows[i].t_s);
            svg.push_str(&format!(
                "<line class=\"replan\" x1=\"{x:.2}\" y1=\"{MT}\" x2=\"{x:.2}\" y2=\"{:.2}\" \
                 stroke=\"#e6550d\" stroke-width=\"1\" stroke-dasharray=\"4 3\"/>\n",
                H - MB
            ));
        }
    }

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        H - MB,
        W - MR,
        H - MB
    ));
    svg.push_str(&format!(
        "<line x1=\"{ML}\" y1=\"{MT}\" x2=\"{ML}\" y2=\"{:.2}\" stroke=\"#333\"/>\n",
        H - MB
    ));
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">t_s ({t_min:.2} to {t_max:.2})</text>\n",
        (ML + W - MR) / 2.0,
        H - 6.0
    ));

    // Series polylines (thinned to at most ~2000 points each).
    let stride = (rows.len() / 2000).max(1);
    for (k, (name, color, f)) in series.iter().enumerate() {
        let mut points = String::new();
        for (i, r) in rows.iter().enumerate() {
            if i % stride == 0 || i == rows.len() - 1 {
                points.push_str(&format!("{:.2},{:.2} ", sx(r.t_s), sy(f(r))));
            }
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>\n",
            points.trim_end()
        ));
        let lx = ML + 10.0 + 90.0 * k as f64;
        svg.push_str(&format!(
            "<rect x=\"{lx}\" y=\"{:.2}\" width=\"10\" height=\"10\" fill=\"{color}\"/>\n",
            MT + 2.0
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\">{name}</text>\n",
            lx + 14.0,
            MT + 11.0
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Read `trace.csv` from `dir` and write `timeline.svg` next to it.
pub fn plot_trace_dir(dir: &Path) -> Result<std::path::PathBuf, CliError> {
    let text = fs::read_to_string(dir.join("trace.csv"))?;
    let rows = parse_trace_csv(&text)?;
    let svg = plot_svg(&rows)?;
    let out = dir.join("timeline.svg");
    fs::write(&out, svg)?;
    Ok(out)
}
