//! fatlas: fat triangulations of Riemannian 2-manifolds and their Alexander
//! maps, from the command line.
//!
//! Subcommands: `triangulate` (run the full pipeline and export the mesh),
//! `qmmap` (assemble the quasiregular map and measure its dilatation),
//! `bounds` (print the comparison-geometry estimates), `verify` (check an
//! existing mesh against a thickness threshold).
//!
//! Exit codes: 0 success; 1 verification below threshold (`verify` only);
//! 2 validity/quasiregularity failure; 3 unreadable or invalid configuration.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use fatlas::alexander::{assemble_qm_map, dilatation_report};
use fatlas::complex::{thickness_report, SimplicialComplex};
use fatlas::io::{histogram_csv, read_mesh_file, write_off, write_obj, Report};
use fatlas::manifold::{
    comparison_volume, degree_bound, estimate_geometry, packing_bound, BackgroundMesh,
    ChartedSurface, SurfaceKind,
};
use fatlas::triangulate::{
    fat_triangulation_pipeline, geometry_mesh_resolution, PipelineConfig, PipelineOutput,
};
use fatlas::Error;

const EXIT_OK: u8 = 0;
const EXIT_BELOW_THRESHOLD: u8 = 1;
const EXIT_INVALID: u8 = 2;
const EXIT_CONFIG: u8 = 3;

#[derive(Parser)]
#[command(name = "fatlas", about = "fat triangulations and Alexander maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the fat-triangulation pipeline and export mesh + reports.
    Triangulate(CommonArgs),
    /// Assemble the Alexander map and report its dilatation.
    Qmmap(CommonArgs),
    /// Print the comparison-geometry estimates for the configured surface.
    Bounds(CommonArgs),
    /// Verify an existing mesh against a thickness threshold.
    Verify(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override the RNG seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the net scale epsilon from the config.
    #[arg(long)]
    eps: Option<f64>,
    /// Output directory for artifacts (default from config, else "fatlas-out").
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress timestamps and timings for byte-identical reports.
    #[arg(long)]
    no_timestamp: bool,
    /// Override the mesh path from the config (qmmap/verify).
    #[arg(long)]
    mesh: Option<PathBuf>,
    /// Override the thickness threshold from the config (verify).
    #[arg(long)]
    phi0: Option<f64>,
}

/// JSON run configuration; every field is overridable on the command line
/// (the command line wins).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    surface: Option<SurfaceKind>,
    eps: Option<f64>,
    safety: Option<f64>,
    h: Option<f64>,
    seed: Option<u64>,
    thicken_budget: Option<usize>,
    phi_target: Option<f64>,
    max_move: Option<f64>,
    samples_per_simplex: Option<usize>,
    mesh: Option<PathBuf>,
    phi0: Option<f64>,
    out: Option<PathBuf>,
}

/// Configuration merged from file and flags, plus shared run context.
struct Run {
    cfg: RunConfig,
    args: CommonArgs,
    started: Instant,
}

impl Run {
    fn load(args: CommonArgs) -> Result<Run, String> {
        let text = std::fs::read_to_string(&args.config)
            .map_err(|e| format!("cannot read config {}: {e}", args.config.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| format!("malformed config {}: {e}", args.config.display()))?;
        Ok(Run {
            cfg,
            args,
            started: Instant::now(),
        })
    }

    fn surface(&self) -> Result<SurfaceKind, String> {
        self.cfg
            .surface
            .clone()
            .ok_or_else(|| "config is missing the \"surface\" section".to_string())
    }

    fn pipeline_config(&self) -> Result<PipelineConfig, String> {
        let mut pc = PipelineConfig::new(self.surface()?);
        pc.eps = self.args.eps.or(self.cfg.eps);
        pc.h = self.cfg.h;
        pc.seed = self.args.seed.or(self.cfg.seed).unwrap_or(0);
        if let Some(s) = self.cfg.safety {
            pc.safety = s;
        }
        if let Some(b) = self.cfg.thicken_budget {
            pc.thicken_budget = b;
        }
        if let Some(p) = self.cfg.phi_target {
            pc.phi_target = p;
        }
        pc.max_move = self.cfg.max_move;
        pc.validate().map_err(|e| e.to_string())?;
        Ok(pc)
    }

    fn mesh_path(&self) -> Option<PathBuf> {
        self.args.mesh.clone().or_else(|| self.cfg.mesh.clone())
    }

    fn out_dir(&self) -> PathBuf {
        self.args
            .out
            .clone()
            .or_else(|| self.cfg.out.clone())
            .unwrap_or_else(|| PathBuf::from("fatlas-out"))
    }

    /// Stamp elapsed time and wall-clock time into a report's metrics,
    /// unless byte-identical output was requested.
    fn stamp(&self, report: &mut Report) {
        if self.args.no_timestamp {
            return;
        }
        if let Value::Object(m) = &mut report.metrics {
            m.insert(
                "elapsed_ms".to_string(),
                json!(self.started.elapsed().as_millis() as u64),
            );
            let unix_ms = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis() as u64)
                .unwrap_or(0);
            m.insert("generated_at_unix_ms".to_string(), json!(unix_ms));
        }
    }
}

/// Print to stdout ignoring I/O errors, so piping into `head` or a closed
/// descriptor does not abort the run.
fn emit(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn write_artifact(dir: &Path, name: &str, text: &str) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn pipeline_failure_report(run: &Run, err: &Error) -> Report {
    let mut r = Report::new("triangulate");
    r.inputs = json!({ "config": run.args.config.display().to_string() });
    let (stage, reason) = match err {
        Error::Stage { stage, reason } => (stage.clone(), reason.clone()),
        other => ("pipeline".to_string(), other.to_string()),
    };
    r.witnesses = json!({ "failed_stage": stage, "reason": reason });
    r
}

fn triangulate_report(run: &Run, pc: &PipelineConfig, out: &PipelineOutput) -> Report {
    let mut r = Report::new("triangulate");
    r.inputs = json!({
        "config": serde_json::to_value(pc).unwrap(),
        "surface": out.surface_id,
        "seed": out.seed,
    });
    r.metrics = json!({
        "eps_used": out.eps_used,
        "h_used": out.h_used,
        "geometry": serde_json::to_value(&out.geometry).unwrap(),
        "net": serde_json::to_value(&out.net_report).unwrap(),
        "euler_characteristic": out.euler_characteristic,
        "phi_before": out.phi_before,
        "phi_after": out.phi_after,
        "phi_min_nerve": out.thickness.phi_min,
        "phi_min_subdivided": out.subdivided_thickness.phi_min,
        "n_vertices": out.subdivided.vertices.len(),
        "n_triangles": out.subdivided.simplices.len(),
        "chord_vs_geodesic_max_rel": out.chord_vs_geodesic_max_rel,
        "thicken": serde_json::to_value(&out.thicken).unwrap(),
    });
    r.witnesses = json!({
        "validity": serde_json::to_value(&out.validity).unwrap(),
        "retries": out.retries,
        "offenders": out.subdivided_thickness.offenders,
    });
    run.stamp(&mut r);
    r
}

fn stage_log(run: &Run, out: &PipelineOutput) -> String {
    let mut log = String::new();
    for line in &out.retries {
        log.push_str("retry: ");
        log.push_str(line);
        log.push('\n');
    }
    for stage in [
        "geometry", "net", "voronoi", "nerve", "realize", "thicken", "subdivide", "color",
    ] {
        log.push_str(stage);
        log.push_str(": ok");
        if !run.args.no_timestamp {
            log.push_str(&format!(" (t+{}ms)", run.started.elapsed().as_millis()));
        }
        log.push('\n');
    }
    log
}

fn cmd_triangulate(run: &Run) -> Result<u8, String> {
    let pc = match run.pipeline_config() {
        Ok(pc) => pc,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let dir = run.out_dir();
    let surface = ChartedSurface::from_kind(pc.surface.clone());
    match fat_triangulation_pipeline(&surface, &pc) {
        Ok(out) => {
            write_artifact(&dir, "mesh.off", &write_off(&out.subdivided))?;
            write_artifact(&dir, "mesh.obj", &write_obj(&out.subdivided))?;
            write_artifact(&dir, "nerve.off", &write_off(&out.nerve))?;
            let report = triangulate_report(run, &pc, &out);
            write_artifact(&dir, "thickness.json", &report.to_json())?;
            write_artifact(
                &dir,
                "thickness.csv",
                &histogram_csv(&out.subdivided_thickness.histogram),
            )?;
            write_artifact(&dir, "stages.log", &stage_log(run, &out))?;
            emit(&report.to_json());
            Ok(EXIT_OK)
        }
        Err(err) => {
            let mut report = pipeline_failure_report(run, &err);
            run.stamp(&mut report);
            write_artifact(&dir, "thickness.json", &report.to_json())?;
            eprintln!("pipeline failed: {err}");
            emit(&report.to_json());
            Ok(EXIT_INVALID)
        }
    }
}

/// An externally supplied mesh must pass even-incidence and take a
/// chessboard coloring before an Alexander map exists on it.
fn prepare_external(complex: &mut SimplicialComplex) -> Result<(), Report> {
    if let Err(offending) = complex.check_even_incidence() {
        let mut r = Report::new("qmmap");
        r.witnesses = json!({
            "even_incidence": "failed",
            "offending_faces": offending,
        });
        return Err(r);
    }
    match complex.chessboard_coloring() {
        Ok(colors) => {
            complex.colors = Some(colors);
            Ok(())
        }
        Err(e) => {
            let mut r = Report::new("qmmap");
            r.witnesses = json!({ "coloring": e.to_string() });
            Err(r)
        }
    }
}

fn cmd_qmmap(run: &Run) -> Result<u8, String> {
    if run.cfg.samples_per_simplex == Some(0) {
        eprintln!("config error: samples_per_simplex must be positive");
        return Ok(EXIT_CONFIG);
    }
    let dir = run.out_dir();
    let (complex, source): (SimplicialComplex, Value) = if let Some(path) = run.mesh_path() {
        let mut c = match read_mesh_file(&path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("cannot read mesh {}: {e}", path.display());
                return Ok(EXIT_CONFIG);
            }
        };
        if let Err(mut report) = prepare_external(&mut c) {
            run.stamp(&mut report);
            write_artifact(&dir, "dilatation.json", &report.to_json())?;
            emit(&report.to_json());
            return Ok(EXIT_INVALID);
        }
        (c, json!({ "mesh": path.display().to_string() }))
    } else {
        let pc = match run.pipeline_config() {
            Ok(pc) => pc,
            Err(e) => {
                eprintln!("config error: {e}");
                return Ok(EXIT_CONFIG);
            }
        };
        let surface = ChartedSurface::from_kind(pc.surface.clone());
        match fat_triangulation_pipeline(&surface, &pc) {
            Ok(out) => {
                write_artifact(&dir, "mesh.off", &write_off(&out.subdivided))?;
                let src = json!({
                    "surface": out.surface_id,
                    "seed": out.seed,
                    "eps_used": out.eps_used,
                });
                (out.subdivided, src)
            }
            Err(err) => {
                let mut report = pipeline_failure_report(run, &err);
                run.stamp(&mut report);
                write_artifact(&dir, "dilatation.json", &report.to_json())?;
                eprintln!("pipeline failed: {err}");
                return Ok(EXIT_INVALID);
            }
        }
    };

    let seed = run.args.seed.or(run.cfg.seed).unwrap_or(0);
    // default budget targets at least 2 * 10^4 total accepted samples
    let per = run
        .cfg
        .samples_per_simplex
        .unwrap_or_else(|| (20_000usize).div_ceil(complex.simplices.len().max(1)).max(32));
    let map = match assemble_qm_map(&complex) {
        Ok(m) => m,
        Err(e) => {
            let mut r = Report::new("qmmap");
            r.inputs = source;
            r.witnesses = json!({ "assembly": e.to_string() });
            run.stamp(&mut r);
            write_artifact(&dir, "dilatation.json", &r.to_json())?;
            eprintln!("assembly failed: {e}");
            return Ok(EXIT_INVALID);
        }
    };
    let mut r = Report::new("qmmap");
    r.inputs = source;
    if let Value::Object(m) = &mut r.inputs {
        m.insert("samples_per_simplex".to_string(), json!(per));
        m.insert("seed".to_string(), json!(seed));
    }
    match dilatation_report(&map, per, seed) {
        Ok(rep) => {
            r.metrics = json!({
                "k_max": rep.k_max,
                "min_jf": rep.min_jf,
                "samples_accepted": rep.samples_accepted,
                "samples_requested": rep.samples_requested,
                "quasiregular": rep.quasiregular,
                "n_triangles": map.simplices.len(),
            });
            r.witnesses = json!({ "k_per_simplex_max": rep
                .k_per_simplex
                .iter()
                .cloned()
                .fold(0.0f64, f64::max) });
            run.stamp(&mut r);
            write_artifact(&dir, "dilatation.json", &r.to_json())?;
            emit(&r.to_json());
            Ok(EXIT_OK)
        }
        Err(e) => {
            r.witnesses = json!({ "quasiregularity": e.to_string() });
            run.stamp(&mut r);
            write_artifact(&dir, "dilatation.json", &r.to_json())?;
            eprintln!("dilatation report failed: {e}");
            Ok(EXIT_INVALID)
        }
    }
}

fn cmd_bounds(run: &Run) -> Result<u8, String> {
    let kind = match run.surface() {
        Ok(k) => k,
        Err(e) => {
            eprintln!("config error: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let surface = ChartedSurface::from_kind(kind);
    let mesh = match BackgroundMesh::build(&surface, geometry_mesh_resolution(&surface)) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("background mesh failed: {e}");
            return Ok(EXIT_INVALID);
        }
    };
    let est = match estimate_geometry(&surface, &mesh) {
        Ok(e) => e,
        Err(e) => {
            eprintln!("geometry estimation failed: {e}");
            return Ok(EXIT_INVALID);
        }
    };
    let eps = run
        .args
        .eps
        .or(run.cfg.eps)
        .unwrap_or(est.convrad_low * run.cfg.safety.unwrap_or(0.9));
    let mut r = Report::new("bounds");
    r.inputs = json!({
        "surface": surface.id(),
        "eps": eps,
    });
    r.metrics = json!({
        "geometry": serde_json::to_value(&est).unwrap(),
        "comparison_volume_eps_half_ball": comparison_volume(est.k_up, eps / 2.0),
        "comparison_volume_diameter_ball": comparison_volume(est.k_low, est.d_up),
        "packing_bound": packing_bound(est.k_low, est.d_up, eps),
        "degree_bound": degree_bound(est.k_low, eps),
        "injrad_low": est.injrad_low,
        "convrad_low": est.convrad_low,
    });
    run.stamp(&mut r);
    emit(&r.to_json());
    Ok(EXIT_OK)
}

fn cmd_verify(run: &Run) -> Result<u8, String> {
    let path = match run.mesh_path() {
        Some(p) => p,
        None => {
            eprintln!("config error: verify needs a \"mesh\" path");
            return Ok(EXIT_CONFIG);
        }
    };
    let complex = match read_mesh_file(&path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cannot read mesh {}: {e}", path.display());
            return Ok(EXIT_CONFIG);
        }
    };
    let phi0 = run.args.phi0.or(run.cfg.phi0).unwrap_or(0.4);
    let thick = match thickness_report(&complex, phi0) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("thickness report failed: {e}");
            return Ok(EXIT_CONFIG);
        }
    };
    let even = complex.check_even_incidence();
    let coloring = complex.chessboard_coloring();
    let mut r = Report::new("verify");
    r.inputs = json!({
        "mesh": path.display().to_string(),
        "phi0": phi0,
    });
    r.metrics = json!({
        "phi_min": thick.phi_min,
        "n_vertices": complex.vertices.len(),
        "n_triangles": complex.simplices.len(),
        "even_incidence": even.is_ok(),
        "colorable": coloring.is_ok(),
    });
    r.witnesses = json!({
        "offenders": thick.offenders,
        "odd_faces": even.err().unwrap_or_default(),
        "coloring": coloring.err().map(|e| e.to_string()),
    });
    run.stamp(&mut r);
    emit(&r.to_json());
    if thick.phi_min >= phi0 {
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_BELOW_THRESHOLD)
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("FATLAS_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    let (args, f): (CommonArgs, fn(&Run) -> Result<u8, String>) = match cli.cmd {
        Cmd::Triangulate(a) => (a, cmd_triangulate),
        Cmd::Qmmap(a) => (a, cmd_qmmap),
        Cmd::Bounds(a) => (a, cmd_bounds),
        Cmd::Verify(a) => (a, cmd_verify),
    };
    let run = match Run::load(args) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    match f(&run) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("io error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
