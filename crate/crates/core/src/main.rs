use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use canal4d::analysis::{
    curvature_fields, equivalence_check, flatness_check, linear_weingarten_cert, verify_minimal,
    verify_minimal_oracle, weingarten_check, CheckRecord, MinimalRadiusParams, FLAT_TOL, LINEAR_WEINGARTEN_TOL,
    WEINGARTEN_TOL_CLOSED,
};
use canal4d::canal::{Mode, RadiusSpec};
use canal4d::config::{Prepared, RunConfig};
use canal4d::meshio::{sample_patch, write_csv_fields, write_figures, write_obj, TriMesh};
use canal4d::Result;

#[derive(Parser)]
#[command(name = "canal4d", version, about = "Parallel transport frames and canal surfaces in E4")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Propagate a parallel transport frame and write it as CSV.
    Frame {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sample a canal surface and write a projected OBJ mesh.
    Surface {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write per-node curvature fields as CSV.
        #[arg(long)]
        fields: Option<PathBuf>,
        /// Exit with status 2 if any node is irregular.
        #[arg(long)]
        strict: bool,
    },
    /// Run an analysis suite and write a JSON report.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        /// Scale of the linear Weingarten certificate.
        #[arg(long, default_value_t = 1.0)]
        k: f64,
        /// Exit with status 2 if any check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Regenerate the three figure meshes and a manifest.
    Figures {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Equivalence,
    Weingarten,
    Flat,
    Minimal,
    LinearWeingarten,
}

/// Failures of a successful run that `--strict` turns into exit status 2.
struct Outcome {
    strict_failures: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok((outcome, strict)) if strict && outcome.strict_failures > 0 => {
            eprintln!("strict: {} failure(s)", outcome.strict_failures);
            ExitCode::from(2)
        }
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn prepare(config: &Path) -> Result<Prepared> {
    RunConfig::load(config)?.prepare()
}

fn run(cmd: Command) -> Result<(Outcome, bool)> {
    let clean = Outcome { strict_failures: 0 };
    match cmd {
        Command::Frame { config, out } => {
            let p = prepare(&config)?;
            p.framed().write_csv(BufWriter::new(File::create(out)?))?;
            Ok((clean, false))
        }
        Command::Surface { config, out, fields, strict } => {
            let p = prepare(&config)?;
            let patch = sample_patch(p.framed(), &p.surface.radius, &p.grid, true)?;
            write_obj(&TriMesh::from_patch(&patch), out)?;
            if let Some(path) = fields {
                write_csv_fields(&patch, path)?;
            }
            let irregular = patch.irregular_count();
            if irregular > 0 {
                eprintln!("warning: {irregular} irregular node(s)");
            }
            Ok((Outcome { strict_failures: irregular }, strict))
        }
        Command::Check { config, suite, out, k, strict } => {
            let p = prepare(&config)?;
            let records = run_suite(&p, suite, k)?;
            let informational = |r: &CheckRecord| r.params.get("informational") == Some(&json!(true));
            for r in &records {
                let tag = match (informational(r), r.pass) {
                    (true, _) => "INFO",
                    (false, true) => "PASS",
                    (false, false) => "FAIL",
                };
                println!("{tag} {}: {:e} (tol {:e})", r.check, r.max_residual, r.tolerance);
            }
            serde_json::to_writer_pretty(BufWriter::new(File::create(out)?), &records)?;
            let failures = records
                .iter()
                .filter(|r| !r.pass && !informational(r))
                .count();
            Ok((Outcome { strict_failures: failures }, strict))
        }
        Command::Figures { out } => {
            let manifest = write_figures(&out)?;
            for f in &manifest.figures {
                println!("{}: {} vertices, {} triangles", f.obj, f.vertices, f.triangles);
            }
            Ok((clean, false))
        }
    }
}

fn run_suite(p: &Prepared, suite: Suite, k: f64) -> Result<Vec<CheckRecord>> {
    let s = &p.surface;
    let g = &p.grid;
    let grid = json!({"nu": g.nu, "nv": g.nv, "u_range": g.u_range});
    let records = match suite {
        Suite::Equivalence => {
            let rep = equivalence_check(s, g, &p.oracle)?;
            let params = json!({
                "grid": grid,
                "oracle_h": p.oracle.h_u,
                "points": rep.points,
                "irregular": rep.irregular,
            });
            vec![
                CheckRecord::new("equivalence_K", params.clone(), rep.max_rel_k, 1e-5),
                CheckRecord::new("equivalence_Hvec", params, rep.max_rel_h, 1e-5),
            ]
        }
        Suite::Weingarten => {
            let straight = s.is_straight();
            let mode = if straight { Mode::Straight } else { Mode::General };
            let (kf, hf) = curvature_fields(s, g, mode)?;
            let rep = weingarten_check(&kf, &hf, WEINGARTEN_TOL_CLOSED)?;
            let params = json!({"grid": grid, "straight_spine": straight, "informational": !straight});
            let mut out = vec![CheckRecord::new("weingarten_jacobian", params.clone(), rep.max_jacobian, rep.tolerance)];
            if straight {
                out.push(CheckRecord::new("weingarten_v_derivatives", params, rep.max_kv.max(rep.max_hv), 1e-10));
            }
            out
        }
        Suite::Flat => {
            let rep = flatness_check(s, g)?;
            vec![CheckRecord::new("flat", json!({"grid": grid}), rep.max_abs_k, FLAT_TOL)]
        }
        Suite::Minimal => {
            let params = json!({"grid": grid});
            let mut out = vec![
                CheckRecord::new("minimal_closed", params.clone(), verify_minimal(s, g)?, 1e-10),
                CheckRecord::new("minimal_oracle", params, verify_minimal_oracle(s, g, &p.oracle)?, 1e-5),
            ];
            if let RadiusSpec::CoshScaled { c1, shift } = *s.radius.spec() {
                let mp = MinimalRadiusParams { c1, c2: shift + (2.0 * c1).ln() };
                let residual = (0..g.nu)
                    .map(|i| g.u_at(i))
                    .filter(|u| u / c1 + shift >= 0.0)
                    .map(|u| mp.relation_residual(u))
                    .fold(0.0, f64::max);
                out.push(CheckRecord::new("minimal_relation", json!({"c1": c1, "c2": mp.c2}), residual, 1e-10));
            }
            out
        }
        Suite::LinearWeingarten => {
            let cert = linear_weingarten_cert(s, g, k)?;
            let params = json!({"grid": grid, "a": cert.a, "b": cert.b, "c": cert.c});
            vec![CheckRecord::new("linear_weingarten", params, cert.residual, LINEAR_WEINGARTEN_TOL)]
        }
    };
    Ok(records)
}
