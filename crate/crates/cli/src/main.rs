mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::{json, Value};

use rotorspec::basis::{build_pair_basis, build_single_basis};
use rotorspec::hamiltonian::{assemble, single_molecule_assemble};
use rotorspec::sweeps::{convergence_study, run_sweep, FixedParams, SweepMeta, System};

use config::{build, Cli, Job, RunConfig};

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

fn open_output(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn meta_json(m: &SweepMeta) -> Value {
    json!({
        "mode": m.mode.to_string(),
        "j_max": m.j_max,
        "basis_dim": m.basis_dim,
        "sector_policy": m.sector_policy,
        "tol": m.tol,
        "deg_tol": m.deg_tol,
        "n_states": m.n_states,
        "seed": m.seed,
        "methods": m.methods,
        "matvecs": m.matvecs,
        "points": m.points,
        "parity_flags": m.parity_flags,
    })
}

fn fixed_json(f: &FixedParams) -> Value {
    let molecules: Vec<Value> = match &f.system {
        System::Single(s) => vec![molecule_json(s)],
        System::Pair(a, b) => vec![molecule_json(a), molecule_json(b)],
    };
    json!({
        "molecules": molecules,
        "pair": f.system.is_pair(),
        "j_max": f.j_max,
        "r": f.r,
        "eps": f.field.epsilon,
        "theta_deg": f.field.theta_deg,
        "sector": f.sector.to_string(),
        "blocking": f.blocking,
        "method": f.solver.method.to_string(),
        "tol": f.solver.tol,
        "deg_tol": f.deg_tol,
        "n_states": f.solver.n_states,
        "seed": f.solver.seed,
    })
}

fn molecule_json(s: &rotorspec::molecule::MoleculeSpec) -> Value {
    let u = s.characteristic_scales();
    json!({
        "name": s.name,
        "class": s.class.name(),
        "a_ghz": s.a_ghz,
        "b_ghz": s.b_ghz,
        "c_ghz": s.c_ghz,
        "dipole_abc_debye": s.dipole_abc,
        "units": { "energy_ghz": u.energy_ghz, "length_nm": u.length_nm, "field_kv_per_cm": u.field_kv_per_cm },
    })
}

fn run(cfg: &RunConfig) -> Result<()> {
    let start = Instant::now();
    let mut out = open_output(&cfg.out)?;
    let mut meta = json!({
        "artifact": "rotorspec",
        "version": env!("CARGO_PKG_VERSION"),
        "subcommand": cfg.subcommand,
        "molecules": cfg.molecules,
    });
    let summary = match &cfg.job {
        Job::Sweep(plan) => {
            let table = run_sweep(plan).with_context(|| format!("{} failed", cfg.subcommand))?;
            table.write_csv(&mut out, cfg.si)?;
            meta["parameters"] = fixed_json(&plan.fixed);
            meta["grid"] = json!(plan.grid);
            meta["param"] = json!(plan.mode.param_name());
            if cfg.si {
                meta["param_si_unit"] = json!(plan.mode.si_unit());
            }
            if let Some(fam) = &plan.kappa {
                meta["kappa_family"] = json!({ "a_ghz": fam.a_ghz, "c_ghz": fam.c_ghz, "dipole_abc_debye": fam.dipole_abc,
                    "energy_unit": "C" });
            }
            meta["solver"] = meta_json(&table.meta);
            format!(
                "{}: {} point(s), basis dim {:?}, {} rows, methods {}",
                cfg.subcommand,
                table.meta.points,
                table.meta.basis_dim,
                table.rows.len(),
                table.meta.methods.join("+")
            )
        }
        Job::Convergence { fixed, j_max } => {
            let table = convergence_study(fixed, j_max).context("convergence failed")?;
            table.write_csv(&mut out)?;
            meta["parameters"] = fixed_json(fixed);
            meta["grid"] = json!(j_max);
            meta["solver"] = meta_json(&table.meta);
            let g = table.ground_energies();
            let last = g.last().map_or(f64::NAN, |x| x.1);
            format!("convergence: j_max {j_max:?}, ground energy at largest j_max {last:.10} B")
        }
        Job::DumpMatrix(fixed) => {
            let h = match &fixed.system {
                System::Single(s) => single_molecule_assemble(s, &fixed.field, &build_single_basis(s.class, fixed.j_max))?,
                System::Pair(a, b) => {
                    let basis = build_pair_basis(a.class, fixed.j_max, fixed.sector)?;
                    assemble(a, b, fixed.r, &fixed.field, &basis)?
                }
            };
            let mut params: Vec<(String, String)> = vec![("molecules".into(), cfg.molecules.join(","))];
            params.push(("jmax".into(), fixed.j_max.to_string()));
            if fixed.system.is_pair() {
                params.push(("r".into(), format!("{:.16e}", fixed.r)));
                params.push(("sector".into(), fixed.sector.to_string()));
            }
            params.push(("eps".into(), format!("{:.16e}", fixed.field.epsilon)));
            params.push(("theta_deg".into(), format!("{:.16e}", fixed.field.theta_deg)));
            h.write_coordinate(&mut out, &params)?;
            meta["parameters"] = fixed_json(fixed);
            meta["matrix"] = json!({ "dim": h.dim(), "nnz": h.nnz(), "real": h.is_real() });
            format!("dump-matrix: dim {}, {} stored entries", h.dim(), h.nnz())
        }
    };
    out.flush()?;
    drop(out);
    let wall = start.elapsed().as_secs_f64();
    meta["wall_time_s"] = json!(wall);
    if let Some(path) = &cfg.out {
        let side = sidecar_path(path);
        let text = serde_json::to_string_pretty(&meta)?;
        std::fs::write(&side, text + "\n").with_context(|| format!("writing {}", side.display()))?;
    }
    eprintln!("{summary} ({wall:.2} s)");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build(&cli.command) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
