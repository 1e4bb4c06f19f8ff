use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use stepbound::mesh::write_mesh;
use stepbound::rk::{certificate_bound, integrate, l2_growth_certificate, stable_timestep, unstable_seed};
use stepbound::spectral::{top_eigenpair, verify_matrix_inequalities};
use stepbound::{compute_report, AssembledSystem, BoundReport, Error, IntegrationTrace};

use crate::config::{InitialData, Job, Problem};
use crate::error::{io_err, CliError};

/// Per-step energy growth tolerated before a run counts as unstable.
const ENERGY_SLACK: f64 = 1e-12;

#[derive(Serialize)]
struct BoundsFile<'a> {
    mesh: serde_json::Value,
    n_vertices: usize,
    diffusion: &'a stepbound::DiffusionSpec,
    seed: u64,
    dof_cap: usize,
    #[serde(flatten)]
    report: &'a BoundReport,
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn out_dir(job: &Job) -> Result<&Path, CliError> {
    fs::create_dir_all(&job.out).map_err(io_err(&job.out))?;
    Ok(&job.out)
}

fn csv(report: &BoundReport) -> String {
    format!("{}\n{}\n", BoundReport::csv_header(), report.csv_row())
}

fn report_for(job: &Job, problem: &Problem) -> Result<(AssembledSystem, BoundReport), CliError> {
    let system = problem.assemble()?;
    let report = compute_report(&system, &job.report_options())?;
    Ok((system, report))
}

/// stdout may be a closed pipe; that is not an error here.
fn say(line: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

pub fn bounds(job: &Job) -> Result<(), CliError> {
    let (system, report) = report_for(job, &job.problem)?;
    let dir = out_dir(job)?;
    let file = BoundsFile {
        mesh: job.problem.mesh.describe(),
        n_vertices: system.mesh.n_vertices(),
        diffusion: &job.problem.diffusion,
        seed: job.seed,
        dof_cap: job.dof_cap,
        report: &report,
    };
    write(
        &dir.join("bounds.json"),
        serde_json::to_string_pretty(&file).expect("report serializes") + "\n",
    )?;
    write(&dir.join("bounds.csv"), csv(&report))?;
    log::info!("bounds written to {}", dir.display());
    Ok(())
}

#[derive(Serialize)]
struct Certificate {
    bound: f64,
    observed: f64,
    passed: bool,
}

#[derive(Serialize)]
struct Summary {
    status: &'static str,
    scheme: String,
    stability_boundary: f64,
    tau: f64,
    tau_source: String,
    tau_candidates: BTreeMap<&'static str, f64>,
    initial: &'static str,
    steps_requested: usize,
    steps_taken: usize,
    blow_up_step: Option<usize>,
    final_time: f64,
    max_energy_ratio: Option<f64>,
    max_l2_ratio: Option<f64>,
    energy_non_increasing: Option<bool>,
    certificate: Option<Certificate>,
}

pub fn integrate_cmd(job: &Job) -> Result<(), CliError> {
    let (system, report) = report_for(job, &job.problem)?;
    let mut candidates = BTreeMap::new();
    for &b in &job.bounds {
        candidates.insert(b.name(), stable_timestep(&job.scheme, b, &report)?);
    }
    let (tau_source, tau) = match job.tau {
        Some(t) => ("override".to_string(), t),
        None => candidates
            .iter()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, v)| (k.to_string(), *v))
            .expect("at least one bound source"),
    };
    let dir = out_dir(job)?;
    let mut summary = Summary {
        status: "no-op",
        scheme: job.scheme.name().to_string(),
        stability_boundary: job.scheme.real_stability_boundary(),
        tau,
        tau_source,
        tau_candidates: candidates,
        initial: job.initial.name(),
        steps_requested: job.steps,
        steps_taken: 0,
        blow_up_step: None,
        final_time: 0.0,
        max_energy_ratio: None,
        max_l2_ratio: None,
        energy_non_increasing: None,
        certificate: None,
    };
    let trace_csv = if job.steps == 0 {
        "step,t,l2_norm,energy_norm\n".to_string()
    } else {
        let u0 = initial_data(job, &system)?;
        let (trace, blow_up) = match integrate(&system, &job.scheme, tau, job.steps, &u0) {
            Ok(trace) => (trace, None),
            Err(Error::BlowUp { step, trace }) => (*trace, Some(step)),
            Err(e) => return Err(e.into()),
        };
        fill(&mut summary, &trace, blow_up, &system)?;
        trace.to_csv()
    };
    write(&dir.join("trace.csv"), trace_csv)?;
    write(
        &dir.join("summary.json"),
        serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n",
    )?;
    log::info!("integration {} after {} steps", summary.status, summary.steps_taken);
    Ok(())
}

fn fill(
    summary: &mut Summary,
    trace: &IntegrationTrace,
    blow_up: Option<usize>,
    system: &AssembledSystem,
) -> Result<(), CliError> {
    let last = trace.records.last().expect("trace has the initial record");
    let non_increasing = trace.energy_non_increasing(ENERGY_SLACK);
    summary.status = if blow_up.is_none() && non_increasing {
        "stable"
    } else {
        "unstable"
    };
    summary.steps_taken = last.step;
    summary.blow_up_step = blow_up;
    summary.final_time = last.t;
    summary.max_energy_ratio = Some(trace.max_energy_ratio());
    summary.max_l2_ratio = Some(trace.max_l2_ratio());
    summary.energy_non_increasing = Some(non_increasing);
    let observed = trace.max_l2_ratio();
    let passed = match l2_growth_certificate(trace, system) {
        Ok(_) => true,
        Err(Error::CertificateViolated { .. }) => false,
        Err(e) => return Err(e.into()),
    };
    summary.certificate = Some(Certificate {
        bound: certificate_bound(system),
        observed,
        passed,
    });
    Ok(())
}

fn initial_data(job: &Job, system: &AssembledSystem) -> Result<Vec<f64>, CliError> {
    Ok(match job.initial {
        InitialData::Top => {
            let pair = top_eigenpair(&system.stiffness, &system.surrogate, &job.report_options().eigen)?;
            unstable_seed(system, &pair.vector)
        }
        InitialData::Smooth => {
            system.l2_projection(|x| x.iter().map(|&c| (std::f64::consts::PI * c).sin()).product())?
        }
        InitialData::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(job.seed);
            (0..system.n_free()).map(|_| rng.gen_range(-1.0..1.0)).collect()
        }
    })
}

pub fn sweep(job: &Job) -> Result<(), CliError> {
    let sweep = job
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("sweep needs --axis and --values (or a `sweep` key)".into()))?;
    let points: Vec<Problem> = (0..sweep.len())
        .map(|i| sweep.point(&job.problem, i))
        .collect::<Result<_, _>>()?;
    let dir = out_dir(job)?;
    let point_dir = dir.join("sweep_points");
    fs::create_dir_all(&point_dir).map_err(io_err(&point_dir))?;
    let files: Vec<_> = points
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let (_, report) = report_for(job, p)?;
            let path = point_dir.join(format!("point_{i:04}.csv"));
            write(
                &path,
                format!("{},{},{}\n", sweep.axis(), sweep.value_label(i), report.csv_row()),
            )?;
            Ok(path)
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = format!("axis,value,{}\n", BoundReport::csv_header());
    for path in &files {
        table.push_str(&fs::read_to_string(path).map_err(io_err(path))?);
    }
    write(&dir.join("sweep.csv"), table)?;
    log::info!("{} sweep points written to {}", files.len(), dir.display());
    Ok(())
}

pub fn mesh_gen(job: &Job) -> Result<(), CliError> {
    let mesh = job.problem.mesh.build()?;
    let dir = out_dir(job)?;
    let path = dir.join("mesh.txt");
    write_mesh(&mesh, &path)?;
    say(&path.display().to_string());
    Ok(())
}

/// Checks the matrix inequalities behind the bounds; fails with exit code 1 if one does not hold.
pub fn validate(job: &Job) -> Result<(), CliError> {
    let system = job.problem.assemble()?;
    let checks = verify_matrix_inequalities(&system, job.samples, job.seed)?;
    let out = json!({
        "mesh": job.problem.mesh.describe(),
        "order": job.problem.order,
        "policy": job.problem.policy.name(),
        "scheme": job.scheme.name(),
        "n_elements": system.mesh.n_elements(),
        "n_dofs": system.n_free(),
        "checks": checks.checks,
    });
    say(&out.to_string());
    checks.ensure()?;
    Ok(())
}
