//! Run configuration: a JSON file overlaid by command-line flags, resolved into a validated [`Job`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Number, Value};
use stepbound::mesh::{parse_mesh, MeshSpec};
use stepbound::problem::assemble_on;
use stepbound::spectral::{EigenOptions, DEFAULT_SEED};
use stepbound::{
    AssembledSystem, BoundSource, DiffusionSpec, ReportOptions, RkScheme, SimplicialMesh, SurrogatePolicy,
};

use crate::error::CliError;

const MESH_KINDS: [&str; 6] = [
    "uniform_interval",
    "graded_interval",
    "perturbed_interval",
    "structured",
    "stretched",
    "random_perturbed",
];

const DIFFUSION_KINDS: [&str; 4] = ["identity", "isotropic", "constant", "rotated_anisotropic"];

/// Every key is optional here; defaults are filled in by [`RunConfig::resolve`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Generator spec object, compact spec string (`structured:nx=8,ny=8`) or mesh file path.
    pub mesh: Option<Value>,
    pub order: Option<usize>,
    /// Diffusion spec object or compact string (`rotated_anisotropic:angle=0.5,eigenvalues=1/100`).
    pub diffusion: Option<Value>,
    pub policy: Option<String>,
    pub scheme: Option<String>,
    /// Bound sources used for the time step; the smallest resulting τ wins.
    pub bounds: Option<Vec<String>>,
    pub tau: Option<f64>,
    pub steps: Option<usize>,
    /// Initial data for `integrate`: top, smooth or random.
    pub initial: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dof_cap: Option<usize>,
    /// Sample vectors per inequality check in `validate`.
    pub samples: Option<usize>,
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// n, order, anisotropy or policy
    pub axis: Option<String>,
    pub values: Option<Vec<Value>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        // mesh files are relative to the config file
        if let Some(Value::String(s)) = &cfg.mesh {
            if !is_compact(s, &MESH_KINDS) && Path::new(s).is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                cfg.mesh = Some(Value::String(base.join(s).to_string_lossy().into_owned()));
            }
        }
        Ok(cfg)
    }

    /// `flags` wins wherever it is set.
    pub fn overlay(self, flags: RunConfig) -> RunConfig {
        let sweep = match (self.sweep, flags.sweep) {
            (Some(a), Some(b)) => Some(SweepConfig {
                axis: b.axis.or(a.axis),
                values: b.values.or(a.values),
            }),
            (a, b) => b.or(a),
        };
        RunConfig {
            mesh: flags.mesh.or(self.mesh),
            order: flags.order.or(self.order),
            diffusion: flags.diffusion.or(self.diffusion),
            policy: flags.policy.or(self.policy),
            scheme: flags.scheme.or(self.scheme),
            bounds: flags.bounds.or(self.bounds),
            tau: flags.tau.or(self.tau),
            steps: flags.steps.or(self.steps),
            initial: flags.initial.or(self.initial),
            out: flags.out.or(self.out),
            seed: flags.seed.or(self.seed),
            dof_cap: flags.dof_cap.or(self.dof_cap),
            samples: flags.samples.or(self.samples),
            sweep,
        }
    }

    /// Validates every enumeration and reads the mesh file, if any; nothing is assembled yet.
    pub fn resolve(&self) -> Result<Job, CliError> {
        let mesh = match &self.mesh {
            None => return Err(CliError::Config("no mesh given (use --mesh or the `mesh` key)".into())),
            Some(v) => MeshSource::from_value(v)?,
        };
        let order = self.order.unwrap_or(1);
        if order == 0 {
            return Err(CliError::Config("order must be at least 1".into()));
        }
        let diffusion = match &self.diffusion {
            None => DiffusionSpec::Identity,
            Some(v) => parse_diffusion(v)?,
        };
        diffusion.to_field(mesh.dim())?;
        let policy = match &self.policy {
            None => SurrogatePolicy::default(),
            Some(p) => parse_policy(p)?,
        };
        let scheme = RkScheme::from_name(self.scheme.as_deref().unwrap_or("explicit_euler"))
            .map_err(|e| CliError::Config(e.to_string()))?;
        let bounds = match &self.bounds {
            None => vec![BoundSource::DiagRatio],
            Some(list) if list.is_empty() => return Err(CliError::Config("bounds list is empty".into())),
            Some(list) => list
                .iter()
                .map(|b| {
                    BoundSource::parse(b).ok_or_else(|| {
                        CliError::Config(format!(
                            "unknown bound source `{b}` (expected exact, diag_ratio or geometric)"
                        ))
                    })
                })
                .collect::<Result<_, _>>()?,
        };
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(CliError::Config(format!("tau must be positive, got {tau}")));
            }
        }
        let initial = match self.initial.as_deref().unwrap_or("top") {
            "top" => InitialData::Top,
            "smooth" => InitialData::Smooth,
            "random" => InitialData::Random,
            other => {
                return Err(CliError::Config(format!(
                    "unknown initial data `{other}` (expected top, smooth or random)"
                )))
            }
        };
        let sweep = self.sweep.as_ref().map(parse_sweep).transpose()?;
        Ok(Job {
            problem: Problem {
                mesh,
                order,
                diffusion,
                policy,
            },
            scheme,
            bounds,
            tau: self.tau,
            steps: self.steps.unwrap_or(100),
            initial,
            out: self.out.clone().unwrap_or_else(|| PathBuf::from(".")),
            seed: self.seed.unwrap_or(DEFAULT_SEED),
            dof_cap: self.dof_cap.unwrap_or(5000),
            samples: self.samples.unwrap_or(1000),
            sweep,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    Generated(MeshSpec),
    File { path: PathBuf, mesh: SimplicialMesh },
}

impl MeshSource {
    fn from_value(v: &Value) -> Result<Self, CliError> {
        match v {
            Value::String(s) if s.trim_start().starts_with('{') => {
                let v: Value = serde_json::from_str(s).map_err(|e| CliError::Config(format!("mesh: {e}")))?;
                Self::from_value(&v)
            }
            Value::String(s) if is_compact(s, &MESH_KINDS) => Self::from_value(&compact_to_json(s)?),
            Value::String(s) => {
                let text = std::fs::read_to_string(s).map_err(|e| CliError::Config(format!("mesh file {s}: {e}")))?;
                Ok(Self::File {
                    path: PathBuf::from(s),
                    mesh: parse_mesh(&text)?,
                })
            }
            Value::Object(_) => serde_json::from_value(v.clone())
                .map(Self::Generated)
                .map_err(|e| CliError::Config(format!("mesh: {e}"))),
            _ => Err(CliError::Config(
                "mesh must be a spec object, a compact spec or a file path".into(),
            )),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Generated(spec) => spec.dim(),
            Self::File { mesh, .. } => mesh.dim(),
        }
    }

    pub fn build(&self) -> Result<SimplicialMesh, CliError> {
        Ok(match self {
            Self::Generated(spec) => stepbound::generate_mesh(spec)?,
            Self::File { mesh, .. } => mesh.clone(),
        })
    }

    /// The generator spec as an object, or the file path.
    pub fn describe(&self) -> Value {
        match self {
            Self::Generated(spec) => serde_json::to_value(spec).expect("mesh spec serializes"),
            Self::File { path, .. } => Value::String(path.display().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub mesh: MeshSource,
    pub order: usize,
    pub diffusion: DiffusionSpec,
    pub policy: SurrogatePolicy,
}

impl Problem {
    pub fn assemble(&self) -> Result<AssembledSystem, CliError> {
        Ok(assemble_on(
            &self.mesh.build()?,
            self.order,
            &self.diffusion,
            self.policy,
        )?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitialData {
    /// Top generalized eigenvector plus a small smooth bump.
    Top,
    /// L² projection of Π sin(πx_k).
    Smooth,
    /// Seeded uniform(−1, 1) coefficients.
    Random,
}

impl InitialData {
    pub fn name(self) -> &'static str {
        match self {
            Self::Top => "top",
            Self::Smooth => "smooth",
            Self::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sweep {
    N(Vec<usize>),
    Order(Vec<usize>),
    Anisotropy(Vec<f64>),
    Policy(Vec<SurrogatePolicy>),
}

impl Sweep {
    pub fn axis(&self) -> &'static str {
        match self {
            Self::N(_) => "n",
            Self::Order(_) => "order",
            Self::Anisotropy(_) => "anisotropy",
            Self::Policy(_) => "policy",
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::N(v) | Self::Order(v) => v.len(),
            Self::Anisotropy(v) => v.len(),
            Self::Policy(v) => v.len(),
        }
    }

    pub fn value_label(&self, i: usize) -> String {
        match self {
            Self::N(v) | Self::Order(v) => v[i].to_string(),
            Self::Anisotropy(v) => format!("{:.16e}", v[i]),
            Self::Policy(v) => v[i].to_string(),
        }
    }

    /// The base problem with the swept parameter set to its `i`-th value.
    pub fn point(&self, base: &Problem, i: usize) -> Result<Problem, CliError> {
        let mut p = base.clone();
        match self {
            Self::N(v) => {
                let MeshSource::Generated(spec) = &mut p.mesh else {
                    return Err(CliError::Config("an n sweep needs a generated mesh".into()));
                };
                set_resolution(spec, v[i]);
            }
            Self::Order(v) => p.order = v[i],
            Self::Policy(v) => p.policy = v[i],
            Self::Anisotropy(v) => {
                let (nx, ny) = match &p.mesh {
                    MeshSource::Generated(
                        MeshSpec::Structured { nx, ny, .. }
                        | MeshSpec::Stretched { nx, ny, .. }
                        | MeshSpec::RandomPerturbed { nx, ny, .. },
                    ) => (*nx, *ny),
                    _ => return Err(CliError::Config("an anisotropy sweep needs a generated 2D mesh".into())),
                };
                let aligned = stepbound::problem::aligned_anisotropic(nx, v[i], p.order, p.policy);
                p.mesh = MeshSource::Generated(MeshSpec::Stretched { nx, ny, ratio: v[i] });
                p.diffusion = aligned.diffusion;
            }
        }
        Ok(p)
    }
}

fn set_resolution(spec: &mut MeshSpec, n: usize) {
    match spec {
        MeshSpec::UniformInterval { n: m }
        | MeshSpec::GradedInterval { n: m, .. }
        | MeshSpec::PerturbedInterval { n: m, .. } => *m = n,
        MeshSpec::Structured { nx, ny, .. } | MeshSpec::Stretched { nx, ny, .. } => (*nx, *ny) = (n, n),
        MeshSpec::RandomPerturbed { nx, ny, amplitude, .. } => {
            // keep the perturbation a fixed fraction of the cell size
            *amplitude *= *nx.max(ny) as f64 / n as f64;
            (*nx, *ny) = (n, n);
        }
    }
}

impl Job {
    pub fn report_options(&self) -> ReportOptions {
        ReportOptions {
            dof_cap: self.dof_cap,
            eigen: EigenOptions {
                seed: self.seed,
                ..EigenOptions::default()
            },
        }
    }
}

#[derive(Debug, Clone)]
pub struct Job {
    pub problem: Problem,
    pub scheme: RkScheme,
    pub bounds: Vec<BoundSource>,
    pub tau: Option<f64>,
    pub steps: usize,
    pub initial: InitialData,
    pub out: PathBuf,
    pub seed: u64,
    pub dof_cap: usize,
    pub samples: usize,
    pub sweep: Option<Sweep>,
}

fn parse_policy(p: &str) -> Result<SurrogatePolicy, CliError> {
    SurrogatePolicy::parse(p).ok_or_else(|| {
        let names: Vec<&str> = SurrogatePolicy::ALL.iter().map(|p| p.name()).collect();
        CliError::Config(format!("unknown policy `{p}` (expected one of {})", names.join(", ")))
    })
}

fn parse_diffusion(v: &Value) -> Result<DiffusionSpec, CliError> {
    let v = match v {
        Value::String(s) if s.trim_start().starts_with('{') => {
            serde_json::from_str(s).map_err(|e| CliError::Config(format!("diffusion: {e}")))?
        }
        Value::String(s) if is_compact(s, &DIFFUSION_KINDS) => compact_to_json(s)?,
        Value::String(s) => return Err(CliError::Config(format!("unknown diffusion `{s}`"))),
        other => other.clone(),
    };
    serde_json::from_value(v).map_err(|e| CliError::Config(format!("diffusion: {e}")))
}

fn parse_sweep(s: &SweepConfig) -> Result<Sweep, CliError> {
    let axis = s
        .axis
        .as_deref()
        .ok_or_else(|| CliError::Config("sweep needs an axis".into()))?;
    let values = s.values.as_deref().unwrap_or_default();
    if values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    let bad = |v: &Value| CliError::Config(format!("bad {axis} sweep value {v}"));
    let ints = || -> Result<Vec<usize>, CliError> {
        values
            .iter()
            .map(|v| v.as_u64().filter(|&n| n > 0).map(|n| n as usize).ok_or_else(|| bad(v)))
            .collect()
    };
    Ok(match axis {
        "n" => Sweep::N(ints()?),
        "order" => Sweep::Order(ints()?),
        "anisotropy" => Sweep::Anisotropy(
            values
                .iter()
                .map(|v| v.as_f64().filter(|a| *a >= 1.0).ok_or_else(|| bad(v)))
                .collect::<Result<_, _>>()?,
        ),
        "policy" => Sweep::Policy(
            values
                .iter()
                .map(|v| v.as_str().ok_or_else(|| bad(v)).and_then(parse_policy))
                .collect::<Result<_, _>>()?,
        ),
        other => {
            return Err(CliError::Config(format!(
                "unknown sweep axis `{other}` (expected n, order, anisotropy or policy)"
            )))
        }
    })
}

/// Sweep values from the command line: numbers where they parse, strings otherwise.
pub fn parse_values(list: &str) -> Vec<Value> {
    list.split(',').map(|t| scalar(t.trim())).collect()
}

fn is_compact(s: &str, kinds: &[&str]) -> bool {
    kinds.contains(&s.split(':').next().unwrap_or_default().trim())
}

/// `kind:key=value,key=value`, with `a/b` for arrays.
fn compact_to_json(s: &str) -> Result<Value, CliError> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut map = Map::new();
    map.insert("kind".into(), Value::String(kind.trim().into()));
    for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("expected key=value in `{s}`, got `{pair}`")))?;
        let v = if v.contains('/') {
            Value::Array(v.split('/').map(|t| scalar(t.trim())).collect())
        } else {
            scalar(v.trim())
        };
        map.insert(k.trim().into(), v);
    }
    Ok(Value::Object(map))
}

fn scalar(t: &str) -> Value {
    if let Ok(n) = t.parse::<u64>() {
        return Value::Number(n.into());
    }
    match t.parse::<f64>().ok().and_then(Number::from_f64) {
        Some(n) => Value::Number(n),
        None => Value::String(t.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn with_mesh(mesh: Value) -> RunConfig {
        RunConfig {
            mesh: Some(mesh),
            ..Default::default()
        }
    }

    #[test]
    fn compact_and_object_specs_agree() {
        let a = with_mesh(json!("structured:nx=4,ny=3")).resolve().unwrap();
        let b = with_mesh(json!({"kind": "structured", "nx": 4, "ny": 3}))
            .resolve()
            .unwrap();
        assert_eq!(a.problem, b.problem);
        let d = RunConfig {
            diffusion: Some(json!("rotated_anisotropic:angle=0.5,eigenvalues=1/100")),
            ..with_mesh(json!("uniform_interval:n=4"))
        };
        assert_eq!(
            d.resolve().unwrap().problem.diffusion,
            DiffusionSpec::RotatedAnisotropic {
                angle: 0.5,
                eigenvalues: [1.0, 100.0]
            }
        );
    }

    #[test]
    fn defaults() {
        let job = with_mesh(json!("uniform_interval:n=4")).resolve().unwrap();
        assert_eq!(job.problem.order, 1);
        assert_eq!(job.problem.policy, SurrogatePolicy::HrzDiagonal);
        assert_eq!(job.scheme, RkScheme::ExplicitEuler);
        assert_eq!(job.bounds, vec![BoundSource::DiagRatio]);
        assert_eq!(job.seed, DEFAULT_SEED);
        assert_eq!(job.dof_cap, 5000);
    }

    #[test]
    fn flags_win() {
        let file = RunConfig {
            order: Some(2),
            scheme: Some("heun2".into()),
            sweep: Some(SweepConfig {
                axis: Some("n".into()),
                values: Some(vec![json!(4)]),
            }),
            ..with_mesh(json!("uniform_interval:n=4"))
        };
        let flags = RunConfig {
            order: Some(3),
            sweep: Some(SweepConfig {
                axis: None,
                values: Some(vec![json!(8)]),
            }),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.order, Some(3));
        assert_eq!(merged.scheme.as_deref(), Some("heun2"));
        assert_eq!(merged.sweep.unwrap().axis.as_deref(), Some("n"));
    }

    #[test]
    fn rejects_bad_enumerations() {
        let base = with_mesh(json!("uniform_interval:n=4"));
        for bad in [
            RunConfig {
                scheme: Some("rk5".into()),
                ..base.clone()
            },
            RunConfig {
                policy: Some("row_sum".into()),
                ..base.clone()
            },
            RunConfig {
                bounds: Some(vec!["gershgorin".into()]),
                ..base.clone()
            },
            RunConfig {
                initial: Some("zero".into()),
                ..base.clone()
            },
            RunConfig {
                order: Some(0),
                ..base.clone()
            },
            RunConfig {
                tau: Some(-1.0),
                ..base.clone()
            },
            with_mesh(json!("structured:nx=4,ny=4,typo=1")),
            with_mesh(json!("/no/such/mesh/file")),
            RunConfig::default(),
        ] {
            let err = bad.resolve().unwrap_err();
            assert_eq!(err.exit_code(), 2, "{err}");
        }
    }

    #[test]
    fn sweep_points() {
        let job = RunConfig {
            sweep: Some(SweepConfig {
                axis: Some("anisotropy".into()),
                values: Some(parse_values("10,100")),
            }),
            ..with_mesh(json!("structured:nx=4,ny=4"))
        }
        .resolve()
        .unwrap();
        let sweep = job.sweep.unwrap();
        let p = sweep.point(&job.problem, 1).unwrap();
        assert_eq!(
            p.mesh,
            MeshSource::Generated(MeshSpec::Stretched {
                nx: 4,
                ny: 4,
                ratio: 100.0
            })
        );
        assert_eq!(
            p.diffusion,
            DiffusionSpec::RotatedAnisotropic {
                angle: 0.0,
                eigenvalues: [1.0, 1e-4]
            }
        );

        let mut spec = MeshSpec::RandomPerturbed {
            nx: 4,
            ny: 4,
            amplitude: 0.05,
            seed: 1,
        };
        set_resolution(&mut spec, 8);
        assert_eq!(
            spec,
            MeshSpec::RandomPerturbed {
                nx: 8,
                ny: 8,
                amplitude: 0.025,
                seed: 1
            }
        );
    }
}
