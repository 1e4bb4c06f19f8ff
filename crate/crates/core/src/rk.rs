//! Explicit Runge–Kutta schemes, their real stability boundaries, step-size
//! selection and time integration of M̃ U′ = −A U.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assembly::AssembledSystem;
use crate::cholesky::SpdFactor;
use crate::error::{Error, Result};
use crate::spectral::BoundReport;

/// Norm above which a run is declared unstable.
pub const BLOW_UP: f64 = 1e100;
/// Additive slack on the L² growth certificate.
pub const CERTIFICATE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum RkScheme {
    ExplicitEuler,
    Heun2,
    Kutta3,
    ClassicRk4,
    /// Explicit Butcher tableau: strictly lower-triangular `a`, weights `b`.
    Generic {
        a: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
}

impl RkScheme {
    pub const NAMED: [&'static str; 4] = ["explicit_euler", "heun2", "kutta3", "classic_rk4"];

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "explicit_euler" => Ok(Self::ExplicitEuler),
            "heun2" => Ok(Self::Heun2),
            "kutta3" => Ok(Self::Kutta3),
            "classic_rk4" => Ok(Self::ClassicRk4),
            other => Err(Error::InvalidArgument(format!(
                "unknown scheme `{other}` (expected one of {})",
                Self::NAMED.join(", ")
            ))),
        }
    }

    /// Validated explicit tableau; the weights must sum to 1.
    pub fn generic(a: Vec<Vec<f64>>, b: Vec<f64>) -> Result<Self> {
        let s = b.len();
        if s == 0 || a.len() != s || a.iter().any(|row| row.len() != s) {
            return Err(Error::InvalidArgument("tableau must be s×s with s weights".into()));
        }
        if (0..s).any(|i| (i..s).any(|j| a[i][j] != 0.0)) {
            return Err(Error::InvalidArgument("tableau is not explicit".into()));
        }
        if (b.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidArgument("weights must sum to 1".into()));
        }
        Ok(Self::Generic { a, b })
    }

    pub fn name(&self) -> &str {
        match self {
            Self::ExplicitEuler => "explicit_euler",
            Self::Heun2 => "heun2",
            Self::Kutta3 => "kutta3",
            Self::ClassicRk4 => "classic_rk4",
            Self::Generic { .. } => "generic",
        }
    }

    pub fn tableau(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        match self {
            Self::ExplicitEuler => (vec![vec![0.0]], vec![1.0]),
            Self::Heun2 => (vec![vec![0.0, 0.0], vec![1.0, 0.0]], vec![0.5, 0.5]),
            Self::Kutta3 => (
                vec![vec![0.0, 0.0, 0.0], vec![0.5, 0.0, 0.0], vec![-1.0, 2.0, 0.0]],
                vec![1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
            ),
            Self::ClassicRk4 => (
                vec![
                    vec![0.0, 0.0, 0.0, 0.0],
                    vec![0.5, 0.0, 0.0, 0.0],
                    vec![0.0, 0.5, 0.0, 0.0],
                    vec![0.0, 0.0, 1.0, 0.0],
                ],
                vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            ),
            Self::Generic { a, b } => (a.clone(), b.clone()),
        }
    }

    /// Coefficients c_k of R(z) = Σ c_k z^k, c_k = bᵀA^{k−1}𝟙.
    pub fn stability_poly(&self) -> Vec<f64> {
        let (a, b) = self.tableau();
        let s = b.len();
        let mut coeffs = vec![1.0];
        let mut v = vec![1.0; s];
        for _ in 0..s {
            coeffs.push(b.iter().zip(&v).map(|(x, y)| x * y).sum());
            v = (0..s).map(|i| (0..s).map(|j| a[i][j] * v[j]).sum()).collect();
        }
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        coeffs
    }

    pub fn eval_stability(&self, z: f64) -> f64 {
        eval_poly(&self.stability_poly(), z)
    }

    /// Largest s with |R(−x)| ≤ 1 on [0, s]: coarse scan, then bisection to 1e-12.
    pub fn real_stability_boundary(&self) -> f64 {
        let coeffs = self.stability_poly();
        let excess = |x: f64| eval_poly(&coeffs, -x).abs() - 1.0;
        let step = 1e-3;
        let limit = 2.0 * (coeffs.len() * coeffs.len()) as f64 + 10.0;
        let mut lo = 0.0;
        let mut hi = step;
        while excess(hi) <= 0.0 {
            lo = hi;
            hi += step;
            if hi > limit {
                return limit;
            }
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) <= 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

fn eval_poly(coeffs: &[f64], z: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSource {
    Exact,
    DiagRatio,
    Geometric,
}

impl BoundSource {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::DiagRatio => "diag_ratio",
            Self::Geometric => "geometric",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Exact, Self::DiagRatio, Self::Geometric]
            .into_iter()
            .find(|b| b.name() == s)
    }
}

/// τ = boundary / λ_estimate for the chosen bound.
pub fn stable_timestep(scheme: &RkScheme, source: BoundSource, report: &BoundReport) -> Result<f64> {
    let lambda = match source {
        BoundSource::Exact => report
            .lambda_max_exact
            .ok_or_else(|| Error::MissingBound(source.name().into()))?,
        BoundSource::DiagRatio => report.upper_diag_ratio,
        BoundSource::Geometric => report.upper_geometric,
    };
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::MissingBound(source.name().into()));
    }
    Ok(scheme.real_stability_boundary() / lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRecord {
    pub step: usize,
    pub t: f64,
    pub l2_norm: f64,
    pub energy_norm: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrationTrace {
    /// Step 0 holds the initial data.
    pub records: Vec<TraceRecord>,
    #[serde(skip)]
    pub final_state: Vec<f64>,
}

impl IntegrationTrace {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("step,t,l2_norm,energy_norm\n");
        for r in &self.records {
            let _ = writeln!(s, "{},{:.16e},{:.16e},{:.16e}", r.step, r.t, r.l2_norm, r.energy_norm);
        }
        s
    }

    /// max_n ‖u_n‖_E / ‖u_0‖_E (0 for zero data).
    pub fn max_energy_ratio(&self) -> f64 {
        max_ratio(self.records.iter().map(|r| r.energy_norm))
    }

    pub fn max_l2_ratio(&self) -> f64 {
        max_ratio(self.records.iter().map(|r| r.l2_norm))
    }

    /// True if ‖u_{n+1}‖_E ≤ (1 + slack)‖u_n‖_E for every step.
    pub fn energy_non_increasing(&self, slack: f64) -> bool {
        self.records
            .windows(2)
            .all(|w| w[1].energy_norm <= w[0].energy_norm * (1.0 + slack))
    }
}

fn max_ratio(mut norms: impl Iterator<Item = f64>) -> f64 {
    let first = norms.next().unwrap_or(0.0);
    if first == 0.0 {
        return 0.0;
    }
    norms.fold(1.0, |m, n| m.max(n / first))
}

/// Advances M̃ U′ = −A U with `scheme`; M̃ is factored once.
pub fn integrate(
    system: &AssembledSystem,
    scheme: &RkScheme,
    tau: f64,
    n_steps: usize,
    u0: &[f64],
) -> Result<IntegrationTrace> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {tau}")));
    }
    let n = system.n_free();
    if u0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial data has {} entries, system has {n}",
            u0.len()
        )));
    }
    let factor = SpdFactor::new(&system.surrogate)?;
    let (a, b) = scheme.tableau();
    let s = b.len();
    let rhs = |u: &[f64]| -> Vec<f64> {
        let mut f = factor.solve(&system.stiffness.apply(u));
        f.iter_mut().for_each(|v| *v = -*v);
        f
    };
    let record = |step: usize, u: &[f64]| TraceRecord {
        step,
        t: step as f64 * tau,
        l2_norm: system.mass.quad_form(u).max(0.0).sqrt(),
        energy_norm: system.stiffness.quad_form(u).max(0.0).sqrt(),
        tau,
    };

    let mut u = u0.to_vec();
    let mut records = Vec::with_capacity(n_steps + 1);
    records.push(record(0, &u));
    let mut stages: Vec<Vec<f64>> = Vec::with_capacity(s);
    for step in 1..=n_steps {
        stages.clear();
        for i in 0..s {
            let mut x = u.clone();
            for (j, k) in stages.iter().enumerate() {
                let c = tau * a[i][j];
                if c != 0.0 {
                    x.iter_mut().zip(k).for_each(|(xi, ki)| *xi += c * ki);
                }
            }
            stages.push(rhs(&x));
        }
        for (bi, k) in b.iter().zip(&stages) {
            u.iter_mut().zip(k).for_each(|(ui, ki)| *ui += tau * bi * ki);
        }
        let r = record(step, &u);
        let blown = !(r.l2_norm <= BLOW_UP && r.energy_norm <= BLOW_UP);
        records.push(r);
        if blown {
            return Err(Error::BlowUp {
                step,
                trace: Box::new(IntegrationTrace {
                    records,
                    final_state: u,
                }),
            });
        }
    }
    Ok(IntegrationTrace {
        records,
        final_state: u,
    })
}

/// √(κ(M̂) κ(M̃_K̂))
pub fn certificate_bound(system: &AssembledSystem) -> f64 {
    (system.elem.mass_condition_number() * system.surrogate_ref.kappa()).sqrt()
}

/// max_n ‖u_n‖_{L²}/‖u_0‖_{L²}, checked against √(κ(M̂) κ(M̃_K̂)) + 1e-9.
pub fn l2_growth_certificate(trace: &IntegrationTrace, system: &AssembledSystem) -> Result<f64> {
    let bound = certificate_bound(system);
    let Some(first) = trace.records.first() else {
        return Ok(0.0);
    };
    if first.l2_norm == 0.0 {
        return Ok(0.0);
    }
    let mut worst: f64 = 1.0;
    for r in &trace.records {
        let ratio = r.l2_norm / first.l2_norm;
        if ratio > bound + CERTIFICATE_SLACK {
            return Err(Error::CertificateViolated {
                step: r.step,
                ratio,
                bound,
            });
        }
        worst = worst.max(ratio);
    }
    Ok(worst)
}

/// Top generalized eigenvector plus a small smooth perturbation, for instability runs.
pub fn unstable_seed(system: &AssembledSystem, top: &[f64]) -> Vec<f64> {
    let scale = top.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    system
        .reduction
        .free
        .iter()
        .zip(top)
        .map(|(&i, &v)| {
            let bump: f64 = system.dofs.coords[i]
                .iter()
                .map(|x| (std::f64::consts::PI * x).sin())
                .product();
            v + 1e-3 * scale * bump
        })
        .collect()
}
