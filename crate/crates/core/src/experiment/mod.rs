//! Declarative experiment runs: a mesh hierarchy, one solve per level,
//! extrapolated error estimates and file output.

mod config;
pub mod vtk;

pub use config::{preset, BcCase, ExperimentConfig, Load, Outputs, PRESETS};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::Serialize;

use crate::analysis::{dg_error, dg_norm, energy_density, error_series, ConvergenceRow, LevelNorm};
use crate::assembly::{assemble, ProblemSpec};
use crate::error::{Error, Result};
use crate::mesh::{DirichletSpec, Mesh, Side};
use crate::solver::{solve, SolveReport, SolverOptions};
use crate::spaces::{FieldValue, Space};
use crate::tensor::Vec2;

/// Prescribed value at the point constraint of [`BcCase::ClampedRightPoint`].
pub const POINT_VALUE: f64 = 0.3;
pub const POINT_LOCATION: [f64; 2] = [0.0, 0.5];
/// Left end of the clamped boundary piece of [`BcCase::ClampedRightPoint`].
pub const RIGHT_CLAMP_FROM: f64 = 2.0 / 3.0;

fn bump(x: f64) -> [f64; 3] {
    // p = x²(1-x)² and its first two derivatives.
    let p = x * x * (1.0 - x) * (1.0 - x);
    let dp = 2.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    let ddp = 2.0 - 12.0 * x + 12.0 * x * x;
    [p, dp, ddp]
}

/// `u* = x²(1-x)² y²(1-y)²` with gradient and Hessian. Clamped on `∂Ω`.
pub fn manufactured_solution(x: Vec2) -> FieldValue {
    let [p, dp, ddp] = bump(x.x);
    let [q, dq, ddq] = bump(x.y);
    FieldValue {
        value: p * q,
        grad: [dp * q, p * dq],
        hess: [[ddp * q, dp * dq], [dp * dq, p * ddq]],
    }
}

/// `Δ²u*` for [`manufactured_solution`].
pub fn manufactured_load(x: Vec2) -> f64 {
    let [p, _, ddp] = bump(x.x);
    let [q, _, ddq] = bump(x.y);
    24.0 * q + 2.0 * ddp * ddq + 24.0 * p
}

impl BcCase {
    /// Human-readable boundary data, recorded in the manifest.
    pub fn describe(self) -> &'static str {
        match self {
            BcCase::ClampedAll => "u = 0, grad u = 0 on the whole boundary",
            BcCase::ClampedTwoSidesGrad => {
                "u = 0 and grad u = outward unit normal on x = 0 and x = 1; other sides free"
            }
            BcCase::ClampedTwoSidesLift => {
                "u = 0.3 on x = 0, u = 0 on x = 1, grad u = 0 on both; other sides free"
            }
            BcCase::ClampedRightPoint => {
                "u = 0, grad u = 0 on the boundary where x >= 2/3; u(0, 0.5) = 0.3 by point penalty"
            }
        }
    }

    pub fn dirichlet(self) -> DirichletSpec {
        match self {
            BcCase::ClampedAll => DirichletSpec::all(),
            BcCase::ClampedTwoSidesGrad | BcCase::ClampedTwoSidesLift => {
                DirichletSpec::sides(&[Side::Left, Side::Right])
            }
            BcCase::ClampedRightPoint => DirichletSpec::x_at_least(RIGHT_CLAMP_FROM),
        }
    }
}

impl ExperimentConfig {
    /// The discrete problem solved on every level.
    pub fn problem(&self) -> ProblemSpec {
        let mut spec = ProblemSpec::new(self.degree).with_penalty(self.penalty);
        spec = match self.load {
            Load::Zero => spec,
            Load::Constant(c) => spec.with_load(move |_| c),
            Load::Manufactured => spec.with_load(manufactured_load),
        };
        match self.bc {
            BcCase::ClampedAll => spec,
            // The outward normal: (-1, 0) on x = 0 and (1, 0) on x = 1.
            BcCase::ClampedTwoSidesGrad => {
                spec.with_dirichlet_gradient(|x| Vec2::new(if x.x < 0.5 { -1.0 } else { 1.0 }, 0.0))
            }
            BcCase::ClampedTwoSidesLift => spec.with_dirichlet_value(|x| POINT_VALUE * (1.0 - x.x)),
            BcCase::ClampedRightPoint => spec.with_point_constraint(
                Vec2::new(POINT_LOCATION[0], POINT_LOCATION[1]),
                POINT_VALUE,
            ),
        }
    }

    /// Classified mesh of the given refinement level.
    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        Mesh::refined(self.base_n, self.interface, self.degree, level)?
            .classify_edges(&self.bc.dirichlet())
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            method: self.solver,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub n_elements: usize,
    pub n_dofs: usize,
    pub h_max: f64,
    /// `‖u_h‖_h` with the homogeneous boundary terms. For nonzero boundary
    /// data it grows under refinement and is not a convergence measure.
    pub norm: f64,
    /// `‖u* - u_h‖_h` for the manufactured load.
    pub exact_error: Option<f64>,
    pub energy_max: f64,
    pub energy_argmax: usize,
    /// Vertex centroid of the element with the largest energy density.
    pub energy_argmax_centroid: [f64; 2],
    pub solve: SolveReport,
    pub assembly_seconds: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub config: ExperimentConfig,
    pub boundary_data: String,
    pub levels: Vec<LevelReport>,
    /// Extrapolated error estimates; present for homogeneous boundary data
    /// and at least three levels.
    pub convergence: Option<Vec<ConvergenceRow>>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    pub total_seconds: f64,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub solutions: Vec<Vec<f64>>,
}

impl RunSummary {
    /// Plain-text table of the per-level results.
    pub fn table(&self) -> String {
        let mut s = String::new();
        writeln!(
            s,
            "{:>5} {:>9} {:>10} {:>18} {:>18} {:>12} {:>7}",
            "level", "ndofs", "hmax", "s", "stilde", "err", "rate"
        )
        .unwrap();
        for (j, l) in self.levels.iter().enumerate() {
            let row = self.convergence.as_ref().map(|c| &c[j]);
            let opt = |v: Option<f64>, w: usize, p: usize| {
                v.map_or(format!("{:>w$}", "-"), |v| format!("{v:>w$.p$}"))
            };
            writeln!(
                s,
                "{:>5} {:>9} {:>10.4e} {:>18.12} {} {} {}",
                l.level,
                l.n_dofs,
                l.h_max,
                l.norm,
                opt(row.and_then(|r| r.s_tilde), 18, 12),
                row.map_or(format!("{:>12}", "-"), |r| format!("{:>12.4e}", r.err)),
                opt(row.and_then(|r| r.rate), 7, 4),
            )
            .unwrap();
        }
        s
    }
}

fn centroid(mesh: &Mesh, t: usize) -> [f64; 2] {
    let v = mesh.elements()[t].vertices.map(|i| mesh.vertices()[i]);
    let c = (v[0] + v[1] + v[2]) / 3.0;
    [c.x, c.y]
}

/// Runs every level of the experiment and, when `out_dir` is given, writes
/// `convergence.csv`, `level<j>.vtk` and `manifest.json` into
/// `out_dir/<name>/`. The manifest is also written when a level fails.
pub fn run(config: &ExperimentConfig, out_dir: Option<&Path>) -> Result<RunSummary> {
    config.validate()?;
    let start = Instant::now();
    let dir = match out_dir {
        Some(d) => {
            let dir = d.join(&config.name);
            fs::create_dir_all(&dir)?;
            Some(dir)
        }
        None => None,
    };
    let mut summary = RunSummary {
        config: config.clone(),
        boundary_data: config.bc.describe().to_string(),
        levels: Vec::new(),
        convergence: None,
        warnings: Vec::new(),
        error: None,
        total_seconds: 0.0,
        output_dir: dir.clone(),
        solutions: Vec::new(),
    };
    let result = run_levels(config, dir.as_deref(), &mut summary);
    if let Err(e) = &result {
        summary.error = Some(e.to_string());
    }
    summary.total_seconds = start.elapsed().as_secs_f64();
    if let Some(dir) = &dir {
        if config.outputs.csv && !summary.levels.is_empty() {
            fs::write(dir.join("convergence.csv"), convergence_csv(&summary))?;
        }
        let manifest = serde_json::to_string_pretty(&summary)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        fs::write(dir.join("manifest.json"), manifest)?;
    }
    result.map(|_| summary)
}

fn run_levels(config: &ExperimentConfig, dir: Option<&Path>, summary: &mut RunSummary) -> Result<()> {
    let problem = config.problem();
    let opts = config.solver_options();
    let mut mesh = config.mesh(0)?;
    for sub in 0..mesh.n_subdomains() {
        if !mesh.subdomain_has_dirichlet_edge(sub) {
            let msg = format!(
                "subdomain {sub} has no clamped boundary; only the fold couples it to the rest"
            );
            warn!("{msg}");
            summary.warnings.push(msg);
        }
    }

    for level in 0..config.levels {
        if level > 0 {
            mesh = mesh.refine_uniform()?;
        }
        let t0 = Instant::now();
        let system = assemble(&mesh, &problem)?;
        let assembly_seconds = t0.elapsed().as_secs_f64();
        let (u, report) = solve(&system, &opts)?;
        let space = Space::new(&mesh)?;
        let norm = dg_norm(&space, &u, &config.penalty)?;
        let exact_error = match config.load {
            Load::Manufactured => Some(dg_error(
                &space,
                &u,
                Some(&manufactured_solution),
                &config.penalty,
            )?),
            _ => None,
        };
        let density = energy_density(&space, &u)?;
        let (argmax, &emax) = density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty mesh");
        info!(
            "{} level {level}: {} dofs, s = {norm:.12}, {report}",
            config.name,
            u.len()
        );

        if let (Some(dir), true) = (dir, config.outputs.vtk) {
            let energy = vtk::CellField {
                name: "energy_density",
                values: &density,
            };
            let cells: &[vtk::CellField<'_>] = if config.outputs.energy {
                std::slice::from_ref(&energy)
            } else {
                &[]
            };
            vtk::write(
                &dir.join(format!("level{level}.vtk")),
                &mesh,
                &format!("{} level {level}", config.name),
                Some(("u", &u)),
                cells,
            )?;
        }

        summary.levels.push(LevelReport {
            level,
            n_elements: mesh.n_elements(),
            n_dofs: u.len(),
            h_max: mesh.h_max(),
            norm,
            exact_error,
            energy_max: emax,
            energy_argmax: argmax,
            energy_argmax_centroid: centroid(&mesh, argmax),
            solve: report,
            assembly_seconds,
        });
        summary.solutions.push(u);
    }

    let homogeneous = config.bc.is_homogeneous();
    if homogeneous && summary.levels.len() >= 3 {
        let norms: Vec<LevelNorm> = summary
            .levels
            .iter()
            .map(|l| LevelNorm {
                level: l.level,
                n_dofs: l.n_dofs,
                h_max: l.h_max,
                norm: l.norm,
            })
            .collect();
        match error_series(&norms) {
            Ok(rows) => summary.convergence = Some(rows),
            Err(e) => {
                let msg = format!("no error estimates: {e}");
                warn!("{msg}");
                summary.warnings.push(msg);
            }
        }
    }
    Ok(())
}

fn convergence_csv(summary: &RunSummary) -> String {
    let mut s = String::from("level,ndofs,hmax,s,stilde,err,rate\n");
    let fmt = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.11e}"));
    for (j, l) in summary.levels.iter().enumerate() {
        let row = summary.convergence.as_ref().map(|c| &c[j]);
        writeln!(
            s,
            "{},{},{:.11e},{:.11e},{},{},{}",
            l.level,
            l.n_dofs,
            l.h_max,
            l.norm,
            fmt(row.and_then(|r| r.s_tilde)),
            fmt(row.map(|r| r.err)),
            fmt(row.and_then(|r| r.rate)),
        )
        .unwrap();
    }
    s
}

/// Writes the classified mesh of one level with subdomain labels.
pub fn export_mesh(config: &ExperimentConfig, level: usize, path: &Path) -> Result<Mesh> {
    let mesh = config.mesh(level)?;
    vtk::write(path, &mesh, &format!("{} mesh level {level}", config.name), None, &[])?;
    Ok(mesh)
}
