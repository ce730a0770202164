use std::fs;
use std::path::{Path, PathBuf};

use pcrit::eigensolver::{CurveOptions, SolverConfig};
use pcrit::energy::ProblemSpec;
use pcrit::potentials::{
    bump_perturbation, glued_power_profile, potential_from_profile, read_table,
    smooth_tail_profile, Potential,
};
use pcrit::radial::{make_grid, Grading, GridPlan, RadialGrid};
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Predicted exponents above this need `allow_steep = true`.
const STEEP_EXPONENT: f64 = 4.0;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemBlock,
    #[serde(default)]
    pub w: WBlock,
    #[serde(default)]
    pub grid: GridBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    pub sweep: Option<SweepBlock>,
    #[serde(default)]
    pub fit: FitBlock,
    #[serde(default)]
    pub bounds: BoundsBlock,
    #[serde(default)]
    pub outputs: OutputBlock,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VSource {
    SmoothTail,
    Glued,
    File,
    Zero,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    pub p: f64,
    #[serde(rename = "N")]
    pub dim: usize,
    pub v: VSource,
    #[serde(default = "default_glued_radius")]
    pub glued_radius: f64,
    /// Table written by `make-potential`; relative paths resolve against the config file.
    pub v_file: Option<PathBuf>,
    #[serde(default)]
    pub allow_steep: bool,
}

fn default_glued_radius() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WShape {
    Bump,
    SmoothStep,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WBlock {
    pub shape: WShape,
    pub radius: f64,
    pub amplitude: f64,
    pub width: Option<f64>,
}

impl Default for WBlock {
    fn default() -> Self {
        Self {
            shape: WShape::Bump,
            radius: 1.0,
            amplitude: 1.0,
            width: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradingKind {
    Uniform,
    Geometric,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridBlock {
    pub grading: GradingKind,
    /// Smallest interval of a geometric grid, or the interval of a uniform one.
    pub min_spacing: f64,
    pub ratio: f64,
    pub min_radius: f64,
    pub max_radius: f64,
    pub radius_factor: f64,
    pub truncation_check: bool,
    /// Fixed truncation radius for `ground-state`; with `intervals` it fixes the grid entirely.
    pub r_max: Option<f64>,
    /// Number of intervals M when `r_max` is set.
    pub intervals: Option<usize>,
    /// Increasing radii for `ground-state`, solved with outward warm starts.
    pub r_schedule: Option<Vec<f64>>,
    /// Largest radius of `criticality-check` and of `α = 0` solves.
    pub criticality_radius: f64,
}

impl Default for GridBlock {
    fn default() -> Self {
        Self {
            grading: GradingKind::Geometric,
            min_spacing: 2e-3,
            ratio: 1.005,
            min_radius: 20.0,
            max_radius: 1e7,
            radius_factor: 10.0,
            truncation_check: true,
            r_max: None,
            intervals: None,
            r_schedule: None,
            criticality_radius: 2000.0,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    pub max_iterations: Option<usize>,
    pub step_init: Option<f64>,
    pub tolerance_residual: Option<f64>,
    pub tolerance_lambda: Option<f64>,
    pub tolerance_lambda_relative: Option<f64>,
    pub relative_below: Option<f64>,
    pub seed: Option<u64>,
    pub backtracking: Option<f64>,
    pub max_backtracks: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepBlock {
    pub alphas: Option<Vec<f64>>,
    pub alpha_max: Option<f64>,
    pub alpha_min: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitBlock {
    /// Absolute exponent tolerance when `p < N < p²`.
    pub exponent_tolerance: f64,
    /// Relative exponent tolerance when `N < p`.
    pub relative_tolerance: f64,
    pub min_r2: f64,
    /// Bound on the relative spread of `-λ|log α|/α` when `N = p²`.
    pub spread_tolerance: f64,
    /// Relative tolerance on the extrapolated `λ/α` when `N > p²`.
    pub limit_tolerance: f64,
}

impl Default for FitBlock {
    fn default() -> Self {
        Self {
            exponent_tolerance: 0.15,
            relative_tolerance: 0.15,
            min_r2: 0.98,
            spread_tolerance: 0.25,
            limit_tolerance: 0.10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsBlock {
    pub lambdas: Vec<f64>,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub capacity_radii: Vec<f64>,
    pub capacity_cells: usize,
    pub gamma_x: f64,
    /// Compare optimized upper bounds with solved λ along the sweep.
    pub upper_bounds: bool,
}

impl Default for BoundsBlock {
    fn default() -> Self {
        Self {
            lambdas: vec![-1e-2, -1e-3],
            inner_radius: 2.0,
            outer_radius: 1e3,
            capacity_radii: vec![2.0, 4.0, 8.0],
            capacity_cells: 4000,
            gamma_x: 0.01,
            upper_bounds: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputBlock {
    pub directory: PathBuf,
    pub svg: bool,
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            svg: false,
        }
    }
}

/// A parsed config together with the hash of its bytes.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: ExperimentConfig,
    pub hash: String,
    pub base_dir: PathBuf,
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let bytes = fs::read(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
    let config: ExperimentConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let hash = format!("{:x}", Sha256::digest(&bytes));
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(Loaded {
        config,
        hash,
        base_dir,
    })
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

impl Loaded {
    fn critical_v(&self, source: VSource) -> Result<Potential<f64>, CliError> {
        let pb = &self.config.problem;
        match source {
            VSource::Zero => Ok(Potential::zero()),
            VSource::SmoothTail => {
                let phi = smooth_tail_profile(pb.p, pb.dim).map_err(config_err)?;
                potential_from_profile(&phi, pb.p, pb.dim).map_err(config_err)
            }
            VSource::Glued => {
                let phi = glued_power_profile(pb.p, pb.dim, pb.glued_radius).map_err(config_err)?;
                potential_from_profile(&phi, pb.p, pb.dim).map_err(config_err)
            }
            VSource::File => {
                let rel = pb
                    .v_file
                    .as_ref()
                    .ok_or_else(|| config_err("v = \"file\" needs v_file"))?;
                let path = self.base_dir.join(rel);
                let file = fs::File::open(&path)
                    .map_err(|e| config_err(format!("cannot open {}: {e}", path.display())))?;
                let (p, n, table) = read_table::<f64, _>(std::io::BufReader::new(file))
                    .map_err(config_err)?;
                if p != pb.p || n != pb.dim {
                    return Err(config_err(format!(
                        "potential table is for p={p} N={n}, config has p={} N={}",
                        pb.p, pb.dim
                    )));
                }
                Ok(table)
            }
        }
    }

    /// The V that `make-potential` writes: never read back from a file.
    pub fn source_potential(&self) -> Result<Potential<f64>, CliError> {
        if self.config.problem.v == VSource::File {
            return Err(config_err("make-potential needs v = smooth_tail, glued or zero"));
        }
        self.critical_v(self.config.problem.v)
    }

    pub fn w(&self) -> Result<Potential<f64>, CliError> {
        let wb = &self.config.w;
        match wb.shape {
            WShape::Bump => bump_perturbation(wb.radius, wb.amplitude).map_err(config_err),
            WShape::SmoothStep => {
                let width = wb
                    .width
                    .ok_or_else(|| config_err("w.shape = \"smooth_step\" needs w.width"))?;
                Potential::smooth_step(wb.radius, width, wb.amplitude).map_err(config_err)
            }
        }
    }

    /// Problem at `α = 0`. A tabulated V carries no ground state, so checks that need `φ₀`
    /// report an error for it.
    pub fn spec(&self) -> Result<ProblemSpec<f64>, CliError> {
        let pb = &self.config.problem;
        let v = self.critical_v(pb.v)?;
        let spec = ProblemSpec::new(pb.p, pb.dim, v, self.w()?, 0.0).map_err(config_err)?;
        if let Some(q) = spec.regime().order_exponent(pb.p, pb.dim) {
            if q > STEEP_EXPONENT && !pb.allow_steep {
                return Err(config_err(format!(
                    "predicted exponent {q} is steep (> {STEEP_EXPONENT}); set problem.allow_steep = true to run it"
                )));
            }
        }
        Ok(spec)
    }

    pub fn solver(&self, seed: Option<u64>) -> Result<SolverConfig<f64>, CliError> {
        let s = &self.config.solver;
        let d = SolverConfig::<f64>::default();
        let cfg = SolverConfig {
            max_iterations: s.max_iterations.unwrap_or(d.max_iterations),
            step_init: s.step_init.unwrap_or(d.step_init),
            tolerance_residual: s.tolerance_residual.unwrap_or(d.tolerance_residual),
            tolerance_lambda: s.tolerance_lambda.unwrap_or(d.tolerance_lambda),
            tolerance_lambda_relative: s
                .tolerance_lambda_relative
                .unwrap_or(d.tolerance_lambda_relative),
            relative_below: s.relative_below.unwrap_or(d.relative_below),
            seed: seed.or(s.seed).unwrap_or(d.seed),
            backtracking: s.backtracking.unwrap_or(d.backtracking),
            max_backtracks: s.max_backtracks.unwrap_or(d.max_backtracks),
        };
        cfg.validate().map_err(config_err)?;
        Ok(cfg)
    }

    pub fn plan(&self) -> GridPlan<f64> {
        let g = &self.config.grid;
        match g.grading {
            GradingKind::Uniform => GridPlan::Uniform {
                spacing: g.min_spacing,
            },
            GradingKind::Geometric => GridPlan::Geometric {
                min_spacing: g.min_spacing,
                ratio: g.ratio,
            },
        }
    }

    pub fn curve_options(&self) -> CurveOptions<f64> {
        let g = &self.config.grid;
        let mut o = CurveOptions::new(self.plan(), g.min_radius, g.max_radius);
        o.radius_factor = g.radius_factor;
        o.truncation_check = g.truncation_check;
        o
    }

    /// Fixed grid from `r_max` and `intervals`, when both are set.
    pub fn fixed_grid(&self) -> Result<Option<RadialGrid<f64>>, CliError> {
        let g = &self.config.grid;
        match (g.r_max, g.intervals) {
            (Some(r), Some(m)) => {
                let grading = match g.grading {
                    GradingKind::Uniform => Grading::Uniform,
                    GradingKind::Geometric => Grading::Geometric(g.ratio),
                };
                make_grid(self.config.problem.dim, r, m, grading)
                    .map(Some)
                    .map_err(config_err)
            }
            (None, Some(_)) => Err(config_err("grid.intervals needs grid.r_max")),
            _ => Ok(None),
        }
    }

    /// Sweep couplings in decreasing order.
    pub fn alphas(&self) -> Result<Vec<f64>, CliError> {
        let sw = self
            .config
            .sweep
            .as_ref()
            .ok_or_else(|| CliError::Usage("no --alpha given and the config has no [sweep] block".into()))?;
        let mut list = match (&sw.alphas, sw.alpha_max, sw.alpha_min, sw.points) {
            (Some(a), None, None, None) => a.clone(),
            (None, Some(hi), Some(lo), Some(n)) => {
                if !(hi > lo && lo > 0.0) || n < 2 {
                    return Err(config_err("sweep range needs alpha_max > alpha_min > 0 and points >= 2"));
                }
                (0..n)
                    .map(|k| (hi.ln() + (lo.ln() - hi.ln()) * k as f64 / (n - 1) as f64).exp())
                    .collect()
            }
            _ => {
                return Err(config_err(
                    "sweep needs either alphas or all of alpha_max, alpha_min, points",
                ))
            }
        };
        if list.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(config_err("sweep alphas must be positive"));
        }
        list.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        list.dedup();
        Ok(list)
    }
}
