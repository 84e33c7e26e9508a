//! The analyze → certify → find-orbit pipeline behind the `lyapcenter`
//! binary.

pub mod config;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use lyapcenter_core::conley::{certify_bifurcation, ConleyReport};
use lyapcenter_core::critical_orbits::{find_critical_orbits, CriticalError, CriticalOrbitRecord, SeedFailure};
use lyapcenter_core::orbit_finder::{amplitude_sweep, PeriodicOrbitSolution};
use lyapcenter_core::symmetry::{check_admissible_finite, AdmissibilityVerdict, GroupAction};
use lyapcenter_core::{parse_potential, PotentialSpec};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

pub use config::RunConfig;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    /// 2 for configuration and I/O problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

/// Outcome per critical orbit. The text forms are stable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// Hypotheses hold, the index changes, and shooting found an orbit.
    OrbitExhibited,
    /// Hypotheses hold and the index changes, but no refined orbit passed.
    RefinementFailed,
    /// Hypotheses hold but the certificate could not be issued.
    NotCertified(String),
    HypothesesFail(Vec<String>),
    /// A stationary point with invertible Hessian and a positive eigenvalue.
    ClassicalLiapunov,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::OrbitExhibited => f.write_str("theorem applies; orbit exhibited"),
            Verdict::RefinementFailed => f.write_str("certified; numerical refinement failed"),
            Verdict::NotCertified(why) => write!(f, "not certified: {why}"),
            Verdict::HypothesesFail(which) => write!(f, "hypotheses fail: {}", which.join(", ")),
            Verdict::ClassicalLiapunov => f.write_str("classical Liapunov case (full-rank Hessian)"),
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionEntry {
    pub amplitude: f64,
    pub accepted: bool,
    pub error: Option<String>,
    pub solution: Option<PeriodicOrbitSolution>,
    /// CSV file name inside the orbit directory, when written.
    pub csv: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitReport {
    pub index: usize,
    pub verdict: Verdict,
    pub point: Vec<f64>,
    pub j0: Option<usize>,
    pub record: CriticalOrbitRecord,
    pub conley: Option<ConleyReport>,
    pub solutions: Vec<SolutionEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    /// Unix seconds; the only field that varies between identical runs.
    pub generated_at: String,
    pub version: String,
    pub potential: String,
    pub dim: usize,
    pub action: GroupAction,
    pub subgroup_admissibility: Option<AdmissibilityVerdict>,
    pub search_failures: Vec<SeedFailure>,
    pub orbits: Vec<OrbitReport>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        self.orbits
            .iter()
            .map(|o| {
                let p: Vec<String> = o.point.iter().map(|v| format!("{v:.6}")).collect();
                format!("orbit {} at ({}): {}\n", o.index, p.join(", "), o.verdict)
            })
            .collect()
    }
}

fn critical_error(e: CriticalError) -> CliError {
    match e {
        CriticalError::Potential(_)
        | CriticalError::Symmetry(_)
        | CriticalError::UnknownDimension
        | CriticalError::Dimension(_) => CliError::Config(e.to_string()),
        other => CliError::Numeric(other.to_string()),
    }
}

fn analyze_orbit(
    index: usize,
    record: CriticalOrbitRecord,
    spec: &PotentialSpec,
    action: &GroupAction,
    cfg: &RunConfig,
) -> OrbitReport {
    let check = &record.hypotheses.checklist;
    let mut report = OrbitReport {
        index,
        verdict: Verdict::HypothesesFail(Vec::new()),
        point: record.point().to_vec(),
        j0: None,
        conley: None,
        solutions: Vec::new(),
        record: record.clone(),
    };
    if !check.all_pass() {
        report.verdict = if record.spectral.kernel_dim == 0 && check.has_positive_eigenvalue {
            Verdict::ClassicalLiapunov
        } else {
            Verdict::HypothesesFail(check.failures().into_iter().map(String::from).collect())
        };
        return report;
    }
    let j0 = cfg.conley.j0.unwrap_or(1);
    report.j0 = Some(j0);
    let conley = match certify_bifurcation(&record, j0, &cfg.conley_options()) {
        Ok(c) => c,
        Err(e) => {
            report.verdict = Verdict::NotCertified(e.to_string());
            return report;
        }
    };
    let certified = conley.bifurcation_certified;
    report.conley = Some(conley);
    if !certified {
        report.verdict = Verdict::NotCertified("the Euler characteristics at both ends of the window agree".into());
        return report;
    }
    match amplitude_sweep(spec, action, &record, j0, &cfg.finder.amplitudes, &cfg.finder_options()) {
        Ok(sweep) => {
            report.solutions = sweep
                .into_iter()
                .map(|e| SolutionEntry {
                    amplitude: e.amplitude,
                    accepted: e.solution.as_ref().is_some_and(|s| s.accepted()),
                    error: e.error,
                    solution: e.solution,
                    csv: None,
                })
                .collect();
            report.verdict = if report.solutions.iter().any(|s| s.accepted) {
                Verdict::OrbitExhibited
            } else {
                Verdict::RefinementFailed
            };
        }
        Err(e) => {
            report.solutions.push(SolutionEntry {
                amplitude: f64::NAN,
                accepted: false,
                error: Some(e.to_string()),
                solution: None,
                csv: None,
            });
            report.verdict = Verdict::RefinementFailed;
        }
    }
    report
}

/// Run the full pipeline. Hypothesis failures are data; only bad input
/// and numeric breakdowns are errors.
pub fn run(cfg: &RunConfig) -> Result<RunReport, CliError> {
    let spec = parse_potential(&cfg.potential).map_err(|e| CliError::Config(format!("potential: {e}")))?;
    let (action, subgroup) = cfg.group_action()?;
    let subgroup_admissibility = match (&action, subgroup) {
        (GroupAction::FinitePerm(g), Some(h)) => {
            Some(check_admissible_finite(g, &h).map_err(|e| CliError::Config(format!("action.subgroup: {e}")))?)
        }
        _ => None,
    };
    let outcome = find_critical_orbits(&spec, &action, &cfg.search_config()).map_err(critical_error)?;
    let dim = outcome.orbits.first().map_or(0, |o| o.point().len());
    let orbits: Vec<OrbitReport> = outcome
        .orbits
        .into_par_iter()
        .enumerate()
        .map(|(i, record)| analyze_orbit(i, record, &spec, &action, cfg))
        .collect();
    Ok(RunReport {
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs().to_string())
            .unwrap_or_default(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        potential: spec.to_string(),
        dim,
        action,
        subgroup_admissibility,
        search_failures: outcome.failures,
        orbits,
    })
}

/// Write one CSV per converged solution as `orbit{i}_a{k}.csv`.
pub fn write_csvs(report: &mut RunReport, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    for orbit in &mut report.orbits {
        for (k, entry) in orbit.solutions.iter_mut().enumerate() {
            let Some(sol) = &entry.solution else { continue };
            let name = format!("orbit{}_a{}.csv", orbit.index, k);
            let path = dir.join(&name);
            let file = std::fs::File::create(&path)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            sol.write_csv(std::io::BufWriter::new(file))
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
            entry.csv = Some(name);
        }
    }
    Ok(())
}

/// Output locations after command-line overrides.
pub fn output_paths(
    cfg: &RunConfig,
    json_out: Option<PathBuf>,
    csv_dir: Option<PathBuf>,
) -> (Option<PathBuf>, Option<PathBuf>) {
    let json = json_out.or_else(|| cfg.outputs.report_path.as_ref().map(|p| cfg.resolve(p)));
    let csv = csv_dir.or_else(|| cfg.outputs.orbit_csv_dir.as_ref().map(|p| cfg.resolve(p)));
    (json, csv)
}
