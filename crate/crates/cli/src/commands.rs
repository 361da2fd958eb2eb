use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use coopreg_core::simkit::run;
use coopreg_core::synthesis::{solvability_report, synthesize};
use coopreg_core::{GainSet, Metrics, RunOutcome, SolvabilityReport};

use crate::manifest::RunManifest;
use crate::scenario_file::{parse_scenario, Loaded};
use crate::{read, write, CliError};

/// Command-line adjustments applied on top of the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mu: Option<f64>,
    pub step: Option<f64>,
    pub horizon: Option<f64>,
    pub threshold: Option<f64>,
    pub flip_k1: bool,
    /// Accepted for interface stability; nothing in a run is random.
    pub seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, l: &mut Loaded) {
        if let Some(mu) = self.mu {
            l.law.mu = Some(mu);
        }
        if let Some(s) = self.step {
            l.scenario.step = s;
        }
        if let Some(h) = self.horizon {
            l.scenario.horizon = h;
        }
        if let Some(t) = self.threshold {
            l.law.threshold = t;
        }
        if let Some(seed) = self.seed {
            info!("seed {seed} ignored: runs are deterministic");
        }
    }
}

pub fn load(path: &Path, ov: &Overrides) -> Result<(Loaded, String), CliError> {
    let source = read(path)?;
    let mut loaded = parse_scenario(&source)?;
    ov.apply(&mut loaded);
    Ok((loaded, source))
}

pub fn cmd_check(path: &Path, ov: &Overrides) -> Result<SolvabilityReport, CliError> {
    let (l, _) = load(path, ov)?;
    Ok(solvability_report(&l.scenario, &l.law)?)
}

/// Path of the manifest written next to a gains file.
pub fn manifest_path(gains: &Path) -> std::path::PathBuf {
    let mut name = gains.file_stem().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    gains.with_file_name(name)
}

pub fn cmd_synth(path: &Path, out: &Path, ov: &Overrides) -> Result<RunManifest, CliError> {
    let (l, source) = load(path, ov)?;
    let gains = synthesize(&l.scenario, &l.law)?;
    let json = to_json(&gains)?;
    write(out, json.as_bytes())?;
    let manifest = RunManifest::new(
        vec![(path.display().to_string(), source.as_bytes())],
        &gains,
    );
    write(&manifest_path(out), to_json(&manifest)?.as_bytes())?;
    Ok(manifest)
}

fn to_json<T: Serialize>(v: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Io(format!("serializing: {e}")))
}

pub fn load_gains(path: &Path) -> Result<GainSet, CliError> {
    let text = read(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: format!("{}: {e}", path.display()),
    })
}

fn resolve_gains(l: &Loaded, gains: Option<GainSet>, ov: &Overrides) -> Result<GainSet, CliError> {
    let mut g = match gains {
        Some(g) => {
            if let (Some(mu), Some(obs)) = (l.law.mu, g.observer.as_ref()) {
                let mut g = g.clone();
                g.observer = Some(coopreg_core::ObserverGains { mu, ..obs.clone() });
                g
            } else {
                g
            }
        }
        None => synthesize(&l.scenario, &l.law)?,
    };
    if ov.flip_k1 {
        warn!("K_1 sign flipped: the loop is expected to diverge");
        g = g.with_flipped_feedback();
    }
    Ok(g)
}

pub fn cmd_run(
    path: &Path,
    gains: Option<&Path>,
    csv: Option<&Path>,
    ov: &Overrides,
) -> Result<RunOutcome, CliError> {
    let (l, _) = load(path, ov)?;
    let given = gains.map(load_gains).transpose()?;
    let g = resolve_gains(&l, given, ov)?;
    let out = run(&l.scenario, &l.law, Some(g))?;
    if let Some(p) = csv {
        let f = File::create(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        out.trajectory
            .write_csv(BufWriter::new(f))
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepGrid {
    /// Absolute values of μ.
    Mu(Vec<f64>),
    /// Multiples of the designed μ.
    MuScale(Vec<f64>),
    Step(Vec<f64>),
}

impl SweepGrid {
    fn name(&self) -> &'static str {
        match self {
            SweepGrid::Mu(_) => "mu",
            SweepGrid::MuScale(_) => "mu_scale",
            SweepGrid::Step(_) => "step",
        }
    }

    fn values(&self) -> &[f64] {
        match self {
            SweepGrid::Mu(v) | SweepGrid::MuScale(v) | SweepGrid::Step(v) => v,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: f64,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn converged(&self) -> bool {
        self.metrics.as_ref().is_some_and(|m| m.converged)
    }
}

/// One run per grid point, in parallel; rows come back in grid order and a
/// failing point only marks its own row.
pub fn cmd_sweep(path: &Path, grid: &SweepGrid, ov: &Overrides) -> Result<Vec<SweepRow>, CliError> {
    let (base, _) = load(path, ov)?;
    let rows = grid
        .values()
        .par_iter()
        .map(|&value| {
            let mut l = base.clone();
            match grid {
                SweepGrid::Mu(_) => l.law.mu = Some(value),
                SweepGrid::MuScale(_) => l.law.mu_scale = value,
                SweepGrid::Step(_) => l.scenario.step = value,
            }
            let result =
                resolve_gains(&l, None, ov).and_then(|g| Ok(run(&l.scenario, &l.law, Some(g))?));
            let (metrics, error) = match result {
                Ok(o) => (Some(o.metrics), None),
                Err(e) => (None, Some(e.to_string())),
            };
            SweepRow {
                parameter: grid.name().into(),
                value,
                metrics,
                error,
            }
        })
        .collect();
    Ok(rows)
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s =
        String::from("parameter\tvalue\tmax_final_tracking\tfinal_observer\tconverged\terror\n");
    for r in rows {
        let (track, obs) = match &r.metrics {
            Some(m) => (
                format!("{:.6e}", m.max_tracking_final),
                m.observer_final.map_or("-".into(), |e| format!("{e:.6e}")),
            ),
            None => ("-".into(), "-".into()),
        };
        s.push_str(&format!(
            "{}\t{}\t{track}\t{obs}\t{}\t{}\n",
            r.parameter,
            r.value,
            r.converged(),
            r.error.as_deref().unwrap_or("-")
        ));
    }
    s
}
