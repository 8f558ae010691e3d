//! Task orchestration and artifact writing.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64 as C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{DistanceMethod, RunConfig, Task};
use crate::dressed::{exact_block_energies, predict_peaks, strong_ddi_levels, strong_drive_levels, Regime, RegimeKind};
use crate::error::{Error, Result};
use crate::geometry::CouplingSet;
use crate::hilbert::Atom;
use crate::inference::{
    detect_peaks, estimate_distance_doublet, estimate_distance_large, estimate_distance_small,
    estimate_distance_small_from_spectrum, estimate_phi, estimate_theta, refine_phi, Estimate, PeakSet,
};
use crate::observables::{decimal, sigma_intensity_scan, Normalization, Spectrum, System};

pub const SPECTRUM_FILE: &str = "spectrum.csv";
pub const SCAN_FILE: &str = "intensity_scan.csv";
pub const REPORT_FILE: &str = "report.json";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Files written by a successful run, in the order they were written.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub wall_time_s: f64,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Couplings => "couplings",
            Task::SteadyState => "steady_state",
            Task::Spectrum => "spectrum",
            Task::IntensityScan => "intensity_scan",
            Task::Dressed => "dressed",
            Task::EstimateR => "estimate_r",
            Task::EstimatePhi => "estimate_phi",
            Task::EstimateTheta => "estimate_theta",
        }
    }
}

struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(BufWriter::new(f))
    }

    fn json(&mut self, name: &str, v: &Value) -> Result<()> {
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, v)?;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    fn spectrum(&mut self, s: &Spectrum) -> Result<()> {
        let mut w = self.create(SPECTRUM_FILE)?;
        s.write_csv(&mut w)?;
        w.flush()?;
        Ok(())
    }

    fn scan(&mut self, scan: &[(f64, f64)]) -> Result<()> {
        let mut w = self.create(SCAN_FILE)?;
        writeln!(w, "dtheta_rad,intensity")?;
        for (a, i) in scan {
            writeln!(w, "{},{}", decimal(*a), decimal(*i))?;
        }
        w.flush()?;
        Ok(())
    }
}

fn complex_matrix(m: &nalgebra::Matrix3<C64>) -> Value {
    Value::Array(
        (0..3)
            .map(|r| Value::Array((0..3).map(|c| json!([m[(r, c)].re, m[(r, c)].im])).collect()))
            .collect(),
    )
}

fn couplings_json(c: &CouplingSet) -> Value {
    json!({
        "eta": c.eta,
        "omega": complex_matrix(&c.omega),
        "gamma": complex_matrix(&c.gamma),
        "omega22": c.omega22(),
        "omega22_magnitude": c.omega22().abs(),
        "rabi1": c.rabi1,
        "rabi2": c.rabi2,
        "two_level": c.is_two_level(),
        "regime": Regime::classify(c),
    })
}

/// Reads a two-column CSV with a header row.
pub fn read_two_columns(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("{}: row {} column {} is not a number", path.display(), k + 2, i + 1)))
        };
        out.push((field(0)?, field(1)?));
    }
    Ok(out)
}

/// The measured spectrum from `config.input`, or a simulated one.
fn spectrum_for(config: &RunConfig, out: &mut Outputs) -> Result<Spectrum> {
    if let Some(path) = &config.input {
        let rows = read_two_columns(path)?;
        if rows.len() < 3 {
            return Err(Error::Config(format!("{}: spectrum needs at least three rows", path.display())));
        }
        let (detuning_grid, values) = rows.into_iter().unzip();
        return Ok(Spectrum {
            detuning_grid,
            values,
            channel: config.detector.channel,
            direction: config.detector.direction,
            normalization: Normalization::Raw,
            regularized: vec![],
        });
    }
    let sys = System::new(config.geometry, config.drive)?;
    let s = sys.spectrum(&config.detector, &config.grid.points())?;
    out.spectrum(&s)?;
    Ok(s)
}

fn scan_for(config: &RunConfig, out: &mut Outputs) -> Result<Vec<(f64, f64)>> {
    if let Some(path) = &config.input {
        return read_two_columns(path);
    }
    let n = config.scan_count;
    let grid: Vec<f64> = (0..n).map(|k| std::f64::consts::PI * k as f64 / (n - 1) as f64).collect();
    let scan = sigma_intensity_scan(&config.geometry, &config.drive, &grid)?;
    out.scan(&scan)?;
    Ok(scan)
}

fn estimate_json(e: &Estimate, peaks: Option<&PeakSet>) -> Value {
    let mut v = serde_json::to_value(e).expect("estimate serializes");
    if let Some(p) = peaks {
        v["peaks"] = serde_json::to_value(p).expect("peaks serialize");
    }
    v
}

fn execute(config: &RunConfig, out: &mut Outputs) -> Result<Value> {
    match config.task {
        Task::Couplings => Ok(couplings_json(&CouplingSet::compute(&config.geometry, &config.drive)?)),
        Task::SteadyState => {
            let sys = System::new(config.geometry, config.drive)?;
            let rho = sys.rho();
            let populations: Vec<Value> = Atom::BOTH
                .iter()
                .map(|&a| json!((1..=4).map(|lvl| rho.population(a, lvl)).collect::<Vec<_>>()))
                .collect();
            Ok(json!({
                "populations": populations,
                "residual": sys.steady.residual,
                "degenerate": sys.steady.degenerate,
                "min_eigenvalue": rho.min_eigenvalue(),
                "intensity": sys.intensity(&config.detector)?,
                "couplings": couplings_json(&sys.couplings),
            }))
        }
        Task::Spectrum => {
            let sys = System::new(config.geometry, config.drive)?;
            let s = sys.spectrum(&config.detector, &config.grid.points())?;
            out.spectrum(&s)?;
            let peaks = detect_peaks(&s, config.prominence)?;
            let regime = Regime::classify(&sys.couplings);
            Ok(json!({
                "peaks": peaks,
                "regime": regime,
                "predicted_peaks": predict_peaks(&regime, &sys.couplings).ok(),
                "max_intensity": s.max_value(),
                "regularized_points": s.regularized,
            }))
        }
        Task::IntensityScan => {
            let scan = scan_for(config, out)?;
            let max = scan.iter().map(|p| p.1).fold(0.0, f64::max);
            Ok(json!({ "samples": scan.len(), "max_intensity": max }))
        }
        Task::Dressed => {
            let c = CouplingSet::compute(&config.geometry, &config.drive)?;
            let regime = Regime::classify(&c);
            let w = c.omega22();
            let levels = match regime.kind {
                RegimeKind::StrongDriveWeakDdi => Some(strong_drive_levels(c.rabi1, c.rabi2, w).to_vec()),
                RegimeKind::StrongDdiWeakDrive if c.is_two_level() => Some(strong_ddi_levels(c.rabi1, c.rabi2, w)?.to_vec()),
                _ => None,
            };
            Ok(json!({
                "regime": regime,
                "levels": levels,
                "exact_block_energies": exact_block_energies(c.rabi1, c.rabi2, w),
                "predicted_peaks": predict_peaks(&regime, &c).ok(),
            }))
        }
        Task::EstimateR => {
            let s = spectrum_for(config, out)?;
            let peaks = detect_peaks(&s, config.prominence)?;
            let e = match config.distance_method {
                DistanceMethod::Small if config.input.is_none() => estimate_distance_small_from_spectrum(&s)?,
                DistanceMethod::Small => estimate_distance_small(&peaks)?,
                DistanceMethod::Large => estimate_distance_large(&peaks, &config.drive, config.geometry.r1)?,
                DistanceMethod::Doublet => estimate_distance_doublet(&peaks)?,
            };
            Ok(estimate_json(&e, Some(&peaks)))
        }
        Task::EstimatePhi => {
            let s = spectrum_for(config, out)?;
            let peaks = detect_peaks(&s, config.prominence)?;
            let e = estimate_phi(&peaks, &config.drive, config.geometry.r)?;
            let mut v = estimate_json(&e, Some(&peaks));
            v["refined"] = refine_phi(&peaks, &config.drive, config.geometry.r)
                .map_or(Value::Null, |r| serde_json::to_value(r).expect("estimate serializes"));
            Ok(v)
        }
        Task::EstimateTheta => {
            let scan = scan_for(config, out)?;
            Ok(estimate_json(&estimate_theta(&scan)?, None))
        }
    }
}

/// Executes the configured task and writes its artifacts plus
/// `manifest.json` into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    let task = config.task.name();
    let ctx = |e: Error| Error::Task {
        task,
        source: Box::new(e),
    };
    fs::create_dir_all(&config.output_dir).map_err(|e| ctx(e.into()))?;
    let mut out = Outputs {
        dir: config.output_dir.clone(),
        written: Vec::new(),
    };
    let report = execute(config, &mut out).map_err(ctx)?;
    out.json(REPORT_FILE, &json!({ "task": task, "result": report })).map_err(ctx)?;

    let wall_time_s = start.elapsed().as_secs_f64();
    let manifest = json!({
        "name": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "task": task,
        "config": config.to_json(),
        "config_toml": config.to_toml(),
        "outputs": out.written.iter().filter_map(|p| p.file_name()).map(|n| n.to_string_lossy()).collect::<Vec<_>>(),
        "wall_time_s": wall_time_s,
    });
    out.json(MANIFEST_FILE, &manifest).map_err(ctx)?;
    Ok(RunSummary {
        outputs: out.written,
        wall_time_s,
    })
}
