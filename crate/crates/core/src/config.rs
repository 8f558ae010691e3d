//! Run configuration: a flat TOML document describing one task.
//!
//! ```toml
//! task = "spectrum"
//! R = 0.3
//! theta = 1.5708
//! phi = 0.0
//! Omega = 100.0
//!
//! [detector]
//! direction = "+y"      # or a unit vector [x, y, z]
//! channel = "pi"
//!
//! [grid]
//! count = 2001          # min/max default to the regime's spectral extent
//! ```

use std::collections::BTreeSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::dressed::spectral_extent;
use crate::error::{Error, Result};
use crate::geometry::{CouplingSet, DriveConfig, Geometry, DEFAULT_R1};
use crate::inference::DEFAULT_PROMINENCE;
use crate::observables::{Channel, Detector, DetuningGrid};

/// Default grid half-width as a multiple of the largest predicted sideband.
pub const GRID_MARGIN: f64 = 1.3;
/// Default number of rotation angles in a σ-intensity scan over `[0, π]`.
pub const DEFAULT_SCAN_COUNT: usize = 181;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Couplings,
    SteadyState,
    Spectrum,
    IntensityScan,
    Dressed,
    EstimateR,
    EstimatePhi,
    EstimateTheta,
}

/// Which separation estimator `estimate_r` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    /// Weak drive, DDI-dominated sidebands.
    #[default]
    Small,
    /// Independent atoms: Rabi-frequency inversion.
    Large,
    /// Strong drive: doublet splitting.
    Doublet,
}

/// Fully validated and defaulted configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub task: Task,
    pub geometry: Geometry,
    pub drive: DriveConfig,
    pub detector: Detector,
    pub grid: DetuningGrid,
    pub output_dir: PathBuf,
    pub prominence: f64,
    pub scan_count: usize,
    pub distance_method: DistanceMethod,
    /// Measured spectrum (or scan) CSV; when absent the estimators run on a
    /// simulated one.
    pub input: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum Direction {
    Preset(String),
    Vector([f64; 3]),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RawDetector {
    #[serde(skip_serializing_if = "Option::is_none")]
    direction: Option<Direction>,
    #[serde(skip_serializing_if = "Option::is_none")]
    channel: Option<Channel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    include_position_phase: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
struct RawGrid {
    #[serde(skip_serializing_if = "Option::is_none")]
    min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    count: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawConfig {
    task: Task,
    #[serde(rename = "R")]
    r: f64,
    theta: f64,
    phi: f64,
    #[serde(rename = "Omega")]
    omega: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    r1: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    detunings: Option<[f64; 3]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    prominence: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance_method: Option<DistanceMethod>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<PathBuf>,
    #[serde(default)]
    detector: RawDetector,
    #[serde(default)]
    grid: RawGrid,
}

const TOP_KEYS: &[&str] = &[
    "task",
    "R",
    "theta",
    "phi",
    "Omega",
    "r1",
    "detunings",
    "output_dir",
    "prominence",
    "scan_count",
    "distance_method",
    "input",
    "detector",
    "grid",
];
const DETECTOR_KEYS: &[&str] = &["direction", "channel", "include_position_phase"];
const GRID_KEYS: &[&str] = &["min", "max", "count"];

fn unknown_keys(doc: &toml::Table) -> Vec<String> {
    let mut out = BTreeSet::new();
    for (k, v) in doc {
        if !TOP_KEYS.contains(&k.as_str()) {
            out.insert(k.clone());
            continue;
        }
        let nested = match k.as_str() {
            "detector" => DETECTOR_KEYS,
            "grid" => GRID_KEYS,
            _ => continue,
        };
        if let Some(t) = v.as_table() {
            out.extend(t.keys().filter(|s| !nested.contains(&s.as_str())).map(|s| format!("{k}.{s}")));
        }
    }
    out.into_iter().collect()
}

fn preset_direction(name: &str) -> Result<[f64; 3]> {
    Ok(match name {
        "+x" => [1.0, 0.0, 0.0],
        "-x" => [-1.0, 0.0, 0.0],
        "+y" => [0.0, 1.0, 0.0],
        "-y" => [0.0, -1.0, 0.0],
        "+z" => [0.0, 0.0, 1.0],
        "-z" => [0.0, 0.0, -1.0],
        _ => {
            return Err(Error::invalid(
                "detector.direction",
                format!("unknown preset '{name}' (±x, ±y, ±z or a unit vector)"),
            ))
        }
    })
}

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::invalid(field, format!("{field} must be positive")))
    }
}

impl RunConfig {
    /// Parses and validates a TOML document, filling every default.
    pub fn parse(text: &str) -> Result<Self> {
        let doc: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))?;
        let unknown = unknown_keys(&doc);
        if !unknown.is_empty() {
            return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
        }
        let raw: RawConfig = doc.try_into().map_err(|e: toml::de::Error| Error::Config(e.message().to_owned()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: RawConfig) -> Result<Self> {
        for (field, v) in [("theta", raw.theta), ("phi", raw.phi), ("Omega", raw.omega)] {
            if !v.is_finite() {
                return Err(Error::invalid(field, "must be finite"));
            }
        }
        if !raw.r.is_finite() || raw.r < 0.0 {
            return Err(Error::invalid("R", "R must be positive"));
        }
        let geometry = Geometry::new(raw.r, raw.theta, raw.phi, raw.r1.unwrap_or(DEFAULT_R1))?;
        let drive = DriveConfig::with_detunings(raw.omega, raw.detunings.unwrap_or([0.0; 3]))?;

        let direction = match raw.detector.direction {
            None => [0.0, 1.0, 0.0],
            Some(Direction::Preset(p)) => preset_direction(&p)?,
            Some(Direction::Vector(v)) => v,
        };
        let channel = raw.detector.channel.unwrap_or(match raw.task {
            Task::IntensityScan | Task::EstimateTheta => Channel::Sigma,
            _ => Channel::Pi,
        });
        let mut detector = Detector::new(direction, channel)?;
        detector.include_position_phase = raw.detector.include_position_phase.unwrap_or(true);

        let count = raw.grid.count.unwrap_or(DetuningGrid::DEFAULT_COUNT);
        let grid = match (raw.grid.min, raw.grid.max) {
            (Some(min), Some(max)) => DetuningGrid::new(min, max, count)?,
            (min, max) => {
                let span = GRID_MARGIN * spectral_extent(&CouplingSet::compute(&geometry, &drive)?);
                DetuningGrid::new(min.unwrap_or(-span), max.unwrap_or(span), count)?
            }
        };

        let prominence = positive("prominence", raw.prominence.unwrap_or(DEFAULT_PROMINENCE))?;
        let scan_count = raw.scan_count.unwrap_or(DEFAULT_SCAN_COUNT);
        if scan_count < 3 {
            return Err(Error::invalid("scan_count", "at least three scan angles are required"));
        }
        Ok(RunConfig {
            task: raw.task,
            geometry,
            drive,
            detector,
            grid,
            output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("output")),
            prominence,
            scan_count,
            distance_method: raw.distance_method.unwrap_or_default(),
            input: raw.input,
        })
    }

    fn to_raw(&self) -> RawConfig {
        RawConfig {
            task: self.task,
            r: self.geometry.r,
            theta: self.geometry.theta,
            phi: self.geometry.phi,
            omega: self.drive.omega0,
            r1: Some(self.geometry.r1),
            detunings: Some(self.drive.detunings),
            output_dir: Some(self.output_dir.clone()),
            prominence: Some(self.prominence),
            scan_count: Some(self.scan_count),
            distance_method: Some(self.distance_method),
            input: self.input.clone(),
            detector: RawDetector {
                direction: Some(Direction::Vector(self.detector.direction)),
                channel: Some(self.detector.channel),
                include_position_phase: Some(self.detector.include_position_phase),
            },
            grid: RawGrid {
                min: Some(self.grid.min),
                max: Some(self.grid.max),
                count: Some(self.grid.count),
            },
        }
    }

    /// Fully defaulted TOML that parses back to `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("config serializes")
    }

    /// The same document as JSON, for manifests.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_raw()).expect("config serializes")
    }

    /// Replaces the grid count, keeping its bounds.
    pub fn with_grid_count(mut self, count: usize) -> Result<Self> {
        self.grid = DetuningGrid::new(self.grid.min, self.grid.max, count)?;
        Ok(self)
    }

    pub fn with_channel(mut self, channel: Channel) -> Self {
        self.detector.channel = channel;
        self
    }
}
