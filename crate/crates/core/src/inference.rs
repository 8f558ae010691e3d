//! Peak detection and estimation of separation and orientation from
//! fluorescence spectra and intensity scans.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use levenberg_marquardt::{LeastSquaresProblem, LevenbergMarquardt};
use nalgebra::{Matrix4x3, Owned, Vector3, Vector4, U3, U4};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dressed::exact_block_energies;
use crate::error::{Error, Result};
use crate::geometry::{omega11_axial, omega22_axial, DriveConfig, Geometry, K0};
use crate::observables::Spectrum;

/// Default relative prominence threshold for peak detection.
pub const DEFAULT_PROMINENCE: f64 = 0.02;
/// Sidebands closer than this to the laser frequency are treated as part of
/// the central feature.
const CENTRAL_EXCLUSION: f64 = 2.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PeakSet {
    pub positions: Vec<f64>,
    pub heights: Vec<f64>,
    /// Full width at half maximum.
    pub widths: Vec<f64>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Peaks built from bare positions (unit heights, unknown widths).
    pub fn from_positions(mut positions: Vec<f64>) -> Self {
        positions.sort_by(f64::total_cmp);
        positions.dedup();
        let n = positions.len();
        PeakSet {
            positions,
            heights: vec![1.0; n],
            widths: vec![f64::NAN; n],
        }
    }

    /// Positive-detuning sidebands with their heights, ascending in position.
    fn sidebands(&self) -> Vec<(f64, f64)> {
        self.positions
            .iter()
            .zip(&self.heights)
            .filter(|(x, _)| **x > CENTRAL_EXCLUSION)
            .map(|(x, h)| (*x, *h))
            .collect()
    }
}

/// Vertex of the parabola through three points (any spacing).
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d = (x[0] - x[1]) * (x[0] - x[2]) * (x[1] - x[2]);
    let a = (x[2] * (y[1] - y[0]) + x[1] * (y[0] - y[2]) + x[0] * (y[2] - y[1])) / d;
    let b = (x[2] * x[2] * (y[0] - y[1]) + x[1] * x[1] * (y[2] - y[0]) + x[0] * x[0] * (y[1] - y[2])) / d;
    let c = (x[1] * x[2] * (x[1] - x[2]) * y[0] + x[2] * x[0] * (x[2] - x[0]) * y[1] + x[0] * x[1] * (x[0] - x[1]) * y[2]) / d;
    if a == 0.0 || !a.is_finite() {
        return None;
    }
    let xv = -b / (2.0 * a);
    if xv < x[0] || xv > x[2] {
        return None;
    }
    Some((xv, c - b * b / (4.0 * a)))
}

/// Linear interpolation of where the curve crosses `level` walking outward from `k`.
fn half_crossing(x: &[f64], y: &[f64], k: usize, level: f64, step: isize) -> f64 {
    let mut i = k as isize;
    loop {
        let j = i + step;
        if j < 0 || j as usize >= y.len() {
            return x[i as usize];
        }
        let (a, b) = (i as usize, j as usize);
        if y[b] < level {
            let t = (y[a] - level) / (y[a] - y[b]);
            return x[a] + t * (x[b] - x[a]);
        }
        i = j;
    }
}

/// Local maxima whose topographic prominence exceeds `prominence × max`,
/// refined by three-point parabolic interpolation.
pub fn detect_peaks(s: &Spectrum, prominence: f64) -> Result<PeakSet> {
    if s.is_empty() || s.detuning_grid.len() != s.values.len() {
        return Err(Error::invalid("spectrum", "spectrum must be non-empty with matching grid"));
    }
    if !(prominence > 0.0 && prominence < 1.0) {
        return Err(Error::invalid("prominence", "prominence must lie in (0, 1)"));
    }
    let (x, y) = (&s.detuning_grid, &s.values);
    let n = y.len();
    let gmax = s.max_value();
    if !(gmax > 0.0) || n < 3 {
        return Ok(PeakSet::default());
    }
    let threshold = prominence * gmax;

    let mut out = PeakSet::default();
    let mut k = 1;
    while k + 1 < n {
        if !(y[k] > y[k - 1]) {
            k += 1;
            continue;
        }
        // Walk across flat tops.
        let mut e = k;
        while e + 1 < n && y[e + 1] == y[k] {
            e += 1;
        }
        if e + 1 >= n || !(y[e + 1] < y[k]) {
            k = e + 1;
            continue;
        }
        let peak = y[k];
        let mut left_min = peak;
        for i in (0..k).rev() {
            if y[i] > peak {
                break;
            }
            left_min = left_min.min(y[i]);
        }
        let mut right_min = peak;
        for &v in &y[e + 1..] {
            if v > peak {
                break;
            }
            right_min = right_min.min(v);
        }
        if peak - left_min.max(right_min) >= threshold {
            let c = (k + e) / 2;
            let (pos, height) = if k == e {
                parabola_vertex([x[c - 1], x[c], x[c + 1]], [y[c - 1], y[c], y[c + 1]]).unwrap_or((x[c], y[c]))
            } else {
                (0.5 * (x[k] + x[e]), peak)
            };
            let half = 0.5 * height;
            let width = half_crossing(x, y, e, half, 1) - half_crossing(x, y, k, half, -1);
            if out.positions.last().is_none_or(|&p| pos > p) {
                out.positions.push(pos);
                out.heights.push(height);
                out.widths.push(width);
            }
        }
        k = e + 1;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    RabiInversion,
    DoubletSplit,
    SmallRPeaks,
    PhiFormula,
    ThetaScan,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub method: Method,
    pub value: f64,
    pub units: String,
    /// Values the measurement cannot distinguish from `value`.
    pub ambiguity: Vec<f64>,
    pub residual: f64,
    /// SHA-256 of the JSON-encoded estimator inputs.
    pub inputs_digest: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

fn digest<T: Serialize + ?Sized>(inputs: &T) -> String {
    let bytes = serde_json::to_vec(inputs).expect("estimator inputs serialize");
    hex::encode(Sha256::digest(bytes))
}

fn wrap_tau(x: f64) -> f64 {
    x.rem_euclid(TAU)
}

/// Standing-wave positions in `[0, λ)` with `|sin(k_L x)| = ratio`.
fn standing_wave_branches(ratio: f64) -> [f64; 4] {
    let a = ratio.clamp(0.0, 1.0).asin() / K0;
    [a, 0.5 - a, 0.5 + a, 1.0 - a]
}

fn rabi_ratio(sideband: f64, omega: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::invalid("Omega", "drive strength must be positive"));
    }
    let ratio = sideband.abs() / omega;
    if ratio > 1.0 + 1e-9 {
        return Err(Error::InconsistentInput(format!(
            "sideband at {sideband:.3}γ exceeds the antinode Rabi frequency {omega:.3}γ"
        )));
    }
    Ok(ratio.min(1.0))
}

/// Separation along the laser axis from the Mollow sidebands of two
/// independent atoms, with atom 1 at the known position `r1_known`.
pub fn estimate_distance_large(p: &PeakSet, d: &DriveConfig, r1_known: [f64; 3]) -> Result<Estimate> {
    let mut sb = p.sidebands();
    if sb.is_empty() {
        return Err(Error::NoSplitting);
    }
    sb.sort_by(|a, b| b.1.total_cmp(&a.1));
    sb.truncate(2);
    let omega = d.omega0;
    let x1 = r1_known[0];
    let expected1 = (omega * (K0 * x1).sin()).abs();
    let mut flags = Vec::new();

    let (s1, s2) = match sb.as_slice() {
        [(a, _)] => (*a, *a),
        [(a, _), (b, _)] => {
            if (a - expected1).abs() <= (b - expected1).abs() {
                (*a, *b)
            } else {
                (*b, *a)
            }
        }
        _ => unreachable!(),
    };
    for s in [s1, s2] {
        rabi_ratio(s, omega)?;
    }
    if (s1 - s2).abs() < 0.5 {
        flags.push("coincident doublets: θ ∈ {0, π} or symmetric placement".to_owned());
    }

    let branches = standing_wave_branches(rabi_ratio(s2, omega)?);
    let value = branches[0] - x1;
    let mut ambiguity: Vec<f64> = branches[1..].iter().map(|b| b - x1).collect();
    ambiguity.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    Ok(Estimate {
        method: Method::RabiInversion,
        value,
        units: "lambda".into(),
        ambiguity,
        residual: (s1 - expected1).abs(),
        inputs_digest: digest(&(&p.positions, omega, r1_known)),
        flags,
    })
}

/// Solves `|f(η)| = target` for the first root above `η = 10⁻³` on `(10⁻³, π]`.
fn invert_axial(f: fn(f64) -> f64, target: f64) -> Option<f64> {
    let g = |eta: f64| f(eta).abs() - target;
    let (lo0, hi0) = (1e-3, PI);
    let steps = 4000;
    let mut lo = lo0;
    if g(lo) < 0.0 {
        return None;
    }
    let mut hi = None;
    for k in 1..=steps {
        let eta = lo0 + (hi0 - lo0) * k as f64 / steps as f64;
        if g(eta) < 0.0 {
            hi = Some(eta);
            break;
        }
        lo = eta;
    }
    let mut hi = hi?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    Some(0.5 * (lo + hi) / K0)
}

/// Separation from the coupling of dipoles perpendicular to the axis.
pub fn distance_from_perpendicular(omega_perp: f64) -> Option<f64> {
    invert_axial(omega11_axial, omega_perp.abs())
}

/// Separation from the coupling of dipoles parallel to the axis.
pub fn distance_from_parallel(omega_par: f64) -> Option<f64> {
    invert_axial(omega22_axial, omega_par.abs())
}

/// Relative disagreement below which the inner and outer inversions are
/// considered consistent.
const SMALL_R_CONSISTENCY: f64 = 0.05;

/// Orientation-independent separation from a DDI-dominated spectrum.
///
/// The spectrum carries sidebands at `±|Ω_11(θ=0)|` (inner) and
/// `±|Ω_22(θ=0)|` (outer). Every inner/outer pairing is inverted and the most
/// consistent one is kept. A lone pair matches both laws; it is read as the
/// perpendicular coupling, which is the one that survives in-plane, and the
/// parallel reading is listed as an ambiguity. Sidebands closer than the
/// consistency tolerance are drive-split copies of one line and are merged
/// first.
pub fn estimate_distance_small(p: &PeakSet) -> Result<Estimate> {
    let sb = merge_close_lines(&p.sidebands());
    if sb.is_empty() {
        return Err(Error::NoSplitting);
    }
    let inputs_digest = digest(&p.positions);

    let mut best: Option<(f64, f64, f64)> = None;
    for (i, (inner, _)) in sb.iter().enumerate() {
        for (outer, _) in &sb[i + 1..] {
            let (Some(a), Some(b)) = (distance_from_perpendicular(*inner), distance_from_parallel(*outer)) else {
                continue;
            };
            let rel = (a - b).abs() / (0.5 * (a + b));
            if best.is_none_or(|(r, _, _)| rel < r) {
                best = Some((rel, a, b));
            }
        }
    }
    if let Some((rel, a, b)) = best {
        if rel <= SMALL_R_CONSISTENCY {
            return Ok(Estimate {
                method: Method::SmallRPeaks,
                value: 0.5 * (a + b),
                units: "lambda".into(),
                ambiguity: vec![],
                residual: (a - b).abs(),
                inputs_digest,
                flags: vec![],
            });
        }
    }

    if sb.len() >= 2 {
        let inner = sb[0].0;
        let outer = sb[sb.len() - 1].0;
        let b = distance_from_parallel(outer).ok_or(Error::NoSplitting)?;
        let a = distance_from_perpendicular(inner).unwrap_or(f64::NAN);
        return Ok(Estimate {
            method: Method::SmallRPeaks,
            value: b,
            units: "lambda".into(),
            ambiguity: vec![],
            residual: (a - b).abs(),
            inputs_digest,
            flags: vec!["inner and outer sidebands disagree".into()],
        });
    }

    let s = sb.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap().0;
    let a = distance_from_perpendicular(s).ok_or(Error::NoSplitting)?;
    let ambiguity = distance_from_parallel(s).into_iter().collect();
    Ok(Estimate {
        method: Method::SmallRPeaks,
        value: a,
        units: "lambda".into(),
        ambiguity,
        residual: 0.0,
        inputs_digest,
        flags: vec!["single sideband pair: perpendicular/parallel assignment ambiguous".into()],
    })
}

/// Height-weighted merge of neighbouring `(position, height)` sidebands whose
/// positions differ by less than [`SMALL_R_CONSISTENCY`] (relative).
fn merge_close_lines(sb: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut sorted = sb.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64, f64)> = Vec::new(); // (Σ h·x, Σ h, last x)
    for (x, h) in sorted {
        let h = h.max(f64::MIN_POSITIVE);
        match out.last_mut() {
            Some(last) if (x - last.2) / x <= SMALL_R_CONSISTENCY => {
                last.0 += h * x;
                last.1 += h;
                last.2 = x;
            }
            _ => out.push((h * x, h, x)),
        }
    }
    out.into_iter().map(|(m, h, _)| (m / h, h)).collect()
}

/// Runs [`detect_peaks`] at decreasing prominence until the inner and outer
/// sidebands give a consistent separation.
pub fn estimate_distance_small_from_spectrum(s: &Spectrum) -> Result<Estimate> {
    let mut last = None;
    for prominence in [DEFAULT_PROMINENCE, 5e-3, 1e-3] {
        let peaks = detect_peaks(s, prominence)?;
        match estimate_distance_small(&peaks) {
            Ok(e) if e.flags.is_empty() => return Ok(e),
            Ok(e) => {
                if last.is_none() {
                    last = Some(e);
                }
            }
            Err(e) if last.is_none() && prominence == 1e-3 => return Err(e),
            Err(_) => {}
        }
    }
    last.ok_or(Error::NoSplitting)
}

/// Separation from the dipole-dipole splitting `2|Ω_22|` of a sideband
/// doublet in the strong-drive regime (in-plane geometry).
pub fn estimate_distance_doublet(p: &PeakSet) -> Result<Estimate> {
    let sb = p.sidebands();
    let quad = strongest_four(&sb).ok_or(Error::NoSplitting)?;
    let splits = [quad[1] - quad[0], quad[3] - quad[2]];
    let omega22 = 0.25 * (splits[0] + splits[1]);
    let r = distance_from_perpendicular(omega22).ok_or(Error::NoSplitting)?;
    Ok(Estimate {
        method: Method::DoubletSplit,
        value: r,
        units: "lambda".into(),
        ambiguity: vec![],
        residual: (splits[0] - splits[1]).abs(),
        inputs_digest: digest(&p.positions),
        flags: vec![],
    })
}

/// The four tallest sidebands, ascending in position.
fn strongest_four(sb: &[(f64, f64)]) -> Option<[f64; 4]> {
    if sb.len() < 4 {
        return None;
    }
    let mut by_height = sb.to_vec();
    by_height.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut quad: Vec<f64> = by_height[..4].iter().map(|p| p.0).collect();
    quad.sort_by(f64::total_cmp);
    Some([quad[0], quad[1], quad[2], quad[3]])
}

/// Allowed relative mismatch between each doublet split and `2|Ω_22|`.
const DOUBLET_TOLERANCE: f64 = 0.25;

fn phi_from_rabi(rabi1: f64, rabi2: f64, omega: f64, r: f64) -> Result<f64> {
    let arg = ((rabi_ratio(rabi2, omega)?).asin() - (rabi_ratio(rabi1, omega)?).asin()) / (K0 * r);
    if arg.abs() > 1.0 + 1e-9 {
        return Err(Error::InconsistentInput(format!(
            "Rabi frequencies imply a projection {arg:.4} outside [−1, 1] for R = {r}λ"
        )));
    }
    Ok(arg.clamp(-1.0, 1.0).acos())
}

fn phi_ambiguity(phi: f64) -> Vec<f64> {
    vec![wrap_tau(TAU - phi), wrap_tau(PI - phi), wrap_tau(PI + phi)]
}

fn near_half_pi(digest: String, reason: &str) -> Estimate {
    Estimate {
        method: Method::PhiFormula,
        value: FRAC_PI_2,
        units: "rad".into(),
        ambiguity: vec![3.0 * FRAC_PI_2],
        residual: f64::NAN,
        inputs_digest: digest,
        flags: vec![format!("φ near π/2 or 3π/2 ({reason})")],
    }
}

/// In-plane azimuth from the two sideband doublets of a strongly driven
/// pair: doublet midpoints give `Ω(r_1)` (inner) and `Ω(r_2)` (outer), and
/// `cos φ = [asin(Ω(r_2)/Ω) − asin(Ω(r_1)/Ω)] / (k_L R)`.
pub fn estimate_phi(p: &PeakSet, d: &DriveConfig, r_known: f64) -> Result<Estimate> {
    if !(r_known > 0.0) {
        return Err(Error::invalid("R", "R must be positive"));
    }
    let inputs_digest = digest(&(&p.positions, d.omega0, r_known));
    let Some(quad) = strongest_four(&p.sidebands()) else {
        return Ok(near_half_pi(inputs_digest, "doublets not resolved"));
    };
    let expected = 2.0 * Geometry::with_default_r1(r_known, FRAC_PI_2, 0.0).map(|g| {
        crate::geometry::coherent_couplings(&g).map(|m| m[(1, 1)].re.abs())
    })??;
    let splits = [quad[1] - quad[0], quad[3] - quad[2]];
    if splits.iter().any(|s| ((s - expected) / expected).abs() > DOUBLET_TOLERANCE) {
        return Ok(near_half_pi(inputs_digest, "doublets overlap"));
    }
    let rabi1 = 0.5 * (quad[0] + quad[1]);
    let rabi2 = 0.5 * (quad[2] + quad[3]);
    let phi = phi_from_rabi(rabi1, rabi2, d.omega0, r_known)?;
    Ok(Estimate {
        method: Method::PhiFormula,
        value: phi,
        units: "rad".into(),
        ambiguity: phi_ambiguity(phi),
        residual: (0.5 * (splits[0] + splits[1]) - expected).abs(),
        inputs_digest,
        flags: vec![],
    })
}

/// Visible strong-drive sidebands `{e0−e1, e0−e2, e1−e3, e2−e3}` of the exact
/// two-level block, ascending.
fn block_sidebands(rabi1: f64, rabi2: f64, omega22: f64) -> [f64; 4] {
    let e = exact_block_energies(rabi1, rabi2, omega22);
    let (e0, e1, e2, e3) = (e[3], e[2], e[1], e[0]);
    let mut s = [e0 - e1, e0 - e2, e1 - e3, e2 - e3].map(f64::abs);
    s.sort_by(f64::total_cmp);
    s
}

struct PhiFit {
    observed: Vector4<f64>,
    omega: f64,
    /// `(x1, R, φ)`.
    params: Vector3<f64>,
}

impl PhiFit {
    fn model(&self, p: &Vector3<f64>) -> Option<Vector4<f64>> {
        let (x1, r, phi) = (p[0], p[1], p[2]);
        if !(r > 0.0) {
            return None;
        }
        let g = Geometry::new(r, FRAC_PI_2, phi, [x1, 0.0, 0.0]).ok()?;
        let omega22 = crate::geometry::coherent_couplings(&g).ok()?[(1, 1)].re;
        let r2 = g.r2();
        let rabi1 = self.omega * (K0 * x1).sin();
        let rabi2 = self.omega * (K0 * r2[0]).sin();
        Some(Vector4::from(block_sidebands(rabi1, rabi2, omega22)))
    }
}

impl LeastSquaresProblem<f64, U4, U3> for PhiFit {
    type ResidualStorage = Owned<f64, U4>;
    type JacobianStorage = Owned<f64, U4, U3>;
    type ParameterStorage = Owned<f64, U3>;

    fn set_params(&mut self, x: &Vector3<f64>) {
        self.params = *x;
    }

    fn params(&self) -> Vector3<f64> {
        self.params
    }

    fn residuals(&self) -> Option<Vector4<f64>> {
        Some(self.model(&self.params)? - self.observed)
    }

    fn jacobian(&self) -> Option<Matrix4x3<f64>> {
        let mut j = Matrix4x3::zeros();
        for k in 0..3 {
            let h = 1e-6 * self.params[k].abs().max(1e-3);
            let mut up = self.params;
            let mut dn = self.params;
            up[k] += h;
            dn[k] -= h;
            let col = (self.model(&up)? - self.model(&dn)?) / (2.0 * h);
            j.set_column(k, &col);
        }
        Some(j)
    }
}

/// [`estimate_phi`] followed by a least-squares fit of the exact two-level
/// dressed-state sidebands over `(x_1, R, φ)`.
pub fn refine_phi(p: &PeakSet, d: &DriveConfig, r_known: f64) -> Result<Estimate> {
    let initial = estimate_phi(p, d, r_known)?;
    if !initial.flags.is_empty() {
        return Ok(initial);
    }
    let quad = strongest_four(&p.sidebands()).ok_or(Error::NoSplitting)?;
    let rabi1 = 0.5 * (quad[0] + quad[1]);
    let x1 = rabi_ratio(rabi1, d.omega0)?.asin() / K0;
    let problem = PhiFit {
        observed: Vector4::from(quad),
        omega: d.omega0,
        params: Vector3::new(x1, r_known, initial.value),
    };
    let (fit, report) = LevenbergMarquardt::new().minimize(problem);
    if !report.termination.was_successful() {
        return Ok(initial);
    }
    let phi = fit.params[2].rem_euclid(TAU);
    let phi = if phi > PI { TAU - phi } else { phi };
    let mut flags = vec![format!("least-squares refined; fitted R = {:.5}λ", fit.params[1])];
    if ((fit.params[1] - r_known) / r_known).abs() > 0.1 {
        flags.push("fitted R departs from the supplied R by more than 10%".into());
    }
    Ok(Estimate {
        value: phi,
        ambiguity: phi_ambiguity(phi),
        residual: report.objective_function.sqrt(),
        flags,
        ..initial
    })
}

/// Relative threshold below which a scan sample counts as a zero.
pub const ZERO_THRESHOLD: f64 = 1e-3;
/// A local minimum below this fraction of its second neighbours counts as a
/// zero that falls between samples.
const SHARP_DIP: f64 = 0.05;
const MIN_SCAN_SAMPLES: usize = 64;

/// Orientation offset from a σ-intensity rotation scan.
///
/// Zeros of the curve sit at `Δθ ∈ {0, π/2, π}`; the returned value is the
/// rotation angle `α₀` (mod π/2) at which the first of them occurs, i.e. the
/// angle between the pair axis and the polarization at zero rotation.
pub fn estimate_theta(scan: &[(f64, f64)]) -> Result<Estimate> {
    if scan.len() < MIN_SCAN_SAMPLES {
        return Err(Error::invalid("scan", format!("at least {MIN_SCAN_SAMPLES} samples are required")));
    }
    let mut pts = scan.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let max = y.iter().copied().fold(0.0, f64::max);
    let threshold = ZERO_THRESHOLD * max;
    let n = y.len();
    let step = (x[n - 1] - x[0]) / (n - 1) as f64;

    let mut zeros: Vec<f64> = Vec::new();
    for k in 0..n {
        let left = if k == 0 { f64::INFINITY } else { y[k - 1] };
        let right = if k + 1 == n { f64::INFINITY } else { y[k + 1] };
        if !(y[k] <= left && y[k] <= right) {
            continue;
        }
        // Near a zero the curve is quadratic, so the vertex value is the
        // better test when the zero falls between samples.
        let (z, depth) = if k > 0 && k + 1 < n {
            parabola_vertex([x[k - 1], x[k], x[k + 1]], [y[k - 1], y[k], y[k + 1]])
                .filter(|v| (v.0 - x[k]).abs() <= step)
                .map_or((x[k], y[k]), |v| (v.0, v.1.min(y[k])))
        } else {
            (x[k], y[k])
        };
        // Zeros narrower than the sampling never reach the threshold; a dip
        // far below the samples two steps away is accepted as one.
        let sharp = k >= 2 && k + 2 < n && y[k] < SHARP_DIP * y[k - 2].min(y[k + 2]);
        if depth >= threshold && !sharp {
            continue;
        }
        if zeros.last().is_none_or(|&p| z - p > 2.0 * step) {
            zeros.push(z);
        }
    }
    if zeros.len() < 3 {
        return Err(Error::InsufficientScan { found: zeros.len() });
    }

    let z0 = zeros[0];
    let orders: Vec<f64> = zeros.iter().map(|z| ((z - z0) / FRAC_PI_2).round()).collect();
    let alpha0 = zeros.iter().zip(&orders).map(|(z, m)| z - m * FRAC_PI_2).sum::<f64>() / zeros.len() as f64;
    let rms = (zeros
        .iter()
        .zip(&orders)
        .map(|(z, m)| (z - alpha0 - m * FRAC_PI_2).powi(2))
        .sum::<f64>()
        / zeros.len() as f64)
        .sqrt();
    let theta = alpha0.rem_euclid(FRAC_PI_2);
    let theta = if FRAC_PI_2 - theta < 1e-9 { 0.0 } else { theta };
    Ok(Estimate {
        method: Method::ThetaScan,
        value: theta,
        units: "rad".into(),
        ambiguity: vec![FRAC_PI_2 - theta, FRAC_PI_2 + theta, PI - theta],
        residual: rms,
        inputs_digest: digest(scan),
        flags: vec![],
    })
}
