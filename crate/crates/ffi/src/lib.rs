//! C ABI over `ddi_fluor`.
//!
//! Every fallible call returns a [`DdiStatus`]; on failure a description is
//! kept per thread and can be copied out with [`ddi_last_error_message`].
//! Systems are opaque handles created by [`ddi_system_new`] and released with
//! [`ddi_system_free`]. Matrices are written row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use ddi_fluor::geometry::{DriveConfig, Geometry, DEFAULT_R1};
use ddi_fluor::hilbert::{Atom, DIM};
use ddi_fluor::inference::{self, Estimate, Method, PeakSet};
use ddi_fluor::observables::{self, Channel, Detector, Normalization, Spectrum, System};
use ddi_fluor::Error;

/// Most ambiguity branches any estimator reports.
pub const DDI_MAX_AMBIGUITY: usize = 16;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoRadiation = 3,
    Numerical = 4,
    NoSplitting = 5,
    InconsistentInput = 6,
    InsufficientScan = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdiChannel {
    Pi = 0,
    Sigma = 1,
    Total = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdiMethod {
    RabiInversion = 0,
    DoubletSplit = 1,
    SmallRPeaks = 2,
    PhiFormula = 3,
    ThetaScan = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DdiDetector {
    /// Unit vector towards the detector.
    pub direction: [f64; 3],
    pub channel: DdiChannel,
    pub include_position_phase: bool,
}

/// Coupling tables, row-major 3×3, real and imaginary parts split.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DdiCouplings {
    pub omega_re: [f64; 9],
    pub omega_im: [f64; 9],
    pub gamma_re: [f64; 9],
    pub gamma_im: [f64; 9],
    pub rabi1: f64,
    pub rabi2: f64,
    pub eta: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DdiEstimate {
    pub method: DdiMethod,
    pub value: f64,
    pub residual: f64,
    pub ambiguity: [f64; DDI_MAX_AMBIGUITY],
    pub ambiguity_count: usize,
    /// Number of advisory flags raised; non-zero means the value should be
    /// treated with caution.
    pub flag_count: usize,
}

/// Opaque forward model: couplings, Liouvillian and steady state.
pub struct DdiSystem {
    inner: System,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> DdiStatus {
    match e {
        Error::NoRadiation(_) => DdiStatus::NoRadiation,
        Error::NoSplitting => DdiStatus::NoSplitting,
        Error::InconsistentInput(_) => DdiStatus::InconsistentInput,
        Error::InsufficientScan { .. } => DdiStatus::InsufficientScan,
        Error::Task { source, .. } => status_of(source),
        e if e.is_input_error() => DdiStatus::InvalidArgument,
        _ => DdiStatus::Numerical,
    }
}

/// Runs `f`, translating errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), DdiStatus>) -> DdiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DdiStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic");
            DdiStatus::Panic
        }
    }
}

fn fail(e: Error) -> DdiStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null() -> DdiStatus {
    set_error("null pointer argument");
    DdiStatus::NullPointer
}

/// # Safety
/// `p` must be null or point to `n` readable values.
unsafe fn input<'a>(p: *const f64, n: usize) -> Result<&'a [f64], DdiStatus> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, n))
}

/// # Safety
/// `p` must be null or point to `n` writable values.
unsafe fn output<'a>(p: *mut f64, n: usize) -> Result<&'a mut [f64], DdiStatus> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

/// # Safety
/// `p` must be null or point to 3 readable values.
unsafe fn triple(p: *const f64, default: [f64; 3]) -> [f64; 3] {
    if p.is_null() {
        default
    } else {
        [*p, *p.add(1), *p.add(2)]
    }
}

fn detector(d: &DdiDetector) -> Result<Detector, DdiStatus> {
    let channel = match d.channel {
        DdiChannel::Pi => Channel::Pi,
        DdiChannel::Sigma => Channel::Sigma,
        DdiChannel::Total => Channel::Total,
    };
    let mut det = Detector::new(d.direction, channel).map_err(fail)?;
    det.include_position_phase = d.include_position_phase;
    Ok(det)
}

fn write_estimate(e: &Estimate, out: &mut DdiEstimate) -> Result<(), DdiStatus> {
    if e.ambiguity.len() > DDI_MAX_AMBIGUITY {
        set_error("ambiguity list exceeds DDI_MAX_AMBIGUITY");
        return Err(DdiStatus::BufferTooSmall);
    }
    out.method = match e.method {
        Method::RabiInversion => DdiMethod::RabiInversion,
        Method::DoubletSplit => DdiMethod::DoubletSplit,
        Method::SmallRPeaks => DdiMethod::SmallRPeaks,
        Method::PhiFormula => DdiMethod::PhiFormula,
        Method::ThetaScan => DdiMethod::ThetaScan,
    };
    out.value = e.value;
    out.residual = e.residual;
    out.ambiguity = [0.0; DDI_MAX_AMBIGUITY];
    out.ambiguity[..e.ambiguity.len()].copy_from_slice(&e.ambiguity);
    out.ambiguity_count = e.ambiguity.len();
    out.flag_count = e.flags.len();
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ddi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in bytes,
/// excluding the terminator.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn ddi_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds the forward model and solves for the steady state.
///
/// `r1` (3 values, atom 1 position in wavelengths) and `detunings`
/// (Δ1, Δ2, Δ3 in γ) may be null for the defaults.
///
/// # Safety
/// Non-null pointers must be valid for the stated lengths; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_new(
    r: f64,
    theta: f64,
    phi: f64,
    omega: f64,
    r1: *const f64,
    detunings: *const f64,
    out: *mut *mut DdiSystem,
) -> DdiStatus {
    guard(|| {
        if out.is_null() {
            return Err(null());
        }
        *out = ptr::null_mut();
        let g = Geometry::new(r, theta, phi, triple(r1, DEFAULT_R1)).map_err(fail)?;
        let d = DriveConfig::with_detunings(omega, triple(detunings, [0.0; 3])).map_err(fail)?;
        let inner = System::new(g, d).map_err(fail)?;
        *out = Box::into_raw(Box::new(DdiSystem { inner }));
        Ok(())
    })
}

/// Releases a system; null is ignored.
///
/// # Safety
/// `sys` must be null or a handle from [`ddi_system_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_free(sys: *mut DdiSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_couplings(sys: *const DdiSystem, out: *mut DdiCouplings) -> DdiStatus {
    guard(|| {
        let (Some(sys), Some(out)) = (sys.as_ref(), out.as_mut()) else {
            return Err(null());
        };
        let c = &sys.inner.couplings;
        for r in 0..3 {
            for k in 0..3 {
                out.omega_re[3 * r + k] = c.omega[(r, k)].re;
                out.omega_im[3 * r + k] = c.omega[(r, k)].im;
                out.gamma_re[3 * r + k] = c.gamma[(r, k)].re;
                out.gamma_im[3 * r + k] = c.gamma[(r, k)].im;
            }
        }
        out.rabi1 = c.rabi1;
        out.rabi2 = c.rabi2;
        out.eta = c.eta;
        Ok(())
    })
}

/// Steady-state density matrix (16×16, row-major, basis index
/// `4(i−1) + (j−1)` for atom 1 in `|i⟩`, atom 2 in `|j⟩`). `degenerate` may be
/// null.
///
/// # Safety
/// `sys` must be a live handle; `re` and `im` must hold 256 values each.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_density_matrix(
    sys: *const DdiSystem,
    re: *mut f64,
    im: *mut f64,
    degenerate: *mut bool,
) -> DdiStatus {
    guard(|| {
        let sys = sys.as_ref().ok_or_else(null)?;
        let re = output(re, DIM * DIM)?;
        let im = output(im, DIM * DIM)?;
        let rho = &sys.inner.rho().rho;
        for r in 0..DIM {
            for c in 0..DIM {
                re[DIM * r + c] = rho[(r, c)].re;
                im[DIM * r + c] = rho[(r, c)].im;
            }
        }
        if let Some(d) = degenerate.as_mut() {
            *d = sys.inner.steady.degenerate;
        }
        Ok(())
    })
}

/// Steady-state population of `level` (1–4) of `atom` (1 or 2).
///
/// # Safety
/// `sys` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_population(sys: *const DdiSystem, atom: u32, level: u32, out: *mut f64) -> DdiStatus {
    guard(|| {
        let (Some(sys), Some(out)) = (sys.as_ref(), out.as_mut()) else {
            return Err(null());
        };
        let atom = match atom {
            1 => Atom::First,
            2 => Atom::Second,
            _ => return Err(fail(Error::Config("atom must be 1 or 2".into()))),
        };
        if !(1..=4).contains(&level) {
            return Err(fail(Error::Config("level must be in 1..=4".into())));
        }
        *out = sys.inner.rho().population(atom, level as usize);
        Ok(())
    })
}

/// Total steady-state intensity seen by `det`.
///
/// # Safety
/// `sys` must be a live handle; `det` readable; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_intensity(sys: *const DdiSystem, det: *const DdiDetector, out: *mut f64) -> DdiStatus {
    guard(|| {
        let (Some(sys), Some(det), Some(out)) = (sys.as_ref(), det.as_ref(), out.as_mut()) else {
            return Err(null());
        };
        *out = sys.inner.intensity(&detector(det)?).map_err(fail)?;
        Ok(())
    })
}

/// Incoherent spectrum at `n` detunings (units of γ); `out` receives `n`
/// unnormalized values.
///
/// # Safety
/// `sys` must be a live handle; `det` readable; `grid` and `out` must hold
/// `n` values.
#[no_mangle]
pub unsafe extern "C" fn ddi_system_spectrum(
    sys: *const DdiSystem,
    det: *const DdiDetector,
    grid: *const f64,
    n: usize,
    out: *mut f64,
) -> DdiStatus {
    guard(|| {
        let (Some(sys), Some(det)) = (sys.as_ref(), det.as_ref()) else {
            return Err(null());
        };
        let grid = input(grid, n)?;
        let out = output(out, n)?;
        let s = sys.inner.spectrum(&detector(det)?, grid).map_err(fail)?;
        out.copy_from_slice(&s.values);
        Ok(())
    })
}

/// σ intensity along `+z` as the pair is rotated to `θ = Δθ` for each of the
/// `n` angles in `dtheta`.
///
/// # Safety
/// `dtheta` and `out` must hold `n` values.
#[no_mangle]
pub unsafe extern "C" fn ddi_sigma_scan(
    r: f64,
    phi: f64,
    omega: f64,
    dtheta: *const f64,
    n: usize,
    out: *mut f64,
) -> DdiStatus {
    guard(|| {
        let grid = input(dtheta, n)?;
        let out = output(out, n)?;
        let g = Geometry::with_default_r1(r, 0.0, phi).map_err(fail)?;
        let d = DriveConfig::new(omega).map_err(fail)?;
        let scan = observables::sigma_intensity_scan(&g, &d, grid).map_err(fail)?;
        for (o, (_, i)) in out.iter_mut().zip(scan) {
            *o = i;
        }
        Ok(())
    })
}

/// Peaks of a sampled spectrum. Writes up to `capacity` positions (and
/// heights, if `heights` is non-null) and the number found to `count`;
/// returns `BufferTooSmall` when `capacity` is insufficient.
///
/// # Safety
/// `grid` and `values` must hold `n` values; `positions` (and non-null
/// `heights`) must hold `capacity` values; `count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_detect_peaks(
    grid: *const f64,
    values: *const f64,
    n: usize,
    prominence: f64,
    positions: *mut f64,
    heights: *mut f64,
    capacity: usize,
    count: *mut usize,
) -> DdiStatus {
    guard(|| {
        let count = count.as_mut().ok_or_else(null)?;
        let s = Spectrum {
            detuning_grid: input(grid, n)?.to_vec(),
            values: input(values, n)?.to_vec(),
            channel: Channel::Total,
            direction: [0.0, 1.0, 0.0],
            normalization: Normalization::Raw,
            regularized: vec![],
        };
        let p = inference::detect_peaks(&s, prominence).map_err(fail)?;
        *count = p.len();
        if p.len() > capacity {
            set_error(format!("{} peaks found, capacity {capacity}", p.len()));
            return Err(DdiStatus::BufferTooSmall);
        }
        output(positions, p.len())?.copy_from_slice(&p.positions);
        if !heights.is_null() {
            output(heights, p.len())?.copy_from_slice(&p.heights);
        }
        Ok(())
    })
}

/// # Safety
/// `positions` and non-null `heights` must hold `n` values.
unsafe fn peak_set(positions: *const f64, heights: *const f64, n: usize) -> Result<PeakSet, DdiStatus> {
    let pos = input(positions, n)?.to_vec();
    if heights.is_null() {
        return Ok(PeakSet::from_positions(pos));
    }
    let mut pairs: Vec<(f64, f64)> = pos.into_iter().zip(input(heights, n)?.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (positions, heights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    Ok(PeakSet {
        widths: vec![f64::NAN; positions.len()],
        positions,
        heights,
    })
}

/// Separation from a weak-drive, coupling-dominated peak set. `heights` may
/// be null.
///
/// # Safety
/// `positions` and non-null `heights` must hold `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_estimate_distance_small(
    positions: *const f64,
    heights: *const f64,
    n: usize,
    out: *mut DdiEstimate,
) -> DdiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        let p = peak_set(positions, heights, n)?;
        write_estimate(&inference::estimate_distance_small(&p).map_err(fail)?, out)
    })
}

/// In-plane azimuth from the sideband doublets of a strongly driven pair
/// with known separation `r_known`.
///
/// # Safety
/// `positions` and non-null `heights` must hold `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_estimate_phi(
    positions: *const f64,
    heights: *const f64,
    n: usize,
    omega: f64,
    r_known: f64,
    out: *mut DdiEstimate,
) -> DdiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        let p = peak_set(positions, heights, n)?;
        let d = DriveConfig::new(omega).map_err(fail)?;
        write_estimate(&inference::estimate_phi(&p, &d, r_known).map_err(fail)?, out)
    })
}

/// Orientation offset from a σ-intensity rotation scan.
///
/// # Safety
/// `dtheta` and `intensity` must hold `n` values; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ddi_estimate_theta(
    dtheta: *const f64,
    intensity: *const f64,
    n: usize,
    out: *mut DdiEstimate,
) -> DdiStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(null)?;
        let scan: Vec<(f64, f64)> = input(dtheta, n)?
            .iter()
            .copied()
            .zip(input(intensity, n)?.iter().copied())
            .collect();
        write_estimate(&inference::estimate_theta(&scan).map_err(fail)?, out)
    })
}

/// Describes a status code as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ddi_status_name(status: DdiStatus) -> *const c_char {
    let s: &'static CStr = match status {
        DdiStatus::Ok => c"ok",
        DdiStatus::NullPointer => c"null pointer",
        DdiStatus::InvalidArgument => c"invalid argument",
        DdiStatus::NoRadiation => c"no radiation in requested channel",
        DdiStatus::Numerical => c"numerical failure",
        DdiStatus::NoSplitting => c"no dipole-dipole splitting resolved",
        DdiStatus::InconsistentInput => c"inconsistent input",
        DdiStatus::InsufficientScan => c"scan range insufficient",
        DdiStatus::BufferTooSmall => c"buffer too small",
        DdiStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}
