//! Parameter-space exploration built on the statemap reduction.
//!
//! The registration time enters every question asked here through the
//! two channel moduli r_N1(t) and r_N2(t):
//!
//! * `find_t0` locates the highest-probability transfer time, the
//!   global maximum of r_N1 over a window;
//! * `creatable_map` images the control grid (alpha1, alpha2) into
//!   receiver parameters (lambda, beta1) at a fixed time;
//! * `lambda_min_cr` reports the smallest creatable eigenvalue of a
//!   chain, and `critical_length` sweeps it over families to find the
//!   longest chain that still reaches the maximally mixed point;
//! * `selective_bounds` and `equal_phase_interval` bracket the
//!   transfer modulus reachable at a deliberately sub-optimal time,
//!   under tuned and under equal sender phases respectively, the basis
//!   for carving the receiver space into non-overlapping creatable
//!   subregions.
//!
//! All sweeps reduce with a fixed ordering, so reports are identical
//! regardless of how many worker threads run them.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainSpec, ProfileKind};
use crate::fmt::sig17;
use crate::spectral::{decompose, transition_amplitudes, SpectralDecomposition, Transition};
use crate::statemap::{combined_modulus, receiver_params};
use crate::{Error, Result};

/// Dense sampling step of every time scan. The transfer modulus
/// oscillates on scales set by the spectral bandwidth, of order one in
/// the units used here, so this resolves every lobe.
pub const TIME_GRID_STEP: f64 = 0.02;

/// Width to which the golden-section refinement shrinks its bracket.
const REFINE_WIDTH: f64 = 1e-9;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// |sin(2 pi (chi_(N-1)1 - chi_N1))| must exceed this at t0 for the
/// peak to count as nondegenerate.
pub const NONDEGENERACY_FLOOR: f64 = 1e-6;

/// A chain qualifies for the critical length when its peak transfer
/// modulus reaches 1/sqrt(2), the point where the maximally mixed
/// receiver state becomes creatable; the margin absorbs refinement
/// error on the peak.
pub const TRANSFER_THRESHOLD: f64 = FRAC_1_SQRT_2 - 1e-9;

/// Two modulus intervals count as disjoint only when separated by more
/// than this. The creatable subregions are closed sets, so touching
/// intervals must not be reported as disjoint.
pub const DISJOINT_MARGIN: f64 = 1e-3;

/// Location and height of the transfer peak, with the phase
/// non-degeneracy verdict at the peak.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TimeSearchResult {
    pub t0: f64,
    pub r_max: f64,
    pub nondegenerate: bool,
}

/// Global maximum of r_N1 over the window: dense scan at
/// [`TIME_GRID_STEP`] followed by golden-section refinement of the
/// winning bracket. Among equal samples the earliest time wins.
///
/// When the modulus is still rising at the window's right edge the
/// result sits exactly on that edge; such a result is the supremum of
/// the window, not a stationary point, and the vanishing of the
/// secondary channels that holds at interior peaks of mirror-symmetric
/// chains does not apply to it.
pub fn find_t0(spec: &ChainSpec, window: (f64, f64)) -> Result<TimeSearchResult> {
    let sd = decompose(&spec.one_excitation_hamiltonian())?;
    find_t0_in(&sd, window)
}

/// As [`find_t0`], reusing an existing decomposition.
pub fn find_t0_in(sd: &SpectralDecomposition, window: (f64, f64)) -> Result<TimeSearchResult> {
    let n = sd.n();
    let channel = sd.transition(n, 1)?;
    let (t0, r_max) = peak_of(&channel, window)?;

    let at_peak = transition_amplitudes(sd, 1, t0)?;
    let detune = at_peak[n - 2].chi - at_peak[n - 1].chi;
    let nondegenerate = (std::f64::consts::TAU * detune).sin().abs() > NONDEGENERACY_FLOOR;

    Ok(TimeSearchResult {
        t0,
        r_max,
        nondegenerate,
    })
}

/// Dense scan plus golden refinement for the maximum of |p(t)|.
fn peak_of(channel: &Transition, window: (f64, f64)) -> Result<(f64, f64)> {
    let (lo, hi) = window;
    if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo >= hi {
        return Err(Error::InvalidWindow { lo, hi });
    }

    let mut best_t = lo;
    let mut best_r = channel.amplitude(lo).r;

    let steps = ((hi - lo) / TIME_GRID_STEP).floor() as usize;
    for i in 1..=steps {
        let t = lo + i as f64 * TIME_GRID_STEP;
        let r = channel.amplitude(t).r;
        if r > best_r {
            best_t = t;
            best_r = r;
        }
    }
    if lo + steps as f64 * TIME_GRID_STEP < hi {
        let r = channel.amplitude(hi).r;
        if r > best_r {
            best_t = hi;
            best_r = r;
        }
    }

    // refine inside the bracket around the winning sample
    let mut a = (best_t - TIME_GRID_STEP).max(lo);
    let mut b = (best_t + TIME_GRID_STEP).min(hi);
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut rc = channel.amplitude(c).r;
    let mut rd = channel.amplitude(d).r;
    while b - a > REFINE_WIDTH {
        if rc > rd {
            b = d;
            d = c;
            rd = rc;
            c = b - INV_GOLDEN * (b - a);
            rc = channel.amplitude(c).r;
        } else {
            a = c;
            c = d;
            rc = rd;
            d = a + INV_GOLDEN * (b - a);
            rd = channel.amplitude(d).r;
        }
    }
    let mid = 0.5 * (a + b);
    let r = channel.amplitude(mid).r;
    if r > best_r {
        best_t = mid;
        best_r = r;
    }

    Ok((best_t, best_r))
}

/// One sample of the control-to-receiver image.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MapCell {
    pub alpha1: f64,
    pub alpha2: f64,
    pub lambda: f64,
    /// Absent at the maximally mixed point of the image.
    pub beta1: Option<f64>,
}

/// The (alpha1, alpha2) grid imaged into receiver parameters at a fixed
/// registration time, row-major with alpha1 as the slow index.
#[derive(Clone, Debug)]
pub struct RegionMap {
    chain: ChainSpec,
    t: f64,
    grid_n: usize,
    cells: Vec<MapCell>,
}

impl RegionMap {
    pub fn chain(&self) -> &ChainSpec {
        &self.chain
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Samples per axis.
    pub fn grid_n(&self) -> usize {
        self.grid_n
    }

    pub fn cells(&self) -> &[MapCell] {
        &self.cells
    }

    pub fn cell(&self, alpha1_index: usize, alpha2_index: usize) -> &MapCell {
        &self.cells[alpha1_index * self.grid_n + alpha2_index]
    }

    /// CSV dump `alpha1,alpha2,lambda,beta1,beta1_defined` in grid
    /// order. An undefined beta1 is recorded as 0 with the flag false;
    /// consumers must filter on the flag, not on the value.
    pub fn write_csv<W: io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "alpha1,alpha2,lambda,beta1,beta1_defined")?;
        for cell in &self.cells {
            writeln!(
                out,
                "{},{},{},{},{}",
                sig17(cell.alpha1),
                sig17(cell.alpha2),
                sig17(cell.lambda),
                sig17(cell.beta1.unwrap_or(0.0)),
                cell.beta1.is_some()
            )?;
        }
        Ok(())
    }
}

/// Images a grid_n x grid_n control grid through the phase-matched
/// reduction: R0 = sin(alpha1 pi/2), R from the channel moduli at
/// alpha2, and the receiver parameters from R_N = sqrt(1 - R0^2) R.
pub fn creatable_map(spec: &ChainSpec, t: f64, grid_n: usize) -> Result<RegionMap> {
    if grid_n < 2 {
        return Err(Error::InvalidParameter(format!(
            "map grid needs at least 2 samples per axis, got {grid_n}"
        )));
    }
    let sd = decompose(&spec.one_excitation_hamiltonian())?;
    let n = sd.n();
    let r1 = transition_amplitudes(&sd, 1, t)?[n - 1].r;
    let r2 = transition_amplitudes(&sd, 2, t)?[n - 1].r;

    let denominator = (grid_n - 1) as f64;
    let mut cells = Vec::with_capacity(grid_n * grid_n);
    for i in 0..grid_n {
        let alpha1 = i as f64 / denominator;
        let r0 = (alpha1 * std::f64::consts::FRAC_PI_2).sin();
        let scale = (1.0 - r0 * r0).sqrt();
        for j in 0..grid_n {
            let alpha2 = j as f64 / denominator;
            let r = combined_modulus(r1, r2, alpha2)?;
            let state = receiver_params((r0).into(), (scale * r).into())?;
            cells.push(MapCell {
                alpha1,
                alpha2,
                lambda: state.lambda(),
                beta1: state.beta1(),
            });
        }
    }

    Ok(RegionMap {
        chain: spec.clone(),
        t,
        grid_n,
        cells,
    })
}

/// Smallest creatable eigenvalue implied by a peak transfer modulus:
/// max(1/2, 1 - r_max^2). The floor 1/2 is reached exactly when the
/// modulus 1/sqrt(2) lies in the achievable range.
pub fn lambda_min_from_peak(r_max: f64) -> f64 {
    (1.0 - r_max * r_max).max(0.5)
}

/// Smallest eigenvalue creatable on the receiver over the window.
pub fn lambda_min_cr(spec: &ChainSpec, window: (f64, f64)) -> Result<f64> {
    Ok(lambda_min_from_peak(find_t0(spec, window)?.r_max))
}

/// Search-window recipe for the critical-length sweeps. The alternating
/// family shrinks and stretches with min(d, 1/d) because the excitation
/// moves at the slower of the two bond speeds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowPolicy {
    /// [0, 1.5 N], wide enough for first arrival in the uniform-speed
    /// families.
    Standard,
    /// [0, 1.3 N min(d, 1/d)], up to the first arrival.
    Early,
    /// (1.3 N min(d, 1/d), 1.5 N max(d, 1/d)], past the first arrival.
    /// The excluded left endpoint is sampled anyway: a continuous
    /// modulus cannot have an isolated maximum there, so the numerical
    /// result is the same either way.
    Late,
    /// [0, 3 N min(d, 1/d)], room for several traversals.
    Wide,
}

impl WindowPolicy {
    pub fn tag(self) -> &'static str {
        match self {
            WindowPolicy::Standard => "standard",
            WindowPolicy::Early => "early",
            WindowPolicy::Late => "late",
            WindowPolicy::Wide => "wide",
        }
    }

    /// Concrete window for a chain of length n; d defaults to 1 for
    /// families without an alternation parameter.
    pub fn window(self, n: usize, d: Option<f64>) -> (f64, f64) {
        let n = n as f64;
        let d = d.unwrap_or(1.0);
        let short = d.min(1.0 / d);
        let long = d.max(1.0 / d);
        match self {
            WindowPolicy::Standard => (0.0, 1.5 * n),
            WindowPolicy::Early => (0.0, 1.3 * n * short),
            WindowPolicy::Late => (1.3 * n * short, 1.5 * n * long),
            WindowPolicy::Wide => (0.0, 3.0 * n * short),
        }
    }
}

impl std::fmt::Display for WindowPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for WindowPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(WindowPolicy::Standard),
            "early" => Ok(WindowPolicy::Early),
            "late" => Ok(WindowPolicy::Late),
            "wide" => Ok(WindowPolicy::Wide),
            other => Err(Error::InvalidWindowPolicy(format!(
                "unknown policy '{other}', expected standard, early, late, or wide"
            ))),
        }
    }
}

/// Peak modulus and implied eigenvalue floor of one (N, d) combination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CriticalLengthRecord {
    pub n: usize,
    pub d: Option<f64>,
    pub r_max: f64,
    pub lambda_min_cr: f64,
}

/// Family sweep result: all records plus the critical length, the
/// largest chain whose peak modulus still reaches [`TRANSFER_THRESHOLD`]
/// (for the alternating family, maximized over the d sweep).
#[derive(Clone, Debug, Serialize)]
pub struct CriticalLengthReport {
    pub family: ProfileKind,
    pub window: WindowPolicy,
    pub records: Vec<CriticalLengthRecord>,
    pub n_c: Option<usize>,
}

/// Sweeps a profile family over chain lengths (and alternation values
/// for the alternating family), recording each peak and the critical
/// length. Records are ordered d-major, then by the given lengths.
pub fn critical_length(
    family: ProfileKind,
    d_values: &[f64],
    policy: WindowPolicy,
    n_values: &[usize],
) -> Result<CriticalLengthReport> {
    if n_values.is_empty() {
        return Err(Error::InvalidParameter(
            "critical-length sweep needs a nonempty list of chain lengths".into(),
        ));
    }
    let d_axis: Vec<Option<f64>> = match family {
        ProfileKind::Alternating => {
            if d_values.is_empty() {
                return Err(Error::InvalidParameter(
                    "alternating sweep needs at least one alternation value".into(),
                ));
            }
            d_values.iter().copied().map(Some).collect()
        }
        ProfileKind::Custom => {
            return Err(Error::InvalidParameter(
                "critical-length sweeps cover generated families, not custom couplings".into(),
            ));
        }
        _ => {
            if !d_values.is_empty() {
                return Err(Error::InvalidParameter(format!(
                    "alternation values apply only to the alternating family, not {family}"
                )));
            }
            vec![None]
        }
    };

    let combos: Vec<(Option<f64>, usize)> = d_axis
        .iter()
        .flat_map(|&d| n_values.iter().map(move |&n| (d, n)))
        .collect();
    let records = combos
        .par_iter()
        .map(|&(d, n)| {
            let spec = ChainSpec::build_profile(family, n, d)?;
            let found = find_t0(&spec, policy.window(n, d))?;
            Ok(CriticalLengthRecord {
                n,
                d,
                r_max: found.r_max,
                lambda_min_cr: lambda_min_from_peak(found.r_max),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n_c = records
        .iter()
        .filter(|record| record.r_max >= TRANSFER_THRESHOLD)
        .map(|record| record.n)
        .max();

    Ok(CriticalLengthReport {
        family,
        window: policy,
        records,
        n_c,
    })
}

/// Range of the phase-matched transfer modulus as alpha2 sweeps [0,1]
/// with channel moduli (r1, r2): the minimum sits at an endpoint, the
/// maximum at the interior stationary angle when that angle is
/// admissible, else at the better endpoint.
pub fn transfer_interval(r1: f64, r2: f64) -> (f64, f64) {
    let q_min = r1.min(r2);
    let stationary = 2.0 / std::f64::consts::PI * r2.atan2(r1);
    let q_max = if (0.0..=1.0).contains(&stationary) {
        (r1 * r1 + r2 * r2).sqrt()
    } else {
        r1.max(r2)
    };
    (q_min, q_max)
}

/// The (q_min, q_max) bracket of transfer moduli reachable at time t
/// when the second sender phase is tuned to align both channels.
pub fn selective_bounds(spec: &ChainSpec, t: f64) -> Result<(f64, f64)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "registration time must be nonnegative, got {t}"
        )));
    }
    let sd = decompose(&spec.one_excitation_hamiltonian())?;
    let n = sd.n();
    let r1 = transition_amplitudes(&sd, 1, t)?[n - 1].r;
    let r2 = transition_amplitudes(&sd, 2, t)?[n - 1].r;
    Ok(transfer_interval(r1, r2))
}

/// The (q_min, q_max) bracket of transfer moduli reachable at time t
/// when both sender phases are equal, so the relative phase between
/// the two channels is the one the chain itself imposes.
///
/// With c = cos(alpha2 pi/2), s = sin(alpha2 pi/2) and relative
/// channel phase delta, the swept modulus satisfies
///
///   R^2 = c^2 r1^2 + s^2 r2^2 + 2 c s r1 r2 cos(delta),
///
/// a sinusoid in 2 alpha2 whose interior extremum is a maximum for
/// cos(delta) > 0 and a minimum for cos(delta) < 0; the opposite bound
/// always sits at an endpoint. Mirror-symmetric chains hold the two
/// channels in exact quadrature at every time, so for them the bracket
/// degenerates to [min(r1, r2), max(r1, r2)].
pub fn equal_phase_interval(spec: &ChainSpec, t: f64) -> Result<(f64, f64)> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "registration time must be nonnegative, got {t}"
        )));
    }
    let sd = decompose(&spec.one_excitation_hamiltonian())?;
    let n = sd.n();
    let one = transition_amplitudes(&sd, 1, t)?[n - 1];
    let two = transition_amplitudes(&sd, 2, t)?[n - 1];
    let (r1, r2) = (one.r, two.r);
    let delta = std::f64::consts::TAU * (one.chi - two.chi);

    let mean = 0.5 * (r1 * r1 + r2 * r2);
    let cross = r1 * r2 * delta.cos();
    let swing = (0.5 * (r1 * r1 - r2 * r2)).hypot(cross);
    let q_max = if cross > 0.0 {
        (mean + swing).sqrt()
    } else {
        r1.max(r2)
    };
    let q_min = if cross < 0.0 {
        (mean - swing).max(0.0).sqrt()
    } else {
        r1.min(r2)
    };
    Ok((q_min, q_max))
}

/// One (chain, time) row of a selective-creation plan. The bracket is
/// the equal-phase one: selective creation fixes the sender phases in
/// advance, identically for every row, so the receiver can decode the
/// row from the modulus alone.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectiveEntry {
    pub profile: ProfileKind,
    pub n: usize,
    pub d: Option<f64>,
    pub t: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SelectivePair {
    /// Indices into the entry list.
    pub first: usize,
    pub second: usize,
    pub disjoint: bool,
}

/// Modulus brackets of all entries plus every pairwise verdict.
#[derive(Clone, Debug, Serialize)]
pub struct SelectiveReport {
    pub entries: Vec<SelectiveEntry>,
    pub pairs: Vec<SelectivePair>,
    pub all_disjoint: bool,
}

/// Checks a family of (chain, registration time) choices for pairwise
/// disjoint modulus brackets, hence non-overlapping creatable
/// subregions. The fully polarized receiver state, shared by every
/// braid by construction, is outside the brackets and does not count
/// as overlap.
pub fn selective_suite(entries: &[(ChainSpec, f64)]) -> Result<SelectiveReport> {
    if entries.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "selective comparison needs at least two entries, got {}",
            entries.len()
        )));
    }
    let rows = entries
        .iter()
        .map(|(spec, t)| {
            let (q_min, q_max) = equal_phase_interval(spec, *t)?;
            Ok(SelectiveEntry {
                profile: spec.kind(),
                n: spec.n(),
                d: spec.d(),
                t: *t,
                q_min,
                q_max,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut pairs = Vec::new();
    let mut all_disjoint = true;
    for first in 0..rows.len() {
        for second in (first + 1)..rows.len() {
            let a = &rows[first];
            let b = &rows[second];
            let disjoint = a.q_max + DISJOINT_MARGIN < b.q_min
                || b.q_max + DISJOINT_MARGIN < a.q_min;
            all_disjoint &= disjoint;
            pairs.push(SelectivePair {
                first,
                second,
                disjoint,
            });
        }
    }

    Ok(SelectiveReport {
        entries: rows,
        pairs,
        all_disjoint,
    })
}
