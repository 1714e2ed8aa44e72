//! Randomized cross-checks of the reduced single-excitation model
//! against routes that do not share its assumptions.
//!
//! Three batteries, each reporting its worst observed deviation:
//!
//! * `full-hilbert`: the receiver density matrix from brute-force
//!   evolution in the full 2^N space versus the reduced formula;
//! * `time-stepper`: spectral propagation versus fixed-step
//!   Runge-Kutta integration of the same block;
//! * `map-minimum`: the closed-form smallest creatable eigenvalue
//!   versus direct minimization over the control grid at the transfer
//!   peak.
//!
//! Draws are fixed by the seed, so a report is reproducible bit for
//! bit and a failure can be replayed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chain::ChainSpec;
use crate::region::{find_t0, lambda_min_from_peak, WindowPolicy};
use crate::spectral::{
    decompose, full_hilbert_oracle, ode_oracle_amplitudes, transition_amplitudes,
    SpectralDecomposition,
};
use crate::statemap::{control_to_sender, receiver_amplitudes, receiver_density, ControlParams};
use crate::{Error, Result};

const FULL_HILBERT_TOLERANCE: f64 = 1e-9;
const TIME_STEPPER_TOLERANCE: f64 = 1e-8;
const MAP_MINIMUM_TOLERANCE: f64 = 1e-6;

const INV_GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Worst deviation one battery observed over its cases.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BatteryOutcome {
    pub name: String,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl BatteryOutcome {
    fn new(name: &str, cases: usize, max_error: f64, tolerance: f64) -> Self {
        BatteryOutcome {
            name: name.into(),
            cases,
            max_error,
            tolerance,
            pass: max_error <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OracleCheckReport {
    pub seed: u64,
    pub batteries: Vec<BatteryOutcome>,
    pub pass: bool,
}

/// Runs all three batteries with `cases` draws each. `step` is the
/// integrator step of the time-stepper battery.
pub fn oracle_battery(seed: u64, cases: usize, step: f64) -> Result<OracleCheckReport> {
    if cases == 0 {
        return Err(Error::InvalidParameter(
            "oracle batteries need at least one case".into(),
        ));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "integration step must be positive, got {step}"
        )));
    }
    let batteries = vec![
        full_hilbert_battery(seed, cases)?,
        time_stepper_battery(seed, cases, step)?,
        map_minimum_battery(seed, cases)?,
    ];
    let pass = batteries.iter().all(|b| b.pass);
    Ok(OracleCheckReport {
        seed,
        batteries,
        pass,
    })
}

/// Chain with couplings of order one, any profile, length in 2..=max_n.
fn random_chain(rng: &mut ChaCha8Rng, max_n: usize) -> Result<ChainSpec> {
    let n = rng.random_range(2..=max_n);
    match rng.random_range(0..4) {
        0 => ChainSpec::homogeneous(n),
        1 => ChainSpec::ekert(n),
        2 => ChainSpec::alternating(n, rng.random_range(0.25..=1.75)),
        _ => {
            let couplings = (1..n).map(|_| rng.random_range(0.3..=1.5)).collect();
            ChainSpec::custom(couplings)
        }
    }
}

fn full_hilbert_battery(seed: u64, cases: usize) -> Result<BatteryOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_error = 0.0f64;
    for _ in 0..cases {
        let spec = random_chain(&mut rng, 8)?;
        let t = rng.random_range(0.0..=3.0 * spec.n() as f64);
        let controls = ControlParams::new(
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
            rng.random_range(0.0..1.0),
        )?;
        let sender = control_to_sender(&controls);

        let dense = full_hilbert_oracle(&spec, &sender, t)?;
        let sd = decompose(&spec.one_excitation_hamiltonian())?;
        let (f0, f_n) = receiver_amplitudes(&sd, &sender, t);
        let reduced = receiver_density(f0, f_n)?;
        max_error = max_error.max(dense.max_abs_diff(&reduced));
    }
    Ok(BatteryOutcome::new(
        "full-hilbert",
        cases,
        max_error,
        FULL_HILBERT_TOLERANCE,
    ))
}

/// The fixed-step integrator's error grows with the fifth power of the
/// spectral radius, so the engineered profile, whose radius grows
/// linearly with N, stays short here; the order-one profiles roam the
/// full length range.
fn time_stepper_battery(seed: u64, cases: usize, step: f64) -> Result<BatteryOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    let mut max_error = 0.0f64;
    for _ in 0..cases {
        let spec = match rng.random_range(0..4) {
            0 => ChainSpec::homogeneous(rng.random_range(2..=20))?,
            1 => ChainSpec::ekert(rng.random_range(2..=12))?,
            2 => ChainSpec::alternating(rng.random_range(2..=20), rng.random_range(0.25..=1.75))?,
            _ => {
                let n = rng.random_range(2..=20);
                ChainSpec::custom((1..n).map(|_| rng.random_range(0.3..=1.5)).collect())?
            }
        };
        let n = spec.n();
        let j = rng.random_range(1..=n);
        let t = rng.random_range(0.0..=3.0 * n as f64);

        let h = spec.one_excitation_hamiltonian();
        let sd = decompose(&h)?;
        let spectral = transition_amplitudes(&sd, j, t)?;
        let stepped = ode_oracle_amplitudes(&h, j, t, step)?;
        for (a, b) in spectral.iter().zip(&stepped) {
            max_error = max_error.max((a.value - b.value).norm());
        }
    }
    Ok(BatteryOutcome::new(
        "time-stepper",
        cases,
        max_error,
        TIME_STEPPER_TOLERANCE,
    ))
}

fn map_minimum_battery(seed: u64, cases: usize) -> Result<BatteryOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let mut max_error = 0.0f64;
    for _ in 0..cases {
        // mirror-symmetric chain with a nondegenerate transfer peak in
        // the window interior; a result on the right edge is a
        // truncated rise, not a peak, and the shortcut makes no claim
        // there. Unusable draws are rare and resampled.
        let mut found = None;
        for _ in 0..64 {
            let (spec, policy) = match rng.random_range(0..3) {
                0 => (
                    ChainSpec::homogeneous(rng.random_range(3..=30))?,
                    WindowPolicy::Standard,
                ),
                1 => (
                    ChainSpec::ekert(rng.random_range(3..=30))?,
                    WindowPolicy::Standard,
                ),
                _ => (
                    ChainSpec::alternating(
                        2 * rng.random_range(2..=12),
                        rng.random_range(0.4..=1.6),
                    )?,
                    WindowPolicy::Wide,
                ),
            };
            let window = policy.window(spec.n(), spec.d());
            let peak = find_t0(&spec, window)?;
            let interior = peak.t0 + 2.0 * crate::region::TIME_GRID_STEP < window.1;
            if peak.nondegenerate && interior {
                found = Some((spec, peak));
                break;
            }
        }
        let (spec, peak) = found.ok_or_else(|| {
            Error::NumericalFailure(
                "could not draw a chain with an interior nondegenerate transfer peak".into(),
            )
        })?;

        let sd = decompose(&spec.one_excitation_hamiltonian())?;
        let direct = direct_lambda_min(&sd, peak.t0)?;
        let analytic = lambda_min_from_peak(peak.r_max);
        max_error = max_error.max((direct - analytic).abs());
    }
    Ok(BatteryOutcome::new(
        "map-minimum",
        cases,
        max_error,
        MAP_MINIMUM_TOLERANCE,
    ))
}

/// Smallest receiver eigenvalue over the control plane at time t, found
/// without the closed form: a coarse scan of the full (alpha1, alpha2)
/// grid guards against surprises, then the alpha1 = 0 section, where
/// the minimum lies because mixing in the stationary component can only
/// raise the eigenvalue, is scanned finely and polished by golden
/// section inside the winning bracket.
pub fn direct_lambda_min(sd: &SpectralDecomposition, t: f64) -> Result<f64> {
    let n = sd.n();
    let r1 = transition_amplitudes(sd, 1, t)?[n - 1].r;
    let r2 = transition_amplitudes(sd, 2, t)?[n - 1].r;

    let lambda_at = |alpha1: f64, alpha2: f64| {
        let r0 = (alpha1 * std::f64::consts::FRAC_PI_2).sin();
        let (s2, c2) = (alpha2 * std::f64::consts::FRAC_PI_2).sin_cos();
        let r_n = (1.0 - r0 * r0).sqrt() * (c2 * r1 + s2 * r2).clamp(0.0, 1.0);
        let axis = 1.0 - 2.0 * r_n * r_n;
        0.5 * (1.0 + (axis * axis + 4.0 * r_n * r_n * r0 * r0).sqrt())
    };

    let mut best = f64::INFINITY;
    for i in 0..=100 {
        for j in 0..=100 {
            best = best.min(lambda_at(i as f64 / 100.0, j as f64 / 100.0));
        }
    }

    let section = |alpha2: f64| lambda_at(0.0, alpha2);
    let fine = 20_000usize;
    let mut best_index = 0;
    let mut best_section = f64::INFINITY;
    for i in 0..=fine {
        let value = section(i as f64 / fine as f64);
        if value < best_section {
            best_section = value;
            best_index = i;
        }
    }
    let mut a = (best_index.saturating_sub(1)) as f64 / fine as f64;
    let mut b = ((best_index + 1).min(fine)) as f64 / fine as f64;
    let mut c = b - INV_GOLDEN * (b - a);
    let mut d = a + INV_GOLDEN * (b - a);
    let mut fc = section(c);
    let mut fd = section(d);
    while b - a > 1e-12 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_GOLDEN * (b - a);
            fc = section(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_GOLDEN * (b - a);
            fd = section(d);
        }
    }
    best = best.min(best_section).min(section(0.5 * (a + b)));
    Ok(best)
}
