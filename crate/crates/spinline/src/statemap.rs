//! From sender controls to the receiver qubit.
//!
//! The sender prepares a pure one-excitation state on the first two
//! nodes,
//!
//! ```text
//! |psi> = a0 |vacuum> + a1 |1> + a2 |2>,    a0 real >= 0,
//! ```
//!
//! parametrized by four controls in [0,1]: two amplitude angles (in
//! units of pi/2) and two phases (in turns). After evolution the
//! receiver's reduced state is fixed by two complex amplitudes: f0 = a0,
//! the stationary vacuum component, and f_N = a1 p_N1(t) + a2 p_N2(t),
//! the excitation found on the last node. Writing R0 = |f0| and
//! R_N = |f_N|, the receiver density matrix has eigenvalues
//! lambda, 1 - lambda with
//!
//! ```text
//! lambda = (1 + S) / 2,    S = sqrt((1 - 2 R_N^2)^2 + 4 R_N^2 R0^2),
//! ```
//!
//! eigenvector angle beta1 = arccos((1 - 2 R_N^2) / S) / pi and relative
//! phase beta2 = Phi_N - Phi_0 (turns). Both angles lose meaning when
//! their defining expressions degenerate (S vanishing at the maximally
//! mixed point, either modulus vanishing for beta2); those cases are
//! reported as absent rather than as sentinel numbers.
//!
//! Choosing the second sender phase so that both terms of f_N align
//! (`phase_match`) makes |f_N| = cos(alpha2 pi/2) r_N1 + sin(alpha2 pi/2)
//! r_N2, the largest modulus the remaining controls can reach; all
//! region-level sweeps build on that reduction.

use num_complex::Complex64;

use crate::spectral::{transition_amplitudes, SpectralDecomposition, PHASE_FLOOR};
use crate::{Error, Result};

/// Below this, modulus products are treated as degenerate and the
/// affected angle is reported undefined. Well above eigensolver noise.
pub const DEGENERACY_FLOOR: f64 = 1e-12;

/// Slack allowed on |f0|^2 + |fN|^2 <= 1 and on state normalization
/// before the inputs are rejected as inconsistent.
const AMPLITUDE_SLACK: f64 = 1e-12;

/// Slack allowed on a combined transfer modulus before it is rejected
/// as a unitarity violation.
const UNITARITY_SLACK: f64 = 1e-10;

/// The four sender controls: amplitude angles in units of pi/2, phases
/// in turns, each confined to [0,1].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ControlParams {
    alpha1: f64,
    alpha2: f64,
    phi1: f64,
    phi2: f64,
}

impl ControlParams {
    pub fn new(alpha1: f64, alpha2: f64, phi1: f64, phi2: f64) -> Result<Self> {
        for (name, value) in [
            ("alpha1", alpha1),
            ("alpha2", alpha2),
            ("phi1", phi1),
            ("phi2", phi2),
        ] {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::InvalidParameter(format!(
                    "control {name} must lie in [0, 1], got {value}"
                )));
            }
        }
        Ok(ControlParams {
            alpha1,
            alpha2,
            phi1,
            phi2,
        })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    pub fn phi1(&self) -> f64 {
        self.phi1
    }

    pub fn phi2(&self) -> f64 {
        self.phi2
    }
}

/// Normalized sender amplitudes (a0, a1, a2) with a0 real nonnegative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SenderState {
    a0: f64,
    a1: Complex64,
    a2: Complex64,
}

impl SenderState {
    pub fn new(a0: f64, a1: Complex64, a2: Complex64) -> Result<Self> {
        if !a0.is_finite() || a0 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "vacuum amplitude must be real nonnegative, got {a0}"
            )));
        }
        let norm = a0 * a0 + a1.norm_sqr() + a2.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > AMPLITUDE_SLACK {
            return Err(Error::InvalidParameter(format!(
                "sender amplitudes must be normalized, |a|^2 = {norm}"
            )));
        }
        Ok(SenderState { a0, a1, a2 })
    }

    pub fn a0(&self) -> f64 {
        self.a0
    }

    pub fn a1(&self) -> Complex64 {
        self.a1
    }

    pub fn a2(&self) -> Complex64 {
        self.a2
    }
}

/// Maps the control cube onto sender amplitudes:
/// a0 = sin(alpha1 pi/2),
/// a1 = cos(alpha1 pi/2) cos(alpha2 pi/2) e^{2 pi i phi1},
/// a2 = cos(alpha1 pi/2) sin(alpha2 pi/2) e^{2 pi i phi2}.
pub fn control_to_sender(c: &ControlParams) -> SenderState {
    let (s1, c1) = (c.alpha1 * std::f64::consts::FRAC_PI_2).sin_cos();
    let (s2, c2) = (c.alpha2 * std::f64::consts::FRAC_PI_2).sin_cos();
    let a1 = Complex64::from_polar(c1 * c2, std::f64::consts::TAU * c.phi1);
    let a2 = Complex64::from_polar(c1 * s2, std::f64::consts::TAU * c.phi2);
    SenderState { a0: s1, a1, a2 }
}

/// The 3x3 unitary whose first column is (a0, a1, a2); the remaining
/// columns complete the sender amplitudes to a basis, which is how the
/// sender's state is prepared from the vacuum by a local operation.
/// Undefined when |a2| = 1, where the denominator q = sqrt(1 - |a2|^2)
/// of the completion vanishes.
pub fn sender_unitary(s: &SenderState) -> Result<[[Complex64; 3]; 3]> {
    let q_sq = 1.0 - s.a2.norm_sqr();
    if q_sq <= DEGENERACY_FLOOR {
        return Err(Error::DegenerateParametrization(format!(
            "|a2| = {} leaves no room for the completion columns",
            s.a2.norm()
        )));
    }
    let q = q_sq.sqrt();
    let a0 = Complex64::new(s.a0, 0.0);
    Ok([
        [a0, -s.a1.conj() / q, -a0 * s.a2.conj() / q],
        [s.a1, a0 / q, -s.a1 * s.a2.conj() / q],
        [s.a2, Complex64::new(0.0, 0.0), Complex64::new(q, 0.0)],
    ])
}

/// The two amplitudes that determine the receiver state: the stationary
/// vacuum component f0 = a0 and the transferred component
/// f_N = a1 p_N1(t) + a2 p_N2(t).
pub fn receiver_amplitudes(
    sd: &SpectralDecomposition,
    s: &SenderState,
    t: f64,
) -> (Complex64, Complex64) {
    let n = sd.n();
    let from_first = transition_amplitudes(sd, 1, t).expect("node 1 exists in any chain");
    let from_second = transition_amplitudes(sd, 2, t).expect("node 2 exists in any chain");
    let f_n = s.a1 * from_first[n - 1].value + s.a2 * from_second[n - 1].value;
    (Complex64::new(s.a0, 0.0), f_n)
}

/// 2x2 complex matrix with the invariants of a qubit state, plus the
/// small amount of linear algebra the tests and reports need.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: [[Complex64; 2]; 2],
}

impl DensityMatrix {
    pub fn new(entries: [[Complex64; 2]; 2]) -> Self {
        DensityMatrix { entries }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row][col]
    }

    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.entries
    }

    pub fn trace(&self) -> Complex64 {
        self.entries[0][0] + self.entries[1][1]
    }

    /// Eigenvalues of the Hermitian part, descending.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let p = self.entries[0][0].re;
        let q = self.entries[1][1].re;
        let mid = (p + q) / 2.0;
        let radius = ((p - q) / 2.0).hypot(self.entries[0][1].norm());
        (mid + radius, mid - radius)
    }

    /// Largest deviation from rho = rho^dagger.
    pub fn hermiticity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for row in 0..2 {
            for col in 0..2 {
                worst = worst.max(
                    (self.entries[row][col] - self.entries[col][row].conj()).norm(),
                );
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for row in 0..2 {
            for col in 0..2 {
                worst = worst.max((self.entries[row][col] - other.entries[row][col]).norm());
            }
        }
        worst
    }
}

fn check_amplitude_budget(f0: Complex64, f_n: Complex64) -> Result<(f64, f64)> {
    let r0 = f0.norm();
    let r_n = f_n.norm();
    let budget = r0 * r0 + r_n * r_n;
    if !budget.is_finite() || budget > 1.0 + AMPLITUDE_SLACK {
        return Err(Error::InconsistentAmplitudes(budget));
    }
    Ok((r0, r_n))
}

/// Receiver density matrix
/// [[1 - |fN|^2, fN* f0], [fN f0*, |fN|^2]]
/// in the (ground, excited) basis of the last node.
pub fn receiver_density(f0: Complex64, f_n: Complex64) -> Result<DensityMatrix> {
    let (_, r_n) = check_amplitude_budget(f0, f_n)?;
    let population = r_n * r_n;
    let coherence = f_n.conj() * f0;
    Ok(DensityMatrix::new([
        [Complex64::new(1.0 - population, 0.0), coherence],
        [coherence.conj(), Complex64::new(population, 0.0)],
    ]))
}

/// Receiver state in eigen-parametrization: the larger eigenvalue
/// lambda in [1/2, 1] and the eigenvector angles beta1 (units of pi)
/// and beta2 (turns), each absent where its definition degenerates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReceiverState {
    lambda: f64,
    beta1: Option<f64>,
    beta2: Option<f64>,
    density: DensityMatrix,
}

impl ReceiverState {
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Eigenvector polar angle in [0,1]; absent at the maximally mixed
    /// point, where eigenvectors are arbitrary.
    pub fn beta1(&self) -> Option<f64> {
        self.beta1
    }

    /// Eigenvector relative phase in [0,1); absent when the density
    /// matrix has no off-diagonal part.
    pub fn beta2(&self) -> Option<f64> {
        self.beta2
    }

    pub fn density(&self) -> &DensityMatrix {
        &self.density
    }
}

/// Extracts (lambda, beta1, beta2) from the receiver amplitudes.
pub fn receiver_params(f0: Complex64, f_n: Complex64) -> Result<ReceiverState> {
    let (r0, r_n) = check_amplitude_budget(f0, f_n)?;
    let density = receiver_density(f0, f_n)?;

    let axis = 1.0 - 2.0 * r_n * r_n;
    let s = (axis * axis + 4.0 * r_n * r_n * r0 * r0).sqrt();
    let lambda = (0.5 * (1.0 + s)).clamp(0.5, 1.0);

    let beta1 = if s > DEGENERACY_FLOOR {
        Some((axis / s).clamp(-1.0, 1.0).acos() / std::f64::consts::PI)
    } else {
        None
    };

    let beta2 = if r_n * r0 > DEGENERACY_FLOOR {
        let mut turns = (f_n.arg() - f0.arg()) / std::f64::consts::TAU;
        turns = turns.rem_euclid(1.0);
        if turns >= 1.0 {
            turns = 0.0;
        }
        Some(turns)
    } else {
        None
    };

    Ok(ReceiverState {
        lambda,
        beta1,
        beta2,
        density,
    })
}

/// Phase alignment of the two transfer channels at time t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseMatch {
    phi2: f64,
    first_vanishes: bool,
    second_vanishes: bool,
}

impl PhaseMatch {
    /// The matched second control phase, in turns.
    pub fn phi2(&self) -> f64 {
        self.phi2
    }

    /// True when r_N1(t) carries no phase information.
    pub fn first_vanishes(&self) -> bool {
        self.first_vanishes
    }

    /// True when r_N2(t) carries no phase information; the returned
    /// phase then changes nothing and only aligns the surviving term.
    pub fn second_vanishes(&self) -> bool {
        self.second_vanishes
    }

    /// False when both channels vanish and the phase is pure convention.
    pub fn is_constrained(&self) -> bool {
        !(self.first_vanishes && self.second_vanishes)
    }
}

/// phi2 = phi1 + chi_N1(t) - chi_N2(t) (mod 1), the choice that puts
/// both terms of f_N on a common phase so their moduli add. When both
/// channel amplitudes sit below the phase floor the result degrades to
/// phi1 by convention and is marked unconstrained.
pub fn phase_match(sd: &SpectralDecomposition, phi1: f64, t: f64) -> Result<PhaseMatch> {
    let n = sd.n();
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "phase matching needs distinct transfer channels, chain length {n} < 3"
        )));
    }
    let from_first = transition_amplitudes(sd, 1, t)?[n - 1];
    let from_second = transition_amplitudes(sd, 2, t)?[n - 1];
    let mut phi2 = (phi1 + from_first.chi - from_second.chi).rem_euclid(1.0);
    if phi2 >= 1.0 {
        phi2 = 0.0;
    }
    Ok(PhaseMatch {
        phi2,
        first_vanishes: from_first.r <= PHASE_FLOOR,
        second_vanishes: from_second.r <= PHASE_FLOOR,
    })
}

/// cos(alpha2 pi/2) r1 + sin(alpha2 pi/2) r2, the transfer modulus of a
/// phase-matched sender, clamped to [0,1]. A result beyond 1 + 1e-10
/// signals a broken upstream amplitude and is rejected.
pub fn combined_modulus(r1: f64, r2: f64, alpha2: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&alpha2) {
        return Err(Error::InvalidParameter(format!(
            "alpha2 must lie in [0, 1], got {alpha2}"
        )));
    }
    let (s, c) = (alpha2 * std::f64::consts::FRAC_PI_2).sin_cos();
    let combined = c * r1 + s * r2;
    if combined > 1.0 + UNITARITY_SLACK {
        return Err(Error::UnitarityViolation(combined));
    }
    Ok(combined.clamp(0.0, 1.0))
}

/// The modulus R the sender reaches at angle alpha2 under phase
/// matching, from the chain's transfer amplitudes at time t.
pub fn effective_r(sd: &SpectralDecomposition, alpha2: f64, t: f64) -> Result<f64> {
    let n = sd.n();
    let r1 = transition_amplitudes(sd, 1, t)?[n - 1].r;
    let r2 = transition_amplitudes(sd, 2, t)?[n - 1].r;
    combined_modulus(r1, r2, alpha2)
}

/// Smallest eigenvalue creatable at a fixed vacuum modulus R0, attained
/// at R = 1/sqrt(2): lambda_min = (1 + R0 sqrt(2 - R0^2)) / 2.
pub fn lambda_floor(r0: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&r0));
    0.5 * (1.0 + r0 * (2.0 - r0 * r0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::ChainSpec;
    use crate::spectral::decompose;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

    fn chain_decomposition(spec: &ChainSpec) -> SpectralDecomposition {
        decompose(&spec.one_excitation_hamiltonian()).unwrap()
    }

    #[test]
    fn control_cube_corners() {
        let ground = control_to_sender(&ControlParams::new(1.0, 0.3, 0.9, 0.2).unwrap());
        assert_abs_diff_eq!(ground.a0(), 1.0, epsilon = 1e-15);
        assert!(ground.a1().norm() <= 1e-15);
        assert!(ground.a2().norm() <= 1e-15);

        let first = control_to_sender(&ControlParams::new(0.0, 0.0, 0.0, 0.7).unwrap());
        assert_abs_diff_eq!(first.a0(), 0.0, epsilon = 1e-15);
        assert!((first.a1() - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!(first.a2().norm() <= 1e-15);
    }

    #[test]
    fn control_map_midpoint() {
        let s = control_to_sender(&ControlParams::new(0.5, 0.5, 0.25, 0.0).unwrap());
        assert_abs_diff_eq!(s.a0(), FRAC_1_SQRT_2, epsilon = 1e-12);
        assert!((s.a1() - Complex64::new(0.0, 0.5)).norm() <= 1e-12);
        assert!((s.a2() - Complex64::new(0.5, 0.0)).norm() <= 1e-12);
    }

    #[test]
    fn control_map_is_normalized_on_a_grid() {
        for i in 0..=10 {
            for j in 0..=10 {
                let c =
                    ControlParams::new(i as f64 / 10.0, j as f64 / 10.0, 0.37, 0.81).unwrap();
                let s = control_to_sender(&c);
                let norm = s.a0() * s.a0() + s.a1().norm_sqr() + s.a2().norm_sqr();
                assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn controls_and_amplitudes_are_validated() {
        assert!(ControlParams::new(1.2, 0.0, 0.0, 0.0).is_err());
        assert!(ControlParams::new(0.5, -0.1, 0.0, 0.0).is_err());
        assert!(ControlParams::new(0.5, 0.1, f64::NAN, 0.0).is_err());
        assert!(SenderState::new(-0.5, Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.0))
            .is_err());
        assert!(SenderState::new(0.9, Complex64::new(0.9, 0.0), Complex64::new(0.0, 0.0))
            .is_err());
    }

    #[test]
    fn sender_unitary_examples() {
        let identity_like = sender_unitary(
            &SenderState::new(1.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)).unwrap(),
        )
        .unwrap();
        for (row, entries) in identity_like.iter().enumerate() {
            for (col, entry) in entries.iter().enumerate() {
                let expected = if row == col { 1.0 } else { 0.0 };
                assert!((entry - Complex64::new(expected, 0.0)).norm() <= 1e-15);
            }
        }

        let swap_like = sender_unitary(
            &SenderState::new(0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)).unwrap(),
        )
        .unwrap();
        assert!((swap_like[0][0]).norm() <= 1e-15);
        assert!((swap_like[1][0] - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!((swap_like[2][0]).norm() <= 1e-15);
    }

    fn unitarity_defect(u: &[[Complex64; 3]; 3]) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                let mut dot = Complex64::new(0.0, 0.0);
                for (x, y) in u[a].iter().zip(&u[b]) {
                    dot += x * y.conj();
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    #[test]
    fn sender_unitary_is_unitary_with_the_state_as_first_column() {
        let states = [
            SenderState::new(FRAC_1_SQRT_2, Complex64::new(0.5, 0.0), Complex64::new(0.5, 0.0))
                .unwrap(),
            control_to_sender(&ControlParams::new(0.3, 0.7, 0.15, 0.6).unwrap()),
            control_to_sender(&ControlParams::new(0.0, 0.4, 0.9, 0.05).unwrap()),
        ];
        for s in states {
            let u = sender_unitary(&s).unwrap();
            assert!(unitarity_defect(&u) <= 1e-12);
            assert!((u[0][0] - Complex64::new(s.a0(), 0.0)).norm() <= 1e-15);
            assert!((u[1][0] - s.a1()).norm() <= 1e-15);
            assert!((u[2][0] - s.a2()).norm() <= 1e-15);
        }
    }

    #[test]
    fn sender_unitary_rejects_full_second_node_weight() {
        let s = SenderState::new(0.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 1.0))
            .unwrap();
        assert!(matches!(
            sender_unitary(&s),
            Err(Error::DegenerateParametrization(_))
        ));
    }

    #[test]
    fn receiver_amplitudes_examples() {
        // at t = 0 nothing has arrived at the far end
        let sd = chain_decomposition(&ChainSpec::homogeneous(5).unwrap());
        let s = control_to_sender(&ControlParams::new(0.2, 0.6, 0.1, 0.8).unwrap());
        let (f0, f_n) = receiver_amplitudes(&sd, &s, 0.0);
        assert_abs_diff_eq!(f0.re, s.a0(), epsilon = 1e-15);
        assert!(f_n.norm() <= 1e-12);

        // a transfer-engineered chain delivers the full excitation at pi
        let sd = chain_decomposition(&ChainSpec::ekert(5).unwrap());
        let s = SenderState::new(0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        let (_, f_n) = receiver_amplitudes(&sd, &s, PI);
        assert!((f_n.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn density_matrix_examples() {
        let pure_ground = receiver_density(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        assert!((pure_ground.entry(0, 0) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);
        assert!(pure_ground.entry(1, 1).norm() <= 1e-15);

        let transferred = receiver_density(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
            .unwrap();
        assert!(transferred.entry(0, 0).norm() <= 1e-15);
        assert!((transferred.entry(1, 1) - Complex64::new(1.0, 0.0)).norm() <= 1e-15);

        let balanced = receiver_density(
            Complex64::new(FRAC_1_SQRT_2, 0.0),
            Complex64::new(0.0, FRAC_1_SQRT_2),
        )
        .unwrap();
        assert!((balanced.entry(0, 0) - Complex64::new(0.5, 0.0)).norm() <= 1e-12);
        assert!((balanced.entry(0, 1) - Complex64::new(0.0, -0.5)).norm() <= 1e-12);
        assert!((balanced.entry(1, 0) - Complex64::new(0.0, 0.5)).norm() <= 1e-12);
        assert!(balanced.hermiticity_defect() <= 1e-15);
        assert_abs_diff_eq!(balanced.trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn density_rejects_overfull_amplitudes() {
        let err = receiver_density(Complex64::new(0.8, 0.0), Complex64::new(0.8, 0.0));
        assert!(matches!(err, Err(Error::InconsistentAmplitudes(b)) if b > 1.0));
    }

    #[test]
    fn receiver_params_examples() {
        let pure = receiver_params(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)).unwrap();
        assert_abs_diff_eq!(pure.lambda(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pure.beta1().unwrap(), 1.0, epsilon = 1e-12);
        assert!(pure.beta2().is_none());

        let mixed = receiver_params(
            Complex64::new(0.0, 0.0),
            Complex64::new(FRAC_1_SQRT_2, 0.0),
        )
        .unwrap();
        assert_abs_diff_eq!(mixed.lambda(), 0.5, epsilon = 1e-12);
        assert!(mixed.beta1().is_none());

        let generic =
            receiver_params(Complex64::new(0.6, 0.0), Complex64::new(0.5, 0.0)).unwrap();
        assert_abs_diff_eq!(generic.lambda(), 0.5 * (1.0 + 0.61f64.sqrt()), epsilon = 1e-12);
        let (top, bottom) = generic.density().eigenvalues();
        assert_abs_diff_eq!(top, generic.lambda(), epsilon = 1e-10);
        assert_abs_diff_eq!(bottom, 1.0 - generic.lambda(), epsilon = 1e-10);
        assert_abs_diff_eq!(generic.beta2().unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn receiver_params_phase_difference_in_turns() {
        let f0 = Complex64::from_polar(0.6, 0.3 * TAU);
        let f_n = Complex64::from_polar(0.5, 0.8 * TAU);
        let state = receiver_params(f0, f_n).unwrap();
        assert_abs_diff_eq!(state.beta2().unwrap(), 0.5, epsilon = 1e-12);

        // wrap-around: phase difference just below a full turn
        let f_n = Complex64::from_polar(0.5, 0.2999999 * TAU);
        let state = receiver_params(f0, f_n).unwrap();
        assert!(state.beta2().unwrap() < 1.0);
        assert!(state.beta2().unwrap() > 0.99);
    }

    #[test]
    fn phase_match_aligns_the_channels() {
        let sd = chain_decomposition(&ChainSpec::homogeneous(6).unwrap());
        let t = 5.3;
        let phi1 = 0.3;
        let matched = phase_match(&sd, phi1, t).unwrap();
        assert!(matched.is_constrained());

        // reconstruct |f_N| from the matched controls and compare with
        // the closed combination of channel moduli
        let alpha1 = 0.35;
        let alpha2 = 0.6;
        let controls = ControlParams::new(alpha1, alpha2, phi1, matched.phi2()).unwrap();
        let s = control_to_sender(&controls);
        let (_, f_n) = receiver_amplitudes(&sd, &s, t);
        let expected = (1.0 - s.a0() * s.a0()).sqrt() * effective_r(&sd, alpha2, t).unwrap();
        assert_abs_diff_eq!(f_n.norm(), expected, epsilon = 1e-12);

        // no phi2 on a 1000-point grid beats the matched value
        let mut best = 0.0f64;
        for i in 0..1000 {
            let candidate = ControlParams::new(alpha1, alpha2, phi1, i as f64 / 1000.0).unwrap();
            let s = control_to_sender(&candidate);
            let (_, f_n) = receiver_amplitudes(&sd, &s, t);
            best = best.max(f_n.norm());
        }
        assert!(f_n.norm() >= best - 1e-9);
    }

    #[test]
    fn phase_match_formula_and_short_chain_rejection() {
        let sd = chain_decomposition(&ChainSpec::ekert(7).unwrap());
        let t = 1.9;
        let n = sd.n();
        let chi1 = transition_amplitudes(&sd, 1, t).unwrap()[n - 1].chi;
        let chi2 = transition_amplitudes(&sd, 2, t).unwrap()[n - 1].chi;
        let matched = phase_match(&sd, 0.85, t).unwrap();
        assert_abs_diff_eq!(
            matched.phi2(),
            (0.85 + chi1 - chi2).rem_euclid(1.0),
            epsilon = 1e-15
        );

        let two = chain_decomposition(&ChainSpec::homogeneous(2).unwrap());
        assert!(phase_match(&two, 0.0, 1.0).is_err());
    }

    #[test]
    fn phase_match_with_dark_channels() {
        // at t = 0 both transfer amplitudes vanish for a 3+ node chain,
        // so the phase is pure convention
        let sd = chain_decomposition(&ChainSpec::homogeneous(6).unwrap());
        let matched = phase_match(&sd, 0.42, 0.0).unwrap();
        assert!(!matched.is_constrained());
        assert!(matched.first_vanishes() && matched.second_vanishes());
        assert_abs_diff_eq!(matched.phi2(), 0.42, epsilon = 1e-15);
    }

    #[test]
    fn combined_modulus_endpoints_and_violation() {
        assert_abs_diff_eq!(combined_modulus(0.7, 0.2, 0.0).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(combined_modulus(0.7, 0.2, 1.0).unwrap(), 0.2, epsilon = 1e-15);
        assert!(matches!(
            combined_modulus(0.9, 0.9, 0.5),
            Err(Error::UnitarityViolation(_))
        ));
        assert!(combined_modulus(0.5, 0.5, 1.5).is_err());
    }

    #[test]
    fn effective_r_runs_along_the_channel_moduli() {
        let sd = chain_decomposition(&ChainSpec::alternating(8, 0.6).unwrap());
        let t = 9.3;
        let n = sd.n();
        let r1 = transition_amplitudes(&sd, 1, t).unwrap()[n - 1].r;
        let r2 = transition_amplitudes(&sd, 2, t).unwrap()[n - 1].r;
        assert_abs_diff_eq!(effective_r(&sd, 0.0, t).unwrap(), r1, epsilon = 1e-15);
        assert_abs_diff_eq!(effective_r(&sd, 1.0, t).unwrap(), r2, epsilon = 1e-15);
    }

    #[test]
    fn lambda_floor_examples_and_grid_minimum() {
        assert_abs_diff_eq!(lambda_floor(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(lambda_floor(1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            lambda_floor(0.5),
            0.5 * (1.0 + 0.5 * 1.75f64.sqrt()),
            epsilon = 1e-15
        );

        // the floor is a true lower bound over R, attained at 1/sqrt(2)
        for r0 in [0.0, 0.3, 0.72] {
            let floor = lambda_floor(r0);
            let mut grid_min = f64::INFINITY;
            for i in 0..=10_000 {
                let r = i as f64 / 10_000.0;
                let r_n = (1.0 - r0 * r0).sqrt() * r;
                let state =
                    receiver_params(Complex64::new(r0, 0.0), Complex64::new(r_n, 0.0)).unwrap();
                grid_min = grid_min.min(state.lambda());
            }
            assert!(grid_min >= floor - 1e-8);
            let at_best = {
                let r_n = (1.0 - r0 * r0).sqrt() * FRAC_1_SQRT_2;
                receiver_params(Complex64::new(r0, 0.0), Complex64::new(r_n, 0.0))
                    .unwrap()
                    .lambda()
            };
            assert!((at_best - floor).abs() <= 1e-8);
        }
    }
}
