//! Spectral decomposition of the one-excitation block and time propagation.
//!
//! Everything downstream consumes the transition amplitudes
//!
//! ```text
//! p_kj(t) = <k| exp(-i H1 t) |j> = sum_m V_km V_jm exp(-i lambda_m t)
//! ```
//!
//! written in polar form p = r e^{2 pi i chi} with chi in [0,1). The
//! decomposition is computed once per chain and reused across t-sweeps.
//!
//! Two independent oracles guard the spectral path: a fixed-step
//! Runge-Kutta integrator of the Schroedinger equation on the same
//! tridiagonal block, and a brute-force diagonalization of the full
//! 2^N-dimensional Hamiltonian that never assumes excitation-number
//! conservation. The full-space route reduces the evolved state to the
//! last node by an explicit partial trace, so agreement with the
//! single-excitation formulas confirms the block structure instead of
//! presupposing it.

use std::io;

use num_complex::Complex64;

use crate::chain::{ChainSpec, TridiagonalMatrix};
use crate::fmt::sig17;
use crate::statemap::{DensityMatrix, SenderState};
use crate::{Error, Result};

/// Moduli at or below this are treated as vanishing when extracting a
/// phase; the phase of such an amplitude is reported as 0.
pub const PHASE_FLOOR: f64 = 1e-14;

/// Largest chain the full-Hilbert oracle accepts (2^N dense matrix).
pub const FULL_ORACLE_MAX_N: usize = 10;

/// Off-diagonal entries are considered annihilated once they fall below
/// this fraction of the neighboring diagonal magnitudes.
const CONVERGENCE_FLOOR: f64 = 1e-14;

/// Implicit-shift sweeps allowed per eigenvalue, times the dimension.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 50;

/// Eigenvector sign pivot: the first component whose magnitude exceeds
/// this is made positive. A normalized vector of any supported dimension
/// has a component far above it.
const SIGN_PIVOT_FLOOR: f64 = 1e-8;

/// Eigenvalues and eigenvectors of a symmetric tridiagonal matrix.
///
/// Eigenvalues are ascending; column m of V is the eigenvector of
/// eigenvalue m, with the sign convention that the first component of
/// magnitude above 1e-8 is positive, so repeated runs are bitwise equal.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralDecomposition {
    n: usize,
    eigenvalues: Vec<f64>,
    // components[(node-1) * n + mode]: node rows contiguous, so forming
    // the mode weights V_km V_jm of one (k, j) pair walks two slices.
    components: Vec<f64>,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Ascending eigenvalues of the block.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// V_{node,mode} with node in 1..=N and mode in 0..N.
    pub fn component(&self, node: usize, mode: usize) -> f64 {
        self.components[(node - 1) * self.n + mode]
    }

    fn node_row(&self, node: usize) -> &[f64] {
        &self.components[(node - 1) * self.n..node * self.n]
    }

    fn check_node(&self, index: usize) -> Result<()> {
        if index < 1 || index > self.n {
            return Err(Error::IndexOutOfRange { index, n: self.n });
        }
        Ok(())
    }

    /// Precomputed mode weights of one (k, j) pair, for dense t-sweeps.
    pub fn transition(&self, k: usize, j: usize) -> Result<Transition> {
        self.check_node(k)?;
        self.check_node(j)?;
        let krow = self.node_row(k);
        let jrow = self.node_row(j);
        let terms = self
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(m, &lambda)| (krow[m] * jrow[m], lambda))
            .collect();
        Ok(Transition { k, j, terms })
    }
}

/// One excitation-transition channel k <- j with its mode weights frozen,
/// so evaluating p_kj(t) costs one sin/cos per mode.
#[derive(Clone, Debug)]
pub struct Transition {
    k: usize,
    j: usize,
    terms: Vec<(f64, f64)>,
}

impl Transition {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn amplitude(&self, t: f64) -> TransitionAmplitude {
        let mut value = Complex64::new(0.0, 0.0);
        for &(weight, lambda) in &self.terms {
            let (s, c) = (lambda * t).sin_cos();
            value.re += weight * c;
            value.im -= weight * s;
        }
        TransitionAmplitude::new(self.k, self.j, value)
    }
}

/// p_kj(t) in both Cartesian and polar form, r e^{2 pi i chi}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionAmplitude {
    pub k: usize,
    pub j: usize,
    pub value: Complex64,
    /// Modulus |value|.
    pub r: f64,
    /// Phase in turns, in [0,1); 0 by convention when r <= 1e-14.
    pub chi: f64,
}

impl TransitionAmplitude {
    pub fn new(k: usize, j: usize, value: Complex64) -> Self {
        let r = value.norm();
        let chi = if r > PHASE_FLOOR {
            let mut turns = value.arg() / std::f64::consts::TAU;
            if turns < 0.0 {
                turns += 1.0;
            }
            // arg just below 0 rounds up to a full turn; fold it back
            if turns >= 1.0 {
                turns = 0.0;
            }
            turns
        } else {
            0.0
        };
        TransitionAmplitude { k, j, value, r, chi }
    }
}

/// Diagonalizes a symmetric tridiagonal matrix by implicit-shift QL
/// sweeps with deterministic ordering and signs.
pub fn decompose(matrix: &TridiagonalMatrix) -> Result<SpectralDecomposition> {
    let n = matrix.dimension();
    let mut d = matrix.diagonal().to_vec();
    let mut e = matrix.off_diagonal().to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    ql_implicit(&mut d, &mut e, &mut z, n).map_err(|_| {
        Error::NumericalFailure(format!(
            "eigenvalue iteration did not converge; diagonal = {:?}, off-diagonal = {:?}",
            matrix.diagonal(),
            matrix.off_diagonal()
        ))
    })?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut components = vec![0.0; n * n];
    for (mode, &src) in order.iter().enumerate() {
        eigenvalues.push(d[src]);
        for node in 0..n {
            components[node * n + mode] = z[node * n + src];
        }
    }
    for mode in 0..n {
        let pivot = (0..n)
            .map(|node| components[node * n + mode])
            .find(|c| c.abs() > SIGN_PIVOT_FLOOR);
        if let Some(pivot) = pivot {
            if pivot < 0.0 {
                for node in 0..n {
                    components[node * n + mode] = -components[node * n + mode];
                }
            }
        }
    }

    Ok(SpectralDecomposition {
        n,
        eigenvalues,
        components,
    })
}

/// All amplitudes p_kj(t), k = 1..N, for one source node j.
pub fn transition_amplitudes(
    sd: &SpectralDecomposition,
    j: usize,
    t: f64,
) -> Result<Vec<TransitionAmplitude>> {
    sd.check_node(j)?;
    let n = sd.n;
    let phases: Vec<Complex64> = sd
        .eigenvalues
        .iter()
        .map(|&lambda| {
            let (s, c) = (lambda * t).sin_cos();
            Complex64::new(c, -s)
        })
        .collect();
    let jrow = sd.node_row(j);
    Ok((1..=n)
        .map(|k| {
            let krow = sd.node_row(k);
            let mut value = Complex64::new(0.0, 0.0);
            for m in 0..n {
                value += phases[m] * (krow[m] * jrow[m]);
            }
            TransitionAmplitude::new(k, j, value)
        })
        .collect())
}

/// Fixed-step Runge-Kutta integration of i dpsi/dt = H1 psi from |j>.
///
/// Independent of the spectral route: no eigenvalues, only repeated
/// tridiagonal applications. The step count is ceil(t/step) so the
/// integration lands on t exactly; t = 0 returns the identity column
/// without touching the state.
pub fn ode_oracle_amplitudes(
    h: &TridiagonalMatrix,
    j: usize,
    t: f64,
    step: f64,
) -> Result<Vec<TransitionAmplitude>> {
    let n = h.dimension();
    if j < 1 || j > n {
        return Err(Error::IndexOutOfRange { index: j, n });
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "integration step must be positive, got {step}"
        )));
    }

    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[j - 1] = Complex64::new(1.0, 0.0);

    if t > 0.0 {
        let steps = (t / step).ceil() as usize;
        let dt = t / steps as f64;
        let mut k1 = vec![Complex64::new(0.0, 0.0); n];
        let mut k2 = k1.clone();
        let mut k3 = k1.clone();
        let mut k4 = k1.clone();
        let mut stage = k1.clone();

        // dpsi/dt = -i H psi
        let derivative = |h: &TridiagonalMatrix, x: &[Complex64], out: &mut [Complex64]| {
            h.apply(x, out);
            for v in out.iter_mut() {
                *v = Complex64::new(v.im, -v.re);
            }
        };

        for _ in 0..steps {
            derivative(h, &psi, &mut k1);
            for i in 0..n {
                stage[i] = psi[i] + k1[i] * (dt / 2.0);
            }
            derivative(h, &stage, &mut k2);
            for i in 0..n {
                stage[i] = psi[i] + k2[i] * (dt / 2.0);
            }
            derivative(h, &stage, &mut k3);
            for i in 0..n {
                stage[i] = psi[i] + k3[i] * dt;
            }
            derivative(h, &stage, &mut k4);
            for i in 0..n {
                psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
            }
        }
    }

    Ok(psi
        .into_iter()
        .enumerate()
        .map(|(i, value)| TransitionAmplitude::new(i + 1, j, value))
        .collect())
}

/// Receiver density matrix from brute-force evolution in the full
/// 2^N-dimensional space.
///
/// Builds the complete XY Hamiltonian over all spin configurations (bit
/// i of a basis index is the state of node i+1), diagonalizes it densely
/// by Householder reduction plus QL, evolves the product initial state
/// with the sender's amplitudes on nodes 1 and 2, and traces out nodes
/// 1..N-1. Deliberately ignores the block structure the rest of the
/// crate relies on; that structure is what this oracle checks.
pub fn full_hilbert_oracle(
    spec: &ChainSpec,
    sender: &SenderState,
    t: f64,
) -> Result<DensityMatrix> {
    let n = spec.n();
    if n > FULL_ORACLE_MAX_N {
        return Err(Error::OracleScaleExceeded {
            n,
            max: FULL_ORACLE_MAX_N,
        });
    }
    let dim = 1usize << n;

    // Hopping D_i/2 between configurations that differ by moving one
    // excitation across bond i; each unordered pair is visited once, in
    // its excitation-on-the-left configuration.
    let mut ham = vec![0.0; dim * dim];
    for (bond, coupling) in spec.couplings().iter().enumerate() {
        let half = coupling / 2.0;
        for b in 0..dim {
            if (b >> bond) & 1 == 1 && (b >> (bond + 1)) & 1 == 0 {
                let swapped = b ^ (0b11 << bond);
                ham[b * dim + swapped] += half;
                ham[swapped * dim + b] += half;
            }
        }
    }

    let (values, vectors) = dense_symmetric_eigen(ham, dim)?;

    let mut psi0 = vec![Complex64::new(0.0, 0.0); dim];
    psi0[0] = Complex64::new(sender.a0(), 0.0);
    psi0[1] = sender.a1();
    psi0[2] = sender.a2();

    // psi(t) = V exp(-i lambda t) V^T psi0
    let mut coefficients = vec![Complex64::new(0.0, 0.0); dim];
    for (m, coefficient) in coefficients.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for b in 0..dim {
            acc += vectors[b * dim + m] * psi0[b];
        }
        let (s, c) = (values[m] * t).sin_cos();
        *coefficient = acc * Complex64::new(c, -s);
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); dim];
    for (b, amplitude) in psi.iter_mut().enumerate() {
        let row = &vectors[b * dim..(b + 1) * dim];
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, &v) in row.iter().enumerate() {
            acc += coefficients[m] * v;
        }
        *amplitude = acc;
    }

    // Partial trace over nodes 1..N-1: the receiver is bit n-1.
    let rest = dim >> 1;
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, row) in rho.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rest {
                acc += psi[(a << (n - 1)) | r] * psi[(b << (n - 1)) | r].conj();
            }
            *entry = acc;
        }
    }
    Ok(DensityMatrix::new(rho))
}

/// Amplitude dump: one row per (k, t), floats at 17 significant digits.
pub fn write_amplitude_csv<W: io::Write>(
    out: &mut W,
    blocks: &[(f64, Vec<TransitionAmplitude>)],
) -> Result<()> {
    writeln!(out, "k,t,re,im,r,chi")?;
    for (t, amplitudes) in blocks {
        for a in amplitudes {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                a.k,
                sig17(*t),
                sig17(a.value.re),
                sig17(a.value.im),
                sig17(a.r),
                sig17(a.chi)
            )?;
        }
    }
    Ok(())
}

/// Eigenvalues and eigenvectors of a dense symmetric matrix, row-major.
/// Used only by the full-Hilbert oracle; values come back unsorted and
/// with no sign convention, which the propagator does not care about.
fn dense_symmetric_eigen(matrix: Vec<f64>, n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut v = matrix;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tred2(&mut v, &mut d, &mut e, n);
    // tred2 leaves e[i] coupling rows i-1 and i; QL wants i and i+1
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;
    ql_implicit(&mut d, &mut e, &mut v, n)?;
    Ok((d, v))
}

/// Implicit-shift QL iteration on a symmetric tridiagonal matrix.
///
/// d holds the diagonal, e[i] the coupling of rows i and i+1 with
/// e[n-1] a workspace sentinel, z (row-major n x n) the matrix whose
/// columns accumulate the eigenvectors; z must start as the identity for
/// a tridiagonal input or as the Householder product when chained after
/// tred2. On return d holds unordered eigenvalues.
fn ql_implicit(d: &mut [f64], e: &mut [f64], z: &mut [f64], n: usize) -> Result<()> {
    for l in 0..n {
        let mut sweeps = 0usize;
        loop {
            // first converged off-diagonal at or after l ends the block
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= CONVERGENCE_FLOOR * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS_PER_EIGENVALUE * n {
                return Err(Error::NumericalFailure(format!(
                    "implicit-shift iteration exceeded {} sweeps at eigenvalue {} of {}",
                    MAX_SWEEPS_PER_EIGENVALUE * n,
                    l + 1,
                    n
                )));
            }

            // Wilkinson-style shift from the 2x2 block at l
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            let denom = if g >= 0.0 { g + r } else { g - r };
            g = d[m] - d[l] + e[l] / denom;

            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    // rotation annihilated early: drop the shift and restart
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for k in 0..n {
                    f = z[k * n + i + 1];
                    z[k * n + i + 1] = s * z[k * n + i] + c * f;
                    z[k * n + i] = c * z[k * n + i] - s * f;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Householder reduction of a dense symmetric matrix to tridiagonal
/// form. v (row-major n x n) holds the matrix on entry and the
/// accumulated orthogonal transformation on exit; d receives the
/// diagonal and e[1..] the subdiagonal, e[0] = 0.
fn tred2(v: &mut [f64], d: &mut [f64], e: &mut [f64], n: usize) {
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
    }

    for i in (1..n).rev() {
        let mut scale = 0.0;
        let mut h = 0.0;
        for item in d.iter().take(i) {
            scale += item.abs();
        }
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
                v[j * n + i] = 0.0;
            }
        } else {
            for item in d.iter_mut().take(i) {
                *item /= scale;
                h += *item * *item;
            }
            let f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            for item in e.iter_mut().take(i) {
                *item = 0.0;
            }

            for j in 0..i {
                let f = d[j];
                v[j * n + i] = f;
                let mut g = e[j] + v[j * n + j] * f;
                for k in (j + 1)..i {
                    g += v[k * n + j] * d[k];
                    e[k] += v[k * n + j] * f;
                }
                e[j] = g;
            }
            let mut f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                let f = d[j];
                let g = e[j];
                for k in j..i {
                    v[k * n + j] -= f * e[k] + g * d[k];
                }
                d[j] = v[(i - 1) * n + j];
                v[i * n + j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n.saturating_sub(1) {
        v[(n - 1) * n + i] = v[i * n + i];
        v[i * n + i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k * n + i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k * n + i + 1] * v[k * n + j];
                }
                for k in 0..=i {
                    v[k * n + j] -= g * d[k];
                }
            }
        }
        for k in 0..=i {
            v[k * n + i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[(n - 1) * n + j];
        v[(n - 1) * n + j] = 0.0;
    }
    v[(n - 1) * n + n - 1] = 1.0;
    e[0] = 0.0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statemap::{receiver_amplitudes, receiver_density};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn chain_decomposition(spec: &ChainSpec) -> SpectralDecomposition {
        decompose(&spec.one_excitation_hamiltonian()).unwrap()
    }

    fn homogeneous_closed_form(n: usize) -> Vec<f64> {
        let mut values: Vec<f64> = (1..=n)
            .map(|k| (k as f64 * PI / (n as f64 + 1.0)).cos())
            .collect();
        values.sort_by(f64::total_cmp);
        values
    }

    #[test]
    fn small_spectra_match_closed_forms() {
        let sd = chain_decomposition(&ChainSpec::homogeneous(2).unwrap());
        assert_abs_diff_eq!(sd.eigenvalues()[0], -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.eigenvalues()[1], 0.5, epsilon = 1e-12);

        let sd = chain_decomposition(&ChainSpec::homogeneous(3).unwrap());
        assert_abs_diff_eq!(sd.eigenvalues()[0], -FRAC_1_SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.eigenvalues()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sd.eigenvalues()[2], FRAC_1_SQRT_2, epsilon = 1e-12);

        let sd = chain_decomposition(&ChainSpec::ekert(4).unwrap());
        for (got, want) in sd.eigenvalues().iter().zip([-1.5, -0.5, 0.5, 1.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn homogeneous_spectrum_closed_form_up_to_200() {
        for n in 2..=200 {
            let sd = chain_decomposition(&ChainSpec::homogeneous(n).unwrap());
            let expected = homogeneous_closed_form(n);
            for (got, want) in sd.eigenvalues().iter().zip(expected) {
                assert!(
                    (got - want).abs() <= 1e-10,
                    "n = {n}: eigenvalue {got} vs closed form {want}"
                );
            }
        }
    }

    fn orthonormality_defect(sd: &SpectralDecomposition) -> f64 {
        let n = sd.n();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                let mut dot = 0.0;
                for node in 1..=n {
                    dot += sd.component(node, a) * sd.component(node, b);
                }
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    fn reconstruction_defect(sd: &SpectralDecomposition, h: &TridiagonalMatrix) -> f64 {
        let n = sd.n();
        let mut worst: f64 = 0.0;
        for row in 1..=n {
            for col in 1..=n {
                let mut acc = 0.0;
                for m in 0..n {
                    acc += sd.component(row, m) * sd.eigenvalues()[m] * sd.component(col, m);
                }
                let target = if row == col {
                    h.diagonal()[row - 1]
                } else if row + 1 == col {
                    h.off_diagonal()[row - 1]
                } else if col + 1 == row {
                    h.off_diagonal()[col - 1]
                } else {
                    0.0
                };
                worst = worst.max((acc - target).abs());
            }
        }
        worst
    }

    #[test]
    fn eigenbasis_is_orthonormal_and_reconstructs() {
        for spec in [
            ChainSpec::ekert(12).unwrap(),
            ChainSpec::alternating(9, 0.37).unwrap(),
            ChainSpec::custom(vec![0.9, 1.7, 0.4, 1.1, 0.6]).unwrap(),
            ChainSpec::homogeneous(120).unwrap(),
        ] {
            let h = spec.one_excitation_hamiltonian();
            let sd = decompose(&h).unwrap();
            assert!(orthonormality_defect(&sd) <= 1e-10);
            assert!(reconstruction_defect(&sd, &h) <= 1e-10);
        }
    }

    #[test]
    fn decomposition_is_deterministic_with_positive_pivots() {
        let h = ChainSpec::alternating(11, 1.6)
            .unwrap()
            .one_excitation_hamiltonian();
        let first = decompose(&h).unwrap();
        let second = decompose(&h).unwrap();
        assert_eq!(first, second);
        for mode in 0..first.n() {
            let pivot = (1..=first.n())
                .map(|node| first.component(node, mode))
                .find(|c| c.abs() > 1e-8)
                .unwrap();
            assert!(pivot > 0.0);
        }
    }

    #[test]
    fn two_node_amplitude_closed_form() {
        let sd = chain_decomposition(&ChainSpec::homogeneous(2).unwrap());
        for t in [0.3, 1.0, PI, 4.7] {
            let amps = transition_amplitudes(&sd, 1, t).unwrap();
            let expected = Complex64::new(0.0, -(t / 2.0).sin());
            assert_abs_diff_eq!(amps[1].value.re, expected.re, epsilon = 1e-12);
            assert_abs_diff_eq!(amps[1].value.im, expected.im, epsilon = 1e-12);
            assert_abs_diff_eq!(amps[0].value.re, (t / 2.0).cos(), epsilon = 1e-12);
        }
        let amps = transition_amplitudes(&sd, 1, PI).unwrap();
        assert_abs_diff_eq!(amps[1].r, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_time_is_the_identity_column() {
        let sd = chain_decomposition(&ChainSpec::alternating(7, 0.8).unwrap());
        let amps = transition_amplitudes(&sd, 1, 0.0).unwrap();
        assert_abs_diff_eq!(amps[0].value.re, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(amps[0].value.im, 0.0, epsilon = 1e-12);
        for a in &amps[1..] {
            assert!(a.r <= 1e-12);
        }
    }

    #[test]
    fn ekert_chain_transfers_perfectly_at_pi() {
        let sd = chain_decomposition(&ChainSpec::ekert(5).unwrap());
        let amps = transition_amplitudes(&sd, 1, PI).unwrap();
        assert!((amps[4].r - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn columns_stay_normalized() {
        for (spec, j, t) in [
            (ChainSpec::homogeneous(25).unwrap(), 1, 17.3),
            (ChainSpec::ekert(14).unwrap(), 2, 2.9),
            (ChainSpec::alternating(10, 0.45).unwrap(), 5, 40.0),
        ] {
            let sd = chain_decomposition(&spec);
            let amps = transition_amplitudes(&sd, j, t).unwrap();
            let total: f64 = amps.iter().map(|a| a.r * a.r).sum();
            assert!((total - 1.0).abs() <= 1e-10);
        }
    }

    #[test]
    fn mirror_symmetric_chains_have_mirror_amplitudes() {
        for spec in [
            ChainSpec::homogeneous(9).unwrap(),
            ChainSpec::ekert(8).unwrap(),
            ChainSpec::alternating(6, 0.3).unwrap(),
        ] {
            assert!(spec.is_symmetric());
            let n = spec.n();
            let sd = chain_decomposition(&spec);
            for (j, t) in [(1usize, 3.7), (2, 11.0)] {
                let direct = transition_amplitudes(&sd, j, t).unwrap();
                let reflected = transition_amplitudes(&sd, n + 1 - j, t).unwrap();
                for k in 1..=n {
                    let a = direct[k - 1].r;
                    let b = reflected[n - k].r;
                    assert!((a - b).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn source_index_is_validated() {
        let sd = chain_decomposition(&ChainSpec::homogeneous(4).unwrap());
        assert!(matches!(
            transition_amplitudes(&sd, 0, 1.0),
            Err(Error::IndexOutOfRange { index: 0, n: 4 })
        ));
        assert!(matches!(
            transition_amplitudes(&sd, 5, 1.0),
            Err(Error::IndexOutOfRange { index: 5, n: 4 })
        ));
    }

    #[test]
    fn polar_form_roundtrips() {
        let a = TransitionAmplitude::new(3, 1, Complex64::new(-0.3, -0.4));
        assert_abs_diff_eq!(a.r, 0.5, epsilon = 1e-15);
        assert!((0.0..1.0).contains(&a.chi));
        let rebuilt = Complex64::from_polar(a.r, std::f64::consts::TAU * a.chi);
        assert_abs_diff_eq!(rebuilt.re, -0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(rebuilt.im, -0.4, epsilon = 1e-12);

        let tiny = TransitionAmplitude::new(1, 1, Complex64::new(1e-15, -1e-15));
        assert_eq!(tiny.chi, 0.0);
    }

    #[test]
    fn transition_matches_full_column() {
        let sd = chain_decomposition(&ChainSpec::ekert(9).unwrap());
        let channel = sd.transition(9, 1).unwrap();
        for t in [0.0, 0.9, 2.4, PI] {
            let from_column = transition_amplitudes(&sd, 1, t).unwrap()[8];
            let direct = channel.amplitude(t);
            assert_abs_diff_eq!(direct.value.re, from_column.value.re, epsilon = 1e-13);
            assert_abs_diff_eq!(direct.value.im, from_column.value.im, epsilon = 1e-13);
        }
    }

    #[test]
    fn ode_oracle_matches_closed_form_and_spectral_path() {
        let two = ChainSpec::homogeneous(2).unwrap();
        let amps = ode_oracle_amplitudes(&two.one_excitation_hamiltonian(), 1, PI, 1e-3).unwrap();
        assert!((amps[1].value - Complex64::new(0.0, -1.0)).norm() < 1e-8);

        let six = ChainSpec::homogeneous(6).unwrap();
        let h = six.one_excitation_hamiltonian();
        let sd = decompose(&h).unwrap();
        let spectral = transition_amplitudes(&sd, 1, 7.884).unwrap();
        let integrated = ode_oracle_amplitudes(&h, 1, 7.884, 1e-3).unwrap();
        for (a, b) in spectral.iter().zip(&integrated) {
            assert!((a.value - b.value).norm() < 1e-8);
        }
    }

    #[test]
    fn ode_oracle_at_zero_time_is_exact() {
        let h = ChainSpec::ekert(5).unwrap().one_excitation_hamiltonian();
        let amps = ode_oracle_amplitudes(&h, 2, 0.0, 1e-3).unwrap();
        assert_eq!(amps[1].value, Complex64::new(1.0, 0.0));
        for (i, a) in amps.iter().enumerate() {
            if i != 1 {
                assert_eq!(a.value, Complex64::new(0.0, 0.0));
            }
        }
    }

    #[test]
    fn ode_oracle_validates_inputs() {
        let h = ChainSpec::homogeneous(4).unwrap().one_excitation_hamiltonian();
        assert!(matches!(
            ode_oracle_amplitudes(&h, 1, 1.0, 0.0),
            Err(Error::InvalidParameter(_))
        ));
        assert!(matches!(
            ode_oracle_amplitudes(&h, 9, 1.0, 1e-3),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn dense_eigensolver_handles_a_known_matrix() {
        // [[2,1,0],[1,2,1],[0,1,2]]: eigenvalues 2 - sqrt(2), 2, 2 + sqrt(2)
        let m = vec![2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0];
        let (values, vectors) = dense_symmetric_eigen(m.clone(), 3).unwrap();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        let expected = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
        for (got, want) in sorted.iter().zip(expected) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        // reconstruction through the unsorted eigenpairs
        for row in 0..3 {
            for col in 0..3 {
                let mut acc = 0.0;
                for mode in 0..3 {
                    acc += vectors[row * 3 + mode] * values[mode] * vectors[col * 3 + mode];
                }
                assert_abs_diff_eq!(acc, m[row * 3 + col], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn full_oracle_ground_state_is_stationary() {
        let spec = ChainSpec::homogeneous(2).unwrap();
        let sender = SenderState::new(1.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        for t in [0.0, 1.3, 20.0] {
            let rho = full_hilbert_oracle(&spec, &sender, t).unwrap();
            assert!((rho.entry(0, 0) - Complex64::new(1.0, 0.0)).norm() <= 1e-12);
            assert!(rho.entry(1, 1).norm() <= 1e-12);
            assert!(rho.entry(0, 1).norm() <= 1e-12);
        }
    }

    #[test]
    fn full_oracle_agrees_with_single_excitation_route() {
        let cases = [
            (
                ChainSpec::homogeneous(4).unwrap(),
                SenderState::new(0.0, Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
                    .unwrap(),
                2.0,
            ),
            (
                ChainSpec::homogeneous(6).unwrap(),
                SenderState::new(
                    FRAC_1_SQRT_2,
                    Complex64::new(0.5, 0.0),
                    Complex64::new(0.0, 0.5),
                )
                .unwrap(),
                7.884,
            ),
        ];
        for (spec, sender, t) in cases {
            let sd = chain_decomposition(&spec);
            let (f0, fn_) = receiver_amplitudes(&sd, &sender, t);
            let reduced = receiver_density(f0, fn_).unwrap();
            let full = full_hilbert_oracle(&spec, &sender, t).unwrap();
            assert!(full.max_abs_diff(&reduced) <= 1e-9);
        }
    }

    #[test]
    fn full_oracle_refuses_oversized_chains() {
        let spec = ChainSpec::homogeneous(11).unwrap();
        let sender = SenderState::new(1.0, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            .unwrap();
        assert!(matches!(
            full_hilbert_oracle(&spec, &sender, 1.0),
            Err(Error::OracleScaleExceeded { n: 11, max: 10 })
        ));
    }

    #[test]
    fn amplitude_csv_layout() {
        let sd = chain_decomposition(&ChainSpec::homogeneous(2).unwrap());
        let blocks = vec![(0.0, transition_amplitudes(&sd, 1, 0.0).unwrap())];
        let mut buf = Vec::new();
        write_amplitude_csv(&mut buf, &blocks).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("k,t,re,im,r,chi"));
        let first = lines.next().unwrap();
        assert!(first.starts_with("1,0.0000000000000000e0,"));
        assert_eq!(lines.count(), 1);
    }
}
