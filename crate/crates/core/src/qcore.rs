//! Exact state algebra for the qubit, qutrit and joint spaces used by the protocol.
//!
//! Everything here is small and dense: the largest object is the 12-dimensional
//! joint space `qutrit ⊗ (qubit_a ⊗ qubit_b)` used to derive the encoding by
//! projection. States carry the integer kets their amplitudes refer to, so a
//! qubit decoded from the second qutrit subspace really lives on kets `|1⟩, |2⟩`
//! and can be re-projected against either subspace without extra bookkeeping.
//!
//! Phases are restricted to quarter turns, which lets every `e^{iφ}` be formed
//! exactly as one of `1, i, -1, -i`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};

/// Tolerance for algebraic identities on these small objects.
pub const TOL: f64 = 1e-12;

/// Below this post-projection weight the encoding projection is reported as degenerate.
pub const ENCODE_DEGENERATE_NORM: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceTag {
    QubitA,
    QubitB,
    Qutrit,
    JointAb,
    JointQutritAb,
}

impl SpaceTag {
    pub const fn dim(self) -> usize {
        match self {
            SpaceTag::QubitA | SpaceTag::QubitB => 2,
            SpaceTag::Qutrit => 3,
            SpaceTag::JointAb => 4,
            SpaceTag::JointQutritAb => 12,
        }
    }
}

/// Normalized complex amplitudes over a labelled ket basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVec {
    amplitudes: Vec<Complex64>,
    labels: Vec<usize>,
    tag: SpaceTag,
}

impl StateVec {
    /// Builds a state and normalizes it. Fails if the dimension does not match the
    /// tag, labels repeat, or the vector is (numerically) zero.
    pub fn new(tag: SpaceTag, labels: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        let state = Self::raw(tag, labels, amplitudes)?;
        state.normalize(TOL)
    }

    fn raw(tag: SpaceTag, labels: Vec<usize>, amplitudes: Vec<Complex64>) -> Result<Self> {
        if labels.len() != tag.dim() || amplitudes.len() != tag.dim() {
            return Err(QkdError::Contract(format!(
                "{tag:?} needs {} amplitudes and labels, got {} and {}",
                tag.dim(),
                amplitudes.len(),
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(QkdError::Contract(format!("repeated ket label {l}")));
            }
        }
        Ok(Self {
            amplitudes,
            labels,
            tag,
        })
    }

    fn normalize(mut self, threshold: f64) -> Result<Self> {
        let weight = self.norm_sqr();
        if weight < threshold {
            return Err(QkdError::DegenerateProjection { weight, threshold });
        }
        let scale = weight.sqrt().recip();
        self.amplitudes.iter_mut().for_each(|a| *a *= scale);
        Ok(self)
    }

    /// Qutrit on kets `|0⟩, |1⟩, |2⟩`.
    pub fn qutrit(amplitudes: [Complex64; 3]) -> Result<Self> {
        Self::new(SpaceTag::Qutrit, vec![0, 1, 2], amplitudes.to_vec())
    }

    /// Computational basis ket `|label⟩` of a space with the given labels.
    pub fn basis_ket(tag: SpaceTag, labels: Vec<usize>, label: usize) -> Result<Self> {
        let amplitudes = labels
            .iter()
            .map(|&l| if l == label { ONE } else { ZERO })
            .collect();
        Self::new(tag, labels, amplitudes)
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn tag(&self) -> SpaceTag {
        self.tag
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude on ket `|label⟩`, zero when the label is outside this state's support.
    pub fn amplitude_of(&self, label: usize) -> Complex64 {
        self.labels
            .iter()
            .position(|&l| l == label)
            .map_or(ZERO, |i| self.amplitudes[i])
    }

    /// `⟨self|other⟩`, matching amplitudes by ket label.
    pub fn inner(&self, other: &StateVec) -> Complex64 {
        self.labels
            .iter()
            .zip(&self.amplitudes)
            .map(|(&l, a)| a.conj() * other.amplitude_of(l))
            .sum()
    }

    /// Equality up to a global phase: `|⟨self|other⟩| = 1` within `tol`.
    pub fn equals_up_to_phase(&self, other: &StateVec, tol: f64) -> bool {
        (self.inner(other).norm() - 1.0).abs() <= tol
    }

    /// Re-expresses a state supported on kets `0..3` as a qutrit.
    pub fn to_qutrit(&self) -> Result<StateVec> {
        if let Some(&bad) = self.labels.iter().find(|&&l| l > 2) {
            return Err(QkdError::Contract(format!(
                "ket |{bad}⟩ has no qutrit counterpart"
            )));
        }
        Self::raw(
            SpaceTag::Qutrit,
            vec![0, 1, 2],
            (0..3).map(|l| self.amplitude_of(l)).collect(),
        )
    }
}

impl fmt::Display for StateVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .labels
            .iter()
            .zip(&self.amplitudes)
            .map(|(l, a)| format!("({:.6}{:+.6}i)|{l}⟩", a.re, a.im))
            .collect();
        write!(f, "{}", terms.join(" + "))
    }
}

/// An element of `S = {0, π/2, π, 3π/2}`, stored as a number of quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Phase(u8);

impl Phase {
    pub const ZERO: Phase = Phase(0);
    pub const HALF_PI: Phase = Phase(1);
    pub const PI: Phase = Phase(2);
    pub const THREE_HALVES_PI: Phase = Phase(3);
    pub const ALL: [Phase; 4] = [Phase(0), Phase(1), Phase(2), Phase(3)];

    pub fn from_quarter_turns(k: u8) -> Result<Self> {
        if k < 4 {
            Ok(Phase(k))
        } else {
            Err(QkdError::InvalidPhase(f64::from(k) * FRAC_PI_2))
        }
    }

    /// Accepts any angle within 1e-9 rad of a member of `S` (modulo 2π).
    pub fn from_radians(angle: f64) -> Result<Self> {
        if !angle.is_finite() {
            return Err(QkdError::InvalidPhase(angle));
        }
        let turns = angle.rem_euclid(TAU) / FRAC_PI_2;
        let k = turns.round();
        if (turns - k).abs() * FRAC_PI_2 > 1e-9 {
            return Err(QkdError::InvalidPhase(angle));
        }
        Ok(Phase((k as u8) % 4))
    }

    pub fn quarter_turns(self) -> u8 {
        self.0
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0) * FRAC_PI_2
    }

    /// `e^{iφ}`, exact.
    pub fn unit(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    pub fn plus(self, other: Phase) -> Phase {
        Phase((self.0 + other.0) % 4)
    }
}

impl TryFrom<u8> for Phase {
    type Error = QkdError;
    fn try_from(k: u8) -> Result<Self> {
        Phase::from_quarter_turns(k)
    }
}

impl From<Phase> for u8 {
    fn from(p: Phase) -> u8 {
        p.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PhasePair {
    pub phi_a: Phase,
    pub phi_b: Phase,
}

impl PhasePair {
    pub fn new(phi_a: f64, phi_b: f64) -> Result<Self> {
        Ok(Self {
            phi_a: Phase::from_radians(phi_a)?,
            phi_b: Phase::from_radians(phi_b)?,
        })
    }

    pub fn from_phases(phi_a: Phase, phi_b: Phase) -> Self {
        Self { phi_a, phi_b }
    }

    /// The 16 members of `S × S`.
    pub fn all() -> impl Iterator<Item = PhasePair> {
        Phase::ALL.into_iter().flat_map(|a| {
            Phase::ALL
                .into_iter()
                .map(move |b| PhasePair::from_phases(a, b))
        })
    }

    /// Flat index in `0..16`, `phi_a` major.
    pub fn index(self) -> usize {
        usize::from(self.phi_a.0) * 4 + usize::from(self.phi_b.0)
    }
}

/// Equatorial measurement basis. `B0` holds the phases `{0, π}`, `B1` holds `{π/2, 3π/2}`.
/// Bit `b` corresponds to the phase `offset + bπ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeasBasis {
    B0,
    B1,
}

impl MeasBasis {
    pub const ALL: [MeasBasis; 2] = [MeasBasis::B0, MeasBasis::B1];

    pub fn from_index(i: u8) -> Self {
        if i & 1 == 0 {
            MeasBasis::B0
        } else {
            MeasBasis::B1
        }
    }

    pub fn offset(self) -> Phase {
        match self {
            MeasBasis::B0 => Phase::ZERO,
            MeasBasis::B1 => Phase::HALF_PI,
        }
    }

    pub fn phase_for_bit(self, bit: u8) -> Phase {
        self.offset().plus(Phase(2 * (bit & 1)))
    }

    /// Inverse of [`phase_for_bit`](Self::phase_for_bit); `None` if the phase is not in this basis.
    pub fn bit_for_phase(self, phase: Phase) -> Option<u8> {
        MeasBasis::basis_of(phase)
            .eq(&self)
            .then(|| u8::from(phase.0 >= 2))
    }

    pub fn basis_of(phase: Phase) -> MeasBasis {
        MeasBasis::from_index(phase.0)
    }
}

/// One of the two overlapping 2-dimensional qutrit subspaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Subspace {
    /// span{|0⟩, |1⟩}, carries qubit a.
    First,
    /// span{|1⟩, |2⟩}, carries qubit b.
    Second,
}

impl Subspace {
    pub const ALL: [Subspace; 2] = [Subspace::First, Subspace::Second];

    pub fn from_index(i: u8) -> Self {
        if i & 1 == 0 {
            Subspace::First
        } else {
            Subspace::Second
        }
    }

    /// 1 or 2.
    pub fn number(self) -> u8 {
        match self {
            Subspace::First => 1,
            Subspace::Second => 2,
        }
    }

    pub fn kets(self) -> (usize, usize) {
        match self {
            Subspace::First => (0, 1),
            Subspace::Second => (1, 2),
        }
    }

    pub fn tag(self) -> SpaceTag {
        match self {
            Subspace::First => SpaceTag::QubitA,
            Subspace::Second => SpaceTag::QubitB,
        }
    }

    pub fn other(self) -> Subspace {
        match self {
            Subspace::First => Subspace::Second,
            Subspace::Second => Subspace::First,
        }
    }

    pub fn projector(self) -> Projector {
        let (lo, hi) = self.kets();
        Projector::diagonal(vec![0, 1, 2], &[lo, hi])
    }
}

/// Dense square matrix over a labelled basis, used for the encoding and decoding projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Projector {
    matrix: Vec<Complex64>,
    labels: Vec<usize>,
}

impl Projector {
    /// `Σ_k |k⟩⟨k|` over the given kets.
    pub fn diagonal(labels: Vec<usize>, kets: &[usize]) -> Self {
        let n = labels.len();
        let mut matrix = vec![ZERO; n * n];
        for (i, l) in labels.iter().enumerate() {
            if kets.contains(l) {
                matrix[i * n + i] = ONE;
            }
        }
        Self { matrix, labels }
    }

    /// `Π = Σ_{i=0}^{2} |i⟩⟨i| ⊗ |i⟩⟨i|` on the 12-dimensional joint space,
    /// with joint ket `4i + j` for qutrit ket `i` and two-qubit label `j`.
    pub fn encoding() -> Self {
        let labels: Vec<usize> = (0..12).collect();
        let kets: Vec<usize> = (0..3).map(|i| 4 * i + i).collect();
        Self::diagonal(labels, &kets)
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.matrix[row * self.dim() + col]
    }

    /// `P|ψ⟩` without renormalization. The state must share this projector's labels.
    fn apply_raw(&self, state: &StateVec) -> Result<Vec<Complex64>> {
        if state.labels != self.labels {
            return Err(QkdError::Contract(format!(
                "projector on kets {:?} applied to state on kets {:?}",
                self.labels, state.labels
            )));
        }
        let n = self.dim();
        Ok((0..n)
            .map(|r| {
                (0..n)
                    .map(|c| self.matrix[r * n + c] * state.amplitudes[c])
                    .sum()
            })
            .collect())
    }

    /// `⟨ψ|P|ψ⟩`.
    pub fn expectation(&self, state: &StateVec) -> Result<f64> {
        let projected = self.apply_raw(state)?;
        Ok(state
            .amplitudes
            .iter()
            .zip(&projected)
            .map(|(a, p)| a.conj() * p)
            .sum::<Complex64>()
            .re)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|r| (0..n).all(|c| (self.entry(r, c) - self.entry(c, r).conj()).norm() <= tol))
    }

    pub fn is_idempotent(&self, tol: f64) -> bool {
        let n = self.dim();
        (0..n).all(|r| {
            (0..n).all(|c| {
                let sq: Complex64 = (0..n).map(|k| self.entry(r, k) * self.entry(k, c)).sum();
                (sq - self.entry(r, c)).norm() <= tol
            })
        })
    }
}

/// `(|lo⟩ + e^{iφ}|hi⟩)/√2` on the given pair of kets.
pub fn equatorial_state(tag: SpaceTag, kets: (usize, usize), phase: Phase) -> StateVec {
    StateVec::new(tag, vec![kets.0, kets.1], vec![ONE, phase.unit()])
        .expect("equatorial states are never degenerate")
}

/// `(|0⟩ + e^{iφa}|1⟩ + e^{i(φa+φb)}|2⟩)/√3`.
pub fn encode_qutrit(phases: PhasePair) -> StateVec {
    let a = phases.phi_a;
    let ab = a.plus(phases.phi_b);
    StateVec::qutrit([ONE, a.unit(), ab.unit()]).expect("encoded qutrits are never degenerate")
}

/// Derives the encoded qutrit by projection instead of by formula: prepares
/// `|φ⟩ ⊗ |ψ_a⟩ ⊗ |ψ_b⟩` with `|φ⟩ = (|0⟩+|1⟩+|2⟩)/√3`, relabels the two-qubit kets
/// `|i⟩_a|j⟩_b → ||3j−i|⟩`, projects with [`Projector::encoding`], applies the shift
/// `|i⟩⊗|j⟩ → |i⟩⊗|j−i mod 4⟩` and reads off the qutrit factor.
pub fn encode_via_projection(phases: PhasePair) -> Result<StateVec> {
    let psi_a = equatorial_state(SpaceTag::QubitA, (0, 1), phases.phi_a);
    let psi_b = equatorial_state(SpaceTag::QubitB, (0, 1), phases.phi_b);

    let mut two_qubit = vec![ZERO; 4];
    for i in 0..2 {
        for j in 0..2 {
            let label = (3 * j as isize - i as isize).unsigned_abs();
            two_qubit[label] = psi_a.amplitude_of(i) * psi_b.amplitude_of(j);
        }
    }
    let psi = StateVec::new(SpaceTag::JointAb, (0..4).collect(), two_qubit)?;

    let phi = StateVec::qutrit([ONE, ONE, ONE])?;
    let joint_amps = (0..3)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .map(|(i, j)| phi.amplitude_of(i) * psi.amplitude_of(j))
        .collect();
    let joint = StateVec::raw(SpaceTag::JointQutritAb, (0..12).collect(), joint_amps)?;

    let projected = Projector::encoding().apply_raw(&joint)?;
    let weight: f64 = projected.iter().map(|a| a.norm_sqr()).sum();
    if weight < ENCODE_DEGENERATE_NORM {
        return Err(QkdError::DegenerateProjection {
            weight,
            threshold: ENCODE_DEGENERATE_NORM,
        });
    }

    let mut shifted = [ZERO; 12];
    for i in 0..3 {
        for j in 0..4 {
            shifted[4 * i + (j + 4 - i) % 4] = projected[4 * i + j];
        }
    }
    let leftover: f64 = (0..3)
        .flat_map(|i| (1..4).map(move |j| 4 * i + j))
        .map(|k| shifted[k].norm_sqr())
        .sum();
    if leftover > TOL {
        return Err(QkdError::Contract(format!(
            "shifted state does not factor onto |0⟩ of the qubit register (residual {leftover:e})"
        )));
    }
    StateVec::qutrit([shifted[0], shifted[4], shifted[8]])
}

/// Projects onto a qutrit subspace. Returns the normalized qubit on that subspace's kets and
/// the success probability `⟨Φ|Πᵢ|Φ⟩`. Bare qubits on kets within `{0,1,2}` are accepted and
/// embedded into the qutrit first.
pub fn decode_qubit(state: &StateVec, subspace: Subspace) -> Result<(StateVec, f64)> {
    let qutrit = if state.tag == SpaceTag::Qutrit {
        state.clone()
    } else {
        state.to_qutrit()?
    };
    let projector = subspace.projector();
    let prob = projector.expectation(&qutrit)?;
    if prob < TOL {
        return Err(QkdError::DegenerateProjection {
            weight: prob,
            threshold: TOL,
        });
    }
    let (lo, hi) = subspace.kets();
    let qubit = StateVec::new(
        subspace.tag(),
        vec![lo, hi],
        vec![qutrit.amplitude_of(lo), qutrit.amplitude_of(hi)],
    )?;
    Ok((qubit, prob))
}

/// Probability of reading `bit` when measuring a two-ket state in `basis`.
pub fn born_probability(state: &StateVec, basis: MeasBasis, bit: u8) -> f64 {
    let labels = state.labels();
    let eigen = equatorial_state(
        state.tag(),
        (labels[0], labels[1]),
        basis.phase_for_bit(bit),
    );
    eigen.inner(state).norm_sqr()
}

/// Born-rule measurement of a qubit in an equatorial basis. `u` is a uniform sample in `[0,1)`;
/// bit 0 is returned iff `u < P(0)`. The post-measurement state is the basis eigenstate.
pub fn measure_equatorial(state: &StateVec, basis: MeasBasis, u: f64) -> (u8, StateVec) {
    debug_assert_eq!(state.dim(), 2, "equatorial measurement needs a qubit");
    let bit = u8::from(u >= born_probability(state, basis, 0));
    let labels = state.labels();
    let post = equatorial_state(
        state.tag(),
        (labels[0], labels[1]),
        basis.phase_for_bit(bit),
    );
    (bit, post)
}

/// `h(x) = −x log₂x − (1−x) log₂(1−x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QkdError::Domain {
            what: "binary entropy argument",
            value: x,
            domain: "[0, 1]",
        });
    }
    if x == 0.0 || x == 1.0 {
        return Ok(0.0);
    }
    Ok(-x * x.log2() - (1.0 - x) * (1.0 - x).log2())
}

/// Angle in radians of a relative phase `e^{iθ}`, folded into `[0, 2π)`.
pub fn relative_phase(lo: Complex64, hi: Complex64) -> f64 {
    (hi / lo).arg().rem_euclid(TAU) % TAU
}

/// Relative phase of an equatorial qubit as a member of `S`; fails for states off that grid.
pub fn equatorial_phase(state: &StateVec) -> Result<Phase> {
    let a = state.amplitudes();
    if state.dim() != 2 || (a[0].norm() - a[1].norm()).abs() > 1e-9 {
        return Err(QkdError::Contract(format!(
            "{state} is not an equatorial qubit"
        )));
    }
    Phase::from_radians(relative_phase(a[0], a[1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn qutrit(a: [Complex64; 3]) -> StateVec {
        StateVec::qutrit(a).unwrap()
    }

    #[test]
    fn encode_examples() {
        let s = 3f64.sqrt().recip();
        let cases = [
            ((0.0, 0.0), [c(1., 0.), c(1., 0.), c(1., 0.)]),
            ((PI, FRAC_PI_2), [c(1., 0.), c(-1., 0.), c(0., -1.)]),
            ((FRAC_PI_2, FRAC_PI_2), [c(1., 0.), c(0., 1.), c(-1., 0.)]),
        ];
        for ((a, b), expected) in cases {
            let got = encode_qutrit(PhasePair::new(a, b).unwrap());
            for (g, e) in got.amplitudes().iter().zip(expected) {
                assert!((g - e * s).norm() < TOL, "{got} at ({a}, {b})");
            }
        }
    }

    #[test]
    fn projection_examples() {
        let got = encode_via_projection(PhasePair::new(0.0, 0.0).unwrap()).unwrap();
        assert!(got.equals_up_to_phase(&qutrit([ONE, ONE, ONE]), TOL));
        let got = encode_via_projection(PhasePair::new(PI, 0.0).unwrap()).unwrap();
        assert!(got.equals_up_to_phase(&qutrit([ONE, -ONE, -ONE]), TOL));
    }

    #[test]
    fn projection_matches_formula_for_all_pairs() {
        for pair in PhasePair::all() {
            let direct = encode_qutrit(pair);
            let oracle = encode_via_projection(pair).unwrap();
            assert!((oracle.norm_sqr() - 1.0).abs() < TOL);
            assert!(
                direct.equals_up_to_phase(&oracle, TOL),
                "{pair:?}: {direct} vs {oracle}"
            );
        }
    }

    #[test]
    fn decode_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (q, p) = decode_qubit(
            &encode_qutrit(PhasePair::new(0.0, 0.0).unwrap()),
            Subspace::First,
        )
        .unwrap();
        assert!((p - 2.0 / 3.0).abs() < TOL);
        assert_eq!(q.labels(), &[0, 1]);
        let expected =
            StateVec::new(SpaceTag::QubitA, vec![0, 1], vec![c(h, 0.), c(h, 0.)]).unwrap();
        assert!(q.equals_up_to_phase(&expected, TOL));

        let (q, p) = decode_qubit(
            &encode_qutrit(PhasePair::new(0.0, PI).unwrap()),
            Subspace::Second,
        )
        .unwrap();
        assert!((p - 2.0 / 3.0).abs() < TOL);
        let expected = StateVec::new(SpaceTag::QubitB, vec![1, 2], vec![ONE, -ONE]).unwrap();
        assert!(q.equals_up_to_phase(&expected, TOL));

        let (q, p) = decode_qubit(&qutrit([ZERO, ONE, ZERO]), Subspace::First).unwrap();
        assert!((p - 1.0).abs() < TOL);
        assert!((q.amplitude_of(1).norm() - 1.0).abs() < TOL);
    }

    #[test]
    fn decode_degenerate_is_an_error() {
        let err = decode_qubit(&qutrit([ZERO, ZERO, ONE]), Subspace::First).unwrap_err();
        assert!(matches!(err, QkdError::DegenerateProjection { .. }));
    }

    #[test]
    fn decode_bare_qubit_across_subspaces() {
        let q = equatorial_state(SpaceTag::QubitA, (0, 1), Phase::PI);
        let (post, p) = decode_qubit(&q, Subspace::Second).unwrap();
        assert!((p - 0.5).abs() < TOL);
        assert!((post.amplitude_of(1).norm() - 1.0).abs() < TOL);
        // |1⟩ is unbiased in every equatorial basis of subspace 2.
        for basis in MeasBasis::ALL {
            assert!((born_probability(&post, basis, 0) - 0.5).abs() < TOL);
        }
    }

    #[test]
    fn projector_algebra() {
        let p1 = Subspace::First.projector();
        let p2 = Subspace::Second.projector();
        for p in [&p1, &p2, &Projector::encoding()] {
            assert!(p.is_hermitian(TOL));
            assert!(p.is_idempotent(TOL));
        }
        let one = Projector::diagonal(vec![0, 1, 2], &[1]);
        for r in 0..3 {
            for col in 0..3 {
                let sum = p1.entry(r, col) + p2.entry(r, col) - one.entry(r, col);
                let id = if r == col { ONE } else { ZERO };
                assert!((sum - id).norm() < TOL);
            }
        }
    }

    #[test]
    fn measurement_basis_members() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = StateVec::new(SpaceTag::QubitA, vec![0, 1], vec![c(h, 0.), c(h, 0.)]).unwrap();
        assert!((born_probability(&plus, MeasBasis::B0, 0) - 1.0).abs() < TOL);
        assert!((born_probability(&plus, MeasBasis::B1, 0) - 0.5).abs() < TOL);
        assert_eq!(measure_equatorial(&plus, MeasBasis::B0, 0.999_999).0, 0);

        let minus_sub2 = StateVec::new(SpaceTag::QubitB, vec![1, 2], vec![ONE, -ONE]).unwrap();
        assert!((born_probability(&minus_sub2, MeasBasis::B0, 1) - 1.0).abs() < TOL);
        let (bit, post) = measure_equatorial(&minus_sub2, MeasBasis::B0, 0.0);
        assert_eq!(bit, 1);
        assert_eq!(post.labels(), &[1, 2]);

        // Eigenstates of each basis sum to the subspace identity.
        for basis in MeasBasis::ALL {
            let e0 = equatorial_state(SpaceTag::QubitA, (0, 1), basis.phase_for_bit(0));
            let e1 = equatorial_state(SpaceTag::QubitA, (0, 1), basis.phase_for_bit(1));
            assert!(e0.inner(&e1).norm() < TOL);
            for r in 0..2 {
                for col in 0..2 {
                    let v = e0.amplitudes()[r] * e0.amplitudes()[col].conj()
                        + e1.amplitudes()[r] * e1.amplitudes()[col].conj();
                    let id = if r == col { ONE } else { ZERO };
                    assert!((v - id).norm() < TOL);
                }
            }
        }
    }

    #[test]
    fn bit_map_round_trips() {
        for basis in MeasBasis::ALL {
            for bit in 0..2 {
                let phase = basis.phase_for_bit(bit);
                assert_eq!(basis.bit_for_phase(phase), Some(bit));
                assert_eq!(MeasBasis::basis_of(phase), basis);
            }
        }
        assert_eq!(MeasBasis::B0.bit_for_phase(Phase::HALF_PI), None);
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // 2 - (3/4) log2 3
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-15);
        assert!(binary_entropy(-0.1).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn phase_membership() {
        assert_eq!(
            Phase::from_radians(3.0 * FRAC_PI_2).unwrap(),
            Phase::THREE_HALVES_PI
        );
        assert_eq!(
            Phase::from_radians(-FRAC_PI_2).unwrap(),
            Phase::THREE_HALVES_PI
        );
        assert!(Phase::from_radians(0.3).is_err());
        assert!(Phase::from_radians(f64::NAN).is_err());
        assert!(PhasePair::new(0.0, 1.0).is_err());
        assert!(Phase::from_quarter_turns(4).is_err());
    }

    #[test]
    fn bad_dimensions_are_rejected() {
        assert!(StateVec::new(SpaceTag::Qutrit, vec![0, 1], vec![ONE, ONE]).is_err());
        assert!(StateVec::new(SpaceTag::QubitA, vec![0, 0], vec![ONE, ONE]).is_err());
        assert!(StateVec::new(SpaceTag::QubitA, vec![0, 1], vec![ZERO, ZERO]).is_err());
    }

    proptest! {
        #[test]
        fn decode_round_trip_recovers_each_phase(a in 0u8..4, b in 0u8..4) {
            let pair = PhasePair::from_phases(Phase(a), Phase(b));
            let encoded = encode_qutrit(pair);
            let p1 = Subspace::First.projector().expectation(&encoded).unwrap();
            let p2 = Subspace::Second.projector().expectation(&encoded).unwrap();
            let middle = encoded.amplitude_of(1).norm_sqr();
            prop_assert!((p1 + p2 - middle - 1.0).abs() < TOL);

            let (q1, s1) = decode_qubit(&encoded, Subspace::First).unwrap();
            let (q2, s2) = decode_qubit(&encoded, Subspace::Second).unwrap();
            prop_assert!((s1 - 2.0 / 3.0).abs() < TOL && (s2 - 2.0 / 3.0).abs() < TOL);
            prop_assert!((q1.norm_sqr() - 1.0).abs() < TOL && (q2.norm_sqr() - 1.0).abs() < TOL);
            prop_assert!((relative_phase(q1.amplitudes()[0], q1.amplitudes()[1]) - pair.phi_a.radians()).abs() < 1e-12);
            prop_assert!((relative_phase(q2.amplitudes()[0], q2.amplitudes()[1]) - pair.phi_b.radians()).abs() < 1e-12);
        }

        #[test]
        fn measurement_probabilities_sum_to_one(re0 in -1.0f64..1.0, im0 in -1.0f64..1.0,
                                                 re1 in -1.0f64..1.0, im1 in -1.0f64..1.0,
                                                 basis in 0u8..2) {
            prop_assume!(re0.abs() + im0.abs() + re1.abs() + im1.abs() > 1e-3);
            let q = StateVec::new(SpaceTag::QubitA, vec![0, 1], vec![c(re0, im0), c(re1, im1)]).unwrap();
            let basis = MeasBasis::from_index(basis);
            let total = born_probability(&q, basis, 0) + born_probability(&q, basis, 1);
            prop_assert!((total - 1.0).abs() < TOL);
        }
    }
}
