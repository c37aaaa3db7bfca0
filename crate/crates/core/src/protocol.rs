//! Round logic for Alice and Bob, and the sifting rule.
//!
//! A qutrit round carries two key bits, one per subspace; Bob decodes one of them and
//! announces which subspace and basis he used. A BB84 round is a single equatorial qubit.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::adversary::EveLedger;
use crate::error::Result;
use crate::qcore::{
    decode_qubit, encode_qutrit, equatorial_state, measure_equatorial, MeasBasis, Phase, PhasePair,
    SpaceTag, StateVec, Subspace, TOL,
};
use crate::rates::Protocol;

/// What Alice picked for one round. Phases follow from bits and bases via
/// [`MeasBasis::phase_for_bit`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "protocol", rename_all = "snake_case")]
pub enum AliceChoice {
    Bb84 {
        bit: u8,
        basis: MeasBasis,
    },
    /// Index 0 is qubit a (subspace 1), index 1 is qubit b (subspace 2).
    Qutrit {
        bits: [u8; 2],
        bases: [MeasBasis; 2],
    },
}

impl AliceChoice {
    pub fn protocol(&self) -> Protocol {
        match self {
            AliceChoice::Bb84 { .. } => Protocol::Bb84,
            AliceChoice::Qutrit { .. } => Protocol::Qutrit,
        }
    }

    /// For BB84 the single phase sits in `phi_a` and `phi_b` is 0.
    pub fn phases(&self) -> PhasePair {
        match *self {
            AliceChoice::Bb84 { bit, basis } => {
                PhasePair::from_phases(basis.phase_for_bit(bit), Phase::ZERO)
            }
            AliceChoice::Qutrit { bits, bases } => PhasePair::from_phases(
                bases[0].phase_for_bit(bits[0]),
                bases[1].phase_for_bit(bits[1]),
            ),
        }
    }

    fn slot(subspace: Option<Subspace>) -> usize {
        match subspace {
            Some(Subspace::Second) => 1,
            _ => 0,
        }
    }

    /// Key bit carried by the given subspace (ignored for BB84).
    pub fn bit(&self, subspace: Option<Subspace>) -> u8 {
        match *self {
            AliceChoice::Bb84 { bit, .. } => bit,
            AliceChoice::Qutrit { bits, .. } => bits[Self::slot(subspace)],
        }
    }

    pub fn basis(&self, subspace: Option<Subspace>) -> MeasBasis {
        match *self {
            AliceChoice::Bb84 { basis, .. } => basis,
            AliceChoice::Qutrit { bases, .. } => bases[Self::slot(subspace)],
        }
    }

    /// The state Alice emits.
    pub fn state(&self) -> StateVec {
        let phases = self.phases();
        match self {
            AliceChoice::Bb84 { .. } => equatorial_state(SpaceTag::QubitA, (0, 1), phases.phi_a),
            AliceChoice::Qutrit { .. } => encode_qutrit(phases),
        }
    }
}

/// What arrives at Bob's decoder.
#[derive(Debug, Clone, PartialEq)]
pub enum Signal {
    Vacuum,
    State(StateVec),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobChoice {
    /// Present iff the round is a qutrit round.
    pub subspace: Option<Subspace>,
    pub basis: MeasBasis,
}

impl BobChoice {
    pub fn random<R: Rng + ?Sized>(protocol: Protocol, rng: &mut R) -> Self {
        let subspace = match protocol {
            Protocol::Bb84 => None,
            Protocol::Qutrit => Some(Subspace::from_index(rng.random::<u8>())),
        };
        BobChoice {
            subspace,
            basis: MeasBasis::from_index(rng.random::<u8>()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BobOutcome {
    pub choice: BobChoice,
    pub decoded: bool,
    pub bit: Option<u8>,
}

/// One complete round, before and after sifting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub alice: AliceChoice,
    pub photon_n: u32,
    pub eve: EveLedger,
    pub bob: BobChoice,
    pub detected: bool,
    /// The click came from a dark count alone.
    pub dark_only: bool,
    pub decoded: bool,
    pub outcome_bit: Option<u8>,
    pub sifted: bool,
    /// Defined only for sifted rounds.
    pub error: Option<bool>,
}

/// Uniformly random bits and bases; returns the choice and the emitted state.
pub fn alice_prepare<R: Rng + ?Sized>(protocol: Protocol, rng: &mut R) -> (AliceChoice, StateVec) {
    let choice = match protocol {
        Protocol::Bb84 => AliceChoice::Bb84 {
            bit: rng.random::<u8>() & 1,
            basis: MeasBasis::from_index(rng.random::<u8>()),
        },
        Protocol::Qutrit => {
            let draw: u8 = rng.random();
            AliceChoice::Qutrit {
                bits: [draw & 1, (draw >> 1) & 1],
                bases: [
                    MeasBasis::from_index(draw >> 2),
                    MeasBasis::from_index(draw >> 3),
                ],
            }
        }
    };
    let state = choice.state();
    (choice, state)
}

/// Subspace decoding with Born-rule success, then an equatorial measurement on success.
/// Accepts qutrits and bare qubits on kets within `{0, 1, 2}`.
pub fn bob_measure_qutrit<R: Rng + ?Sized>(
    input: &Signal,
    choice: BobChoice,
    rng: &mut R,
) -> Result<BobOutcome> {
    let subspace = choice.subspace.unwrap_or(Subspace::First);
    let failed = BobOutcome {
        choice,
        decoded: false,
        bit: None,
    };
    let Signal::State(state) = input else {
        return Ok(failed);
    };
    let success = subspace.projector().expectation(&state.to_qutrit()?)?;
    if success < TOL || rng.random::<f64>() >= success {
        return Ok(failed);
    }
    let (qubit, _) = decode_qubit(state, subspace)?;
    let (bit, _) = measure_equatorial(&qubit, choice.basis, rng.random());
    Ok(BobOutcome {
        choice,
        decoded: true,
        bit: Some(bit),
    })
}

/// Bob's side of a qutrit round: uniform subspace and basis, then [`bob_measure_qutrit`].
pub fn bob_receive_qutrit<R: Rng + ?Sized>(input: &Signal, rng: &mut R) -> Result<BobOutcome> {
    let choice = BobChoice::random(Protocol::Qutrit, rng);
    bob_measure_qutrit(input, choice, rng)
}

pub fn bob_measure_bb84<R: Rng + ?Sized>(
    input: &Signal,
    choice: BobChoice,
    rng: &mut R,
) -> BobOutcome {
    match input {
        Signal::Vacuum => BobOutcome {
            choice,
            decoded: false,
            bit: None,
        },
        Signal::State(qubit) => {
            let (bit, _) = measure_equatorial(qubit, choice.basis, rng.random());
            BobOutcome {
                choice,
                decoded: true,
                bit: Some(bit),
            }
        }
    }
}

pub fn bob_receive_bb84<R: Rng + ?Sized>(input: &Signal, rng: &mut R) -> BobOutcome {
    let choice = BobChoice::random(Protocol::Bb84, rng);
    bob_measure_bb84(input, choice, rng)
}

/// Keeps a round iff it was detected, decoded and Bob's basis matches Alice's basis for the
/// announced subspace; marks an error when the kept bit differs from Alice's.
pub fn sift(mut record: RoundRecord) -> RoundRecord {
    let subspace = record.bob.subspace;
    record.sifted = record.detected
        && record.decoded
        && record.outcome_bit.is_some()
        && record.bob.basis == record.alice.basis(subspace);
    record.error = record
        .sifted
        .then(|| record.outcome_bit != Some(record.alice.bit(subspace)));
    record
}
