//! Eve's collective-attack strategies as round transformers.
//!
//! Single-photon attacks are parameterized by `epsilon1`, the error Eve leaves on a qubit she
//! attacks. It is realized by intercept-resend in a random basis (which alone gives 1/4):
//! below 1/4 Eve measures only a fraction `4ε₁` of the qubits she decodes and forwards the
//! rest untouched; above 1/4 she always measures and flips her resent bit with probability
//! `2(ε₁ − 1/4)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::protocol::{AliceChoice, BobChoice, Signal};
use crate::qcore::{
    decode_qubit, encode_qutrit, equatorial_phase, equatorial_state, measure_equatorial, MeasBasis,
    Phase, PhasePair, SpaceTag, StateVec, Subspace,
};
use crate::rates::Protocol;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EveKind {
    None,
    InterceptResendBb84,
    QutritForward,
    QubitForward,
    Pns,
}

impl EveKind {
    pub fn name(self) -> &'static str {
        match self {
            EveKind::None => "none",
            EveKind::InterceptResendBb84 => "intercept_resend_bb84",
            EveKind::QutritForward => "qutrit_forward",
            EveKind::QubitForward => "qubit_forward",
            EveKind::Pns => "pns",
        }
    }

    pub fn supports(self, protocol: Protocol) -> bool {
        match self {
            EveKind::None | EveKind::Pns => true,
            EveKind::InterceptResendBb84 => protocol == Protocol::Bb84,
            EveKind::QutritForward | EveKind::QubitForward => protocol == Protocol::Qutrit,
        }
    }

    /// Attacks every non-empty pulse by decoding or measuring one photon.
    pub fn is_single_photon(self) -> bool {
        matches!(
            self,
            EveKind::InterceptResendBb84 | EveKind::QutritForward | EveKind::QubitForward
        )
    }
}

impl std::str::FromStr for EveKind {
    type Err = QkdError;
    fn from_str(s: &str) -> Result<Self> {
        [
            EveKind::None,
            EveKind::InterceptResendBb84,
            EveKind::QutritForward,
            EveKind::QubitForward,
            EveKind::Pns,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| QkdError::InvalidParam {
            field: "strategy",
            reason: format!("unknown strategy `{s}`"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EveStrategy {
    pub kind: EveKind,
    pub epsilon1: f64,
}

impl EveStrategy {
    pub fn new(kind: EveKind, epsilon1: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&epsilon1) {
            return Err(QkdError::InvalidParam {
                field: "epsilon1",
                reason: format!("{epsilon1} is outside [0, 0.5]"),
            });
        }
        Ok(Self { kind, epsilon1 })
    }

    pub fn none() -> Self {
        Self {
            kind: EveKind::None,
            epsilon1: 0.0,
        }
    }

    /// QBER Eve's single-photon attack leaves on sifted signal rounds, when she attacks every
    /// pulse and the channel is otherwise clean.
    pub fn predicted_qber(&self) -> f64 {
        let e = self.epsilon1;
        match self.kind {
            EveKind::None | EveKind::Pns => 0.0,
            EveKind::InterceptResendBb84 => e,
            EveKind::QutritForward => (e + 0.5) / 2.0,
            EveKind::QubitForward => 2.0 * e / 3.0 + 1.0 / 6.0,
        }
    }
}

/// What Eve did in one round.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EveLedger {
    pub attacked: bool,
    pub eve_subspace: Option<Subspace>,
    /// Eve measured a photon (as opposed to forwarding her decoded qubit untouched).
    pub measured: bool,
    /// Eve ends up holding Alice's key bit for the subspace Bob kept.
    pub eve_bit_known: bool,
    pub stored_copies: u32,
    /// Alice's qutrit kept in memory during a photon-number-splitting attack.
    #[serde(skip)]
    pub stored_qutrit: Option<StateVec>,
}

/// Eve's disturbance of a decoded qubit: returns the qubit to forward and whether she measured.
fn disturb<R: Rng + ?Sized>(qubit: &StateVec, epsilon1: f64, rng: &mut R) -> (StateVec, bool) {
    let (measure, flip) = if epsilon1 <= 0.25 {
        (rng.random::<f64>() < 4.0 * epsilon1, 0.0)
    } else {
        (true, 2.0 * (epsilon1 - 0.25))
    };
    if !measure {
        return (qubit.clone(), false);
    }
    let basis = MeasBasis::from_index(rng.random::<u8>());
    let (mut bit, _) = measure_equatorial(qubit, basis, rng.random());
    if rng.random::<f64>() < flip {
        bit ^= 1;
    }
    let labels = qubit.labels();
    let resent = equatorial_state(
        qubit.tag(),
        (labels[0], labels[1]),
        basis.phase_for_bit(bit),
    );
    (resent, true)
}

/// Single-photon attack with Eve's decoding subspace given.
pub fn attack_single_photon_in<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    alice_state: &StateVec,
    eve_subspace: Subspace,
    rng: &mut R,
) -> Result<(Signal, EveLedger)> {
    let mut ledger = EveLedger {
        attacked: true,
        ..EveLedger::default()
    };
    match strategy.kind {
        EveKind::None => {
            ledger.attacked = false;
            Ok((Signal::State(alice_state.clone()), ledger))
        }
        EveKind::Pns => Err(QkdError::Contract(
            "photon-number splitting needs at least two photons".into(),
        )),
        EveKind::InterceptResendBb84 => {
            if alice_state.dim() != 2 {
                return Err(QkdError::Contract(
                    "intercept-resend expects a qubit".into(),
                ));
            }
            let (resent, measured) = disturb(alice_state, strategy.epsilon1, rng);
            ledger.measured = measured;
            Ok((Signal::State(resent), ledger))
        }
        EveKind::QutritForward | EveKind::QubitForward => {
            if alice_state.tag() != SpaceTag::Qutrit {
                return Err(QkdError::Contract(format!(
                    "{} expects a qutrit",
                    strategy.kind.name()
                )));
            }
            ledger.eve_subspace = Some(eve_subspace);
            let success = eve_subspace.projector().expectation(alice_state)?;
            if rng.random::<f64>() >= success {
                return Ok((Signal::Vacuum, ledger));
            }
            let (qubit, _) = decode_qubit(alice_state, eve_subspace)?;
            let (resent, measured) = disturb(&qubit, strategy.epsilon1, rng);
            ledger.measured = measured;
            if strategy.kind == EveKind::QubitForward {
                return Ok((Signal::State(resent), ledger));
            }
            let kept = equatorial_phase(&resent)?;
            let fresh = Phase::ALL[usize::from(rng.random::<u8>() & 3)];
            let phases = match eve_subspace {
                Subspace::First => PhasePair::from_phases(kept, fresh),
                Subspace::Second => PhasePair::from_phases(fresh, kept),
            };
            Ok((Signal::State(encode_qutrit(phases)), ledger))
        }
    }
}

/// Eve's attack on a single-photon pulse. For the qutrit strategies she picks her decoding
/// subspace uniformly and forwards vacuum when decoding fails.
pub fn attack_single_photon<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    alice_state: &StateVec,
    rng: &mut R,
) -> Result<(Signal, EveLedger)> {
    let subspace = Subspace::from_index(rng.random::<u8>());
    attack_single_photon_in(strategy, alice_state, subspace, rng)
}

/// Replays a stored multi-photon pulse after the announcement: each of the `photon_n − 1`
/// stored copies is projected onto the announced subspace (Born probability) and, on success,
/// measured in the announced basis. Meaningful for sifted rounds; returns whether Eve learned
/// Alice's bit.
pub fn attack_pns<R: Rng + ?Sized>(
    strategy: &EveStrategy,
    alice: &AliceChoice,
    photon_n: u32,
    announced: BobChoice,
    rng: &mut R,
) -> Result<bool> {
    if strategy.kind != EveKind::Pns {
        return Err(QkdError::Contract(format!(
            "{} does not store photons",
            strategy.kind.name()
        )));
    }
    if photon_n < 2 {
        return Err(QkdError::Contract(format!(
            "photon-number splitting needs at least two photons, got {photon_n}"
        )));
    }
    let state = alice.state();
    let target = alice.bit(announced.subspace);
    for _ in 1..photon_n {
        let qubit = match announced.subspace {
            None => state.clone(),
            Some(subspace) => {
                let success = subspace.projector().expectation(&state)?;
                if rng.random::<f64>() >= success {
                    continue;
                }
                decode_qubit(&state, subspace)?.0
            }
        };
        let (bit, _) = measure_equatorial(&qubit, announced.basis, rng.random());
        if bit == target {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspacePick {
    Uniform,
    Fixed(Subspace),
}

impl SubspacePick {
    fn draw<R: Rng + ?Sized>(self, rng: &mut R) -> Subspace {
        match self {
            SubspacePick::Uniform => Subspace::from_index(rng.random::<u8>()),
            SubspacePick::Fixed(s) => s,
        }
    }
}

/// Runs qutrit-forward rounds until `trials` of them have both Eve and Bob decoding
/// successfully, and returns the fraction in which they used the same subspace.
pub fn eve_matches_bob_subspace<R: Rng + ?Sized>(
    eve: SubspacePick,
    bob: SubspacePick,
    trials: usize,
    rng: &mut R,
) -> Result<f64> {
    let strategy = EveStrategy::new(EveKind::QutritForward, 0.25)?;
    let (mut kept, mut matched) = (0usize, 0usize);
    while kept < trials {
        let (_, state) = crate::protocol::alice_prepare(Protocol::Qutrit, rng);
        let eve_sub = eve.draw(rng);
        let (forwarded, _) = attack_single_photon_in(&strategy, &state, eve_sub, rng)?;
        let Signal::State(fresh) = forwarded else {
            continue;
        };
        let bob_sub = bob.draw(rng);
        let success = bob_sub.projector().expectation(&fresh)?;
        if rng.random::<f64>() >= success {
            continue;
        }
        kept += 1;
        matched += usize::from(bob_sub == eve_sub);
    }
    Ok(matched as f64 / trials.max(1) as f64)
}
