//! Monte Carlo runner: Poisson source, lossy channel with dark counts, Eve, Bob, sifting.
//!
//! Each round draws from its own ChaCha8 stream, selected by the round index under the master
//! seed, and rounds are folded into integer counters. The report is therefore identical for
//! any thread count or scheduling order.
//!
//! Detection model:
//! * every photon survives independently with probability `Γq·Γb·η`;
//! * a dark click fires with probability `2p_d`, independently of the signal;
//! * dark-only clicks decode with the protocol's acceptance probability and give a uniform bit;
//! * signal plus dark (double click) gives a uniform bit;
//! * misalignment flips decoded signal bits with probability `Q_opt`.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{attack_pns, attack_single_photon, EveKind, EveLedger, EveStrategy};
use crate::error::{QkdError, Result};
use crate::protocol::{
    alice_prepare, bob_measure_bb84, bob_measure_qutrit, sift, BobChoice, BobOutcome, RoundRecord,
    Signal,
};
use crate::rates::{qber, raw_rates, transmittance, Protocol, SystemParams, P_SIFT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub gamma_q: f64,
    pub gamma_b: f64,
    pub eta: f64,
    pub p_d: f64,
}

impl ChannelModel {
    pub fn from_params(params: &SystemParams) -> Self {
        Self {
            gamma_q: transmittance(params.alpha, params.length),
            gamma_b: params.gamma_b,
            eta: params.eta,
            p_d: params.p_d,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| v > 0.0 && v <= 1.0;
        for (field, v) in [
            ("gamma_q", self.gamma_q),
            ("gamma_b", self.gamma_b),
            ("eta", self.eta),
        ] {
            if !unit(v) {
                return Err(QkdError::InvalidParam {
                    field,
                    reason: format!("{v} is outside (0, 1]"),
                });
            }
        }
        if !(0.0..1.0).contains(&self.p_d) {
            return Err(QkdError::InvalidParam {
                field: "p_d",
                reason: format!("{} is outside [0, 1)", self.p_d),
            });
        }
        Ok(())
    }

    /// Per-photon survival probability `Γq·Γb·η`.
    pub fn transmission(&self) -> f64 {
        self.gamma_q * self.gamma_b * self.eta
    }

    pub fn dark_click_probability(&self) -> f64 {
        (2.0 * self.p_d).min(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detection {
    pub survivors: u32,
    pub click: bool,
    pub dark_click: bool,
}

pub fn sample_photon_number<R: Rng + ?Sized>(mu: f64, rng: &mut R) -> Result<u32> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(QkdError::Domain {
            what: "mean photon number",
            value: mu,
            domain: "[0, inf)",
        });
    }
    if mu == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mu).map_err(|e| QkdError::Domain {
        what: "mean photon number",
        value: mu,
        domain: if matches!(e, rand_distr::PoissonError::ShapeTooLarge) {
            "[0, 1.8e19]"
        } else {
            "[0, inf)"
        },
    })?;
    Ok(poisson.sample(rng) as u32)
}

pub fn apply_loss_and_detect<R: Rng + ?Sized>(
    photon_n: u32,
    channel: &ChannelModel,
    rng: &mut R,
) -> Detection {
    let t = channel.transmission();
    let survivors = (0..photon_n).filter(|_| rng.random::<f64>() < t).count() as u32;
    let dark_click = rng.random::<f64>() < channel.dark_click_probability();
    Detection {
        survivors,
        click: survivors > 0 || dark_click,
        dark_click,
    }
}

/// Integer tallies over a set of rounds. Merging is associative and commutative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct McCounts {
    pub rounds: u64,
    pub detected: u64,
    pub decoded: u64,
    pub sifted: u64,
    pub errors: u64,
    pub dark_only_sifted: u64,
    pub dark_only_errors: u64,
    pub multi_photon_sifted: u64,
    pub attacked: u64,
    /// Sifted rounds in which Eve decoded from the subspace Bob announced.
    pub eve_subspace_match_sifted: u64,
    /// Sifted rounds where Eve held stored photons.
    pub pns_stored_sifted: u64,
    pub pns_learned: u64,
}

impl McCounts {
    fn from_record(r: &RoundRecord) -> Self {
        let sifted = u64::from(r.sifted);
        let error = u64::from(r.error == Some(true));
        Self {
            rounds: 1,
            detected: u64::from(r.detected),
            decoded: u64::from(r.decoded),
            sifted,
            errors: error,
            dark_only_sifted: sifted * u64::from(r.dark_only),
            dark_only_errors: error * u64::from(r.dark_only),
            multi_photon_sifted: sifted * u64::from(r.photon_n >= 2),
            attacked: u64::from(r.eve.attacked),
            eve_subspace_match_sifted: sifted
                * u64::from(r.eve.eve_subspace.is_some() && r.eve.eve_subspace == r.bob.subspace),
            pns_stored_sifted: sifted * u64::from(r.eve.stored_copies > 0),
            pns_learned: sifted * u64::from(r.eve.eve_bit_known && r.eve.stored_copies > 0),
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            rounds: self.rounds + o.rounds,
            detected: self.detected + o.detected,
            decoded: self.decoded + o.decoded,
            sifted: self.sifted + o.sifted,
            errors: self.errors + o.errors,
            dark_only_sifted: self.dark_only_sifted + o.dark_only_sifted,
            dark_only_errors: self.dark_only_errors + o.dark_only_errors,
            multi_photon_sifted: self.multi_photon_sifted + o.multi_photon_sifted,
            attacked: self.attacked + o.attacked,
            eve_subspace_match_sifted: self.eve_subspace_match_sifted + o.eve_subspace_match_sifted,
            pns_stored_sifted: self.pns_stored_sifted + o.pns_stored_sifted,
            pns_learned: self.pns_learned + o.pns_learned,
        }
    }
}

/// Empirical frequencies; `None` when the conditioning set is empty.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct McRates {
    /// detected / rounds
    pub detection: Option<f64>,
    /// decoded / detected
    pub decode: Option<f64>,
    /// sifted / decoded
    pub sift: Option<f64>,
    /// errors / sifted
    pub qber: Option<f64>,
    /// errors / sifted among dark-count-only rounds
    pub dark_only_qber: Option<f64>,
    /// eve_subspace_match_sifted / sifted; qutrit runs only
    pub eve_subspace_match: Option<f64>,
    /// pns_learned / pns_stored_sifted
    pub pns_learned: Option<f64>,
}

/// Analytic predictions for the same configuration, for side-by-side comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McAnalytic {
    pub r_sig: f64,
    pub r_raw: f64,
    /// QBER from dark counts and misalignment alone.
    pub qber: Option<f64>,
    pub p_accept: f64,
    pub p_sift: f64,
    /// Error Eve's single-photon strategy leaves on attacked sifted rounds.
    pub attack_qber: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub protocol: Protocol,
    pub strategy: EveStrategy,
    pub params: SystemParams,
    pub seed: u64,
    pub counts: McCounts,
    pub rates: McRates,
    pub standard_errors: McRates,
    pub analytic: McAnalytic,
}

fn proportion(hits: u64, n: u64) -> (Option<f64>, Option<f64>) {
    if n == 0 {
        return (None, None);
    }
    let p = hits as f64 / n as f64;
    (Some(p), Some((p * (1.0 - p) / n as f64).sqrt()))
}

impl McReport {
    fn assemble(
        protocol: Protocol,
        strategy: EveStrategy,
        params: SystemParams,
        seed: u64,
        c: McCounts,
    ) -> Self {
        let pairs = [
            proportion(c.detected, c.rounds),
            proportion(c.decoded, c.detected),
            proportion(c.sifted, c.decoded),
            proportion(c.errors, c.sifted),
            proportion(c.dark_only_errors, c.dark_only_sifted),
            match protocol {
                Protocol::Bb84 => (None, None),
                Protocol::Qutrit => proportion(c.eve_subspace_match_sifted, c.sifted),
            },
            proportion(c.pns_learned, c.pns_stored_sifted),
        ];
        type Pick = fn(&(Option<f64>, Option<f64>)) -> Option<f64>;
        let build = |pick: Pick| McRates {
            detection: pick(&pairs[0]),
            decode: pick(&pairs[1]),
            sift: pick(&pairs[2]),
            qber: pick(&pairs[3]),
            dark_only_qber: pick(&pairs[4]),
            eve_subspace_match: pick(&pairs[5]),
            pns_learned: pick(&pairs[6]),
        };
        let (r_sig, r_raw) = raw_rates(&params);
        Self {
            protocol,
            strategy,
            params,
            seed,
            counts: c,
            rates: build(|p| p.0),
            standard_errors: build(|p| p.1),
            analytic: McAnalytic {
                r_sig,
                r_raw,
                qber: qber(&params).ok(),
                p_accept: protocol.p_accept(),
                p_sift: P_SIFT,
                attack_qber: strategy.predicted_qber(),
            },
        }
    }
}

/// The random stream of round `index` under `seed`.
pub fn round_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn check_config(protocol: Protocol, strategy: &EveStrategy, params: &SystemParams) -> Result<()> {
    params.validate()?;
    ChannelModel::from_params(params).validate()?;
    if !strategy.kind.supports(protocol) {
        return Err(QkdError::InvalidParam {
            field: "strategy",
            reason: format!("{} cannot attack {protocol} rounds", strategy.kind.name()),
        });
    }
    EveStrategy::new(strategy.kind, strategy.epsilon1).map(|_| ())
}

/// Simulates one full round: source, Eve, channel, Bob, sifting and any photon-number
/// splitting replay.
pub fn simulate_round<R: Rng + ?Sized>(
    protocol: Protocol,
    strategy: &EveStrategy,
    params: &SystemParams,
    rng: &mut R,
) -> Result<RoundRecord> {
    let channel = ChannelModel::from_params(params);
    let (alice, state) = alice_prepare(protocol, rng);
    let photon_n = sample_photon_number(params.mu, rng)?;

    let (forwarded, forwarded_n, mut eve) = if photon_n == 0 {
        (Signal::Vacuum, 0, EveLedger::default())
    } else if strategy.kind.is_single_photon() {
        let (signal, ledger) = attack_single_photon(strategy, &state, rng)?;
        let n = u32::from(signal != Signal::Vacuum);
        (signal, n, ledger)
    } else if strategy.kind == EveKind::Pns && photon_n >= 2 {
        let ledger = EveLedger {
            attacked: true,
            stored_copies: photon_n - 1,
            stored_qutrit: Some(state.clone()),
            ..EveLedger::default()
        };
        (Signal::State(state), 1, ledger)
    } else {
        (Signal::State(state), photon_n, EveLedger::default())
    };

    let detection = apply_loss_and_detect(forwarded_n, &channel, rng);
    let choice = BobChoice::random(protocol, rng);
    let arriving = if detection.survivors > 0 {
        forwarded
    } else {
        Signal::Vacuum
    };
    let dark_only = detection.click && detection.survivors == 0;

    let outcome = if !detection.click {
        BobOutcome {
            choice,
            decoded: false,
            bit: None,
        }
    } else if dark_only {
        let decoded = rng.random::<f64>() < protocol.p_accept();
        BobOutcome {
            choice,
            decoded,
            bit: decoded.then(|| rng.random::<u8>() & 1),
        }
    } else {
        let mut out = match protocol {
            Protocol::Bb84 => bob_measure_bb84(&arriving, choice, rng),
            Protocol::Qutrit => bob_measure_qutrit(&arriving, choice, rng)?,
        };
        if let Some(bit) = out.bit.as_mut() {
            if detection.dark_click {
                *bit = rng.random::<u8>() & 1;
            } else if rng.random::<f64>() < params.q_opt {
                *bit ^= 1;
            }
        }
        out
    };

    let record = sift(RoundRecord {
        alice,
        photon_n,
        eve: EveLedger::default(),
        bob: choice,
        detected: detection.click,
        dark_only,
        decoded: outcome.decoded,
        outcome_bit: outcome.bit,
        sifted: false,
        error: None,
    });

    if record.sifted && eve.stored_copies > 0 {
        eve.eve_bit_known = attack_pns(strategy, &alice, photon_n, choice, rng)?;
    } else if record.sifted && eve.measured {
        eve.eve_bit_known = eve.eve_subspace.is_none_or(|s| Some(s) == choice.subspace);
    }
    Ok(RoundRecord { eve, ..record })
}

/// Runs `rounds` independent rounds on the current rayon pool. Identical inputs give an
/// identical report regardless of the pool size.
pub fn run_experiment(
    protocol: Protocol,
    strategy: EveStrategy,
    params: SystemParams,
    rounds: u64,
    seed: u64,
) -> Result<McReport> {
    if rounds == 0 {
        return Err(QkdError::InvalidParam {
            field: "rounds",
            reason: "at least one round is required".into(),
        });
    }
    check_config(protocol, &strategy, &params)?;
    let counts = (0..rounds)
        .into_par_iter()
        .map(|i| {
            let mut rng = round_rng(seed, i);
            simulate_round(protocol, &strategy, &params, &mut rng)
                .map(|r| McCounts::from_record(&r))
        })
        .try_reduce(McCounts::default, |a, b| Ok(a.merge(b)))?;
    Ok(McReport::assemble(protocol, strategy, params, seed, counts))
}

/// Replays `photon_n`-photon pulses through the photon-number-splitting attack over `trials`
/// sifted rounds (mismatched-basis rounds are redrawn) and returns how many bits Eve learned.
pub fn pns_learning(protocol: Protocol, photon_n: u32, trials: u64, seed: u64) -> Result<u64> {
    let strategy = EveStrategy::new(EveKind::Pns, 0.0)?;
    (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = round_rng(seed, i);
            loop {
                let (alice, _) = alice_prepare(protocol, &mut rng);
                let bob = BobChoice::random(protocol, &mut rng);
                if alice.basis(bob.subspace) == bob.basis {
                    return attack_pns(&strategy, &alice, photon_n, bob, &mut rng).map(u64::from);
                }
            }
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))
}
