//! Qutrit-encoded quantum key distribution at desk scale.
//!
//! * [`qcore`]: exact qubit/qutrit state algebra, encoding and subspace decoding.
//! * [`protocol`]: Alice and Bob round logic for BB84 and qutrit rounds, plus sifting.
//! * [`adversary`]: Eve's intercept, forward and photon-number-splitting strategies.
//! * [`mcharness`]: seeded, parallel Monte Carlo over lossy noisy channels.
//! * [`rates`]: closed-form secret key rates with full intermediate breakdowns.
//! * [`optimize`]: per-distance mean photon number optimization and secure distance.

pub mod adversary;
pub mod error;
pub mod mcharness;
pub mod optimize;
pub mod protocol;
pub mod qcore;
pub mod rates;

pub use adversary::{EveKind, EveStrategy};
pub use error::{QkdError, Result};
pub use mcharness::{pns_learning, run_experiment, ChannelModel, McReport};
pub use optimize::{curve, optimize_mu, secure_distance, CurvePoint};
pub use qcore::{MeasBasis, Phase, PhasePair, Projector, SpaceTag, StateVec, Subspace};
pub use rates::{key_rate, key_rate_bb84, key_rate_qutrit, Protocol, RateBreakdown, SystemParams};
