//! Closed-form secret key rates for BB84 and the qutrit protocol under collective attacks,
//! with a weak coherent source, a lossy fiber and noisy threshold detectors.
//!
//! Every evaluation returns a [`RateBreakdown`] carrying all intermediate quantities.
//! Both rates share the template `K = P_accept · P_sift · R_raw · (1 − I_E − h(Q))`:
//!
//! * BB84: `P_accept = 1`, `I_E = 1 − Y₁[1 − h(ε₁)]` with `Q = Y₁ε₁`.
//! * qutrit: `P_accept = 2/3`, `I_E = 1 − Y₁[1 − 2h(ε₁)/3] − Y₂/3` with `Q = Y₁(2ε₁/3 + 1/6)`.
//!
//! `Y₁` carries the sifting factor in its numerator against the unsifted `R_raw`, exactly as
//! the rate formulas are usually quoted for this protocol. When multi-photon pulses alone can
//! account for every click (`Y₁` clamps to 0) the key rate collapses to zero for both protocols.

use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::qcore::binary_entropy;

/// Fraction of decoded rounds that survive basis sifting.
pub const P_SIFT: f64 = 0.5;
/// Probability that a click yields a decoded qubit in the qutrit protocol.
pub const P_ACCEPT_QUTRIT: f64 = 2.0 / 3.0;
pub const P_ACCEPT_BB84: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    Bb84,
    Qutrit,
}

impl Protocol {
    pub const ALL: [Protocol; 2] = [Protocol::Bb84, Protocol::Qutrit];

    pub fn p_accept(self) -> f64 {
        match self {
            Protocol::Bb84 => P_ACCEPT_BB84,
            Protocol::Qutrit => P_ACCEPT_QUTRIT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Bb84 => "bb84",
            Protocol::Qutrit => "qutrit",
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Protocol {
    type Err = QkdError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bb84" => Ok(Protocol::Bb84),
            "qutrit" => Ok(Protocol::Qutrit),
            other => Err(QkdError::InvalidParam {
                field: "protocol",
                reason: format!("unknown protocol `{other}`"),
            }),
        }
    }
}

/// Physical scenario for one key-rate evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Fiber attenuation in dB/km.
    pub alpha: f64,
    /// Channel length in km.
    pub length: f64,
    /// Transmittance of Bob's apparatus.
    pub gamma_b: f64,
    /// Detector efficiency.
    pub eta: f64,
    /// Dark-count probability per detector per gate.
    pub p_d: f64,
    /// Misalignment error.
    pub q_opt: f64,
    /// Mean photon number per pulse.
    pub mu: f64,
}

impl SystemParams {
    /// The detector and apparatus settings of the reference comparison, α = 0.2 dB/km,
    /// with the given distance and mean photon number.
    pub fn reference(length: f64, mu: f64) -> Self {
        Self {
            alpha: 0.2,
            length,
            gamma_b: 0.5,
            eta: 0.1,
            p_d: 1e-5,
            q_opt: 0.005,
            mu,
        }
    }

    pub fn with_length(self, length: f64) -> Self {
        Self { length, ..self }
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, field: &'static str, value: f64, range: &str) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(QkdError::InvalidParam {
                    field,
                    reason: format!("{value} is outside {range}"),
                })
            }
        }
        let finite = |v: f64| v.is_finite();
        check(
            finite(self.alpha) && self.alpha >= 0.0,
            "alpha",
            self.alpha,
            "[0, inf)",
        )?;
        check(
            finite(self.length) && self.length >= 0.0,
            "length",
            self.length,
            "[0, inf)",
        )?;
        check(
            self.gamma_b > 0.0 && self.gamma_b <= 1.0,
            "gamma_b",
            self.gamma_b,
            "(0, 1]",
        )?;
        check(self.eta > 0.0 && self.eta <= 1.0, "eta", self.eta, "(0, 1]")?;
        check(self.p_d >= 0.0 && self.p_d < 1.0, "p_d", self.p_d, "[0, 1)")?;
        check(
            self.q_opt >= 0.0 && self.q_opt < 0.5,
            "q_opt",
            self.q_opt,
            "[0, 0.5)",
        )?;
        check(self.mu > 0.0 && self.mu < 1.0, "mu", self.mu, "(0, 1)")?;
        Ok(())
    }
}

/// All analytic quantities of one (protocol, params) evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBreakdown {
    pub protocol: Protocol,
    pub gamma_q: f64,
    pub r_sig: f64,
    pub r_raw: f64,
    pub q: f64,
    pub y0: f64,
    pub y1: f64,
    pub y2: f64,
    pub epsilon1: f64,
    pub i_e: f64,
    /// Secret key rate in bits per pulse, clamped at 0.
    pub k: f64,
    /// The same expression before clamping; negative when insecure.
    pub k_margin: f64,
}

impl RateBreakdown {
    pub fn is_secure(&self) -> bool {
        self.k > 0.0
    }
}

/// `Γq = 10^(−αl/10)`.
pub fn transmittance(alpha: f64, length: f64) -> f64 {
    10f64.powf(-alpha * length / 10.0)
}

/// `P(n, μ) = μⁿe^{−μ}/n!`.
pub fn poisson_mass(n: u32, mu: f64) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(QkdError::Domain {
            what: "mean photon number",
            value: mu,
            domain: "[0, inf)",
        });
    }
    if mu == 0.0 {
        return Ok(if n == 0 { 1.0 } else { 0.0 });
    }
    // log space keeps large n finite
    let log_fact: f64 = (2..=n).map(|k| f64::from(k).ln()).sum();
    Ok((f64::from(n) * mu.ln() - mu - log_fact).exp())
}

/// `P(n ≥ 2) = 1 − e^{−μ}(1 + μ)`, evaluated without cancellation for small μ.
pub fn multi_photon_probability(mu: f64) -> f64 {
    // 1 - e^{-μ}(1+μ) = -expm1(-μ) - μe^{-μ}
    (-(-mu).exp_m1() - mu * (-mu).exp()).max(0.0)
}

/// `(R_sig, R_raw)` with `R_sig = 1 − e^{−μΓqΓbη}` and `R_raw = R_sig + 2p_d(1 − R_sig)`.
pub fn raw_rates(params: &SystemParams) -> (f64, f64) {
    let gamma_q = transmittance(params.alpha, params.length);
    let r_sig = -(-params.mu * gamma_q * params.gamma_b * params.eta).exp_m1();
    let r_raw = r_sig + 2.0 * params.p_d * (1.0 - r_sig);
    (r_sig, r_raw)
}

/// `Q = p_d(1 − R_sig)/R_raw + Q_opt`, clamped to 1/2.
pub fn qber(params: &SystemParams) -> Result<f64> {
    let (r_sig, r_raw) = raw_rates(params);
    if r_raw <= 0.0 {
        return Err(QkdError::DegenerateChannel);
    }
    Ok((params.p_d * (1.0 - r_sig) / r_raw + params.q_opt).min(0.5))
}

/// `(Y₀, Y₁, Y₂)` under Eve's yield-minimizing choice `f₀ = 0`, `f_{n≥2} = 1`:
/// `Y₁ = 1 − P_sift P(n≥2)/R_raw` clamped to `[0, 1]`, `Y₂ = P_sift P(2)/R_raw`.
pub fn yields(params: &SystemParams) -> Result<(f64, f64, f64)> {
    let (_, r_raw) = raw_rates(params);
    if r_raw <= 0.0 {
        return Err(QkdError::DegenerateChannel);
    }
    let y1 = (1.0 - P_SIFT * multi_photon_probability(params.mu) / r_raw).clamp(0.0, 1.0);
    let y2 = P_SIFT * poisson_mass(2, params.mu)? / r_raw;
    Ok((0.0, y1, y2))
}

/// Single-photon error that reproduces the observed QBER, clamped to `[0, 1/2]`.
fn epsilon1(protocol: Protocol, q: f64, y1: f64) -> f64 {
    if y1 <= 0.0 {
        return 0.5;
    }
    let eps = match protocol {
        Protocol::Bb84 => q / y1,
        Protocol::Qutrit => 1.5 * (q / y1 - 1.0 / 6.0),
    };
    eps.clamp(0.0, 0.5)
}

pub fn eve_information(protocol: Protocol, y1: f64, y2: f64, epsilon1: f64) -> Result<f64> {
    if y1 <= 0.0 {
        return Ok(1.0);
    }
    let h = binary_entropy(epsilon1)?;
    let i_e = match protocol {
        Protocol::Bb84 => 1.0 - y1 * (1.0 - h),
        Protocol::Qutrit => 1.0 - y1 * (1.0 - 2.0 * h / 3.0) - y2 / 3.0,
    };
    Ok(i_e.clamp(0.0, 1.0))
}

pub fn key_rate(protocol: Protocol, params: &SystemParams) -> Result<RateBreakdown> {
    let gamma_q = transmittance(params.alpha, params.length);
    let (r_sig, r_raw) = raw_rates(params);
    let q = qber(params)?;
    let (y0, y1, y2) = yields(params)?;
    let epsilon1 = epsilon1(protocol, q, y1);
    let i_e = eve_information(protocol, y1, y2, epsilon1)?;
    let k_margin = protocol.p_accept() * P_SIFT * r_raw * (1.0 - i_e - binary_entropy(q)?);
    Ok(RateBreakdown {
        protocol,
        gamma_q,
        r_sig,
        r_raw,
        q,
        y0,
        y1,
        y2,
        epsilon1,
        i_e,
        k: k_margin.max(0.0),
        k_margin,
    })
}

/// `K_BB84 = R_raw{Y₁[1 − h(ε₁)] − h(Q)}/2`.
pub fn key_rate_bb84(params: &SystemParams) -> Result<RateBreakdown> {
    key_rate(Protocol::Bb84, params)
}

/// `K_qutrit = R_raw{Y₁[1 − 2h(ε₁)/3] + Y₂/3 − h(Q)}/3`.
pub fn key_rate_qutrit(params: &SystemParams) -> Result<RateBreakdown> {
    key_rate(Protocol::Qutrit, params)
}
