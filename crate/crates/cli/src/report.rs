//! Command bodies and their CSV/JSON renderings.

use qkd_core::adversary::EveStrategy;
use qkd_core::mcharness::McReport;
use qkd_core::{key_rate, optimize_mu, secure_distance, CurvePoint, Protocol, RateBreakdown};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::CliError;

pub const CURVE_HEADER: &str = "length_km,protocol,mu_opt,key_rate";
pub const KEYRATE_HEADER: &str = "protocol,gamma_q,r_sig,r_raw,q,y0,y1,y2,epsilon1,i_e,k,k_margin";
pub const DISTANCE_HEADER: &str = "protocol,secure_distance_km,mu_at_cutoff_minus_1km";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Keyrate,
    Curve,
    Distance,
    Simulate,
}

impl Kind {
    pub fn default_format(self) -> Format {
        match self {
            Kind::Curve => Format::Csv,
            _ => Format::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub length_km: f64,
    pub protocol: Protocol,
    pub mu_opt: f64,
    pub key_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DistanceRow {
    pub protocol: Protocol,
    pub secure_distance_km: f64,
    pub mu_at_cutoff_minus_1km: f64,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a RunConfig,
    results: T,
}

/// Ten significant digits, scientific notation, independent of locale.
pub fn csv_number(x: f64) -> String {
    format!("{x:.9e}")
}

fn json<T: Serialize>(config: &RunConfig, results: T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&Document { config, results })
        .map_err(|e| CliError::Internal(format!("serialization failed: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn csv<I: IntoIterator<Item = Vec<String>>>(header: &str, rows: I) -> String {
    let mut s = String::new();
    s.push_str(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn keyrate_rows(config: &RunConfig) -> Result<Vec<RateBreakdown>, CliError> {
    let params = config.params();
    Ok(config
        .protocol
        .protocols()
        .iter()
        .map(|&p| key_rate(p, &params))
        .collect::<qkd_core::Result<_>>()?)
}

/// Rows ordered by distance, then BB84 before qutrit.
pub fn curve_rows(config: &RunConfig) -> Result<Vec<CurveRow>, CliError> {
    let lengths = config.lengths()?;
    let params = config.params();
    let per_protocol = config
        .protocol
        .protocols()
        .iter()
        .map(|&p| qkd_core::curve(p, &params, &lengths))
        .collect::<qkd_core::Result<Vec<Vec<CurvePoint>>>>()?;
    let mut rows = Vec::with_capacity(lengths.len() * per_protocol.len());
    for i in 0..lengths.len() {
        for points in &per_protocol {
            let p = &points[i];
            rows.push(CurveRow {
                length_km: p.length,
                protocol: p.breakdown.protocol,
                mu_opt: p.mu_opt,
                key_rate: p.k_opt,
            });
        }
    }
    Ok(rows)
}

pub fn distance_rows(config: &RunConfig) -> Result<Vec<DistanceRow>, CliError> {
    let params = config.params();
    config
        .protocol
        .protocols()
        .iter()
        .map(|&p| {
            let d = secure_distance(p, &params)?;
            let near = optimize_mu(p, &params, (d - 1.0).max(0.0))?;
            Ok(DistanceRow {
                protocol: p,
                secure_distance_km: d,
                mu_at_cutoff_minus_1km: near.mu_opt,
            })
        })
        .collect()
}

pub fn simulate_reports(config: &RunConfig) -> Result<Vec<McReport>, CliError> {
    let strategy = EveStrategy::new(config.strategy, config.epsilon1)?;
    let params = config.params();
    config
        .protocol
        .protocols()
        .iter()
        .map(|&p| {
            Ok(qkd_core::run_experiment(
                p,
                strategy,
                params,
                config.rounds,
                config.seed,
            )?)
        })
        .collect()
}

pub fn render(kind: Kind, config: &RunConfig, format: Format) -> Result<String, CliError> {
    match (kind, format) {
        (Kind::Keyrate, Format::Json) => json(config, keyrate_rows(config)?),
        (Kind::Keyrate, Format::Csv) => Ok(csv(
            KEYRATE_HEADER,
            keyrate_rows(config)?.iter().map(|b| {
                let mut row = vec![b.protocol.name().to_string()];
                row.extend(
                    [
                        b.gamma_q, b.r_sig, b.r_raw, b.q, b.y0, b.y1, b.y2, b.epsilon1, b.i_e, b.k,
                        b.k_margin,
                    ]
                    .map(csv_number),
                );
                row
            }),
        )),
        (Kind::Curve, Format::Json) => json(config, curve_rows(config)?),
        (Kind::Curve, Format::Csv) => Ok(csv(
            CURVE_HEADER,
            curve_rows(config)?.iter().map(|r| {
                vec![
                    csv_number(r.length_km),
                    r.protocol.name().to_string(),
                    csv_number(r.mu_opt),
                    csv_number(r.key_rate),
                ]
            }),
        )),
        (Kind::Distance, Format::Json) => json(config, distance_rows(config)?),
        (Kind::Distance, Format::Csv) => Ok(csv(
            DISTANCE_HEADER,
            distance_rows(config)?.iter().map(|r| {
                vec![
                    r.protocol.name().to_string(),
                    csv_number(r.secure_distance_km),
                    csv_number(r.mu_at_cutoff_minus_1km),
                ]
            }),
        )),
        (Kind::Simulate, Format::Json) => json(config, simulate_reports(config)?),
        (Kind::Simulate, Format::Csv) => Err(CliError::Config(
            "simulate emits JSON only; drop --format csv".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_numbers_have_ten_significant_digits() {
        assert_eq!(csv_number(1.0), "1.000000000e0");
        assert_eq!(csv_number(0.000123456789012), "1.234567890e-4");
        assert_eq!(csv_number(0.0), "0.000000000e0");
    }

    #[test]
    fn csv_layout() {
        let s = csv("a,b", [vec!["1".into(), "2".into()]]);
        assert_eq!(s, "a,b\n1,2\n");
    }
}
