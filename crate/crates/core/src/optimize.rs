//! Mean-photon-number optimization per distance, secure-distance search and key-rate curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{QkdError, Result};
use crate::rates::{key_rate, Protocol, RateBreakdown, SystemParams};

pub const MU_MIN: f64 = 1e-4;
pub const MU_MAX: f64 = 0.999;
/// Points of the logarithmic scan that precedes golden-section refinement.
pub const GRID_POINTS: usize = 256;
/// Relative width in μ at which golden-section refinement stops.
pub const MU_REL_TOL: f64 = 1e-6;
/// Key rates at or below this many bits per pulse count as insecure.
pub const SECURE_THRESHOLD: f64 = 1e-10;
pub const DISTANCE_BRACKET_KM: f64 = 200.0;
pub const DISTANCE_RESOLUTION_KM: f64 = 0.1;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub length: f64,
    pub mu_opt: f64,
    pub k_opt: f64,
    pub breakdown: RateBreakdown,
}

fn log_grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(move |i| {
        if i + 1 == n {
            hi
        } else {
            (a + (b - a) * i as f64 / (n - 1) as f64).exp()
        }
    })
}

/// Maximizes `f` over `[lo, hi]` by golden-section search, returning the best point seen.
fn golden_max<F>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    rel_tol: f64,
    best: (f64, f64),
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> Result<f64>,
{
    let mut best = best;
    let mut consider = |x: f64, v: f64| {
        if v > best.1 {
            best = (x, v);
        }
    };
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    consider(x1, f1);
    consider(x2, f2);
    while hi - lo > rel_tol * 0.5 * (hi + lo) {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
            consider(x1, f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
            consider(x2, f2);
        }
    }
    Ok(best)
}

/// Maximizes the key rate over μ ∈ [10⁻⁴, 0.999] at the given length: a logarithmic scan
/// followed by golden-section refinement between the neighbours of the best scan point.
///
/// The unclamped rate is maximized, so insecure distances still report the least-bad μ;
/// `k_opt` is 0 there.
pub fn optimize_mu(protocol: Protocol, base: &SystemParams, length: f64) -> Result<CurvePoint> {
    let at = base.with_length(length);
    at.with_mu(0.5 * (MU_MIN + MU_MAX)).validate()?;
    let margin = |mu: f64| key_rate(protocol, &at.with_mu(mu)).map(|b| b.k_margin);

    let grid: Vec<f64> = log_grid(MU_MIN, MU_MAX, GRID_POINTS).collect();
    let values = grid
        .iter()
        .map(|&mu| margin(mu))
        .collect::<Result<Vec<_>>>()?;
    let (best_idx, _) = values
        .iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );

    let lo = grid[best_idx.saturating_sub(1)];
    let hi = grid[(best_idx + 1).min(GRID_POINTS - 1)];
    let (mu_opt, _) = golden_max(
        margin,
        lo,
        hi,
        MU_REL_TOL,
        (grid[best_idx], values[best_idx]),
    )?;

    let breakdown = key_rate(protocol, &at.with_mu(mu_opt))?;
    Ok(CurvePoint {
        length,
        mu_opt,
        k_opt: breakdown.k,
        breakdown,
    })
}

/// Largest length at which the optimized key rate stays above [`SECURE_THRESHOLD`], found by
/// bisection on `[0, 200]` km to 0.1 km. Returns 0 when insecure at zero length.
pub fn secure_distance(protocol: Protocol, base: &SystemParams) -> Result<f64> {
    let secure = |l: f64| optimize_mu(protocol, base, l).map(|p| p.k_opt > SECURE_THRESHOLD);
    if !secure(0.0)? {
        return Ok(0.0);
    }
    if secure(DISTANCE_BRACKET_KM)? {
        return Err(QkdError::BracketExceeded(DISTANCE_BRACKET_KM));
    }
    let (mut lo, mut hi) = (0.0, DISTANCE_BRACKET_KM);
    while hi - lo > DISTANCE_RESOLUTION_KM {
        let mid = 0.5 * (lo + hi);
        if secure(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// One optimized point per length, in input order. Lengths are evaluated in parallel on the
/// current rayon pool.
pub fn curve(protocol: Protocol, base: &SystemParams, lengths: &[f64]) -> Result<Vec<CurvePoint>> {
    if lengths
        .windows(2)
        .any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt()))
    {
        return Err(QkdError::InvalidParam {
            field: "l_grid",
            reason: "lengths must be sorted ascending".into(),
        });
    }
    lengths
        .par_iter()
        .map(|&l| optimize_mu(protocol, base, l))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rates::key_rate;

    fn reference() -> SystemParams {
        SystemParams::reference(0.0, 0.1)
    }

    fn uniform_grid_best(protocol: Protocol, at: &SystemParams, n: usize) -> (f64, f64) {
        (0..n)
            .map(|i| MU_MIN + (MU_MAX - MU_MIN) * i as f64 / (n - 1) as f64)
            .map(|mu| (mu, key_rate(protocol, &at.with_mu(mu)).unwrap().k))
            .fold(
                (0.0, f64::NEG_INFINITY),
                |a, b| if b.1 > a.1 { b } else { a },
            )
    }

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) =
            golden_max(|x| Ok(-(x - 0.3f64).powi(2)), 0.1, 0.9, 1e-9, (0.1, -0.04)).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!(v <= 0.0 && v > -1e-15);
    }

    #[test]
    fn beyond_cutoff_is_zero() {
        for protocol in Protocol::ALL {
            let p = optimize_mu(protocol, &reference(), 120.0).unwrap();
            assert_eq!(p.k_opt, 0.0);
            assert!(p.mu_opt > 0.0 && p.mu_opt < 1.0);
        }
    }

    #[test]
    fn bb84_mu_shrinks_with_distance() {
        let near = optimize_mu(Protocol::Bb84, &reference(), 10.0).unwrap();
        let far = optimize_mu(Protocol::Bb84, &reference(), 30.0).unwrap();
        assert!(near.mu_opt > far.mu_opt);
        let far45 = optimize_mu(Protocol::Bb84, &reference(), 45.0).unwrap();
        assert!(near.mu_opt > far45.mu_opt);

        // independent dense scan agrees on the ordering
        let dense = |l: f64| uniform_grid_best(Protocol::Bb84, &reference().with_length(l), 4000).0;
        assert!(dense(10.0) > dense(30.0));
        assert!((dense(10.0) - near.mu_opt).abs() < 1e-3);
    }

    #[test]
    fn qutrit_tolerates_larger_mu() {
        for l in [0.0, 10.0, 20.0, 30.0] {
            let b = optimize_mu(Protocol::Bb84, &reference(), l).unwrap();
            let q = optimize_mu(Protocol::Qutrit, &reference(), l).unwrap();
            assert!(b.k_opt > 0.0);
            assert!(q.mu_opt >= b.mu_opt, "l = {l}: {} < {}", q.mu_opt, b.mu_opt);
        }
    }

    #[test]
    fn never_loses_to_uniform_grid() {
        for protocol in Protocol::ALL {
            for l in [0.0, 15.0, 30.0, 40.0] {
                let at = reference().with_length(l);
                let p = optimize_mu(protocol, &reference(), l).unwrap();
                let (_, grid_best) = uniform_grid_best(protocol, &at, 2000);
                assert!(p.k_opt >= grid_best - 1e-12, "{protocol} l={l}");
            }
        }
    }

    #[test]
    fn insecure_at_zero_reports_zero_distance() {
        let noisy = SystemParams {
            p_d: 0.4,
            ..reference()
        };
        for protocol in Protocol::ALL {
            assert_eq!(secure_distance(protocol, &noisy).unwrap(), 0.0);
        }
    }

    #[test]
    fn bracket_exceeded_is_reported() {
        let lossless = SystemParams {
            alpha: 0.0,
            ..reference()
        };
        assert_eq!(
            secure_distance(Protocol::Bb84, &lossless),
            Err(QkdError::BracketExceeded(DISTANCE_BRACKET_KM))
        );
    }

    #[test]
    fn bisection_is_consistent() {
        for protocol in Protocol::ALL {
            let d = secure_distance(protocol, &reference()).unwrap();
            assert!(optimize_mu(protocol, &reference(), d - 0.2).unwrap().k_opt > 0.0);
            assert_eq!(
                optimize_mu(protocol, &reference(), d + 0.2).unwrap().k_opt,
                0.0
            );
        }
    }

    #[test]
    fn curve_preserves_order_and_matches_singletons() {
        let lengths: Vec<f64> = (0..=60).map(f64::from).collect();
        let pts = curve(Protocol::Qutrit, &reference(), &lengths).unwrap();
        assert_eq!(pts.len(), lengths.len());
        for (p, l) in pts.iter().zip(&lengths) {
            assert_eq!(p.length, *l);
        }
        for w in pts.windows(2) {
            assert!(w[1].k_opt <= w[0].k_opt);
        }
        let single = curve(Protocol::Qutrit, &reference(), &[17.0]).unwrap();
        assert_eq!(
            single[0],
            optimize_mu(Protocol::Qutrit, &reference(), 17.0).unwrap()
        );
        assert!(curve(Protocol::Qutrit, &reference(), &[2.0, 1.0]).is_err());
    }

    #[test]
    fn invalid_base_params_are_rejected() {
        let bad = SystemParams {
            eta: 0.0,
            ..reference()
        };
        assert!(optimize_mu(Protocol::Bb84, &bad, 0.0).is_err());
    }
}
