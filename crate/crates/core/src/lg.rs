//! Three-time Leggett-Garg scenario assembly and inequality checks.
//!
//! For correlators C₁₂, C₂₃, C₁₃ of a dichotomic variable, macrorealism with
//! non-invasive measurability implies
//!
//! ```text
//! −1 ≤ C₁₂ + C₂₃ + C₁₃ ≤ 1 + 2 min{C₁₂, C₂₃, C₁₃}.
//! ```
//!
//! When the measurements are partially invasive, a variable measured in two
//! different contexts need not be the same random variable; the bounds widen
//! by 2Δ₀ on each side, where
//!
//! ```text
//! Δ₀ = ½( |⟨Q₂¹²⟩ − ⟨Q₂²³⟩| + |⟨Q₃¹³⟩ − ⟨Q₃²³⟩| )
//! ```
//!
//! collects the cross-context shifts of the means at t₂ and t₃. A violation
//! of the widened bounds cannot be explained by a classical theory with
//! invasive kicks.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocols::{
    ancilla_general, ancilla_simple, ancilla_simple_with_means, quasi_probability,
    record_protocol, sequential_two_time, JointDistribution,
};
use crate::qcore::{Operator, QuantumState, C64};

/// Σ s₁ s₂ p(s₁, s₂) of a joint distribution.
pub fn correlator(jd: &JointDistribution) -> f64 {
    jd.correlator()
}

/// Slack against the two bounds; a negative margin is a violation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LgMargins {
    /// (C₁₂+C₂₃+C₁₃) − lower bound.
    pub lower: f64,
    /// upper bound − (C₁₂+C₂₃+C₁₃).
    pub upper: f64,
}

impl LgMargins {
    /// Magnitude of the worst violated bound (0 when satisfied).
    pub fn violation(&self) -> f64 {
        (-self.lower).max(-self.upper).max(0.0)
    }
}

/// Standard three-time bounds.
pub fn lg_check(c12: f64, c23: f64, c13: f64) -> LgMargins {
    let sum = c12 + c23 + c13;
    let min = c12.min(c23).min(c13);
    LgMargins {
        lower: sum + 1.0,
        upper: (1.0 + 2.0 * min) - sum,
    }
}

/// Cross-context means entering Δ₀.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContextualMeans {
    /// ⟨Q₂⟩ measured as the later time of the (1,2) pair.
    pub q2_12: f64,
    /// ⟨Q₂⟩ measured as the earlier time of the (2,3) pair.
    pub q2_23: f64,
    /// ⟨Q₃⟩ measured as the later time of the (1,3) pair.
    pub q3_13: f64,
    /// ⟨Q₃⟩ measured as the later time of the (2,3) pair.
    pub q3_23: f64,
}

/// Δ₀ = ½(|⟨Q₂¹²⟩ − ⟨Q₂²³⟩| + |⟨Q₃¹³⟩ − ⟨Q₃²³⟩|).
pub fn delta0(means: &ContextualMeans) -> f64 {
    0.5 * ((means.q2_12 - means.q2_23).abs() + (means.q3_13 - means.q3_23).abs())
}

/// Bounds widened by 2Δ₀ on both sides.
pub fn modified_lg_check(c12: f64, c23: f64, c13: f64, delta0: f64) -> LgMargins {
    let base = lg_check(c12, c23, c13);
    LgMargins {
        lower: base.lower + 2.0 * delta0,
        upper: base.upper + 2.0 * delta0,
    }
}

/// How each pair's correlator is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PairProtocol {
    Sequential,
    Quasi,
    AncillaSimple,
    AncillaGeneral { alpha: C64, beta: C64 },
    Record,
}

impl PairProtocol {
    fn name(&self) -> &'static str {
        match self {
            PairProtocol::Sequential => "sequential",
            PairProtocol::Quasi => "quasi",
            PairProtocol::AncillaSimple => "ancilla_simple",
            PairProtocol::AncillaGeneral { .. } => "ancilla_general",
            PairProtocol::Record => "record",
        }
    }
}

/// A three-time scenario: observable, Hamiltonian, times, initial state, and
/// a protocol choice per pair (12, 23, 13).
#[derive(Debug, Clone)]
pub struct LGScenario {
    pub q: Operator,
    pub h: Operator,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub state: QuantumState,
    pub protocols: [PairProtocol; 3],
}

impl LGScenario {
    pub fn new(
        q: Operator,
        h: Operator,
        times: (f64, f64, f64),
        state: QuantumState,
        protocols: [PairProtocol; 3],
    ) -> Result<Self> {
        let (t1, t2, t3) = times;
        if !(t1 < t2 && t2 < t3) {
            return Err(Error::BadTimeOrder(format!(
                "need t1 < t2 < t3, got ({t1}, {t2}, {t3})"
            )));
        }
        Ok(LGScenario {
            q,
            h,
            t1,
            t2,
            t3,
            state,
            protocols,
        })
    }

    /// Same protocol for all three pairs.
    pub fn uniform(
        q: Operator,
        h: Operator,
        times: (f64, f64, f64),
        state: QuantumState,
        protocol: PairProtocol,
    ) -> Result<Self> {
        Self::new(q, h, times, state, [protocol; 3])
    }
}

/// Correlators, contextual means, Δ₀, and bound evaluations for one scenario.
#[derive(Debug, Clone, Serialize)]
pub struct LGReport {
    #[serde(rename = "C12")]
    pub c12: f64,
    #[serde(rename = "C23")]
    pub c23: f64,
    #[serde(rename = "C13")]
    pub c13: f64,
    pub contextual_means: ContextualMeans,
    pub delta0: f64,
    pub margins: LgMargins,
    pub modified_margins: LgMargins,
    /// Positive when a standard bound is violated, by that amount.
    pub standard_violation: f64,
    pub modified_violation: f64,
    /// Non-empty when a pair protocol could not produce a correlator; the
    /// affected correlators are NaN.
    pub flags: Vec<String>,
}

fn pair_correlator(
    protocol: PairProtocol,
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    ti: f64,
    tj: f64,
) -> Result<(Option<f64>, Option<String>)> {
    match protocol {
        PairProtocol::Sequential => Ok((
            Some(sequential_two_time(state, q, h, ti, tj)?.correlator()),
            None,
        )),
        PairProtocol::Quasi => Ok((
            Some(quasi_probability(state, q, h, ti, tj)?.correlator()),
            None,
        )),
        PairProtocol::AncillaSimple => {
            Ok((ancilla_simple(state, q, h, ti, tj)?.inferred_c12, None))
        }
        PairProtocol::AncillaGeneral { alpha, beta } => {
            let out = ancilla_general(state, q, h, ti, tj, alpha, beta)?;
            match out.inferred_c12 {
                Some(c) => Ok((Some(c), None)),
                None => Ok((None, Some("zero-information ancilla bias".into()))),
            }
        }
        PairProtocol::Record => {
            let out = record_protocol(state, q, h, ti, tj)?;
            if out.decoherent {
                Ok((out.inferred_c12, None))
            } else {
                Ok((None, Some("decoherence condition failed".into())))
            }
        }
    }
}

/// Evaluates a scenario, allowing coincident times (used by τ = 0 scan rows).
fn evaluate_times(
    q: &Operator,
    h: &Operator,
    state: &QuantumState,
    t1: f64,
    t2: f64,
    t3: f64,
    protocols: &[PairProtocol; 3],
) -> Result<LGReport> {
    let pairs = [(t1, t2), (t2, t3), (t1, t3)];
    let mut correlators = [f64::NAN; 3];
    let mut flags = Vec::new();
    for (k, (&(ti, tj), &protocol)) in pairs.iter().zip(protocols.iter()).enumerate() {
        let (value, flag) = pair_correlator(protocol, state, q, h, ti, tj)?;
        match value {
            Some(v) => correlators[k] = v,
            None => {
                let pair_name = ["12", "23", "13"][k];
                flags.push(format!(
                    "{} (pair {pair_name}, protocol {})",
                    flag.unwrap_or_else(|| "no correlator".into()),
                    protocol.name()
                ));
            }
        }
    }

    // Endpoint means always come from the two-ancilla readout: the mean at
    // the earlier time of a pair is context-free (arrow of time), the mean at
    // the later time carries the earlier coupling's context.
    let (_, m12) = ancilla_simple_with_means(state, q, h, t1, t2)?;
    let (_, m23) = ancilla_simple_with_means(state, q, h, t2, t3)?;
    let (_, m13) = ancilla_simple_with_means(state, q, h, t1, t3)?;
    let contextual_means = ContextualMeans {
        q2_12: m12.second_in_context,
        q2_23: m23.first,
        q3_13: m13.second_in_context,
        q3_23: m23.second_in_context,
    };

    let d0 = delta0(&contextual_means);
    let [c12, c23, c13] = correlators;
    let margins = lg_check(c12, c23, c13);
    let modified_margins = modified_lg_check(c12, c23, c13, d0);
    Ok(LGReport {
        c12,
        c23,
        c13,
        contextual_means,
        delta0: d0,
        margins,
        modified_margins,
        standard_violation: margins.violation(),
        modified_violation: modified_margins.violation(),
        flags,
    })
}

pub fn evaluate_scenario(scenario: &LGScenario) -> Result<LGReport> {
    evaluate_times(
        &scenario.q,
        &scenario.h,
        &scenario.state,
        scenario.t1,
        scenario.t2,
        scenario.t3,
        &scenario.protocols,
    )
}

/// One scan row: equal spacing t₂ = t₁ + τ, t₃ = t₁ + 2τ.
#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub tau: f64,
    pub report: LGReport,
}

/// Result of an equal-spacing τ sweep.
#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub rows: Vec<ScanRow>,
    /// Largest standard-bound violation found, and the τ where it occurred.
    pub max_violation: f64,
    pub argmax_tau: Option<f64>,
}

/// Sweeps the equal-spacing scenario over the given τ grid (one report per
/// τ). Grid points evaluate independently and in parallel; rows retain grid
/// order.
pub fn violation_scan(
    q: &Operator,
    h: &Operator,
    state: &QuantumState,
    protocol: PairProtocol,
    t1: f64,
    tau_grid: &[f64],
) -> Result<ScanResult> {
    if tau_grid.is_empty() {
        return Err(Error::InvalidParameter("empty τ grid".into()));
    }
    let protocols = [protocol; 3];
    let rows: Vec<ScanRow> = tau_grid
        .par_iter()
        .map(|&tau| {
            let report =
                evaluate_times(q, h, state, t1, t1 + tau, t1 + 2.0 * tau, &protocols)?;
            Ok(ScanRow { tau, report })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut max_violation = 0.0;
    let mut argmax_tau = None;
    for row in &rows {
        let v = row.report.standard_violation;
        if v.is_finite() && v > max_violation {
            max_violation = v;
            argmax_tau = Some(row.tau);
        }
    }
    Ok(ScanResult {
        rows,
        max_violation,
        argmax_tau,
    })
}

/// Locates the violation maximum by repeated grid refinement around the
/// running argmax. Returns (τ*, violation).
#[allow(clippy::too_many_arguments)]
pub fn refine_max_violation(
    q: &Operator,
    h: &Operator,
    state: &QuantumState,
    protocol: PairProtocol,
    t1: f64,
    tau_lo: f64,
    tau_hi: f64,
    points: usize,
    rounds: usize,
) -> Result<(f64, f64)> {
    let mut lo = tau_lo;
    let mut hi = tau_hi;
    let mut best = (f64::NAN, 0.0);
    for _ in 0..rounds {
        let step = (hi - lo) / (points - 1) as f64;
        let grid: Vec<f64> = (0..points).map(|k| lo + step * k as f64).collect();
        let scan = violation_scan(q, h, state, protocol, t1, &grid)?;
        let tau_star = match scan.argmax_tau {
            Some(t) => t,
            None => return Ok(best),
        };
        best = (tau_star, scan.max_violation);
        lo = (tau_star - step).max(tau_lo);
        hi = (tau_star + step).min(tau_hi);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::SpinModel;
    use std::f64::consts::PI;

    fn spin() -> (Operator, Operator) {
        let sm = SpinModel::z(1.0);
        (sm.q_op(), sm.hamiltonian())
    }

    #[test]
    fn correlator_examples() {
        let (q, h) = spin();
        // Independence: maximally mixed at ωτ = π/2 gives the uniform table.
        let jd = sequential_two_time(
            &QuantumState::maximally_mixed(2),
            &q,
            &h,
            0.0,
            std::f64::consts::FRAC_PI_2,
        )
        .unwrap();
        assert!(correlator(&jd).abs() < 1e-13);
        // Perfect correlation: repeated measurement of an eigenstate.
        let jd = sequential_two_time(&QuantumState::up_z(), &q, &h, 0.0, 0.0).unwrap();
        assert!((correlator(&jd) - 1.0).abs() < 1e-14);
        // Spin-model table yields cos ωτ.
        let jd = sequential_two_time(&QuantumState::plus_y(), &q, &h, 0.0, 1.3).unwrap();
        assert!((correlator(&jd) - 1.3f64.cos()).abs() < 1e-13);
    }

    #[test]
    fn lg_check_bounds() {
        let m = lg_check(-0.5, -0.5, -0.5);
        assert!((m.lower - (-0.5)).abs() < 1e-15);
        assert!(m.upper > 0.0);
        assert!((m.violation() - 0.5).abs() < 1e-15);

        let m = lg_check(0.5, 0.5, -0.5);
        assert!((m.upper - (-0.5)).abs() < 1e-15);
        assert!(m.lower > 0.0);
        assert!((m.violation() - 0.5).abs() < 1e-15);

        let m = lg_check(0.0, 0.0, 0.0);
        assert!(m.lower > 0.0 && m.upper > 0.0);
        assert_eq!(m.violation(), 0.0);
    }

    #[test]
    fn delta0_examples() {
        let equal = ContextualMeans {
            q2_12: 0.3,
            q2_23: 0.3,
            q3_13: -0.2,
            q3_23: -0.2,
        };
        assert_eq!(delta0(&equal), 0.0);

        let shifted = ContextualMeans {
            q2_12: 0.1,
            q2_23: -0.1,
            q3_13: 0.2,
            q3_23: 0.2,
        };
        assert_eq!(delta0(&shifted), 0.1);

        let extreme = ContextualMeans {
            q2_12: 1.0,
            q2_23: -1.0,
            q3_13: 1.0,
            q3_23: -1.0,
        };
        assert_eq!(delta0(&extreme), 2.0);
    }

    #[test]
    fn modified_check_widens_by_exactly_two_delta() {
        let base = lg_check(-0.5, -0.5, -0.5);
        let widened = modified_lg_check(-0.5, -0.5, -0.5, 0.25);
        assert_eq!(widened.lower, base.lower + 2.0 * 0.25);
        assert_eq!(widened.upper, base.upper + 2.0 * 0.25);
        // Sum −1.5 with Δ₀ = 0.25 exactly saturates the widened lower bound.
        assert!(widened.lower.abs() < 1e-15);
        // Δ₀ = 0.3 leaves slack: a classical invasive explanation survives.
        let slack = modified_lg_check(-0.5, -0.5, -0.5, 0.3);
        assert!((slack.lower - 0.1).abs() < 1e-12);
        // Δ₀ = 0 reduces to the standard check.
        let zero = modified_lg_check(-0.5, -0.5, -0.5, 0.0);
        assert_eq!(zero.lower, base.lower);
        assert_eq!(zero.upper, base.upper);
    }

    #[test]
    fn equal_spacing_violation_at_two_thirds_pi() {
        let (q, h) = spin();
        let tau = 2.0 * PI / 3.0;
        let scenario = LGScenario::uniform(
            q,
            h,
            (0.0, tau, 2.0 * tau),
            QuantumState::up_z(),
            PairProtocol::Sequential,
        )
        .unwrap();
        let report = evaluate_scenario(&scenario).unwrap();
        assert!((report.c12 - (-0.5)).abs() < 1e-12);
        assert!((report.c23 - (-0.5)).abs() < 1e-12);
        assert!((report.c13 - (-0.5)).abs() < 1e-12);
        assert!((report.standard_violation - 0.5).abs() < 1e-12);
        assert!(report.flags.is_empty());
    }

    #[test]
    fn quantum_reports_are_protocol_independent() {
        let (q, h) = spin();
        let times = (0.0, 0.9, 1.8);
        let psi = QuantumState::plus_y();
        let mut reports = Vec::new();
        for protocol in [
            PairProtocol::Sequential,
            PairProtocol::Quasi,
            PairProtocol::AncillaSimple,
        ] {
            let scenario =
                LGScenario::uniform(q.clone(), h.clone(), times, psi.clone(), protocol).unwrap();
            reports.push(evaluate_scenario(&scenario).unwrap());
        }
        for pair in reports.windows(2) {
            assert!((pair[0].c12 - pair[1].c12).abs() < 1e-10);
            assert!((pair[0].c23 - pair[1].c23).abs() < 1e-10);
            assert!((pair[0].c13 - pair[1].c13).abs() < 1e-10);
            assert!((pair[0].delta0 - pair[1].delta0).abs() < 1e-12);
        }
    }

    #[test]
    fn record_rows_are_flagged_when_inapplicable() {
        let (q, h) = spin();
        let scenario = LGScenario::uniform(
            q,
            h,
            (0.0, 1.0, 2.0),
            QuantumState::plus_x(),
            PairProtocol::Record,
        )
        .unwrap();
        let report = evaluate_scenario(&scenario).unwrap();
        assert!(!report.flags.is_empty());
        assert!(report.c12.is_nan());
        assert!(report.standard_violation.is_nan() || report.standard_violation == 0.0);
    }

    #[test]
    fn scan_finds_known_optimum_on_grid() {
        let (q, h) = spin();
        let tau_star = 2.0 * PI / 3.0;
        let grid = vec![0.5, 1.0, tau_star, 2.5];
        let scan = violation_scan(
            &q,
            &h,
            &QuantumState::up_z(),
            PairProtocol::Sequential,
            0.0,
            &grid,
        )
        .unwrap();
        assert_eq!(scan.rows.len(), 4);
        assert!((scan.max_violation - 0.5).abs() < 1e-12);
        assert_eq!(scan.argmax_tau, Some(tau_star));
    }

    #[test]
    fn scan_with_zero_tau_is_satisfied() {
        let (q, h) = spin();
        let scan = violation_scan(
            &q,
            &h,
            &QuantumState::up_z(),
            PairProtocol::Sequential,
            0.0,
            &[0.0],
        )
        .unwrap();
        let report = &scan.rows[0].report;
        assert!((report.c12 - 1.0).abs() < 1e-12);
        assert!((report.c13 - 1.0).abs() < 1e-12);
        assert!(report.margins.lower >= 0.0);
        assert!(report.margins.upper >= -1e-12);
        assert_eq!(scan.max_violation, 0.0);
    }

    #[test]
    fn arrow_of_time_in_first_pair_marginals() {
        let (q, h) = spin();
        let psi = QuantumState::plus_y();
        let (t1, t2) = (0.4, 1.6);
        let jd = sequential_two_time(&psi, &q, &h, t1, t2).unwrap();
        for s in crate::qcore::Sign::BOTH {
            let with_later = jd.marginal_earlier(s);
            let alone =
                crate::protocols::single_time_probability(&psi, &q, &h, t1, s).unwrap();
            assert!((with_later - alone).abs() < 1e-13);
        }
    }

    #[test]
    fn scenario_requires_ordered_times() {
        let (q, h) = spin();
        assert!(matches!(
            LGScenario::uniform(
                q,
                h,
                (0.0, 2.0, 1.0),
                QuantumState::up_z(),
                PairProtocol::Sequential
            ),
            Err(Error::BadTimeOrder(_))
        ));
    }
}
