//! Classical macrorealist hidden-variable baselines.
//!
//! A dichotomic trajectory Q(t) ∈ {±1} evolves under one of two dynamics:
//!
//! - a square wave of angular frequency ω with uniformly random initial
//!   phase, whose exact correlator is the triangle wave
//!   C(τ) = 1 − 2ωτ/π on ωτ ∈ [0, π] (period 2π, symmetric);
//! - a telegraph process with constant flip rate λ, whose stationary
//!   correlator is e^{−2λτ}.
//!
//! An ancilla coupling at a measurement time may *kick* the trajectory: when
//! the trajectory sits in the coupled state s\* the interaction rerandomizes
//! the subsequent phase/state (drawn from the stationary distribution) with
//! probability η. A trajectory in the other state is untouched, an ideal
//! negative result. These kick models are the classical, invasive
//! explanations the invasiveness-modified inequalities bound: every such
//! model satisfies the widened bounds, while the quantum pipeline violates
//! the standard ones.
//!
//! Runs are reproducible and independent of batch partitioning: run i of
//! pair experiment k draws from a ChaCha stream keyed by the master seed
//! with stream id k·n_runs + i.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::lg::{delta0, lg_check, modified_lg_check, ContextualMeans, LgMargins};
use crate::qcore::Sign;

/// Trajectory dynamics family.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dynamics {
    /// Deterministic ±1 oscillation with uniformly random initial phase.
    SquareWave { omega: f64 },
    /// Markov jump process with constant flip rate λ.
    Telegraph { lambda: f64 },
}

/// Measurement back-action: rerandomize the trajectory with probability
/// `strength` when the coupling finds it in state `coupling_sign`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Kick {
    pub coupling_sign: Sign,
    pub strength: f64,
}

/// A complete classical model: dynamics, kick, and initial distribution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HiddenModel {
    pub dynamics: Dynamics,
    pub kick: Kick,
    /// P(Q(0) = +1).
    pub p_plus: f64,
}

impl HiddenModel {
    pub fn new(dynamics: Dynamics, kick: Kick, p_plus: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&kick.strength) {
            return Err(Error::InvalidParameter(format!(
                "kick strength must lie in [0, 1], got {}",
                kick.strength
            )));
        }
        if let Dynamics::Telegraph { lambda } = dynamics {
            if lambda < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "telegraph flip rate must be ≥ 0, got {lambda}"
                )));
            }
        }
        if let Dynamics::SquareWave { omega } = dynamics {
            if omega <= 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "square-wave frequency must be > 0, got {omega}"
                )));
            }
        }
        if !(0.0..=1.0).contains(&p_plus) {
            return Err(Error::InvalidParameter(format!(
                "p_plus must lie in [0, 1], got {p_plus}"
            )));
        }
        Ok(HiddenModel {
            dynamics,
            kick,
            p_plus,
        })
    }

    /// Kick-free square wave with symmetric initial distribution.
    pub fn free_square_wave(omega: f64) -> Self {
        HiddenModel {
            dynamics: Dynamics::SquareWave { omega },
            kick: Kick {
                coupling_sign: Sign::Plus,
                strength: 0.0,
            },
            p_plus: 0.5,
        }
    }

    /// Kick-free telegraph process with symmetric initial distribution.
    pub fn free_telegraph(lambda: f64) -> Self {
        HiddenModel {
            dynamics: Dynamics::Telegraph { lambda },
            kick: Kick {
                coupling_sign: Sign::Plus,
                strength: 0.0,
            },
            p_plus: 0.5,
        }
    }

    /// Exact correlator of the kick-free process started from the symmetric
    /// distribution.
    pub fn free_correlator(&self, tau: f64) -> f64 {
        match self.dynamics {
            Dynamics::SquareWave { omega } => triangle_correlator(omega * tau),
            Dynamics::Telegraph { lambda } => (-2.0 * lambda * tau).exp(),
        }
    }
}

/// Triangle wave: 1 − 2θ/π on [0, π], reflected and 2π-periodic.
pub fn triangle_correlator(theta: f64) -> f64 {
    let per = theta.abs().rem_euclid(2.0 * PI);
    let folded = if per <= PI { per } else { 2.0 * PI - per };
    1.0 - 2.0 * folded / PI
}

/// A Monte Carlo estimate with its standard error (sample std / √n).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_runs: u64,
    pub seed: u64,
}

impl MCEstimate {
    /// Mean of ±1 samples of which `n_plus` were +1.
    fn from_signs(n_plus: u64, n: u64, seed: u64) -> Self {
        let mean = (2.0 * n_plus as f64 - n as f64) / n as f64;
        // Samples are ±1: Σx² = n, so the sample variance is n(1−m²)/(n−1).
        let var = if n > 1 {
            (n as f64) * (1.0 - mean * mean) / (n as f64 - 1.0)
        } else {
            0.0
        };
        MCEstimate {
            value: mean,
            stderr: (var / n as f64).sqrt(),
            n_runs: n,
            seed,
        }
    }
}

/// Whether the ancilla coupling (and hence the kick) acts at the first time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementContext {
    MeasuredAtFirst,
    Unmeasured,
}

/// Empirical results of one pair experiment.
#[derive(Debug, Clone, Serialize)]
pub struct PairStats {
    /// counts[i][j]: occurrences of (Q(t_i), Q(t_j)) with index 0 ↦ +1.
    pub counts: [[u64; 2]; 2],
    pub n_runs: u64,
    pub seed: u64,
    pub mean_first: MCEstimate,
    pub mean_second: MCEstimate,
    pub correlator: MCEstimate,
}

impl PairStats {
    pub fn probability(&self, s1: Sign, s2: Sign) -> f64 {
        self.counts[s1.index()][s2.index()] as f64 / self.n_runs as f64
    }
}

#[derive(Clone, Copy)]
enum Trajectory {
    // Q(t) = sgn(sin(ω(t − anchor) + phase))
    Square { omega: f64, phase: f64, anchor: f64 },
    Telegraph { lambda: f64, q: i8, at: f64 },
}

impl Trajectory {
    fn init(model: &HiddenModel, rng: &mut ChaCha8Rng) -> Trajectory {
        let s0 = if rng.gen_bool(model.p_plus) { 1i8 } else { -1 };
        match model.dynamics {
            Dynamics::SquareWave { omega } => {
                // Uniform phase conditioned on the drawn initial sign:
                // sin ≥ 0 on [0, π), sin < 0 on [π, 2π).
                let base: f64 = rng.gen_range(0.0..PI);
                let phase = if s0 > 0 { base } else { base + PI };
                Trajectory::Square {
                    omega,
                    phase,
                    anchor: 0.0,
                }
            }
            Dynamics::Telegraph { lambda } => Trajectory::Telegraph {
                lambda,
                q: s0,
                at: 0.0,
            },
        }
    }

    /// Advances to time t and returns Q(t).
    fn sample_at(&mut self, t: f64, rng: &mut ChaCha8Rng) -> i8 {
        match self {
            Trajectory::Square {
                omega,
                phase,
                anchor,
            } => {
                let s = (*omega * (t - *anchor) + *phase).sin();
                if s >= 0.0 {
                    1
                } else {
                    -1
                }
            }
            Trajectory::Telegraph { lambda, q, at } => {
                let dt = t - *at;
                if dt > 0.0 && *lambda > 0.0 {
                    // Parity of the Poisson flip count over dt.
                    let p_flip = 0.5 * (1.0 - (-2.0 * *lambda * dt).exp());
                    if rng.gen_bool(p_flip) {
                        *q = -*q;
                    }
                }
                *at = t;
                *q
            }
        }
    }

    /// Rerandomizes the future of the trajectory from the stationary
    /// distribution, anchored at time t.
    fn rerandomize(&mut self, t: f64, rng: &mut ChaCha8Rng) {
        match self {
            Trajectory::Square { phase, anchor, .. } => {
                *phase = rng.gen_range(0.0..2.0 * PI);
                *anchor = t;
            }
            Trajectory::Telegraph { q, at, .. } => {
                *q = if rng.gen_bool(0.5) { 1 } else { -1 };
                *at = t;
            }
        }
    }
}

fn run_one(
    model: &HiddenModel,
    ti: f64,
    tj: f64,
    context: MeasurementContext,
    rng: &mut ChaCha8Rng,
) -> (i8, i8) {
    let mut traj = Trajectory::init(model, rng);
    let qi = traj.sample_at(ti, rng);
    if context == MeasurementContext::MeasuredAtFirst
        && qi == sign_value(model.kick.coupling_sign)
        && model.kick.strength > 0.0
        && rng.gen_bool(model.kick.strength)
    {
        traj.rerandomize(ti, rng);
    }
    let qj = traj.sample_at(tj, rng);
    (qi, qj)
}

fn sign_value(s: Sign) -> i8 {
    match s {
        Sign::Plus => 1,
        Sign::Minus => -1,
    }
}

/// Samples `n_runs` trajectories, optionally applying the coupling kick at
/// t_i, and tallies (Q(t_i), Q(t_j)).
///
/// The recorded first-time value is the pre-kick value (detection happens at
/// the coupling), so the kick influences only the later reading.
pub fn simulate_pair(
    model: &HiddenModel,
    ti: f64,
    tj: f64,
    n_runs: u64,
    seed: u64,
    context: MeasurementContext,
) -> Result<PairStats> {
    if tj < ti {
        return Err(Error::BadTimeOrder(format!("tj = {tj} < ti = {ti}")));
    }
    if n_runs == 0 {
        return Err(Error::InvalidParameter("n_runs must be ≥ 1".into()));
    }
    HiddenModel::new(model.dynamics, model.kick, model.p_plus)?;

    let counts = (0..n_runs)
        .into_par_iter()
        .fold(
            || [[0u64; 2]; 2],
            |mut acc, run| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(run);
                let (qi, qj) = run_one(model, ti, tj, context, &mut rng);
                let i = if qi > 0 { 0 } else { 1 };
                let j = if qj > 0 { 0 } else { 1 };
                acc[i][j] += 1;
                acc
            },
        )
        .reduce(
            || [[0u64; 2]; 2],
            |mut a, b| {
                for i in 0..2 {
                    for j in 0..2 {
                        a[i][j] += b[i][j];
                    }
                }
                a
            },
        );

    let n_first_plus = counts[0][0] + counts[0][1];
    let n_second_plus = counts[0][0] + counts[1][0];
    let n_same = counts[0][0] + counts[1][1];
    Ok(PairStats {
        counts,
        n_runs,
        seed,
        mean_first: MCEstimate::from_signs(n_first_plus, n_runs, seed),
        mean_second: MCEstimate::from_signs(n_second_plus, n_runs, seed),
        correlator: MCEstimate::from_signs(n_same, n_runs, seed),
    })
}

/// Contextual means with Monte Carlo errors.
#[derive(Debug, Clone, Serialize)]
pub struct ContextualMeansMc {
    pub q2_12: MCEstimate,
    pub q2_23: MCEstimate,
    pub q3_13: MCEstimate,
    pub q3_23: MCEstimate,
}

/// Empirical three-time report: correlators, contextual means, Δ₀, and both
/// bound evaluations with propagated standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct EmpiricalLgReport {
    #[serde(rename = "C12")]
    pub c12: MCEstimate,
    #[serde(rename = "C23")]
    pub c23: MCEstimate,
    #[serde(rename = "C13")]
    pub c13: MCEstimate,
    pub means: ContextualMeansMc,
    pub delta0: f64,
    pub delta0_stderr: f64,
    pub margins: LgMargins,
    pub modified_margins: LgMargins,
    /// Standard error on the standard margins (correlator errors combined).
    pub margins_stderr: f64,
    /// Standard error on the modified margins (adds the Δ₀ contribution).
    pub modified_margins_stderr: f64,
}

/// Runs the three pair experiments in their proper contexts: the coupling
/// acts at the earlier time of each pair, so the later reading carries the
/// kick while the earlier one is untouched (arrow of time).
pub fn lg_suite(
    model: &HiddenModel,
    t1: f64,
    t2: f64,
    t3: f64,
    n_runs: u64,
    seed: u64,
) -> Result<EmpiricalLgReport> {
    if !(t1 < t2 && t2 < t3) {
        return Err(Error::BadTimeOrder(format!(
            "need t1 < t2 < t3, got ({t1}, {t2}, {t3})"
        )));
    }
    let pair12 = simulate_pair(
        model,
        t1,
        t2,
        n_runs,
        derive_seed(seed, 1),
        MeasurementContext::MeasuredAtFirst,
    )?;
    let pair23 = simulate_pair(
        model,
        t2,
        t3,
        n_runs,
        derive_seed(seed, 2),
        MeasurementContext::MeasuredAtFirst,
    )?;
    let pair13 = simulate_pair(
        model,
        t1,
        t3,
        n_runs,
        derive_seed(seed, 3),
        MeasurementContext::MeasuredAtFirst,
    )?;

    let means = ContextualMeansMc {
        q2_12: pair12.mean_second,
        q2_23: pair23.mean_first,
        q3_13: pair13.mean_second,
        q3_23: pair23.mean_second,
    };
    let mean_values = ContextualMeans {
        q2_12: means.q2_12.value,
        q2_23: means.q2_23.value,
        q3_13: means.q3_13.value,
        q3_23: means.q3_23.value,
    };
    let d0 = delta0(&mean_values);
    let d0_stderr = 0.5
        * (means.q2_12.stderr.powi(2)
            + means.q2_23.stderr.powi(2)
            + means.q3_13.stderr.powi(2)
            + means.q3_23.stderr.powi(2))
        .sqrt();

    let (c12, c23, c13) = (pair12.correlator, pair23.correlator, pair13.correlator);
    let margins = lg_check(c12.value, c23.value, c13.value);
    let modified_margins = modified_lg_check(c12.value, c23.value, c13.value, d0);
    let margins_stderr =
        (c12.stderr.powi(2) + c23.stderr.powi(2) + c13.stderr.powi(2)).sqrt();
    let modified_margins_stderr =
        (margins_stderr.powi(2) + 4.0 * d0_stderr.powi(2)).sqrt();

    Ok(EmpiricalLgReport {
        c12,
        c23,
        c13,
        means,
        delta0: d0,
        delta0_stderr: d0_stderr,
        margins,
        modified_margins,
        margins_stderr,
        modified_margins_stderr,
    })
}

/// SplitMix64 step, used to decorrelate seeds derived from one master seed
/// (per-pair inside [`lg_suite`], per-row in scan drivers).
pub fn derive_seed(master: u64, salt: u64) -> u64 {
    let mut z = master ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    const N: u64 = 40_000;

    #[test]
    fn seeded_runs_are_reproducible() {
        let model = HiddenModel::free_telegraph(0.7);
        let a = simulate_pair(&model, 0.0, 1.0, 5000, 42, MeasurementContext::MeasuredAtFirst)
            .unwrap();
        let b = simulate_pair(&model, 0.0, 1.0, 5000, 42, MeasurementContext::MeasuredAtFirst)
            .unwrap();
        assert_eq!(a.counts, b.counts);
        let c = simulate_pair(&model, 0.0, 1.0, 5000, 43, MeasurementContext::MeasuredAtFirst)
            .unwrap();
        assert_ne!(a.counts, c.counts);
    }

    #[test]
    fn square_wave_matches_triangle_correlator() {
        let model = HiddenModel::free_square_wave(1.0);
        for &tau in &[0.4, 1.2, 2.0, 2.8] {
            let stats = simulate_pair(
                &model,
                0.0,
                tau,
                N,
                7,
                MeasurementContext::MeasuredAtFirst,
            )
            .unwrap();
            let exact = triangle_correlator(tau);
            let dev = (stats.correlator.value - exact).abs();
            assert!(
                dev <= 3.0 * stats.correlator.stderr,
                "tau {tau}: dev {dev:.4} > 3σ = {:.4}",
                3.0 * stats.correlator.stderr
            );
        }
    }

    #[test]
    fn telegraph_matches_exponential_correlator() {
        let lambda = 0.6;
        let model = HiddenModel::free_telegraph(lambda);
        for &tau in &[0.3, 1.0, 2.1] {
            let stats = simulate_pair(
                &model,
                0.0,
                tau,
                N,
                11,
                MeasurementContext::MeasuredAtFirst,
            )
            .unwrap();
            let exact = (-2.0 * lambda * tau).exp();
            let dev = (stats.correlator.value - exact).abs();
            assert!(dev <= 3.0 * stats.correlator.stderr.max(1e-3));
        }
    }

    #[test]
    fn kick_free_runs_ignore_the_context() {
        let model = HiddenModel::free_square_wave(1.0);
        let measured =
            simulate_pair(&model, 0.0, 1.3, 5000, 5, MeasurementContext::MeasuredAtFirst)
                .unwrap();
        let unmeasured =
            simulate_pair(&model, 0.0, 1.3, 5000, 5, MeasurementContext::Unmeasured).unwrap();
        // η = 0 draws nothing extra, so the streams coincide exactly.
        assert_eq!(measured.counts, unmeasured.counts);
    }

    #[test]
    fn frozen_telegraph_kick_shifts_the_conditional_mean() {
        // λ = 0 freezes the dynamics; a full-strength kick on the + side
        // sends P(+) from p₊ to p₊(1−η) + p₊η/2, so the mean drops by ηp₊
        // relative to the unmeasured context.
        let eta = 1.0;
        let model = HiddenModel::new(
            Dynamics::Telegraph { lambda: 0.0 },
            Kick {
                coupling_sign: Sign::Plus,
                strength: eta,
            },
            0.5,
        )
        .unwrap();
        let measured =
            simulate_pair(&model, 0.0, 2.0, N, 3, MeasurementContext::MeasuredAtFirst).unwrap();
        let unmeasured =
            simulate_pair(&model, 0.0, 2.0, N, 3, MeasurementContext::Unmeasured).unwrap();
        let shift = measured.mean_second.value - unmeasured.mean_second.value;
        let expected = -eta * 0.5;
        let sigma = (measured.mean_second.stderr.powi(2)
            + unmeasured.mean_second.stderr.powi(2))
        .sqrt();
        assert!(
            (shift - expected).abs() <= 3.0 * sigma,
            "shift {shift:.4}, expected {expected:.4}"
        );
        // The first-time reading is pre-kick, hence context-free.
        assert!(
            (measured.mean_first.value - unmeasured.mean_first.value).abs()
                <= 3.0 * (2.0f64).sqrt() * measured.mean_first.stderr
        );
    }

    #[test]
    fn kick_free_square_wave_saturates_lower_bound() {
        let tau = 2.0 * PI / 3.0;
        let model = HiddenModel::free_square_wave(1.0);
        let report = lg_suite(&model, 0.0, tau, 2.0 * tau, N, 19).unwrap();
        let sum = report.c12.value + report.c23.value + report.c13.value;
        assert!(
            (sum + 1.0).abs() <= 3.0 * report.margins_stderr,
            "sum {sum:.4}"
        );
        // Equal contexts: Δ₀ consistent with zero.
        assert!(report.delta0 <= 3.0 * report.delta0_stderr.max(1e-4));
    }

    #[test]
    fn kick_free_telegraph_obeys_the_standard_bounds() {
        let model = HiddenModel::free_telegraph(0.5);
        for &(a, b, c) in &[(0.0, 0.8, 1.6), (0.0, 1.5, 3.0)] {
            let report = lg_suite(&model, a, b, c, N, 31).unwrap();
            let slack = 3.0 * report.margins_stderr;
            assert!(report.margins.lower >= -slack, "lower {}", report.margins.lower);
            assert!(report.margins.upper >= -slack, "upper {}", report.margins.upper);
        }
    }

    #[test]
    fn classical_models_satisfy_the_widened_bounds() {
        let models = [
            HiddenModel::new(
                Dynamics::SquareWave { omega: 1.0 },
                Kick {
                    coupling_sign: Sign::Plus,
                    strength: 0.7,
                },
                0.5,
            )
            .unwrap(),
            HiddenModel::new(
                Dynamics::Telegraph { lambda: 0.4 },
                Kick {
                    coupling_sign: Sign::Minus,
                    strength: 1.0,
                },
                0.3,
            )
            .unwrap(),
        ];
        for (k, model) in models.iter().enumerate() {
            let report = lg_suite(model, 0.0, 1.1, 2.2, N, 100 + k as u64).unwrap();
            let slack = 3.0 * report.modified_margins_stderr;
            assert!(
                report.modified_margins.lower >= -slack,
                "model {k}: lower {}",
                report.modified_margins.lower
            );
            assert!(
                report.modified_margins.upper >= -slack,
                "model {k}: upper {}",
                report.modified_margins.upper
            );
        }
    }

    #[test]
    fn model_validation() {
        assert!(HiddenModel::new(
            Dynamics::Telegraph { lambda: -1.0 },
            Kick {
                coupling_sign: Sign::Plus,
                strength: 0.0
            },
            0.5
        )
        .is_err());
        assert!(HiddenModel::new(
            Dynamics::SquareWave { omega: 1.0 },
            Kick {
                coupling_sign: Sign::Plus,
                strength: 1.5
            },
            0.5
        )
        .is_err());
    }

    #[test]
    fn biased_initial_distribution_is_respected() {
        let model = HiddenModel::new(
            Dynamics::Telegraph { lambda: 0.0 },
            Kick {
                coupling_sign: Sign::Plus,
                strength: 0.0,
            },
            0.8,
        )
        .unwrap();
        let stats =
            simulate_pair(&model, 0.0, 1.0, N, 23, MeasurementContext::Unmeasured).unwrap();
        assert!((stats.mean_first.value - 0.6).abs() <= 3.0 * stats.mean_first.stderr);
    }
}
