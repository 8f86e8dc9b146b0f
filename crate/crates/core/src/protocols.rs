//! Measurement protocols for the two-time correlator and the NSIT diagnostic.
//!
//! Four routes to C₁₂ = ⟨½{Q(t₁),Q(t₂)}⟩:
//!
//! - [`sequential_two_time`]: projective measurements at both times,
//!   p(s₁,s₂) = Tr(P_{s₂}(t₂) P_{s₁}(t₁) ρ P_{s₁}(t₁));
//! - [`quasi_probability`]: q(s₁,s₂) = Re Tr(P_{s₂}(t₂) P_{s₁}(t₁) ρ),
//!   possibly negative, marginal-preserving, same correlator;
//! - [`ancilla_simple`] / [`ancilla_general`]: a two-state ancilla coupled
//!   by CNOT gates at t₁ (flip on Q = +1) and t₂ (flip on Q = −1) ends up
//!   registering whether Q carried the same or different sign, and nothing
//!   more;
//! - [`record_protocol`]: when ⟨D̂⟩ = 0 the same/diff branches are
//!   orthogonal and a single projective measurement of the record projector
//!   yields p(same) directly.
//!
//! All four agree on the correlator; they differ in what else they disturb,
//! which is what [`nsit_deviation`] quantifies.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::histories::{build_histories, ProjectiveGrid, DEFAULT_DECOHERENCE_TOL};
use crate::qcore::{c, heisenberg, projector, unitary, Operator, QuantumState, Sign, C64};
use crate::twotime::build_frame;

/// Joint outcome distribution over (s₁, s₂) ∈ {±1}².
///
/// True probabilities are nonnegative; the quasi-probability variant permits
/// negative entries and is tagged accordingly. Both sum to 1.
#[derive(Debug, Clone, Serialize)]
pub struct JointDistribution {
    table: [[f64; 2]; 2],
    quasi: bool,
}

impl JointDistribution {
    fn new(table: [[f64; 2]; 2], quasi: bool) -> Self {
        JointDistribution { table, quasi }
    }

    pub fn probability(&self, s1: Sign, s2: Sign) -> f64 {
        self.table[s1.index()][s2.index()]
    }

    pub fn is_quasi(&self) -> bool {
        self.quasi
    }

    /// Σ s₁ s₂ p(s₁, s₂).
    pub fn correlator(&self) -> f64 {
        let mut total = 0.0;
        for s1 in Sign::BOTH {
            for s2 in Sign::BOTH {
                total += s1.value() * s2.value() * self.probability(s1, s2);
            }
        }
        total
    }

    /// Σ_{s₁} p(s₁, s₂).
    pub fn marginal_later(&self, s2: Sign) -> f64 {
        Sign::BOTH.iter().map(|&s1| self.probability(s1, s2)).sum()
    }

    /// Σ_{s₂} p(s₁, s₂).
    pub fn marginal_earlier(&self, s1: Sign) -> f64 {
        Sign::BOTH.iter().map(|&s2| self.probability(s1, s2)).sum()
    }

    pub fn total(&self) -> f64 {
        self.table.iter().flatten().sum()
    }

    /// Most negative entry (0 for a true probability distribution).
    pub fn negativity(&self) -> f64 {
        self.table.iter().flatten().fold(0.0f64, |acc, &p| acc.min(p))
    }
}

/// p(s₁,s₂) = Tr(P_{s₂}(t₂) P_{s₁}(t₁) ρ P_{s₁}(t₁)): the invasive
/// sequential-measurement distribution.
pub fn sequential_two_time(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<JointDistribution> {
    check_pair(state, q, h, t1, t2)?;
    let rho = state.to_density();
    let mut table = [[0.0; 2]; 2];
    for s1 in Sign::BOTH {
        let p1 = heisenberg(&projector(q, s1)?, h, t1)?;
        let dephased = p1.matrix() * &rho * p1.matrix();
        for s2 in Sign::BOTH {
            let p2 = heisenberg(&projector(q, s2)?, h, t2)?;
            table[s1.index()][s2.index()] = (p2.matrix() * &dephased).trace().re;
        }
    }
    Ok(JointDistribution::new(table, false))
}

/// q(s₁,s₂) = Re Tr(P_{s₂}(t₂) P_{s₁}(t₁) ρ): marginal-preserving, can be
/// negative, carries the same correlator as the sequential distribution.
pub fn quasi_probability(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<JointDistribution> {
    check_pair(state, q, h, t1, t2)?;
    let rho = state.to_density();
    let mut table = [[0.0; 2]; 2];
    for s1 in Sign::BOTH {
        let p1 = heisenberg(&projector(q, s1)?, h, t1)?;
        for s2 in Sign::BOTH {
            let p2 = heisenberg(&projector(q, s2)?, h, t2)?;
            table[s1.index()][s2.index()] = (p2.matrix() * p1.matrix() * &rho).trace().re;
        }
    }
    Ok(JointDistribution::new(table, true))
}

/// Tr(P_s(t) ρ): single-time outcome probability with no earlier measurement.
pub fn single_time_probability(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t: f64,
    s: Sign,
) -> Result<f64> {
    let p = heisenberg(&projector(q, s)?, h, t)?;
    Ok(state.expectation(&p).re)
}

/// Max over s₂ of |Σ_{s₁} p₁₂(s₁,s₂) − p₂(s₂)|, the no-signalling-in-time
/// deviation of the sequential protocol. Zero iff an earlier measurement
/// leaves the later marginal untouched.
pub fn nsit_deviation(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<f64> {
    let jd = sequential_two_time(state, q, h, t1, t2)?;
    let mut max = 0.0f64;
    for s2 in Sign::BOTH {
        let unmeasured = single_time_probability(state, q, h, t2, s2)?;
        max = max.max((jd.marginal_later(s2) - unmeasured).abs());
    }
    Ok(max)
}

/// Which value of Q the first gate couples to.
///
/// `Plus` is the standard arrangement (flip on Q = +1 at t₁, flip on Q = −1
/// at t₂); `Minus` couples to the opposite signs at both times. Both read
/// p(ancilla = 1) = p(same).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CouplingSign {
    Plus,
    Minus,
}

/// Result of one ancilla protocol run.
#[derive(Debug, Clone)]
pub struct AncillaOutcome {
    /// Probability of finding the ancilla in |0⟩ (the "diff" register).
    pub p0: f64,
    /// Probability of finding the ancilla in |1⟩ (the "same" register).
    pub p1: f64,
    /// Correlator read off the ancilla statistics; `None` at the
    /// zero-information point |α|² = |β|².
    pub inferred_c12: Option<f64>,
    /// Joint system⊗ancilla ket after the second gate (pure inputs only).
    pub joint_state: Option<DVector<C64>>,
    /// Purity of the reduced system state after the second gate.
    pub reduced_system_purity: f64,
    /// Purity of the reduced system state between the two gates.
    pub intermediate_purity: f64,
    /// Overlap of the reduced final state with the freely evolved input
    /// (pure inputs only).
    pub free_evolution_fidelity: Option<f64>,
    /// ‖ |Ψ₁⟩ − ψ_{t₁} ⊗ ancilla ‖: the state change caused by the first
    /// gate. O(|α−β|), and zero when the system is in the uncoupled Q
    /// eigenstate at t₁.
    pub disturbance_t1: f64,
}

/// Single-time means read out alongside an ancilla pair run: ⟨Q⟩ at the first
/// time of the pair (no earlier measurement can affect it) and ⟨Q⟩ at the
/// second time *in the context of* the first-time coupling, obtained from a
/// second ancilla attached at t₂.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EndpointMeans {
    pub first: f64,
    pub second_in_context: f64,
}

/// Ancilla protocol with the ancilla prepared in |0⟩.
///
/// The final joint state is |same⟩⊗|1⟩ + |diff⟩⊗|0⟩, so a single ancilla
/// readout yields p(same) and p(diff) without sequential system measurements.
pub fn ancilla_simple(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<AncillaOutcome> {
    run_ancilla(state, q, h, t1, t2, c(1.0), c(0.0), CouplingSign::Plus)
}

/// [`ancilla_simple`] with the gates coupled to the opposite signs of Q.
pub fn ancilla_with_coupling(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
    coupling: CouplingSign,
) -> Result<AncillaOutcome> {
    run_ancilla(state, q, h, t1, t2, c(1.0), c(0.0), coupling)
}

/// Mean of the two opposite-coupling runs.
///
/// Classically this trades which Q value suffers the interaction at t₁; the
/// two runs measure identical statistics in the quantum case. Whether the
/// average deserves to be called non-invasive is left to the caller.
pub fn ancilla_averaged(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<AncillaOutcome> {
    let a = ancilla_with_coupling(state, q, h, t1, t2, CouplingSign::Plus)?;
    let b = ancilla_with_coupling(state, q, h, t1, t2, CouplingSign::Minus)?;
    Ok(AncillaOutcome {
        p0: 0.5 * (a.p0 + b.p0),
        p1: 0.5 * (a.p1 + b.p1),
        inferred_c12: match (a.inferred_c12, b.inferred_c12) {
            (Some(x), Some(y)) => Some(0.5 * (x + y)),
            _ => None,
        },
        joint_state: None,
        reduced_system_purity: 0.5 * (a.reduced_system_purity + b.reduced_system_purity),
        intermediate_purity: 0.5 * (a.intermediate_purity + b.intermediate_purity),
        free_evolution_fidelity: None,
        disturbance_t1: 0.5 * (a.disturbance_t1 + b.disturbance_t1),
    })
}

/// Ancilla protocol with a general initial ancilla state α|0⟩ + β|1⟩.
///
/// α and β must share a phase; then the interference terms in the readout
/// cancel and p(1) = ½(1 + (|α|²−|β|²) C₁₂). The first-gate disturbance
/// scales linearly in |α−β| and vanishes at α = β.
pub fn ancilla_general(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
    alpha: C64,
    beta: C64,
) -> Result<AncillaOutcome> {
    let total = alpha.norm_sqr() + beta.norm_sqr();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::CoefficientsNotNormalized { got: total });
    }
    let cross = alpha.conj() * beta;
    if cross.norm() > 1e-12 && (cross.im.abs() > 1e-10 * cross.norm() || cross.re < 0.0) {
        return Err(Error::PhaseMismatch { phase: cross.arg() });
    }
    run_ancilla(state, q, h, t1, t2, alpha, beta, CouplingSign::Plus)
}

#[allow(clippy::too_many_arguments)]
fn run_ancilla(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
    alpha: C64,
    beta: C64,
    coupling: CouplingSign,
) -> Result<AncillaOutcome> {
    check_pair(state, q, h, t1, t2)?;
    let d = q.dim();
    let (first_flip, second_flip) = match coupling {
        CouplingSign::Plus => (Sign::Plus, Sign::Minus),
        CouplingSign::Minus => (Sign::Minus, Sign::Plus),
    };
    let gate1 = cnot(q, first_flip)?;
    let gate2 = cnot(q, second_flip)?;
    let u_tau = unitary(h, t2 - t1)?.kron(&Operator::identity(2));
    let ancilla = DVector::from_vec(vec![alpha, beta]);

    let components = state.pure_components()?;
    let pure_input = state.is_pure();

    let mut p1 = 0.0;
    let mut disturbance_sq = 0.0;
    let mut joint_state = None;
    let mut rho_mid = DMatrix::<C64>::zeros(d, d);
    let mut rho_final = DMatrix::<C64>::zeros(d, d);

    for (w, ket) in &components {
        let psi_t1 = unitary(h, t1)?.apply(ket);
        let initial = ket_kron(&psi_t1, &ancilla);
        let after_first = gate1.apply(&initial);
        disturbance_sq += w * (&after_first - &initial).norm_squared();
        let mid = reduce_over_ancilla(&after_first, d, 2);
        rho_mid += mid * c(*w);

        let evolved = u_tau.apply(&after_first);
        let final_ket = gate2.apply(&evolved);
        p1 += w * ancilla_one_probability(&final_ket, d);
        rho_final += reduce_over_ancilla(&final_ket, d, 2) * c(*w);
        if pure_input {
            joint_state = Some(final_ket);
        }
    }

    let p0 = 1.0 - p1;
    // p(1) = ½(1 + (|α|²−|β|²) C₁₂) with the |0⟩-prepared convention
    // |α|² − |β|² = +1 reading p(1) = p(same).
    let bias = alpha.norm_sqr() - beta.norm_sqr();
    let inferred_c12 = if bias.abs() > 1e-12 {
        Some((p1 - p0) / bias)
    } else {
        None
    };

    let free_evolution_fidelity = if pure_input {
        let free = state.evolve(h, t2)?;
        let target = free.as_ket()?;
        Some(target.dotc(&(&rho_final * target)).re)
    } else {
        None
    };

    Ok(AncillaOutcome {
        p0,
        p1,
        inferred_c12,
        joint_state,
        reduced_system_purity: (&rho_final * &rho_final).trace().re,
        intermediate_purity: (&rho_mid * &rho_mid).trace().re,
        free_evolution_fidelity,
        disturbance_t1: disturbance_sq.sqrt(),
    })
}

/// Runs the standard pair protocol with a second ancilla attached at t₂
/// (coupled to Q = +1), returning the endpoint means needed by the
/// invasiveness-modified inequality bookkeeping.
pub fn ancilla_simple_with_means(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<(AncillaOutcome, EndpointMeans)> {
    let outcome = ancilla_simple(state, q, h, t1, t2)?;
    let d = q.dim();
    let id2 = Operator::identity(2);
    let x = Operator::sigma_x();

    // System ⊗ first ancilla ⊗ second ancilla.
    let p_plus = projector(q, Sign::Plus)?;
    let p_minus = projector(q, Sign::Minus)?;
    let gate1 = &p_plus.kron(&x).kron(&id2) + &p_minus.kron(&id2).kron(&id2);
    let gate2a = &p_minus.kron(&x).kron(&id2) + &p_plus.kron(&id2).kron(&id2);
    let gate2b = &p_plus.kron(&id2).kron(&x) + &p_minus.kron(&id2).kron(&id2);
    let u_tau = unitary(h, t2 - t1)?.kron(&id2).kron(&id2);

    let zero = DVector::from_vec(vec![c(1.0), c(0.0)]);
    let mut p_second_plus = 0.0;
    for (w, ket) in state.pure_components()? {
        let psi_t1 = unitary(h, t1)?.apply(&ket);
        let joint = ket_kron(&ket_kron(&psi_t1, &zero), &zero);
        let final_ket = gate2b.apply(&gate2a.apply(&u_tau.apply(&gate1.apply(&joint))));
        // Second ancilla occupies the fastest index.
        let mut p = 0.0;
        for s in 0..d {
            for a1 in 0..2 {
                p += final_ket[(s * 2 + a1) * 2 + 1].norm_sqr();
            }
        }
        p_second_plus += w * p;
    }

    let q_t1 = heisenberg(q, h, t1)?;
    let means = EndpointMeans {
        first: state.expectation(&q_t1).re,
        second_in_context: 2.0 * p_second_plus - 1.0,
    };
    Ok((outcome, means))
}

/// Outcome of the record (single-projective-measurement) protocol.
#[derive(Debug, Clone, Serialize)]
pub struct RecordOutcome {
    /// Whether ⟨D̂⟩ = 0 held, i.e. whether the protocol applies at all.
    pub decoherent: bool,
    /// ⟨D̂⟩ in the input state.
    pub d_expectation: f64,
    /// p(same) read from the record projector; `None` when inapplicable.
    pub p_same: Option<f64>,
    pub p_diff: Option<f64>,
    pub inferred_c12: Option<f64>,
    /// Survival probability |⟨ψ_{t₂}|ψ_{t₁}⟩|², evaluated when H² ∝ I.
    pub decay_overlap: Option<f64>,
    /// Whether H² is proportional to the identity, the condition under which
    /// p(same) reduces to the survival probability.
    pub h_squared_proportional_identity: bool,
}

/// Determines p(same) by a single projective measurement of the record
/// projector, applicable when the same/diff branches decohere (⟨D̂⟩ = 0).
///
/// Inapplicability is a reported condition, not an error: the outcome carries
/// `decoherent = false` and no probabilities. For Hamiltonians with H² ∝ I
/// the record value is cross-checked against the survival probability
/// |⟨ψ_{t₂}|ψ_{t₁}⟩|²; for an H eigenstate that overlap would be constant in
/// t₂ − t₁, which is exactly the case the decoherence condition excludes.
pub fn record_protocol(
    state: &QuantumState,
    q: &Operator,
    h: &Operator,
    t1: f64,
    t2: f64,
) -> Result<RecordOutcome> {
    let psi = state.as_ket()?;
    let frame = build_frame(q, h, t1, t2)?;
    let d_expectation = frame.d_expectation(state);
    let h2 = h * h;
    let mean = h2.trace().re / h.dim() as f64;
    let h_squared_proportional_identity =
        (&h2 - &Operator::identity(h.dim()).scale(mean)).max_abs_entry() < 1e-10;

    if d_expectation.abs() > DEFAULT_DECOHERENCE_TOL {
        return Ok(RecordOutcome {
            decoherent: false,
            d_expectation,
            p_same: None,
            p_diff: None,
            inferred_c12: None,
            decay_overlap: None,
            h_squared_proportional_identity,
        });
    }

    if t2 == t1 {
        // Coincident times: the same branch is the whole state.
        return Ok(RecordOutcome {
            decoherent: true,
            d_expectation,
            p_same: Some(1.0),
            p_diff: Some(0.0),
            inferred_c12: Some(1.0),
            decay_overlap: h_squared_proportional_identity.then_some(1.0),
            h_squared_proportional_identity,
        });
    }

    let grid = ProjectiveGrid::dichotomic(q, &[t1, t2])?;
    let coarse = build_histories(&grid, h, state)?.coarse_grain(&[vec![0, 3], vec![1, 2]])?;
    let p_same = if coarse.probability(0) <= 1e-14 {
        // Empty branch: no record projector exists, the probability is zero.
        0.0
    } else {
        let r_same = coarse.record_projector(0, DEFAULT_DECOHERENCE_TOL)?;
        r_same.expectation_ket(psi).re
    };

    let decay_overlap = if h_squared_proportional_identity {
        let psi_t1 = unitary(h, t1)?.apply(psi);
        let psi_t2 = unitary(h, t2)?.apply(psi);
        Some(psi_t2.dotc(&psi_t1).norm_sqr())
    } else {
        None
    };

    Ok(RecordOutcome {
        decoherent: true,
        d_expectation,
        p_same: Some(p_same),
        p_diff: Some(1.0 - p_same),
        inferred_c12: Some(2.0 * p_same - 1.0),
        decay_overlap,
        h_squared_proportional_identity,
    })
}

/// Flat JSON record of one protocol evaluation.
#[derive(Debug, Clone, Serialize)]
pub struct ProtocolRecord {
    pub protocol: String,
    pub params: BTreeMap<String, f64>,
    /// Rows (s₁, s₂, p) of the joint table, when the protocol produces one.
    pub p_table: Vec<(String, String, f64)>,
    #[serde(rename = "C12")]
    pub c12: Option<f64>,
    pub diagnostics: BTreeMap<String, f64>,
}

impl ProtocolRecord {
    pub fn from_distribution(protocol: &str, t1: f64, t2: f64, jd: &JointDistribution) -> Self {
        let mut p_table = Vec::with_capacity(4);
        for s1 in Sign::BOTH {
            for s2 in Sign::BOTH {
                p_table.push((s1.to_string(), s2.to_string(), jd.probability(s1, s2)));
            }
        }
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("negativity".into(), jd.negativity());
        diagnostics.insert("quasi".into(), if jd.is_quasi() { 1.0 } else { 0.0 });
        ProtocolRecord {
            protocol: protocol.into(),
            params: BTreeMap::from([("t1".into(), t1), ("t2".into(), t2)]),
            p_table,
            c12: Some(jd.correlator()),
            diagnostics,
        }
    }

    pub fn from_ancilla(protocol: &str, t1: f64, t2: f64, out: &AncillaOutcome) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("p0".into(), out.p0);
        diagnostics.insert("p1".into(), out.p1);
        diagnostics.insert("reduced_system_purity".into(), out.reduced_system_purity);
        diagnostics.insert("intermediate_purity".into(), out.intermediate_purity);
        diagnostics.insert("disturbance_t1".into(), out.disturbance_t1);
        if let Some(f) = out.free_evolution_fidelity {
            diagnostics.insert("free_evolution_fidelity".into(), f);
        }
        ProtocolRecord {
            protocol: protocol.into(),
            params: BTreeMap::from([("t1".into(), t1), ("t2".into(), t2)]),
            p_table: Vec::new(),
            c12: out.inferred_c12,
            diagnostics,
        }
    }

    pub fn from_record(t1: f64, t2: f64, out: &RecordOutcome) -> Self {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("decoherent".into(), if out.decoherent { 1.0 } else { 0.0 });
        diagnostics.insert("d_expectation".into(), out.d_expectation);
        if let Some(p) = out.p_same {
            diagnostics.insert("p_same".into(), p);
        }
        if let Some(o) = out.decay_overlap {
            diagnostics.insert("decay_overlap".into(), o);
        }
        ProtocolRecord {
            protocol: "record".into(),
            params: BTreeMap::from([("t1".into(), t1), ("t2".into(), t2)]),
            p_table: Vec::new(),
            c12: out.inferred_c12,
            diagnostics,
        }
    }
}

/// P_flip⊗X + P_stay⊗I; the gate acts on the state current at its own time.
fn cnot(q: &Operator, flip_on: Sign) -> Result<Operator> {
    let stay_on = match flip_on {
        Sign::Plus => Sign::Minus,
        Sign::Minus => Sign::Plus,
    };
    let p_flip = projector(q, flip_on)?;
    let p_stay = projector(q, stay_on)?;
    Ok(&p_flip.kron(&Operator::sigma_x()) + &p_stay.kron(&Operator::identity(2)))
}

fn ket_kron(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    let mut out = DVector::<C64>::zeros(a.len() * b.len());
    for i in 0..a.len() {
        for j in 0..b.len() {
            out[i * b.len() + j] = a[i] * b[j];
        }
    }
    out
}

/// Reduced system density matrix of a pure system⊗ancilla ket; the ancilla
/// occupies the fastest index.
fn reduce_over_ancilla(joint: &DVector<C64>, sys_dim: usize, anc_dim: usize) -> DMatrix<C64> {
    let mut rho = DMatrix::<C64>::zeros(sys_dim, sys_dim);
    for s in 0..sys_dim {
        for sp in 0..sys_dim {
            let mut acc = C64::new(0.0, 0.0);
            for a in 0..anc_dim {
                acc += joint[s * anc_dim + a] * joint[sp * anc_dim + a].conj();
            }
            rho[(s, sp)] = acc;
        }
    }
    rho
}

fn ancilla_one_probability(joint: &DVector<C64>, sys_dim: usize) -> f64 {
    (0..sys_dim).map(|s| joint[s * 2 + 1].norm_sqr()).sum()
}

fn check_pair(state: &QuantumState, q: &Operator, h: &Operator, t1: f64, t2: f64) -> Result<()> {
    if q.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: h.dim(),
        });
    }
    if state.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: state.dim(),
        });
    }
    if t2 < t1 {
        return Err(Error::BadTimeOrder(format!("t2 = {t2} < t1 = {t1}")));
    }
    Ok(())
}
