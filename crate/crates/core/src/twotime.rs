//! Two-time operator algebra and coarse-grained history states.
//!
//! For a dichotomic observable Q evolving under H, define the hermitian pair
//!
//! ```text
//! Ĉ = ½ {Q(t₁), Q(t₂)},      D̂ = (i/2) [Q(t₂), Q(t₁)],
//! ```
//!
//! where Q(t) = e^{iHt} Q e^{−iHt}. Because Q² = I these satisfy
//! [Q(t₁), Ĉ] = 0, {Q(t₁), D̂} = 0, [Ĉ, D̂] = 0 and Ĉ² + D̂² = I, and the
//! two-time correlator is C₁₂ = ⟨Ĉ⟩. The "same"/"diff" history states split
//! the evolved initial state into the branch where Q carries equal signs at
//! the two times and the branch where it changes sign:
//!
//! ```text
//! |same⟩ = ½ e^{−iHt₂} (1 + Q(t₂)Q(t₁)) |ψ⟩,
//! |diff⟩ = ½ e^{−iHt₂} (1 − Q(t₂)Q(t₁)) |ψ⟩,
//! ```
//!
//! with ‖same‖² = ½(1 + C₁₂), ‖diff‖² = ½(1 − C₁₂) and the no-interference
//! property Re⟨same|diff⟩ = 0 (the pair is consistent, though generally not
//! decoherent: ⟨same|diff⟩ = (i/2)⟨D̂⟩).

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{
    anticommutator, commutator, heisenberg, unitary, Operator, QuantumState, C64,
    DICHOTOMY_TOL, HERMITICITY_TOL,
};

/// Tolerance used when checking that a supplied ket is a Q(t₁) eigenstate.
const EIGENSTATE_TOL: f64 = 1e-8;

/// Q, H, a pair of times, and the derived two-time operators.
#[derive(Debug, Clone)]
pub struct TwoTimeFrame {
    q: Operator,
    h: Operator,
    t1: f64,
    t2: f64,
    q_t1: Operator,
    q_t2: Operator,
    c_op: Operator,
    d_op: Operator,
}

/// Max-entry residuals of the four algebraic identities of a frame.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityResiduals {
    /// [Q(t₁), Ĉ]
    pub commutator_q_c: f64,
    /// {Q(t₁), D̂}
    pub anticommutator_q_d: f64,
    /// [Ĉ, D̂]
    pub commutator_c_d: f64,
    /// Ĉ² + D̂² − I
    pub squares_minus_identity: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.commutator_q_c
            .max(self.anticommutator_q_d)
            .max(self.commutator_c_d)
            .max(self.squares_minus_identity)
    }
}

/// Builds the two-time frame for dichotomic Q and hermitian H with t₂ ≥ t₁.
pub fn build_frame(q: &Operator, h: &Operator, t1: f64, t2: f64) -> Result<TwoTimeFrame> {
    let dev = q.dichotomy_deviation();
    if !q.is_hermitian(HERMITICITY_TOL) || dev > DICHOTOMY_TOL {
        return Err(Error::NotDichotomic {
            deviation: dev.max(q.hermiticity_deviation()),
        });
    }
    if q.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            got: h.dim(),
        });
    }
    if t2 < t1 {
        return Err(Error::BadTimeOrder(format!("t2 = {t2} < t1 = {t1}")));
    }
    let q_t1 = heisenberg(q, h, t1)?;
    let q_t2 = heisenberg(q, h, t2)?;
    let c_op = anticommutator(&q_t1, &q_t2).scale(0.5);
    let d_op = commutator(&q_t2, &q_t1).scale_complex(C64::new(0.0, 0.5));
    Ok(TwoTimeFrame {
        q: q.clone(),
        h: h.clone(),
        t1,
        t2,
        q_t1,
        q_t2,
        c_op,
        d_op,
    })
}

impl TwoTimeFrame {
    pub fn q(&self) -> &Operator {
        &self.q
    }

    pub fn h(&self) -> &Operator {
        &self.h
    }

    pub fn t1(&self) -> f64 {
        self.t1
    }

    pub fn t2(&self) -> f64 {
        self.t2
    }

    pub fn q_t1(&self) -> &Operator {
        &self.q_t1
    }

    pub fn q_t2(&self) -> &Operator {
        &self.q_t2
    }

    /// Correlator operator Ĉ = ½{Q(t₁), Q(t₂)}.
    pub fn c_op(&self) -> &Operator {
        &self.c_op
    }

    /// Disturbance operator D̂ = (i/2)[Q(t₂), Q(t₁)].
    pub fn d_op(&self) -> &Operator {
        &self.d_op
    }

    pub fn dim(&self) -> usize {
        self.q.dim()
    }

    /// C₁₂ = ⟨Ĉ⟩ in the given state.
    pub fn c12(&self, state: &QuantumState) -> f64 {
        state.expectation(&self.c_op).re
    }

    /// ⟨D̂⟩ in the given state.
    pub fn d_expectation(&self, state: &QuantumState) -> f64 {
        state.expectation(&self.d_op).re
    }

    pub fn identity_residuals(&self) -> IdentityResiduals {
        let id = Operator::identity(self.dim());
        IdentityResiduals {
            commutator_q_c: commutator(&self.q_t1, &self.c_op).max_abs_entry(),
            anticommutator_q_d: anticommutator(&self.q_t1, &self.d_op).max_abs_entry(),
            commutator_c_d: commutator(&self.c_op, &self.d_op).max_abs_entry(),
            squares_minus_identity: (&(&self.c_op * &self.c_op) + &(&self.d_op * &self.d_op)
                - id)
                .max_abs_entry(),
        }
    }
}

/// The unnormalized same/diff history states of a pure initial state.
#[derive(Debug, Clone)]
pub struct HistoryPair {
    same: DVector<C64>,
    diff: DVector<C64>,
    p_same: f64,
    p_diff: f64,
}

impl HistoryPair {
    pub fn same(&self) -> &DVector<C64> {
        &self.same
    }

    pub fn diff(&self) -> &DVector<C64> {
        &self.diff
    }

    pub fn p_same(&self) -> f64 {
        self.p_same
    }

    pub fn p_diff(&self) -> f64 {
        self.p_diff
    }

    /// ⟨same|diff⟩.
    pub fn overlap(&self) -> C64 {
        self.same.dotc(&self.diff)
    }

    /// |same⟩ + |diff⟩, which reproduces the freely evolved initial state.
    pub fn total(&self) -> DVector<C64> {
        &self.same + &self.diff
    }
}

/// Splits a pure state into its same/diff branches for the given frame.
///
/// Mixed states are rejected here; use [`history_probabilities`], which
/// convex-combines over the eigenvectors of ρ (the branch kets themselves are
/// only defined for pure inputs).
pub fn history_pair(frame: &TwoTimeFrame, state: &QuantumState) -> Result<HistoryPair> {
    let psi = state.as_ket()?;
    if psi.len() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: frame.dim(),
            got: psi.len(),
        });
    }
    let u2 = unitary(&frame.h, frame.t2)?;
    let qq = &frame.q_t2 * &frame.q_t1;
    let plus = (psi + qq.apply(psi)) * crate::qcore::c(0.5);
    let minus = (psi - qq.apply(psi)) * crate::qcore::c(0.5);
    let same = u2.apply(&plus);
    let diff = u2.apply(&minus);
    let p_same = same.norm_squared();
    let p_diff = diff.norm_squared();
    Ok(HistoryPair {
        same,
        diff,
        p_same,
        p_diff,
    })
}

/// (p_same, p_diff) for a pure or mixed state.
pub fn history_probabilities(frame: &TwoTimeFrame, state: &QuantumState) -> Result<(f64, f64)> {
    let mut p_same = 0.0;
    for (w, ket) in state.pure_components()? {
        let pair = history_pair(frame, &QuantumState::Pure(ket))?;
        p_same += w * pair.p_same();
    }
    Ok((p_same, 1.0 - p_same))
}

/// Maps +1 eigenstates of Q(t₁) to −1 eigenstates via |−,ν⟩ = D̂|+,ν⟩ / ⟨D̂²⟩^{1/2}.
///
/// The phase of each output is fixed by the formula itself; no re-phasing is
/// applied. Fails with [`Error::StationaryState`] when ⟨D̂²⟩ vanishes in some
/// input (the mapping is undefined there).
pub fn pm_basis(frame: &TwoTimeFrame, plus_states: &[DVector<C64>]) -> Result<Vec<DVector<C64>>> {
    let d2 = frame.d_op() * frame.d_op();
    let mut out = Vec::with_capacity(plus_states.len());
    for ket in plus_states {
        check_q_eigenstate(frame, ket, 1.0)?;
        let d2_mean = d2.expectation_ket(ket).re;
        if d2_mean <= 1e-12 {
            return Err(Error::StationaryState);
        }
        let mapped = frame.d_op().apply(ket) / crate::qcore::c(d2_mean.sqrt());
        out.push(mapped);
    }
    Ok(out)
}

/// A complete set of +1 eigenstates of Q(t₁) chosen to diagonalize Ĉ within
/// the +1 eigenspace, the convenient starting point for [`pm_basis`].
pub fn canonical_plus_states(frame: &TwoTimeFrame) -> Result<Vec<DVector<C64>>> {
    let (values, vectors) = frame.q_t1.eigh()?;
    let cols: Vec<DVector<C64>> = (0..values.len())
        .filter(|&k| values[k] > 0.0)
        .map(|k| vectors.column(k).into_owned())
        .collect();
    if cols.is_empty() {
        return Err(Error::InvalidParameter("Q(t₁) has no +1 eigenspace".into()));
    }
    // Compress Ĉ into the subspace and diagonalize there.
    let m = cols.len();
    let mut c_sub = nalgebra::DMatrix::<C64>::zeros(m, m);
    for a in 0..m {
        let c_col = frame.c_op.apply(&cols[a]);
        for b in 0..m {
            c_sub[(b, a)] = cols[b].dotc(&c_col);
        }
    }
    let (_, w) = Operator::from_matrix(c_sub).eigh()?;
    let mut out = Vec::with_capacity(m);
    for nu in 0..m {
        let mut v = DVector::<C64>::zeros(frame.dim());
        for a in 0..m {
            v += &cols[a] * w[(a, nu)];
        }
        out.push(v);
    }
    Ok(out)
}

/// ⟨ψ|Ĉ|ψ⟩ for ψ = a₁|+,ν⟩ + a₂|−,ν⟩ with |a₁|² + |a₂|² = 1.
///
/// For kets paired by [`pm_basis`] the result is independent of (a₁, a₂).
pub fn superposition_correlator(
    frame: &TwoTimeFrame,
    plus: &DVector<C64>,
    minus: &DVector<C64>,
    a1: C64,
    a2: C64,
) -> Result<f64> {
    let total = a1.norm_sqr() + a2.norm_sqr();
    if (total - 1.0).abs() > 1e-10 {
        return Err(Error::CoefficientsNotNormalized { got: total });
    }
    check_q_eigenstate(frame, plus, 1.0)?;
    check_q_eigenstate(frame, minus, -1.0)?;
    let psi = plus * a1 + minus * a2;
    Ok(frame.c_op.expectation_ket(&psi).re)
}

/// Exportable summary of a frame evaluated in a state.
#[derive(Debug, Clone, Serialize)]
pub struct FrameSummary {
    #[serde(rename = "C12")]
    pub c12: f64,
    #[serde(rename = "D_expectation")]
    pub d_expectation: f64,
    pub p_same: f64,
    pub p_diff: f64,
    pub identity_residuals: IdentityResiduals,
}

pub fn summary(frame: &TwoTimeFrame, state: &QuantumState) -> Result<FrameSummary> {
    let (p_same, p_diff) = history_probabilities(frame, state)?;
    Ok(FrameSummary {
        c12: frame.c12(state),
        d_expectation: frame.d_expectation(state),
        p_same,
        p_diff,
        identity_residuals: frame.identity_residuals(),
    })
}

fn check_q_eigenstate(frame: &TwoTimeFrame, ket: &DVector<C64>, sign: f64) -> Result<()> {
    if ket.len() != frame.dim() {
        return Err(Error::DimensionMismatch {
            expected: frame.dim(),
            got: ket.len(),
        });
    }
    let norm = ket.norm();
    if (norm - 1.0).abs() > EIGENSTATE_TOL {
        return Err(Error::NotNormalized {
            deviation: (norm - 1.0).abs(),
        });
    }
    let residual = (frame.q_t1.apply(ket) - ket * crate::qcore::c(sign)).norm();
    if residual > EIGENSTATE_TOL {
        return Err(Error::InvalidParameter(format!(
            "ket is not a {sign:+} eigenstate of Q(t₁) (residual {residual:.3e})"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::{c, SpinModel};
    use nalgebra::DMatrix;

    fn spin_frame(omega: f64, t1: f64, t2: f64) -> TwoTimeFrame {
        let sm = SpinModel::z(omega);
        build_frame(&sm.q_op(), &sm.hamiltonian(), t1, t2).unwrap()
    }

    #[test]
    fn spin_c_op_is_cosine_times_identity() {
        for &tau in &[0.3, 1.0, 2.2] {
            let frame = spin_frame(1.0, 0.5, 0.5 + tau);
            let expected = Operator::identity(2).scale(tau.cos());
            let dev = (&frame.c_op - &expected).max_abs_entry();
            assert!(dev < 1e-12, "deviation {dev:.3e} at tau = {tau}");
        }
    }

    #[test]
    fn spin_d_op_sign_convention() {
        // D̂ = −sin(ωτ) σx; at ωτ = π/2, D̂ = −σx and D̂² = I.
        let frame = spin_frame(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        let expected = Operator::sigma_x().scale(-1.0);
        assert!((&frame.d_op - &expected).max_abs_entry() < 1e-12);
        let d2 = &frame.d_op * &frame.d_op;
        assert!((&d2 - &Operator::identity(2)).max_abs_entry() < 1e-12);
    }

    #[test]
    fn equal_times_give_trivial_frame() {
        let frame = spin_frame(1.0, 1.3, 1.3);
        assert!((&frame.c_op - &Operator::identity(2)).max_abs_entry() < 1e-12);
        assert!(frame.d_op.max_abs_entry() < 1e-12);
    }

    #[test]
    fn expansion_of_same_state_matches_operator_form() {
        // ½(1 + Ĉ − iD̂) must equal ½(1 + cos ωτ + i sin ωτ σx) in the spin
        // model; this pins the D̂ sign convention against the branch split.
        let tau = 0.83;
        let frame = spin_frame(1.0, 0.0, tau);
        let built = (Operator::identity(2)
            + frame.c_op.clone()
            + frame.d_op.scale_complex(C64::new(0.0, -1.0)))
        .scale(0.5);
        let expected = (Operator::identity(2).scale(1.0 + tau.cos())
            + Operator::sigma_x().scale_complex(C64::new(0.0, tau.sin())))
        .scale(0.5);
        assert!((&built - &expected).max_abs_entry() < 1e-12);

        // And the branch kets must follow from the same operator.
        let psi = QuantumState::plus_y();
        let pair = history_pair(&frame, &psi).unwrap();
        let u2 = unitary(frame.h(), frame.t2()).unwrap();
        let direct = u2.apply(&built.apply(psi.as_ket().unwrap()));
        assert!((pair.same() - direct).norm() < 1e-12);
    }

    #[test]
    fn branch_probabilities_spin_model() {
        let frame = spin_frame(1.0, 0.0, std::f64::consts::FRAC_PI_3);
        for state in [
            QuantumState::up_z(),
            QuantumState::plus_x(),
            QuantumState::plus_y(),
        ] {
            let pair = history_pair(&frame, &state).unwrap();
            assert!((pair.p_same() - 0.75).abs() < 1e-12);
            assert!((pair.p_same() + pair.p_diff() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_interval_gives_certain_same() {
        let frame = spin_frame(1.0, 0.7, 0.7);
        let pair = history_pair(&frame, &QuantumState::plus_x()).unwrap();
        assert!((pair.p_same() - 1.0).abs() < 1e-14);
        assert!(pair.diff().norm() < 1e-14);
    }

    #[test]
    fn branches_orthogonal_when_d_expectation_vanishes() {
        let frame = spin_frame(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        let psi = QuantumState::plus_y(); // ⟨σx⟩ = 0
        let pair = history_pair(&frame, &psi).unwrap();
        assert!(pair.overlap().norm() < 1e-13);
    }

    #[test]
    fn overlap_tracks_d_expectation() {
        let frame = spin_frame(1.0, 0.0, 1.1);
        let psi = QuantumState::plus_x();
        let pair = history_pair(&frame, &psi).unwrap();
        let overlap = pair.overlap();
        assert!(overlap.re.abs() < 1e-13);
        assert!((overlap.im - 0.5 * frame.d_expectation(&psi)).abs() < 1e-13);
    }

    #[test]
    fn history_pair_rejects_mixed_states() {
        let frame = spin_frame(1.0, 0.0, 1.0);
        let rho = QuantumState::maximally_mixed(2);
        assert!(matches!(
            history_pair(&frame, &rho),
            Err(Error::PureStateRequired)
        ));
    }

    #[test]
    fn mixed_state_probabilities_convex_combine() {
        // d = 3 observable with unequal degeneracies and a generic H.
        let q = Operator::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
            ],
        ));
        let h = Operator::hermitian(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.2),
                C64::new(0.3, 0.1),
                c(0.0),
                C64::new(0.3, -0.1),
                c(-0.4),
                C64::new(0.0, 0.5),
                c(0.0),
                C64::new(0.0, -0.5),
                c(0.1),
            ],
        ))
        .unwrap();
        let frame = build_frame(&q, &h, 0.2, 1.4).unwrap();
        let rho = QuantumState::maximally_mixed(3);
        let (p_same, p_diff) = history_probabilities(&frame, &rho).unwrap();
        let direct = 0.5 * (1.0 + frame.c12(&rho));
        assert!((p_same - direct).abs() < 1e-12);
        assert!((p_same + p_diff - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pm_basis_maps_up_to_down() {
        let frame = spin_frame(1.0, 0.0, std::f64::consts::FRAC_PI_2);
        let up = QuantumState::up_z().as_ket().unwrap().clone();
        let mapped = pm_basis(&frame, &[up]).unwrap();
        assert_eq!(mapped.len(), 1);
        assert!((mapped[0].norm() - 1.0).abs() < 1e-12);
        // Proportional to |↓z⟩: zero overlap with |↑z⟩.
        assert!(mapped[0][0].norm() < 1e-12);
    }

    #[test]
    fn pm_basis_rejects_stationary_frame() {
        let frame = spin_frame(1.0, 0.0, std::f64::consts::PI); // sin ωτ = 0
        let up = QuantumState::up_z().as_ket().unwrap().clone();
        assert!(matches!(
            pm_basis(&frame, &[up]),
            Err(Error::StationaryState)
        ));
    }

    #[test]
    fn pm_basis_three_level_outputs_minus_eigenstates() {
        let q = Operator::from_matrix(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
                c(0.0),
                c(0.0),
                c(0.0),
                c(-1.0),
            ],
        ));
        let h = Operator::hermitian(DMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0),
                c(0.7),
                C64::new(0.0, -0.2),
                c(0.7),
                c(0.3),
                c(0.1),
                C64::new(0.0, 0.2),
                c(0.1),
                c(-0.5),
            ],
        ))
        .unwrap();
        let frame = build_frame(&q, &h, 0.0, 1.0).unwrap();
        let plus = canonical_plus_states(&frame).unwrap();
        assert_eq!(plus.len(), 1);
        let minus = pm_basis(&frame, &plus).unwrap();
        assert_eq!(minus.len(), plus.len());
        for m in &minus {
            assert!((m.norm() - 1.0).abs() < 1e-10);
            let residual = (frame.q_t1().apply(m) + m.clone()).norm();
            assert!(residual < 1e-10, "not a −1 eigenstate: {residual:.3e}");
        }
    }

    #[test]
    fn superposition_correlator_constant_in_coefficients() {
        let frame = spin_frame(1.0, 0.0, 0.9);
        let plus = QuantumState::up_z().as_ket().unwrap().clone();
        let minus = pm_basis(&frame, std::slice::from_ref(&plus))
            .unwrap()
            .remove(0);
        let r = 1.0 / 2.0_f64.sqrt();
        let base = superposition_correlator(&frame, &plus, &minus, c(1.0), c(0.0)).unwrap();
        let equal = superposition_correlator(&frame, &plus, &minus, c(r), c(r)).unwrap();
        let skew =
            superposition_correlator(&frame, &plus, &minus, c(r), C64::new(0.0, r)).unwrap();
        assert!((base - 0.9f64.cos()).abs() < 1e-12);
        assert!((equal - base).abs() < 1e-12);
        assert!((skew - base).abs() < 1e-12);
    }

    #[test]
    fn superposition_correlator_rejects_unnormalized() {
        let frame = spin_frame(1.0, 0.0, 0.9);
        let plus = QuantumState::up_z().as_ket().unwrap().clone();
        let minus = pm_basis(&frame, std::slice::from_ref(&plus))
            .unwrap()
            .remove(0);
        assert!(matches!(
            superposition_correlator(&frame, &plus, &minus, c(1.0), c(1.0)),
            Err(Error::CoefficientsNotNormalized { .. })
        ));
    }

    #[test]
    fn build_frame_rejects_bad_inputs() {
        let sm = SpinModel::z(1.0);
        assert!(matches!(
            build_frame(&sm.q_op(), &sm.hamiltonian(), 1.0, 0.5),
            Err(Error::BadTimeOrder(_))
        ));
        let not_dichotomic = Operator::sigma_z().scale(2.0);
        assert!(matches!(
            build_frame(&not_dichotomic, &sm.hamiltonian(), 0.0, 1.0),
            Err(Error::NotDichotomic { .. })
        ));
    }

    #[test]
    fn summary_serializes() {
        let frame = spin_frame(1.0, 0.0, 1.0);
        let s = summary(&frame, &QuantumState::up_z()).unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert!(json.get("C12").is_some());
        assert!(json.get("identity_residuals").is_some());
    }
}
