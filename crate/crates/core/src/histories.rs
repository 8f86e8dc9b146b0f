//! Class operators, the decoherence functional, and record projectors.
//!
//! A history is a time-ordered string of Heisenberg-picture projections,
//!
//! ```text
//! C_α = P_{aₙ}(tₙ) ⋯ P_{a₁}(t₁),      Σ_α C_α = I,
//! ```
//!
//! acting on a pure initial state to produce history states |α⟩ = C_α|ψ⟩.
//! The decoherence functional D(α,α′) = ⟨α|α′⟩ measures interference between
//! branches: vanishing off-diagonal real part is *consistency* (probability
//! sum rules hold), fully vanishing off-diagonal entries is *decoherence*.
//! Decoherent sets admit a record projector R_α = C_α|ψ⟩⟨ψ|C_α†/p(α) that is
//! perfectly correlated with the histories, so their probabilities can be
//! read out in a single projective measurement.
//!
//! History labels are tuples of per-time alternative indices; coarse-graining
//! merges labels into partitions and sums the corresponding class operators.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qcore::{heisenberg, max_entry_dev, Operator, QuantumState, C64};

/// Default absolute tolerance on |D(α,α′)| used to call a set decoherent.
///
/// Separates analytic zeros from float noise while catching genuine O(1)
/// interference. Overridable on every predicate.
pub const DEFAULT_DECOHERENCE_TOL: f64 = 1e-8;

const GRID_TOL: f64 = 1e-10;

/// An ordered list of times with a complete, mutually orthogonal projector
/// set at each time.
#[derive(Debug, Clone)]
pub struct ProjectiveGrid {
    times: Vec<f64>,
    alternatives: Vec<Vec<Operator>>,
}

impl ProjectiveGrid {
    pub fn new(times: Vec<f64>, alternatives: Vec<Vec<Operator>>) -> Result<Self> {
        if times.is_empty() || times.len() != alternatives.len() {
            return Err(Error::InvalidGrid {
                time_index: 0,
                reason: format!(
                    "need one alternative set per time ({} times, {} sets)",
                    times.len(),
                    alternatives.len()
                ),
            });
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadTimeOrder(format!(
                "grid times must be strictly increasing: {times:?}"
            )));
        }
        let dim = alternatives[0]
            .first()
            .map(|p| p.dim())
            .ok_or(Error::InvalidGrid {
                time_index: 0,
                reason: "empty alternative set".into(),
            })?;
        for (k, set) in alternatives.iter().enumerate() {
            let mut sum = DMatrix::<C64>::zeros(dim, dim);
            for (a, p) in set.iter().enumerate() {
                if p.dim() != dim {
                    return Err(Error::InvalidGrid {
                        time_index: k,
                        reason: format!("projector {a} has dimension {}", p.dim()),
                    });
                }
                if !p.is_projector(GRID_TOL) {
                    return Err(Error::InvalidGrid {
                        time_index: k,
                        reason: format!("alternative {a} is not a projector"),
                    });
                }
                for (b, q) in set.iter().enumerate() {
                    if a != b && (p * q).max_abs_entry() > GRID_TOL {
                        return Err(Error::InvalidGrid {
                            time_index: k,
                            reason: format!("alternatives {a} and {b} are not orthogonal"),
                        });
                    }
                }
                sum += p.matrix();
            }
            if max_entry_dev(&sum, &DMatrix::identity(dim, dim)) > GRID_TOL {
                return Err(Error::InvalidGrid {
                    time_index: k,
                    reason: "alternatives do not sum to the identity".into(),
                });
            }
        }
        Ok(ProjectiveGrid {
            times,
            alternatives,
        })
    }

    /// Grid with the ± projectors of a dichotomic observable at each time
    /// (alternative 0 is the + branch).
    pub fn dichotomic(q: &Operator, times: &[f64]) -> Result<Self> {
        let plus = crate::qcore::projector(q, crate::qcore::Sign::Plus)?;
        let minus = crate::qcore::projector(q, crate::qcore::Sign::Minus)?;
        Self::new(
            times.to_vec(),
            times
                .iter()
                .map(|_| vec![plus.clone(), minus.clone()])
                .collect(),
        )
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn alternatives(&self) -> &[Vec<Operator>] {
        &self.alternatives
    }

    pub fn dim(&self) -> usize {
        self.alternatives[0][0].dim()
    }

    pub fn history_count(&self) -> usize {
        self.alternatives.iter().map(Vec::len).product()
    }
}

/// Label of a (possibly coarse-grained) history: the set of fine-grained
/// per-time index tuples it contains.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HistoryLabel {
    branches: Vec<Vec<usize>>,
}

impl HistoryLabel {
    fn fine(indices: Vec<usize>) -> Self {
        HistoryLabel {
            branches: vec![indices],
        }
    }

    /// Fine-grained index tuples merged into this label.
    pub fn branches(&self) -> &[Vec<usize>] {
        &self.branches
    }

    pub fn is_fine(&self) -> bool {
        self.branches.len() == 1
    }
}

impl std::fmt::Display for HistoryLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self
            .branches
            .iter()
            .map(|b| {
                let idx: Vec<String> = b.iter().map(usize::to_string).collect();
                format!("({})", idx.join(","))
            })
            .collect();
        write!(f, "{}", parts.join("|"))
    }
}

/// Class operators, history states, and the decoherence functional for one
/// branching structure over a fixed initial state.
#[derive(Debug, Clone)]
pub struct HistorySet {
    labels: Vec<HistoryLabel>,
    class_ops: Vec<Operator>,
    states: Vec<DVector<C64>>,
    dfunc: DMatrix<C64>,
    probs: Vec<f64>,
    psi: DVector<C64>,
}

/// Builds the full Cartesian product of the grid's alternatives, with the
/// earliest time as the most significant label digit.
pub fn build_histories(
    grid: &ProjectiveGrid,
    h: &Operator,
    state: &QuantumState,
) -> Result<HistorySet> {
    let psi = state.as_ket()?.clone();
    if psi.len() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: psi.len(),
        });
    }
    let evolved: Vec<Vec<Operator>> = grid
        .times
        .iter()
        .zip(&grid.alternatives)
        .map(|(&t, set)| {
            set.iter()
                .map(|p| heisenberg(p, h, t))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let n_times = grid.times.len();
    let counts: Vec<usize> = grid.alternatives.iter().map(Vec::len).collect();
    let mut labels = Vec::with_capacity(grid.history_count());
    let mut class_ops = Vec::with_capacity(grid.history_count());
    let mut indices = vec![0usize; n_times];
    loop {
        // Time-ordered string, latest projector leftmost.
        let mut op = Operator::identity(grid.dim());
        for k in 0..n_times {
            op = &evolved[k][indices[k]] * &op;
        }
        labels.push(HistoryLabel::fine(indices.clone()));
        class_ops.push(op);

        // Odometer over tuples, last time fastest.
        let mut k = n_times;
        loop {
            if k == 0 {
                break;
            }
            k -= 1;
            indices[k] += 1;
            if indices[k] < counts[k] {
                break;
            }
            indices[k] = 0;
        }
        if indices.iter().all(|&i| i == 0) {
            break;
        }
    }

    Ok(HistorySet::assemble(labels, class_ops, psi))
}

impl HistorySet {
    fn assemble(labels: Vec<HistoryLabel>, class_ops: Vec<Operator>, psi: DVector<C64>) -> Self {
        let states: Vec<DVector<C64>> = class_ops.iter().map(|c| c.apply(&psi)).collect();
        let n = states.len();
        let mut dfunc = DMatrix::<C64>::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                dfunc[(a, b)] = states[a].dotc(&states[b]);
            }
        }
        let probs = (0..n).map(|a| dfunc[(a, a)].re).collect();
        HistorySet {
            labels,
            class_ops,
            states,
            dfunc,
            probs,
            psi,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[HistoryLabel] {
        &self.labels
    }

    pub fn class_ops(&self) -> &[Operator] {
        &self.class_ops
    }

    pub fn history_state(&self, index: usize) -> &DVector<C64> {
        &self.states[index]
    }

    pub fn initial_state(&self) -> &DVector<C64> {
        &self.psi
    }

    /// D(α,α′) = ⟨α|α′⟩; conjugate-symmetric, diagonal equals probabilities.
    pub fn decoherence_functional(&self) -> &DMatrix<C64> {
        &self.dfunc
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probs
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.probs[index]
    }

    /// Max |Re D(α,α′)| over α ≠ α′.
    pub fn max_offdiagonal_re(&self) -> f64 {
        let n = self.len();
        let mut max = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    max = max.max(self.dfunc[(a, b)].re.abs());
                }
            }
        }
        max
    }

    /// Max |D(α,α′)| over α ≠ α′.
    pub fn max_offdiagonal_abs(&self) -> f64 {
        let n = self.len();
        let mut max = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    max = max.max(self.dfunc[(a, b)].norm());
                }
            }
        }
        max
    }

    /// Probability sum rules hold: Re D(α,α′) = 0 off the diagonal.
    pub fn is_consistent(&self, tol: f64) -> bool {
        self.max_offdiagonal_re() <= tol
    }

    /// History states are orthogonal: D(α,α′) = 0 off the diagonal.
    /// Decoherence implies consistency.
    pub fn is_decoherent(&self, tol: f64) -> bool {
        self.max_offdiagonal_abs() <= tol
    }

    /// Record projector R_α = C_α|ψ⟩⟨ψ|C_α† / p(α) for a decoherent set.
    ///
    /// This is the canonical construction from the history states themselves;
    /// record projectors are generally non-unique, but for the simple systems
    /// targeted here this choice is the natural one. Refused when the set is
    /// not decoherent at `tol` (the record correlation fails) or when
    /// p(α) = 0.
    pub fn record_projector(&self, index: usize, tol: f64) -> Result<Operator> {
        let max_off = self.max_offdiagonal_abs();
        if max_off > tol {
            return Err(Error::NotDecoherent { max_off, tol });
        }
        if self.probs[index] <= 1e-14 {
            return Err(Error::ZeroProbability);
        }
        Operator::projector_onto(&self.states[index])
    }

    /// Merges histories into the given label partition, summing class
    /// operators. The partition must cover every history exactly once.
    pub fn coarse_grain(&self, partition: &[Vec<usize>]) -> Result<HistorySet> {
        let mut seen = vec![false; self.len()];
        for group in partition {
            for &i in group {
                if i >= self.len() {
                    return Err(Error::InvalidParameter(format!(
                        "coarse-grain index {i} out of range"
                    )));
                }
                if seen[i] {
                    return Err(Error::InvalidParameter(format!(
                        "coarse-grain index {i} appears twice"
                    )));
                }
                seen[i] = true;
            }
        }
        if !seen.iter().all(|&s| s) {
            return Err(Error::InvalidParameter(
                "coarse-graining must cover every history".into(),
            ));
        }
        let mut labels = Vec::with_capacity(partition.len());
        let mut class_ops = Vec::with_capacity(partition.len());
        for group in partition {
            let mut branches = Vec::new();
            let mut op = Operator::zero(self.psi.len());
            for &i in group {
                branches.extend(self.labels[i].branches.iter().cloned());
                op = &op + &self.class_ops[i];
            }
            labels.push(HistoryLabel { branches });
            class_ops.push(op);
        }
        Ok(HistorySet::assemble(labels, class_ops, self.psi.clone()))
    }

    /// Σ_α C_α − I, max-entry deviation (completeness residual).
    pub fn completeness_residual(&self) -> f64 {
        let dim = self.psi.len();
        let mut sum = Operator::zero(dim);
        for op in &self.class_ops {
            sum = &sum + op;
        }
        (&sum - &Operator::identity(dim)).max_abs_entry()
    }

    /// Exportable form of the decoherence functional.
    pub fn export(&self) -> DecoherenceFunctionalData {
        let n = self.len();
        DecoherenceFunctionalData {
            labels: self.labels.iter().map(|l| l.branches.clone()).collect(),
            matrix: (0..n)
                .map(|a| {
                    (0..n)
                        .map(|b| [self.dfunc[(a, b)].re, self.dfunc[(a, b)].im])
                        .collect()
                })
                .collect(),
        }
    }
}

/// JSON form of a decoherence functional: labels as index tuples and the
/// matrix as `[re, im]` pairs.
#[derive(Debug, Clone, Serialize)]
pub struct DecoherenceFunctionalData {
    pub labels: Vec<Vec<Vec<usize>>>,
    pub matrix: Vec<Vec<[f64; 2]>>,
}
