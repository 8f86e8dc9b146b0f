//! Dense complex operators and states on small Hilbert spaces (d ≲ 16).
//!
//! Everything here is immutable after construction and all operations are
//! pure functions, so values can be shared freely across threads.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;

/// Tolerance on max-entry deviation for hermiticity checks.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Tolerance on max-entry deviation of Q² from the identity.
pub const DICHOTOMY_TOL: f64 = 1e-10;
/// Tolerance on state normalization (ket norm, density trace).
pub const STATE_TOL: f64 = 1e-10;

/// Outcome sign of a dichotomic observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sign {
    #[serde(rename = "+")]
    Plus,
    #[serde(rename = "-")]
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    /// Table index: `Plus` ↦ 0, `Minus` ↦ 1.
    pub fn index(self) -> usize {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }
}

impl std::fmt::Display for Sign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sign::Plus => write!(f, "+"),
            Sign::Minus => write!(f, "-"),
        }
    }
}

/// Role a constructor has verified for an operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    General,
    Hermitian,
    Unitary,
    Projector,
}

/// Wire form of an operator: dimension plus row-major `[re, im]` entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorData {
    pub dim: usize,
    pub entries: Vec<[f64; 2]>,
}

/// A dense complex square matrix with a verified role tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "OperatorData", into = "OperatorData")]
pub struct Operator {
    mat: DMatrix<C64>,
    role: Role,
}

impl Operator {
    /// Wraps an arbitrary square matrix with no verified role.
    pub fn from_matrix(mat: DMatrix<C64>) -> Self {
        assert_eq!(mat.nrows(), mat.ncols(), "operator matrix must be square");
        Operator {
            mat,
            role: Role::General,
        }
    }

    /// Wraps a matrix after verifying A = A†.
    pub fn hermitian(mat: DMatrix<C64>) -> Result<Self> {
        let dev = max_entry_dev(&mat, &mat.adjoint());
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        Ok(Operator {
            mat,
            role: Role::Hermitian,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Operator {
            mat: DMatrix::identity(dim, dim),
            role: Role::Projector,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Operator {
            mat: DMatrix::zeros(dim, dim),
            role: Role::General,
        }
    }

    pub fn sigma_x() -> Self {
        Operator {
            mat: DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]),
            role: Role::Hermitian,
        }
    }

    pub fn sigma_y() -> Self {
        Operator {
            mat: DMatrix::from_row_slice(
                2,
                2,
                &[c(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), c(0.0)],
            ),
            role: Role::Hermitian,
        }
    }

    pub fn sigma_z() -> Self {
        Operator {
            mat: DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]),
            role: Role::Hermitian,
        }
    }

    /// cx σx + cy σy + cz σz.
    pub fn from_pauli_coeffs(cx: f64, cy: f64, cz: f64) -> Self {
        let m = Self::sigma_x().scale(cx) + Self::sigma_y().scale(cy) + Self::sigma_z().scale(cz);
        Operator {
            mat: m.mat,
            role: Role::Hermitian,
        }
    }

    /// n·σ for a unit 3-vector n.
    pub fn pauli_direction(n: [f64; 3]) -> Result<Self> {
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "direction vector must be unit length (|n| = {norm})"
            )));
        }
        Ok(Self::from_pauli_coeffs(n[0], n[1], n[2]))
    }

    /// Rank-1 projector |v⟩⟨v| / ⟨v|v⟩.
    pub fn projector_onto(v: &DVector<C64>) -> Result<Self> {
        let n2 = v.norm_squared();
        if n2 <= 0.0 {
            return Err(Error::InvalidParameter(
                "cannot project onto the zero vector".into(),
            ));
        }
        let m = v * v.adjoint() / c(n2);
        Ok(Operator {
            mat: m,
            role: Role::Projector,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn adjoint(&self) -> Operator {
        Operator::from_matrix(self.mat.adjoint())
    }

    pub fn scale(&self, s: f64) -> Operator {
        Operator::from_matrix(&self.mat * c(s))
    }

    pub fn scale_complex(&self, s: C64) -> Operator {
        Operator::from_matrix(&self.mat * s)
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    pub fn kron(&self, other: &Operator) -> Operator {
        Operator::from_matrix(self.mat.kronecker(&other.mat))
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.mat * v
    }

    /// ⟨ψ|A|ψ⟩ for a ket ψ.
    pub fn expectation_ket(&self, psi: &DVector<C64>) -> C64 {
        psi.dotc(&(&self.mat * psi))
    }

    /// Tr(Aρ).
    pub fn expectation_rho(&self, rho: &DMatrix<C64>) -> C64 {
        (&self.mat * rho).trace()
    }

    /// Max-entry deviation of A from A†.
    pub fn hermiticity_deviation(&self) -> f64 {
        max_entry_dev(&self.mat, &self.mat.adjoint())
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let d = self.dim();
        max_entry_dev(&(self.mat.adjoint() * &self.mat), &DMatrix::identity(d, d)) <= tol
    }

    pub fn is_projector(&self, tol: f64) -> bool {
        let sq = &self.mat * &self.mat;
        max_entry_dev(&sq, &self.mat) <= tol && self.is_hermitian(tol)
    }

    /// Max-entry deviation of Q² from the identity.
    pub fn dichotomy_deviation(&self) -> f64 {
        let d = self.dim();
        max_entry_dev(&(&self.mat * &self.mat), &DMatrix::identity(d, d))
    }

    pub fn is_dichotomic(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.dichotomy_deviation() <= tol
    }

    /// Eigendecomposition of a hermitian operator: ascending real eigenvalues
    /// and the unitary matrix of column eigenvectors.
    pub fn eigh(&self) -> Result<(DVector<f64>, DMatrix<C64>)> {
        let dev = self.hermiticity_deviation();
        if dev > HERMITICITY_TOL {
            return Err(Error::NotHermitian { deviation: dev });
        }
        let es = nalgebra::linalg::SymmetricEigen::new(self.mat.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        order.sort_by(|&a, &b| es.eigenvalues[a].partial_cmp(&es.eigenvalues[b]).unwrap());
        let values = DVector::from_iterator(self.dim(), order.iter().map(|&k| es.eigenvalues[k]));
        let vectors = DMatrix::from_columns(
            &order
                .iter()
                .map(|&k| es.eigenvectors.column(k).into_owned())
                .collect::<Vec<_>>(),
        );
        Ok((values, vectors))
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.mat.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<OperatorData> for Operator {
    type Error = Error;

    fn try_from(data: OperatorData) -> Result<Self> {
        if data.entries.len() != data.dim * data.dim {
            return Err(Error::InvalidParameter(format!(
                "operator data: expected {} entries for dim {}, got {}",
                data.dim * data.dim,
                data.dim,
                data.entries.len()
            )));
        }
        let mat = DMatrix::from_row_iterator(
            data.dim,
            data.dim,
            data.entries.iter().map(|&[re, im]| C64::new(re, im)),
        );
        Ok(Operator::from_matrix(mat))
    }
}

impl From<Operator> for OperatorData {
    fn from(op: Operator) -> OperatorData {
        let dim = op.dim();
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = op.mat[(i, j)];
                entries.push([z.re, z.im]);
            }
        }
        OperatorData { dim, entries }
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        Operator::from_matrix(&self.mat + &rhs.mat)
    }
}

impl std::ops::Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        Operator::from_matrix(&self.mat - &rhs.mat)
    }
}

impl std::ops::Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl std::ops::Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        Operator::from_matrix(&self.mat * &rhs.mat)
    }
}

impl std::ops::Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

/// [A, B] = AB − BA.
pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    &(a * b) - &(b * a)
}

/// {A, B} = AB + BA.
pub fn anticommutator(a: &Operator, b: &Operator) -> Operator {
    &(a * b) + &(b * a)
}

/// e^{−iHt} for hermitian H, computed by eigendecomposition.
///
/// Exact (to rounding) for the small dimensions this crate targets; satisfies
/// the group law e^{−iHt₁}e^{−iHt₂} = e^{−iH(t₁+t₂)} and `unitary(H, 0) = I`.
pub fn unitary(h: &Operator, t: f64) -> Result<Operator> {
    let (values, vectors) = h.eigh()?;
    let dim = h.dim();
    let phases = DMatrix::from_diagonal(&DVector::from_iterator(
        dim,
        values.iter().map(|&lam| C64::new(0.0, -lam * t).exp()),
    ));
    let mat = &vectors * phases * vectors.adjoint();
    Ok(Operator {
        mat,
        role: Role::Unitary,
    })
}

/// Heisenberg evolution A(t) = e^{iHt} A e^{−iHt}.
pub fn heisenberg(a: &Operator, h: &Operator, t: f64) -> Result<Operator> {
    a.check_same_dim(h)?;
    let u = unitary(h, t)?;
    let mat = u.mat.adjoint() * &a.mat * &u.mat;
    Ok(Operator {
        mat,
        role: a.role,
    })
}

/// Spectral projector P_s = ½(I + sQ) of a dichotomic observable.
pub fn projector(q: &Operator, s: Sign) -> Result<Operator> {
    let dev = q.dichotomy_deviation();
    if !q.is_hermitian(HERMITICITY_TOL) || dev > DICHOTOMY_TOL {
        return Err(Error::NotDichotomic {
            deviation: dev.max(q.hermiticity_deviation()),
        });
    }
    let mat = (DMatrix::identity(q.dim(), q.dim()) + &q.mat * c(s.value())) * c(0.5);
    Ok(Operator {
        mat,
        role: Role::Projector,
    })
}

/// Wire form of a state: either a ket or a density matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantumStateData {
    Ket(Vec<[f64; 2]>),
    Rho(OperatorData),
}

/// A pure ket or a density matrix on a d-dimensional Hilbert space.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "QuantumStateData", into = "QuantumStateData")]
pub enum QuantumState {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

impl QuantumState {
    /// Validates ‖ψ‖ = 1 and wraps the ket.
    pub fn pure(ket: DVector<C64>) -> Result<Self> {
        let dev = (ket.norm() - 1.0).abs();
        if dev > STATE_TOL {
            return Err(Error::NotNormalized { deviation: dev });
        }
        Ok(QuantumState::Pure(ket))
    }

    /// Validates hermiticity, positivity, and unit trace, then wraps ρ.
    pub fn density(rho: DMatrix<C64>) -> Result<Self> {
        let op = Operator::from_matrix(rho.clone());
        if !op.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidDensityMatrix {
                reason: "not hermitian".into(),
            });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("trace = {tr} ≠ 1"),
            });
        }
        let (values, _) = op.eigh().map_err(|_| Error::InvalidDensityMatrix {
            reason: "not hermitian".into(),
        })?;
        if values.iter().any(|&lam| lam < -STATE_TOL) {
            return Err(Error::InvalidDensityMatrix {
                reason: format!("negative eigenvalue {:.3e}", values.min()),
            });
        }
        Ok(QuantumState::Mixed(rho))
    }

    pub fn up_z() -> Self {
        QuantumState::Pure(DVector::from_vec(vec![c(1.0), c(0.0)]))
    }

    pub fn down_z() -> Self {
        QuantumState::Pure(DVector::from_vec(vec![c(0.0), c(1.0)]))
    }

    /// +1 eigenstate of σx.
    pub fn plus_x() -> Self {
        let r = 1.0 / 2.0_f64.sqrt();
        QuantumState::Pure(DVector::from_vec(vec![c(r), c(r)]))
    }

    /// +1 eigenstate of σy.
    pub fn plus_y() -> Self {
        let r = 1.0 / 2.0_f64.sqrt();
        QuantumState::Pure(DVector::from_vec(vec![c(r), C64::new(0.0, r)]))
    }

    /// Maximally mixed state I/d.
    pub fn maximally_mixed(dim: usize) -> Self {
        QuantumState::Mixed(DMatrix::identity(dim, dim) * c(1.0 / dim as f64))
    }

    pub fn dim(&self) -> usize {
        match self {
            QuantumState::Pure(k) => k.len(),
            QuantumState::Mixed(r) => r.nrows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, QuantumState::Pure(_))
    }

    pub fn as_ket(&self) -> Result<&DVector<C64>> {
        match self {
            QuantumState::Pure(k) => Ok(k),
            QuantumState::Mixed(_) => Err(Error::PureStateRequired),
        }
    }

    /// Density-matrix form (|ψ⟩⟨ψ| for pure input).
    pub fn to_density(&self) -> DMatrix<C64> {
        match self {
            QuantumState::Pure(k) => k * k.adjoint(),
            QuantumState::Mixed(r) => r.clone(),
        }
    }

    /// ⟨A⟩ in this state.
    pub fn expectation(&self, a: &Operator) -> C64 {
        match self {
            QuantumState::Pure(k) => a.expectation_ket(k),
            QuantumState::Mixed(r) => a.expectation_rho(r),
        }
    }

    /// Tr ρ².
    pub fn purity(&self) -> f64 {
        match self {
            QuantumState::Pure(_) => 1.0,
            QuantumState::Mixed(r) => (r * r).trace().re,
        }
    }

    /// State evolved for time t under hermitian H.
    pub fn evolve(&self, h: &Operator, t: f64) -> Result<QuantumState> {
        let u = unitary(h, t)?;
        Ok(match self {
            QuantumState::Pure(k) => QuantumState::Pure(u.apply(k)),
            QuantumState::Mixed(r) => QuantumState::Mixed(&u.mat * r * u.mat.adjoint()),
        })
    }

    /// Spectral decomposition of ρ into (weight, eigenket) pairs with
    /// weight > tolerance. A pure state yields itself with weight 1.
    pub fn pure_components(&self) -> Result<Vec<(f64, DVector<C64>)>> {
        match self {
            QuantumState::Pure(k) => Ok(vec![(1.0, k.clone())]),
            QuantumState::Mixed(r) => {
                let (values, vectors) = Operator::from_matrix(r.clone()).eigh()?;
                let mut out = Vec::new();
                for k in 0..values.len() {
                    let w = values[k];
                    if w > 1e-14 {
                        out.push((w, vectors.column(k).into_owned()));
                    }
                }
                Ok(out)
            }
        }
    }
}

impl TryFrom<QuantumStateData> for QuantumState {
    type Error = Error;

    fn try_from(data: QuantumStateData) -> Result<Self> {
        match data {
            QuantumStateData::Ket(amps) => {
                let ket = DVector::from_iterator(
                    amps.len(),
                    amps.iter().map(|&[re, im]| C64::new(re, im)),
                );
                QuantumState::pure(ket)
            }
            QuantumStateData::Rho(data) => QuantumState::density(Operator::try_from(data)?.mat),
        }
    }
}

impl From<QuantumState> for QuantumStateData {
    fn from(state: QuantumState) -> QuantumStateData {
        match state {
            QuantumState::Pure(k) => {
                QuantumStateData::Ket(k.iter().map(|z| [z.re, z.im]).collect())
            }
            QuantumState::Mixed(r) => QuantumStateData::Rho(Operator::from_matrix(r).into()),
        }
    }
}

/// The built-in spin model: H = ½ω σx with dichotomic observable Q = n·σ.
///
/// For Q = σz the Heisenberg solution is
/// σz(t₂) = cos ω(t₂−t₁) σz(t₁) + sin ω(t₂−t₁) σy(t₁), giving the
/// state-independent correlator cos ω(t₂−t₁).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpinModel {
    omega: f64,
    q_direction: [f64; 3],
}

impl SpinModel {
    pub fn new(omega: f64, q_direction: [f64; 3]) -> Result<Self> {
        let n = q_direction;
        let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "q_direction must be a unit vector (|n| = {norm})"
            )));
        }
        Ok(SpinModel {
            omega,
            q_direction,
        })
    }

    /// Standard choice Q = σz.
    pub fn z(omega: f64) -> Self {
        SpinModel {
            omega,
            q_direction: [0.0, 0.0, 1.0],
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn hamiltonian(&self) -> Operator {
        Operator::sigma_x().scale(0.5 * self.omega)
    }

    pub fn q_op(&self) -> Operator {
        let n = self.q_direction;
        Operator::from_pauli_coeffs(n[0], n[1], n[2])
    }
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub(crate) fn max_entry_dev(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
