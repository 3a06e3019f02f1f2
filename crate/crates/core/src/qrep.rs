//! States, unitaries, Choi operators and process POVMs.
//!
//! A channel `E` on an `D`-dimensional system is represented by its Choi
//! operator `ω_E = (I ⊗ E)[Ψ⁺_D]` built from the *unnormalized* maximally
//! entangled vector `|Ψ⁺_D⟩ = Σ_j |j⟩⊗|j⟩`, so `tr ω_E = D`. A process POVM
//! is a family of positive operators on `H_D ⊗ H_D` summing to `ρᵀ ⊗ I_D`,
//! and outcome `x` occurs with probability `tr(ω_E M_x)`.
//!
//! When two qudit boxes act in parallel, `D = d²` and the four tensor legs
//! are ordered `(1, 2, 3, 4)`: legs 1 and 2 are the reference copies, legs 3
//! and 4 carry the outputs of the first and second box. With this ordering
//! `Ψ⁺_D = (Ψ⁺_d)₁₃ ⊗ (Ψ⁺_d)₂₄` coincides with the flat definition above.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matcore::{ginibre, CMatrix, ALGEBRAIC_TOL, C64, SPECTRAL_TOL, ZERO};

pub const DIFF: &str = "diff";
pub const INCONCLUSIVE: &str = "inconclusive";
pub const SAME: &str = "same";

/// Raw probabilities below this are treated as construction bugs, not noise.
pub const PROBABILITY_TOL: f64 = 1e-10;

/// Integer square root for exact squares.
pub fn exact_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    (r * r == n).then_some(r)
}

/// A density operator.
#[derive(Clone, Debug, PartialEq)]
pub struct QState {
    mat: CMatrix,
    dim_factors: Vec<usize>,
}

impl QState {
    pub fn new(mat: CMatrix, dim_factors: Vec<usize>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        if dim_factors.iter().product::<usize>() != mat.dim() {
            return Err(Error::DimensionMismatch(format!(
                "subsystem dimensions {dim_factors:?} do not match a {}-dimensional state",
                mat.dim()
            )));
        }
        let herm = mat.hermitian_deviation();
        if herm > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = mat.trace()?;
        if (tr - C64::new(1.0, 0.0)).norm() > ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min = mat.min_eigenvalue()?;
        if min < -ALGEBRAIC_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(QState { mat, dim_factors })
    }

    /// Two-qudit state when the dimension is a perfect square, single factor otherwise.
    pub fn from_matrix(mat: CMatrix) -> Result<Self> {
        let dims = match exact_sqrt(mat.rows()) {
            Some(d) if d > 1 => vec![d, d],
            _ => vec![mat.rows()],
        };
        Self::new(mat, dims)
    }

    /// |ψ⟩⟨ψ| after normalizing ψ.
    pub fn pure(psi: &[C64], dim_factors: Vec<usize>) -> Result<Self> {
        let n = crate::matcore::norm(psi);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let psi: Vec<C64> = psi.iter().map(|x| x / n).collect();
        Self::new(CMatrix::projector(&psi), dim_factors)
    }

    pub fn maximally_mixed(dim_factors: Vec<usize>) -> Self {
        let n: usize = dim_factors.iter().product();
        QState {
            mat: CMatrix::identity(n).scale_real(1.0 / n as f64),
            dim_factors,
        }
    }

    pub(crate) fn from_parts_unchecked(mat: CMatrix, dim_factors: Vec<usize>) -> Self {
        QState { mat, dim_factors }
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn dim_factors(&self) -> &[usize] {
        &self.dim_factors
    }

    pub fn transpose(&self) -> CMatrix {
        self.mat
            .transpose_comp_basis()
            .expect("density matrices are square")
    }

    pub fn purity(&self) -> f64 {
        self.mat.trace_product(&self.mat).expect("square").re
    }
}

/// Random state of the given rank: `G G† / tr(G G†)` with `G` a `dim × rank`
/// Ginibre matrix.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Result<QState> {
    if rank == 0 || rank > dim {
        return Err(Error::InvalidDimension(format!(
            "rank {rank} for dimension {dim}"
        )));
    }
    let g = ginibre(dim, rank, rng);
    let gg = g.mat_mul(&g.dagger())?;
    let tr = gg.trace()?.re;
    let dims = match exact_sqrt(dim) {
        Some(d) if d > 1 => vec![d, d],
        _ => vec![dim],
    };
    QState::new(gg.scale_real(1.0 / tr).hermitian_part(), dims)
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryOp {
    mat: CMatrix,
}

impl UnitaryOp {
    pub fn new(mat: CMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::NotSquare {
                rows: mat.rows(),
                cols: mat.cols(),
            });
        }
        let deviation = mat.unitarity_deviation();
        if deviation > ALGEBRAIC_TOL {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(UnitaryOp { mat })
    }

    pub fn identity(d: usize) -> Self {
        UnitaryOp {
            mat: CMatrix::identity(d),
        }
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn dagger(&self) -> Self {
        UnitaryOp {
            mat: self.mat.dagger(),
        }
    }

    /// Product `self · other`.
    pub fn then_after(&self, other: &UnitaryOp) -> Result<Self> {
        Ok(UnitaryOp {
            mat: self.mat.mat_mul(&other.mat)?,
        })
    }

    pub fn tensor(&self, other: &UnitaryOp) -> Self {
        UnitaryOp {
            mat: self.mat.tensor(&other.mat),
        }
    }

    /// U X U†
    pub fn conjugate(&self, x: &CMatrix) -> Result<CMatrix> {
        x.conjugate_by(&self.mat)
    }

    /// min over global phases of ‖U − e^{iφ} W‖_F.
    pub fn phase_distance(&self, other: &UnitaryOp) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "unitaries of dimension {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let overlap = other.mat.dagger().trace_product(&self.mat)?.norm();
        Ok((2.0 * self.dim() as f64 - 2.0 * overlap).max(0.0).sqrt())
    }
}

/// Choi operator of a channel on a `d_sys`-dimensional system.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiOp {
    mat: CMatrix,
    d_sys: usize,
}

impl ChoiOp {
    /// Validates positivity (1e-10) and the trace-D convention (1e-8).
    pub fn new(mat: CMatrix, d_sys: usize) -> Result<Self> {
        if mat.rows() != d_sys * d_sys || !mat.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "Choi operator of a {d_sys}-dimensional channel must be {0}x{0}",
                d_sys * d_sys
            )));
        }
        if !mat.is_psd(ALGEBRAIC_TOL)? {
            return Err(Error::InvalidState("Choi operator is not positive".into()));
        }
        let tr = mat.trace()?;
        if (tr - C64::new(d_sys as f64, 0.0)).norm() > 1e-8 {
            return Err(Error::InvalidState(format!(
                "Choi operator has trace {tr}, expected {d_sys}"
            )));
        }
        Ok(ChoiOp { mat, d_sys })
    }

    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn d_sys(&self) -> usize {
        self.d_sys
    }
}

/// `|Ψ⁺_D⟩ = Σ_j |j⟩⊗|j⟩`, unnormalized.
pub fn max_entangled_vector(dim: usize) -> Result<Vec<C64>> {
    if dim < 1 {
        return Err(Error::InvalidDimension(
            "maximally entangled state needs D >= 1".into(),
        ));
    }
    let mut v = vec![ZERO; dim * dim];
    for j in 0..dim {
        v[j * dim + j] = C64::new(1.0, 0.0);
    }
    Ok(v)
}

/// The rank-one operator `Ψ⁺_D = |Ψ⁺_D⟩⟨Ψ⁺_D|` with trace `D`.
pub fn max_entangled(dim: usize) -> Result<CMatrix> {
    Ok(CMatrix::projector(&max_entangled_vector(dim)?))
}

/// `(I ⊗ X)|Ψ⁺_D⟩` for a `D × D` operator `X`; as a `D × D` array this is
/// `Xᵀ`, i.e. entry `J·D + K` equals `X[K, J]`.
pub fn choi_vector(x: &CMatrix) -> Vec<C64> {
    let n = x.dim();
    let mut v = vec![ZERO; n * n];
    for j in 0..n {
        for k in 0..n {
            v[j * n + k] = x[(k, j)];
        }
    }
    v
}

/// Choi operator of the unitary channel `ρ ↦ U ρ U†`.
pub fn choi_of_unitary(u: &UnitaryOp) -> ChoiOp {
    ChoiOp {
        mat: CMatrix::projector(&choi_vector(u.mat())),
        d_sys: u.dim(),
    }
}

fn check_pair(u: &UnitaryOp, v: &UnitaryOp) -> Result<()> {
    if u.dim() != v.dim() {
        return Err(Error::DimensionMismatch(format!(
            "compared unitaries act on dimensions {} and {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(())
}

/// `(I_D ⊗ U ⊗ V)|Ψ⁺_D⟩` with `D = d²`.
pub fn choi_vector_of_unitary_pair(u: &UnitaryOp, v: &UnitaryOp) -> Result<Vec<C64>> {
    check_pair(u, v)?;
    Ok(choi_vector(&u.mat().tensor(v.mat())))
}

/// `ω_{U⊗V} = (I_D ⊗ U ⊗ V) Ψ⁺_D (I_D ⊗ U† ⊗ V†)`.
pub fn choi_of_unitary_pair(u: &UnitaryOp, v: &UnitaryOp) -> Result<ChoiOp> {
    check_pair(u, v)?;
    Ok(choi_of_unitary(&u.tensor(v)))
}

/// Labeled positive operators on `H_D ⊗ H_D` summing to `ρᵀ ⊗ I_D`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PpovmJson", into = "PpovmJson")]
pub struct Ppovm {
    elements: BTreeMap<String, CMatrix>,
    rho: QState,
}

#[derive(Serialize, Deserialize)]
struct PpovmJson {
    rho: CMatrix,
    elements: BTreeMap<String, CMatrix>,
}

impl TryFrom<PpovmJson> for Ppovm {
    type Error = Error;

    fn try_from(p: PpovmJson) -> Result<Self> {
        Ppovm::new(p.elements, QState::from_matrix(p.rho)?)
    }
}

impl From<Ppovm> for PpovmJson {
    fn from(p: Ppovm) -> Self {
        PpovmJson {
            rho: p.rho.mat,
            elements: p.elements,
        }
    }
}

impl Ppovm {
    /// Checks every element for positivity (1e-10) and the normalization
    /// `Σ M_x = ρᵀ ⊗ I_D` (1e-9).
    pub fn new(elements: BTreeMap<String, CMatrix>, rho: QState) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPpovm("no elements".into()));
        }
        let big = rho.dim() * rho.dim();
        for (label, m) in &elements {
            if m.rows() != big || !m.is_square() {
                return Err(Error::InvalidPpovm(format!(
                    "element '{label}' is {}x{}, expected {big}x{big}",
                    m.rows(),
                    m.cols()
                )));
            }
            if !m.is_psd(ALGEBRAIC_TOL)? {
                return Err(Error::InvalidPpovm(format!(
                    "element '{label}' is not positive"
                )));
            }
        }
        let p = Ppovm { elements, rho };
        let residual = p.normalization_residual();
        if residual > SPECTRAL_TOL {
            return Err(Error::InvalidPpovm(format!(
                "elements sum to ρᵀ⊗I only within {residual:e}"
            )));
        }
        Ok(p)
    }

    pub(crate) fn from_parts_unchecked(elements: BTreeMap<String, CMatrix>, rho: QState) -> Self {
        Ppovm { elements, rho }
    }

    pub fn elements(&self) -> &BTreeMap<String, CMatrix> {
        &self.elements
    }

    pub fn element(&self, label: &str) -> Option<&CMatrix> {
        self.elements.get(label)
    }

    pub fn rho(&self) -> &QState {
        &self.rho
    }

    /// Dimension `D` of the system the tested channel acts on.
    pub fn channel_dim(&self) -> usize {
        self.rho.dim()
    }

    pub fn normalization(&self) -> CMatrix {
        self.rho
            .transpose()
            .tensor(&CMatrix::identity(self.rho.dim()))
    }

    /// max |Σ M_x − ρᵀ⊗I|
    pub fn normalization_residual(&self) -> f64 {
        let mut sum = CMatrix::zeros(self.normalization().rows(), self.normalization().cols());
        for m in self.elements.values() {
            sum = &sum + m;
        }
        sum.max_abs_diff(&self.normalization())
    }

    /// Outcome distribution for a channel with Choi operator `omega`.
    pub fn probabilities(&self, omega: &ChoiOp) -> Result<BTreeMap<String, f64>> {
        self.elements
            .iter()
            .map(|(label, m)| Ok((label.clone(), outcome_probability(omega, m)?)))
            .collect()
    }

    /// Convex combination `t·a + (1 − t)·b`, including the normalization states.
    pub fn mix(a: &Ppovm, b: &Ppovm, t: f64) -> Result<Ppovm> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidPpovm(format!(
                "mixing weight {t} outside [0, 1]"
            )));
        }
        if a.channel_dim() != b.channel_dim() {
            return Err(Error::DimensionMismatch(
                "mixing PPOVMs of different size".into(),
            ));
        }
        let labels: std::collections::BTreeSet<&String> =
            a.elements.keys().chain(b.elements.keys()).collect();
        let n = a.normalization().rows();
        let zero = CMatrix::zeros(n, n);
        let elements = labels
            .into_iter()
            .map(|label| {
                let ma = a.elements.get(label).unwrap_or(&zero);
                let mb = b.elements.get(label).unwrap_or(&zero);
                (label.clone(), &ma.scale_real(t) + &mb.scale_real(1.0 - t))
            })
            .collect();
        let rho = QState::from_parts_unchecked(
            &a.rho.mat.scale_real(t) + &b.rho.mat.scale_real(1.0 - t),
            a.rho.dim_factors.clone(),
        );
        Ok(Ppovm { elements, rho })
    }
}

/// Ancilla-free realization: test state `xi`, then the POVM `effects` on the
/// channel output, giving `M_j = xiᵀ ⊗ F_j`.
pub fn ppovm_from_experiment(xi: &QState, effects: &BTreeMap<String, CMatrix>) -> Result<Ppovm> {
    validate_povm(effects, xi.dim())?;
    let xi_t = xi.transpose();
    let elements = effects
        .iter()
        .map(|(label, f)| (label.clone(), xi_t.tensor(f)))
        .collect();
    // tensor products of positive factors; the sum is xiᵀ ⊗ Σ F_j = xiᵀ ⊗ I
    Ok(Ppovm::from_parts_unchecked(elements, xi.clone()))
}

/// Positivity (1e-10) and completeness (1e-9) of a POVM on a `dim`-dimensional space.
pub fn validate_povm(effects: &BTreeMap<String, CMatrix>, dim: usize) -> Result<()> {
    if effects.is_empty() {
        return Err(Error::InvalidPovm("no effects".into()));
    }
    let mut sum = CMatrix::zeros(dim, dim);
    for (label, f) in effects {
        if f.rows() != dim || !f.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "effect '{label}' is {}x{}, expected {dim}x{dim}",
                f.rows(),
                f.cols()
            )));
        }
        if !f.is_psd(ALGEBRAIC_TOL)? {
            return Err(Error::InvalidPovm(format!(
                "effect '{label}' is not positive"
            )));
        }
        sum = &sum + f;
    }
    let residual = sum.max_abs_diff(&CMatrix::identity(dim));
    if residual > SPECTRAL_TOL {
        return Err(Error::InvalidPovm(format!(
            "effects sum to the identity only within {residual:e}"
        )));
    }
    Ok(())
}

/// Random POVM with `outcomes` effects: `F_j = S^{-1/2} G_j S^{-1/2}` where
/// `G_j` are random positive operators and `S = Σ G_j`.
pub fn random_povm<R: Rng + ?Sized>(
    dim: usize,
    outcomes: usize,
    rng: &mut R,
) -> Result<Vec<CMatrix>> {
    let raw: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(dim, dim, rng);
            g.mat_mul(&g.dagger()).map(|m| m.hermitian_part())
        })
        .collect::<Result<_>>()?;
    let mut total = CMatrix::zeros(dim, dim);
    for g in &raw {
        total = &total + g;
    }
    let inv_sqrt = total.hermitian_function(|x| 1.0 / x.sqrt())?;
    raw.iter()
        .map(|g| Ok(g.conjugate_by(&inv_sqrt)?.hermitian_part()))
        .collect()
}

fn clamp_probability(raw: f64) -> Result<f64> {
    if !(-PROBABILITY_TOL..=1.0 + PROBABILITY_TOL).contains(&raw) || raw.is_nan() {
        return Err(Error::ProbabilityOutOfRange { value: raw });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// `p = tr(ω M)`, clamped to [0, 1] after a 1e-10 tolerance check.
pub fn outcome_probability(omega: &ChoiOp, m: &CMatrix) -> Result<f64> {
    if omega.mat.rows() != m.rows() || !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "Choi operator is {0}x{0}, PPOVM element is {1}x{2}",
            omega.mat.rows(),
            m.rows(),
            m.cols()
        )));
    }
    clamp_probability(omega.mat.trace_product(m)?.re)
}

/// `p = ⟨w|M|w⟩` for a rank-one Choi operator `|w⟩⟨w|`.
pub fn outcome_probability_pure(w: &[C64], m: &CMatrix) -> Result<f64> {
    clamp_probability(m.expectation(w)?.re)
}

/// Probability of effect `f` when the channel `ρ ↦ X ρ X†` acts on `xi`.
pub fn physical_probability(xi: &QState, x: &UnitaryOp, f: &CMatrix) -> Result<f64> {
    if x.dim() != xi.dim() || f.rows() != xi.dim() {
        return Err(Error::DimensionMismatch(format!(
            "state of dimension {}, channel of dimension {}, effect {}x{}",
            xi.dim(),
            x.dim(),
            f.rows(),
            f.cols()
        )));
    }
    clamp_probability(x.conjugate(xi.mat())?.trace_product(f)?.re)
}
