//! Unambiguous comparison of two unknown unitary channels.
//!
//! A comparator is a two-outcome process POVM `{M_diff, M_?}` on the four legs
//! `(1, 2, 3, 4)` (see [`crate::qrep`]). It never reports `diff` when the two
//! boxes are equal iff `tr(ω_T M_diff) = 0`, where
//!
//! ```text
//! ω_T = P₊⊗P₊ / d₊ + P₋⊗P₋ / d₋
//! ```
//!
//! is the Haar average of `ω_{U⊗U}`. A `same` outcome can never be
//! unambiguous, so its element must vanish. The figure of merit is the Haar
//! average of `p_diff` over independent `U, V`, which equals `tr(M_diff)/d²`
//! and never exceeds `(d + 1)/(2d)`; that value is reached exactly by
//! `M_diff = ρᵀ⊗P₊` with `ρ` supported on the antisymmetric subspace.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::haar::{haar_sample, mc_scalar, McEstimate};
use crate::matcore::{ginibre, kron_vec, CMatrix, ALGEBRAIC_TOL, C64};
use crate::qrep::{
    choi_of_unitary, choi_vector_of_unitary_pair, exact_sqrt, outcome_probability_pure,
    physical_probability, ppovm_from_experiment, random_state, ChoiOp, Ppovm, QState, UnitaryOp,
    DIFF, INCONCLUSIVE, SAME,
};
use crate::symmetry::{
    build_split, dim_minus, dim_plus, random_antisymmetric_state, Exchange, Purity, SymmetrySplit,
};

/// Largest achievable average success probability, `(d + 1)/(2d)`.
pub fn success_bound(d: usize) -> f64 {
    (d + 1) as f64 / (2 * d) as f64
}

/// Success probability of the symmetric-test-state strategy, `(d − 1)/(2d)`.
pub fn symmetric_success(d: usize) -> f64 {
    (d - 1) as f64 / (2 * d) as f64
}

/// Scales below this are reported as an exactly vanishing `M_diff`.
pub const DEGENERATE_SCALE: f64 = 1e-8;
/// Bisection stops once the bracket on the scale is this narrow.
pub const BISECTION_TOL: f64 = 1e-10;

fn require_qudit(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "qudit dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

/// `d` such that the PPOVM tests channels on `d²`-dimensional pairs.
pub fn qudit_dim(ppovm: &Ppovm) -> Result<usize> {
    match exact_sqrt(ppovm.channel_dim()) {
        Some(d) if d >= 2 => Ok(d),
        _ => Err(Error::DimensionMismatch(format!(
            "PPOVM tests a {}-dimensional channel, not a pair of qudits",
            ppovm.channel_dim()
        ))),
    }
}

/// Haar average of `ω_{U⊗U}`: `P₊⊗P₊/d₊ + P₋⊗P₋/d₋` on `(d²)²` dimensions.
pub fn omega_twirl(d: usize) -> Result<ChoiOp> {
    require_qudit(d)?;
    let s = build_split(d)?;
    let plus = s
        .p_plus
        .tensor(&s.p_plus)
        .scale_real(1.0 / s.d_plus() as f64);
    let minus = s
        .p_minus
        .tensor(&s.p_minus)
        .scale_real(1.0 / s.d_minus() as f64);
    ChoiOp::new(&plus + &minus, d * d)
}

/// Projector onto `supp ω_T = span{s_j⊗s_k, a_m⊗a_n}`.
pub fn omega_twirl_support(d: usize) -> Result<CMatrix> {
    require_qudit(d)?;
    let s = build_split(d)?;
    Ok(&s.p_plus.tensor(&s.p_plus) + &s.p_minus.tensor(&s.p_minus))
}

#[derive(Clone, Debug, PartialEq)]
pub enum StrategyKind {
    /// Antisymmetric test state, `F_diff = P₊`, `F_? = P₋`.
    AntisymOptimal,
    /// Symmetric test state, `F_diff = P₋`, `F_? = P₊`.
    Symmetric,
    /// Any test state with a caller-chosen `F_diff`; `F_? = I − F_diff`.
    Custom { f_diff: CMatrix },
}

/// Test state plus two-outcome measurement, with the induced PPOVM.
#[derive(Clone, Debug)]
pub struct Strategy {
    pub kind: StrategyKind,
    pub xi: QState,
    pub f_diff: CMatrix,
    pub f_inconclusive: CMatrix,
    pub ppovm: Ppovm,
}

pub fn make_strategy(kind: StrategyKind, xi: QState) -> Result<Strategy> {
    let d = match exact_sqrt(xi.dim()) {
        Some(d) if d >= 2 => d,
        _ => {
            return Err(Error::DimensionMismatch(format!(
                "test state of dimension {} is not a pair of qudits",
                xi.dim()
            )))
        }
    };
    let split = build_split(d)?;
    let (f_diff, f_inconclusive) = match &kind {
        StrategyKind::AntisymOptimal => {
            require_support(&split, &xi, Exchange::Antisymmetric)?;
            (split.p_plus.clone(), split.p_minus.clone())
        }
        StrategyKind::Symmetric => {
            require_support(&split, &xi, Exchange::Symmetric)?;
            (split.p_minus.clone(), split.p_plus.clone())
        }
        StrategyKind::Custom { f_diff } => {
            let rest = &CMatrix::identity(d * d) - f_diff;
            (f_diff.clone(), rest)
        }
    };
    let effects = BTreeMap::from([
        (DIFF.to_string(), f_diff.clone()),
        (INCONCLUSIVE.to_string(), f_inconclusive.clone()),
    ]);
    let ppovm = ppovm_from_experiment(&xi, &effects)?;
    Ok(Strategy {
        kind,
        xi,
        f_diff,
        f_inconclusive,
        ppovm,
    })
}

fn require_support(split: &SymmetrySplit, xi: &QState, side: Exchange) -> Result<()> {
    let residual = split.weight_outside(xi.mat(), side)?;
    if residual > ALGEBRAIC_TOL {
        return Err(Error::SupportMismatch { residual });
    }
    Ok(())
}

/// The singlet-like state `ψ_{0−1} = (|01⟩ − |10⟩)/√2`.
pub fn reference_antisymmetric_state(d: usize) -> Result<QState> {
    let split = build_split(d)?;
    QState::pure(&split.basis_minus[0], vec![d, d])
}

/// The product state `|00⟩`.
pub fn reference_symmetric_state(d: usize) -> Result<QState> {
    require_qudit(d)?;
    QState::pure(&split_basis_first(d), vec![d, d])
}

fn split_basis_first(d: usize) -> Vec<C64> {
    crate::matcore::basis_ket(d * d, 0)
}

impl Strategy {
    pub fn d(&self) -> usize {
        exact_sqrt(self.xi.dim()).expect("validated at construction")
    }

    pub fn m_diff(&self) -> &CMatrix {
        self.ppovm
            .element(DIFF)
            .expect("strategies always carry a diff element")
    }

    pub fn m_inconclusive(&self) -> &CMatrix {
        self.ppovm
            .element(INCONCLUSIVE)
            .expect("strategies always carry an inconclusive element")
    }

    /// `tr((U⊗V) ξ (U⊗V)† F_diff)`: the laboratory picture of `p_diff`.
    pub fn p_diff_physical(&self, u: &UnitaryOp, v: &UnitaryOp) -> Result<f64> {
        if u.dim() != v.dim() || u.dim() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "strategy for d = {} given unitaries of dimension {} and {}",
                self.d(),
                u.dim(),
                v.dim()
            )));
        }
        physical_probability(&self.xi, &u.tensor(v), &self.f_diff)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Different,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub p_diff: f64,
    pub p_inconclusive: f64,
    pub verdict: Verdict,
    pub seed: u64,
}

/// Exact outcome probabilities for the pair `(U, V)` through the Choi
/// picture, plus one sampled verdict drawn from `seed`.
pub fn run_pair(
    strategy: &Strategy,
    u: &UnitaryOp,
    v: &UnitaryOp,
    seed: u64,
) -> Result<ComparisonReport> {
    if u.dim() != v.dim() || u.dim() != strategy.d() {
        return Err(Error::DimensionMismatch(format!(
            "strategy for d = {} given unitaries of dimension {} and {}",
            strategy.d(),
            u.dim(),
            v.dim()
        )));
    }
    let w = choi_vector_of_unitary_pair(u, v)?;
    let p_diff = outcome_probability_pure(&w, strategy.m_diff())?;
    let p_inconclusive = outcome_probability_pure(&w, strategy.m_inconclusive())?;
    let draw: f64 = ChaCha8Rng::seed_from_u64(seed).random();
    let verdict = if draw < p_diff {
        Verdict::Different
    } else {
        Verdict::Inconclusive
    };
    Ok(ComparisonReport {
        p_diff,
        p_inconclusive,
        verdict,
        seed,
    })
}

/// `tr(M_diff)/d²` of any PPOVM with a `diff` element (0 if absent).
pub fn ppovm_success(ppovm: &Ppovm) -> Result<f64> {
    let d = qudit_dim(ppovm)?;
    Ok(match ppovm.element(DIFF) {
        Some(m) => m.trace()?.re / (d * d) as f64,
        None => 0.0,
    })
}

pub fn average_success_analytic(strategy: &Strategy) -> f64 {
    ppovm_success(&strategy.ppovm).expect("strategies act on qudit pairs")
}

/// Average of `p_diff` over `n` independent Haar pairs `(U, V)`.
///
/// Each pair is evaluated in the laboratory picture
/// `tr((U⊗V) ξ (U⊗V)† F_diff)`, which equals `tr(ω_{U⊗V} M_diff)` for the
/// ancilla-free strategies built here and costs `O(d⁶)` instead of `O(d⁸)`.
pub fn average_success_mc(strategy: &Strategy, n: usize, seed: u64) -> Result<McEstimate> {
    let d = strategy.d();
    mc_scalar(n, seed, |rng| {
        let u = haar_sample(d, rng);
        let v = haar_sample(d, rng);
        strategy.p_diff_physical(&u, &v)
    })
}

/// `(1 − η_same) · tr(M_diff)/d²`
pub fn overall_success(strategy: &Strategy, eta_same: f64) -> Result<f64> {
    if !(eta_same > 0.0 && eta_same < 1.0) {
        return Err(Error::InvalidPrior(eta_same));
    }
    Ok((1.0 - eta_same) * average_success_analytic(strategy))
}

/// Residuals of the no-error conditions; all vanish for an unambiguous comparator.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NoErrorReport {
    /// `tr(ω_T M_diff)`
    pub twirl_residual: f64,
    /// max over sampled Haar `U` of `tr(ω_{U⊗U} M_diff)`
    pub same_pair_residual: f64,
    /// `tr(M_same)/d²` when a `same` element is present
    pub same_element_residual: Option<f64>,
    pub n_samples: usize,
}

impl NoErrorReport {
    pub fn max_residual(&self) -> f64 {
        self.twirl_residual
            .max(self.same_pair_residual)
            .max(self.same_element_residual.unwrap_or(0.0))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual() <= tol
    }
}

pub fn verify_no_error(ppovm: &Ppovm, n_samples: usize, seed: u64) -> Result<NoErrorReport> {
    let d = qudit_dim(ppovm)?;
    let big = d.pow(4);
    let zero = CMatrix::zeros(big, big);
    let m_diff = ppovm.element(DIFF).unwrap_or(&zero);
    let twirl_residual = omega_twirl(d)?.mat().trace_product(m_diff)?.re;
    let same_pair_residual = if n_samples == 0 {
        0.0
    } else {
        let mut worst = f64::NEG_INFINITY;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..n_samples {
            let u = haar_sample(d, &mut rng);
            let w = choi_vector_of_unitary_pair(&u, &u)?;
            worst = worst.max(m_diff.expectation(&w)?.re);
        }
        worst
    };
    let same_element_residual = match ppovm.element(SAME) {
        Some(m) => Some(m.trace()?.re / (d * d) as f64),
        None => None,
    };
    Ok(NoErrorReport {
        twirl_residual,
        same_pair_residual,
        same_element_residual,
        n_samples,
    })
}

/// Basis of `span{s_j⊗a_n, a_n⊗s_j}`, the orthocomplement of `supp ω_T`.
pub fn diff_support_basis(split: &SymmetrySplit) -> Vec<Vec<C64>> {
    let mut out = Vec::with_capacity(2 * split.d_plus() * split.d_minus());
    for s in &split.basis_plus {
        for a in &split.basis_minus {
            out.push(kron_vec(s, a));
            out.push(kron_vec(a, s));
        }
    }
    out
}

/// A random PPOVM drawn by [`random_valid_ppovm_scaled`], with the scale used.
#[derive(Clone, Debug)]
pub struct RandomPpovm {
    pub ppovm: Ppovm,
    pub scale: f64,
}

/// Random unambiguous comparator. See [`random_valid_ppovm_scaled`].
pub fn random_valid_ppovm<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Ppovm> {
    Ok(random_valid_ppovm_scaled(d, rng)?.ppovm)
}

/// Draws a random state `ρ` and a random positive `K` supported on
/// `span{s_j⊗a_n, a_n⊗s_j}`, normalized to unit trace, then finds the largest
/// `λ` keeping `ρᵀ⊗I − λK` positive by bisection. The positivity oracle is a
/// Cholesky test of `ρᵀ⊗I − λK + 1e-10·I`. The result is `M_diff = λK`,
/// `M_? = ρᵀ⊗I − λK`.
///
/// `ρ` is a generic full-rank state (3/5), a generic state of lower rank
/// (1/5) or a mixed antisymmetric state (1/5). `K` is drawn from one of
/// [`KernelShape`] uniformly, so the draws range from vanishing success up to
/// the optimum itself.
pub fn random_valid_ppovm_scaled<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<RandomPpovm> {
    require_qudit(d)?;
    let dd = d * d;
    let split = build_split(d)?;

    let rho = match rng.random_range(0..5) {
        0 => random_state(dd, rng.random_range(1..dd), rng)?,
        1 => random_antisymmetric_state(d, Purity::Mixed, rng)?,
        _ => random_state(dd, dd, rng)?,
    };
    let shape = KernelShape::ALL[rng.random_range(0..KernelShape::ALL.len())];
    let k = random_kernel(&split, shape, &rho.transpose(), rng)?;
    let k = k.scale_real(1.0 / k.trace()?.re);

    let rho_t = rho.transpose();
    let normalization = rho_t.tensor(&CMatrix::identity(dd));
    let scale = if kernel_weight(&rho_t, &k)? > ALGEBRAIC_TOL {
        // K leaks into ker(ρᵀ)⊗C^{d²}, where the normalization vanishes
        0.0
    } else {
        let feasible =
            |lambda: f64| (&normalization - &k.scale_real(lambda)).is_psd_fast(ALGEBRAIC_TOL);
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        while feasible(hi)? {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > BISECTION_TOL {
            let mid = 0.5 * (lo + hi);
            if feasible(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo < DEGENERATE_SCALE {
            0.0
        } else {
            lo
        }
    };

    let m_diff = k.scale_real(scale);
    let m_inconclusive = &normalization - &m_diff;
    let elements = BTreeMap::from([
        (DIFF.to_string(), m_diff),
        (INCONCLUSIVE.to_string(), m_inconclusive),
    ]);
    Ok(RandomPpovm {
        ppovm: Ppovm::new(elements, rho)?,
        scale,
    })
}

/// Families of positive operators on `span{s_j⊗a_n, a_n⊗s_j}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelShape {
    /// Random rank over the whole span.
    Full,
    /// Random rank over `span{a_n⊗s_j}` only.
    AntisymFirst,
    /// Random rank over `span{s_j⊗a_n}` only.
    SymFirst,
    /// `(P₋ ρᵀ P₋)⊗P₊`, the optimal shape when `ρ` is antisymmetric.
    Aligned,
    /// `τ⊗P₊` with `τ` a random antisymmetric state.
    Product,
}

impl KernelShape {
    pub const ALL: [KernelShape; 5] = [
        KernelShape::Full,
        KernelShape::AntisymFirst,
        KernelShape::SymFirst,
        KernelShape::Aligned,
        KernelShape::Product,
    ];
}

fn random_kernel<R: Rng + ?Sized>(
    split: &SymmetrySplit,
    shape: KernelShape,
    rho_t: &CMatrix,
    rng: &mut R,
) -> Result<CMatrix> {
    let low_rank = |columns: Vec<Vec<C64>>, rng: &mut R| -> Result<CMatrix> {
        let basis = CMatrix::from_columns(&columns)?;
        let rank = rng.random_range(1..=basis.cols());
        let g = basis.mat_mul(&ginibre(basis.cols(), rank, rng))?;
        Ok(g.mat_mul(&g.dagger())?.hermitian_part())
    };
    match shape {
        KernelShape::Full => low_rank(diff_support_basis(split), rng),
        KernelShape::AntisymFirst => {
            low_rank(cross_basis(&split.basis_minus, &split.basis_plus), rng)
        }
        KernelShape::SymFirst => low_rank(cross_basis(&split.basis_plus, &split.basis_minus), rng),
        KernelShape::Aligned => {
            let tau = rho_t.conjugate_by(&split.p_minus)?.hermitian_part();
            if tau.trace()?.re <= ALGEBRAIC_TOL {
                // ρ has no antisymmetric weight to align with
                return low_rank(diff_support_basis(split), rng);
            }
            Ok(tau.tensor(&split.p_plus))
        }
        KernelShape::Product => {
            let tau = random_antisymmetric_state(split.d, Purity::Mixed, rng)?;
            Ok(tau.mat().tensor(&split.p_plus))
        }
    }
}

fn cross_basis(first: &[Vec<C64>], second: &[Vec<C64>]) -> Vec<Vec<C64>> {
    first
        .iter()
        .flat_map(|x| second.iter().map(move |y| kron_vec(x, y)))
        .collect()
}

/// `tr((Π_ker ⊗ I) K)` with `Π_ker` the kernel projector of `ρᵀ`.
fn kernel_weight(rho_t: &CMatrix, k: &CMatrix) -> Result<f64> {
    let eig = rho_t.eig_hermitian()?;
    let dd = rho_t.rows();
    let mut kernel = CMatrix::zeros(dd, dd);
    for (i, &value) in eig.values.iter().enumerate() {
        if value < ALGEBRAIC_TOL {
            kernel = &kernel + &CMatrix::projector(&eig.vector(i));
        }
    }
    if kernel.max_abs() == 0.0 {
        return Ok(0.0);
    }
    Ok(kernel.tensor(&CMatrix::identity(dd)).trace_product(k)?.re)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeTolerance {
    pub success: f64,
    pub structure: f64,
}

impl Default for ProbeTolerance {
    fn default() -> Self {
        ProbeTolerance {
            success: 1e-9,
            structure: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProbeResult {
    pub optimal_form: bool,
    /// Largest of the three residuals below.
    pub deviation: f64,
    /// `|(d + 1)/(2d) − tr(M_diff)/d²|`
    pub success_gap: f64,
    /// `max |M_diff − ρᵀ⊗P₊|`
    pub structure_residual: f64,
    /// `max |P₊ ρᵀ P₊|`
    pub symmetric_weight: f64,
}

/// Checks whether a comparator has the unique optimal form
/// `M_diff = ρᵀ⊗P₊` with antisymmetric `ρ` and attains the bound.
pub fn uniqueness_probe(ppovm: &Ppovm, tol: ProbeTolerance) -> Result<ProbeResult> {
    let d = qudit_dim(ppovm)?;
    let split = build_split(d)?;
    let rho_t = ppovm.rho().transpose();
    let success_gap = (success_bound(d) - ppovm_success(ppovm)?).abs();
    let optimal = rho_t.tensor(&split.p_plus);
    let structure_residual = match ppovm.element(DIFF) {
        Some(m) => m.max_abs_diff(&optimal),
        None => optimal.max_abs(),
    };
    let symmetric_weight = rho_t.conjugate_by(&split.p_plus)?.max_abs();
    let optimal_form = success_gap <= tol.success
        && structure_residual <= tol.structure
        && symmetric_weight <= tol.structure;
    Ok(ProbeResult {
        optimal_form,
        deviation: success_gap.max(structure_residual).max(symmetric_weight),
        success_gap,
        structure_residual,
        symmetric_weight,
    })
}

/// Smallest allowed distance of `R` from the identity up to phase.
pub const WITNESS_MIN_DISTANCE: f64 = 1e-6;

/// Given `W` and any `R` not proportional to the identity, returns
/// `U = W R`, `V = R† W` with `U V = W²` and neither factor equal to `W`
/// up to phase.
pub fn sequential_witness(w: &UnitaryOp, r: &UnitaryOp) -> Result<(UnitaryOp, UnitaryOp)> {
    if w.dim() != r.dim() {
        return Err(Error::DimensionMismatch(format!(
            "W has dimension {}, R has dimension {}",
            w.dim(),
            r.dim()
        )));
    }
    let distance = r.phase_distance(&UnitaryOp::identity(r.dim()))?;
    if distance <= WITNESS_MIN_DISTANCE {
        return Err(Error::IdentityUpToPhase { distance });
    }
    Ok((w.then_after(r)?, r.dagger().then_after(w)?))
}

/// `max |U V − W²|` and `max |Choi(E_U∘E_V) − Choi(E_W∘E_W)|`.
pub fn witness_residuals(w: &UnitaryOp, u: &UnitaryOp, v: &UnitaryOp) -> Result<(f64, f64)> {
    let uv = u.then_after(v)?;
    let ww = w.then_after(w)?;
    let product = uv.mat().max_abs_diff(ww.mat());
    let choi = choi_of_unitary(&uv)
        .mat()
        .max_abs_diff(choi_of_unitary(&ww).mat());
    Ok((product, choi))
}

/// Dimensions `(d₊, d₋)`.
pub fn subspace_dims(d: usize) -> (usize, usize) {
    (dim_plus(d), dim_minus(d))
}
