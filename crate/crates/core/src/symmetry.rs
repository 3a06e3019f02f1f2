//! Exchange symmetry of two qudits: the swap operator, the projectors onto the
//! symmetric and antisymmetric subspaces, explicit orthonormal bases for both,
//! and samplers for states supported on either subspace.

use rand::Rng;

use crate::error::{Error, Result};
use crate::matcore::{gaussian_vector, ginibre, normalized, CMatrix, C64, ONE, ZERO};
use crate::qrep::QState;

#[derive(Clone, Debug)]
pub struct SymmetrySplit {
    pub d: usize,
    pub swap: CMatrix,
    pub p_plus: CMatrix,
    pub p_minus: CMatrix,
    /// `ψ_{j+k}` for `j ≤ k`, lexicographic.
    pub basis_plus: Vec<Vec<C64>>,
    /// `ψ_{j−k}` for `j < k`, lexicographic.
    pub basis_minus: Vec<Vec<C64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purity {
    Pure,
    Mixed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Exchange {
    Symmetric,
    Antisymmetric,
}

pub fn dim_plus(d: usize) -> usize {
    d * (d + 1) / 2
}

pub fn dim_minus(d: usize) -> usize {
    d * d.saturating_sub(1) / 2
}

fn require_qudit_pair(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(format!(
            "qudit dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

/// `S|j⟩⊗|k⟩ = |k⟩⊗|j⟩`
pub fn swap_operator(d: usize) -> CMatrix {
    let n = d * d;
    let mut s = CMatrix::zeros(n, n);
    for j in 0..d {
        for k in 0..d {
            s[(k * d + j, j * d + k)] = ONE;
        }
    }
    s
}

fn pair_vector(d: usize, j: usize, k: usize, sign: f64) -> Vec<C64> {
    let mut v = vec![ZERO; d * d];
    if j == k {
        v[j * d + j] = ONE;
    } else {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        v[j * d + k] = C64::new(h, 0.0);
        v[k * d + j] += C64::new(sign * h, 0.0);
    }
    v
}

pub fn build_split(d: usize) -> Result<SymmetrySplit> {
    require_qudit_pair(d)?;
    let swap = swap_operator(d);
    let ident = CMatrix::identity(d * d);
    let p_plus = (&ident + &swap).scale_real(0.5);
    let p_minus = (&ident - &swap).scale_real(0.5);
    let mut basis_plus = Vec::with_capacity(dim_plus(d));
    let mut basis_minus = Vec::with_capacity(dim_minus(d));
    for j in 0..d {
        for k in j..d {
            basis_plus.push(pair_vector(d, j, k, 1.0));
            if j < k {
                basis_minus.push(pair_vector(d, j, k, -1.0));
            }
        }
    }
    Ok(SymmetrySplit {
        d,
        swap,
        p_plus,
        p_minus,
        basis_plus,
        basis_minus,
    })
}

impl SymmetrySplit {
    pub fn d_plus(&self) -> usize {
        self.basis_plus.len()
    }

    pub fn d_minus(&self) -> usize {
        self.basis_minus.len()
    }

    pub fn projector(&self, side: Exchange) -> &CMatrix {
        match side {
            Exchange::Symmetric => &self.p_plus,
            Exchange::Antisymmetric => &self.p_minus,
        }
    }

    pub fn basis(&self, side: Exchange) -> &[Vec<C64>] {
        match side {
            Exchange::Symmetric => &self.basis_plus,
            Exchange::Antisymmetric => &self.basis_minus,
        }
    }

    /// Isometry whose columns are the basis vectors of one subspace.
    pub fn embedding(&self, side: Exchange) -> CMatrix {
        CMatrix::from_columns(self.basis(side)).expect("basis vectors share a length")
    }

    /// max |P ρ P| for the projector onto the *other* subspace.
    pub fn weight_outside(&self, rho: &CMatrix, side: Exchange) -> Result<f64> {
        let wrong = match side {
            Exchange::Symmetric => &self.p_minus,
            Exchange::Antisymmetric => &self.p_plus,
        };
        Ok(rho.conjugate_by(wrong)?.max_abs())
    }

    fn random_vector<R: Rng + ?Sized>(&self, side: Exchange, rng: &mut R) -> Vec<C64> {
        let basis = self.basis(side);
        let coeffs = gaussian_vector(basis.len(), rng);
        let mut v = vec![ZERO; self.d * self.d];
        for (c, b) in coeffs.iter().zip(basis) {
            for (x, y) in v.iter_mut().zip(b) {
                *x += c * y;
            }
        }
        normalized(&v)
    }

    fn random_state<R: Rng + ?Sized>(
        &self,
        side: Exchange,
        purity: Purity,
        rng: &mut R,
    ) -> Result<QState> {
        let dims = vec![self.d, self.d];
        match purity {
            Purity::Pure => QState::pure(&self.random_vector(side, rng), dims),
            Purity::Mixed => {
                let k = self.basis(side).len();
                let g = ginibre(k, k, rng);
                let c = g.mat_mul(&g.dagger())?;
                let c = c.scale_real(1.0 / c.trace()?.re);
                let b = self.embedding(side);
                let rho = b.mat_mul(&c)?.mat_mul(&b.dagger())?.hermitian_part();
                QState::new(rho, dims)
            }
        }
    }
}

/// Random unit vector in the antisymmetric subspace (Gaussian coefficients
/// in the `ψ_{j−k}` basis).
pub fn random_antisymmetric_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<C64>> {
    Ok(build_split(d)?.random_vector(Exchange::Antisymmetric, rng))
}

pub fn random_symmetric_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<Vec<C64>> {
    Ok(build_split(d)?.random_vector(Exchange::Symmetric, rng))
}

/// Pure: rank one. Mixed: `B C B†` with `C` a normalized Ginibre square on
/// the subspace, so the state is full rank there.
pub fn random_antisymmetric_state<R: Rng + ?Sized>(
    d: usize,
    purity: Purity,
    rng: &mut R,
) -> Result<QState> {
    build_split(d)?.random_state(Exchange::Antisymmetric, purity, rng)
}

pub fn random_symmetric_state<R: Rng + ?Sized>(
    d: usize,
    purity: Purity,
    rng: &mut R,
) -> Result<QState> {
    build_split(d)?.random_state(Exchange::Symmetric, purity, rng)
}

/// Largest squared Schmidt coefficient of a normalized two-qudit vector,
/// read off the reduced density matrix of the first qudit.
pub fn top_schmidt_weight(psi: &[C64], d: usize) -> Result<f64> {
    if psi.len() != d * d {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} is not a pair of {d}-level systems",
            psi.len()
        )));
    }
    let reduced = CMatrix::projector(psi).partial_trace(&[d, d], &[1])?;
    let values = reduced.eigenvalues_hermitian()?;
    let total: f64 = values.iter().sum();
    Ok(values[values.len() - 1] / total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{basis_ket, kron_vec, ALGEBRAIC_TOL};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn split_invariants() {
        for d in 2..=5 {
            let s = build_split(d).unwrap();
            let ident = CMatrix::identity(d * d);
            assert_eq!(&s.swap * &s.swap, ident);
            assert!((&s.p_plus + &s.p_minus).max_abs_diff(&ident) < 1e-15);
            assert!((&s.p_plus * &s.p_minus).max_abs() < 1e-15);
            assert!((s.p_plus.trace().unwrap().re - dim_plus(d) as f64).abs() < 1e-12);
            assert!((s.p_minus.trace().unwrap().re - dim_minus(d) as f64).abs() < 1e-12);
            assert_eq!(s.d_plus(), dim_plus(d));
            assert_eq!(s.d_minus(), dim_minus(d));

            for side in [Exchange::Symmetric, Exchange::Antisymmetric] {
                let b = s.embedding(side);
                let gram = b.dagger().mat_mul(&b).unwrap();
                assert!(gram.max_abs_diff(&CMatrix::identity(b.cols())) < ALGEBRAIC_TOL);
                let rebuilt = b.mat_mul(&b.dagger()).unwrap();
                assert!(rebuilt.max_abs_diff(s.projector(side)) < ALGEBRAIC_TOL);
            }
        }
    }

    #[test]
    fn qubit_pair_dimensions_and_singlet() {
        let s = build_split(2).unwrap();
        assert_eq!(s.p_plus.trace().unwrap().re, 3.0);
        assert_eq!(s.p_minus.trace().unwrap().re, 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let singlet = vec![ZERO, C64::new(h, 0.0), C64::new(-h, 0.0), ZERO];
        assert!(s.p_minus.max_abs_diff(&CMatrix::projector(&singlet)) < 1e-15);
        assert_eq!(build_split(3).unwrap().p_minus.trace().unwrap().re, 3.0);
    }

    #[test]
    fn small_dimensions_rejected() {
        assert!(build_split(1).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(random_antisymmetric_state(1, Purity::Pure, &mut rng).is_err());
        assert!(random_symmetric_state(0, Purity::Mixed, &mut rng).is_err());
    }

    #[test]
    fn swap_exchanges_product_vectors() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=4 {
            let s = swap_operator(d);
            let a = gaussian_vector(d, &mut rng);
            let b = gaussian_vector(d, &mut rng);
            let swapped = s.apply(&kron_vec(&a, &b)).unwrap();
            let expected = kron_vec(&b, &a);
            let err = swapped
                .iter()
                .zip(&expected)
                .map(|(x, y)| (x - y).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-15);
        }
    }

    #[test]
    fn antisymmetric_basis_spans_kernel_of_p_plus() {
        for d in 2..=4 {
            let s = build_split(d).unwrap();
            let kernel_dim = d * d - s.p_plus.rank_hermitian(1e-9).unwrap();
            assert_eq!(kernel_dim, s.d_minus());
            for a in &s.basis_minus {
                let image = s.p_plus.apply(a).unwrap();
                assert!(crate::matcore::norm(&image) < 1e-15);
            }
        }
    }

    #[test]
    fn p_plus_spectrum_for_qubits() {
        let eig = build_split(2).unwrap().p_plus.eig_hermitian().unwrap();
        let expected = [0.0, 1.0, 1.0, 1.0];
        for (got, want) in eig.values.iter().zip(expected) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_antisymmetric_samples_are_the_singlet() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let p_minus = build_split(2).unwrap().p_minus;
        for purity in [Purity::Pure, Purity::Mixed] {
            let xi = random_antisymmetric_state(2, purity, &mut rng).unwrap();
            assert!(xi.mat().max_abs_diff(&p_minus) < 1e-12);
        }
    }

    #[test]
    fn sampler_supports() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for d in [3, 4] {
            let s = build_split(d).unwrap();
            for purity in [Purity::Pure, Purity::Mixed] {
                let a = random_antisymmetric_state(d, purity, &mut rng).unwrap();
                assert!(a.mat().conjugate_by(&s.p_plus).unwrap().max_abs() < ALGEBRAIC_TOL);
                assert!(
                    a.mat()
                        .conjugate_by(&s.p_minus)
                        .unwrap()
                        .max_abs_diff(a.mat())
                        < ALGEBRAIC_TOL
                );
                let sym = random_symmetric_state(d, purity, &mut rng).unwrap();
                assert!(sym.mat().conjugate_by(&s.p_minus).unwrap().max_abs() < ALGEBRAIC_TOL);
                assert!(s.weight_outside(sym.mat(), Exchange::Symmetric).unwrap() < ALGEBRAIC_TOL);
            }
            let pure = random_antisymmetric_state(d, Purity::Pure, &mut rng).unwrap();
            assert_eq!(pure.mat().rank_hermitian(1e-9).unwrap(), 1);
            let mixed = random_antisymmetric_state(d, Purity::Mixed, &mut rng).unwrap();
            assert_eq!(mixed.mat().rank_hermitian(1e-9).unwrap(), s.d_minus());
        }
    }

    #[test]
    fn symmetric_product_state_and_qubit_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let s = build_split(3).unwrap();
        let phi = normalized(&gaussian_vector(3, &mut rng));
        let product = CMatrix::projector(&kron_vec(&phi, &phi));
        assert!(s.weight_outside(&product, Exchange::Symmetric).unwrap() < 1e-15);
        let mixed = random_symmetric_state(2, Purity::Mixed, &mut rng).unwrap();
        assert!(mixed.mat().rank_hermitian(1e-9).unwrap() <= 3);
    }

    #[test]
    fn schmidt_weight_cases() {
        let product = kron_vec(&basis_ket(3, 0), &basis_ket(3, 2));
        assert!((top_schmidt_weight(&product, 3).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for d in [3, 4] {
            let a = random_antisymmetric_vector(d, &mut rng).unwrap();
            assert!(top_schmidt_weight(&a, d).unwrap() <= 0.5 + 1e-10);
        }
        assert!(top_schmidt_weight(&product, 2).is_err());
    }
}
