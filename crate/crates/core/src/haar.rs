//! Haar-random unitaries and Monte Carlo estimates of the average channel
//! `A[X] = ∫ U X U† dU` and the two-copy twirl `T[Y] = ∫ (U⊗U) Y (U⊗U)† dU`,
//! next to their closed forms.
//!
//! Monte Carlo loops are split into fixed-size chunks. Chunk `c` draws from
//! the ChaCha stream `c` of the run seed and the partial sums are reduced in
//! chunk order, so results depend only on `(seed, n)` and not on how chunks
//! are scheduled.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matcore::{ginibre, CMatrix, C64};
use crate::qrep::{exact_sqrt, UnitaryOp};
use crate::symmetry::build_split;

/// Samples per RNG stream.
pub const CHUNK: usize = 1024;

/// Independent stream `stream` of the generator seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Haar-distributed `d × d` unitary: QR of a complex Ginibre matrix, with
/// each column of `Q` multiplied by the phase of the matching diagonal entry
/// of `R` so the factorization is the unique one with positive `diag(R)`.
pub fn haar_sample<R: Rng + ?Sized>(d: usize, rng: &mut R) -> UnitaryOp {
    let z = ginibre(d, d, rng);
    let qr = DMatrix::from_row_slice(d, d, z.data()).qr();
    let q = qr.q();
    let r = qr.r();
    let mat = CMatrix::from_fn(d, d, |i, j| {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        q[(i, j)] * phase
    });
    UnitaryOp::new(mat).expect("QR factor is unitary")
}

/// Scalar Monte Carlo estimate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl McEstimate {
    /// |mean − exact| measured in standard errors.
    pub fn z_score(&self, exact: f64) -> f64 {
        let gap = (self.mean - exact).abs();
        if self.std_error > 0.0 {
            gap / self.std_error
        } else if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Elementwise Monte Carlo estimate of a matrix; `std_error` is row-major and
/// holds `sqrt(Σ|x − mean|² / (n − 1)) / √n` per entry.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixEstimate {
    pub mean: CMatrix,
    pub std_error: Vec<f64>,
    pub n_samples: usize,
}

impl MatrixEstimate {
    pub fn max_deviation(&self, exact: &CMatrix) -> f64 {
        self.mean.max_abs_diff(exact)
    }

    pub fn max_std_error(&self) -> f64 {
        self.std_error.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Default)]
struct ScalarSums {
    sum: f64,
    sumsq: f64,
    n: usize,
}

impl ScalarSums {
    fn push(&mut self, x: f64) {
        self.sum += x;
        self.sumsq += x * x;
        self.n += 1;
    }

    fn merge(&mut self, other: ScalarSums) {
        self.sum += other.sum;
        self.sumsq += other.sumsq;
        self.n += other.n;
    }

    fn finish(self) -> McEstimate {
        let n = self.n as f64;
        let mean = self.sum / n;
        let std_error = if self.n > 1 {
            let var = ((self.sumsq - n * mean * mean) / (n - 1.0)).max(0.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        McEstimate {
            mean,
            std_error,
            n_samples: self.n,
        }
    }
}

struct MatrixSums {
    sum: CMatrix,
    sumsq: Vec<f64>,
    n: usize,
}

impl MatrixSums {
    fn new(rows: usize, cols: usize) -> Self {
        MatrixSums {
            sum: CMatrix::zeros(rows, cols),
            sumsq: vec![0.0; rows * cols],
            n: 0,
        }
    }

    fn push(&mut self, x: &CMatrix) {
        self.sum = &self.sum + x;
        for (acc, v) in self.sumsq.iter_mut().zip(x.data()) {
            *acc += v.norm_sqr();
        }
        self.n += 1;
    }

    fn merge(&mut self, other: MatrixSums) {
        self.sum = &self.sum + &other.sum;
        for (a, b) in self.sumsq.iter_mut().zip(other.sumsq) {
            *a += b;
        }
        self.n += other.n;
    }

    fn finish(self) -> MatrixEstimate {
        let n = self.n as f64;
        let mean = self.sum.scale_real(1.0 / n);
        let std_error = self
            .sumsq
            .iter()
            .zip(mean.data())
            .map(|(&sq, m)| {
                if self.n > 1 {
                    let var = ((sq - n * m.norm_sqr()) / (n - 1.0)).max(0.0);
                    (var / n).sqrt()
                } else {
                    0.0
                }
            })
            .collect();
        MatrixEstimate {
            mean,
            std_error,
            n_samples: self.n,
        }
    }
}

fn chunk_sizes(n: usize) -> impl Iterator<Item = (u64, usize)> {
    (0..n.div_ceil(CHUNK)).map(move |c| (c as u64, CHUNK.min(n - c * CHUNK)))
}

fn require_samples(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidDimension(
            "Monte Carlo needs at least one sample".into(),
        ));
    }
    Ok(())
}

/// Mean and standard error of `f` over `n` draws.
pub fn mc_scalar<F>(n: usize, seed: u64, mut f: F) -> Result<McEstimate>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<f64>,
{
    require_samples(n)?;
    let mut total = ScalarSums::default();
    for (stream, len) in chunk_sizes(n) {
        let mut rng = stream_rng(seed, stream);
        let mut part = ScalarSums::default();
        for _ in 0..len {
            part.push(f(&mut rng)?);
        }
        total.merge(part);
    }
    Ok(total.finish())
}

/// Elementwise mean and standard error of a matrix-valued `f` over `n` draws.
pub fn mc_matrix<F>(
    n: usize,
    seed: u64,
    rows: usize,
    cols: usize,
    mut f: F,
) -> Result<MatrixEstimate>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<CMatrix>,
{
    require_samples(n)?;
    let mut total = MatrixSums::new(rows, cols);
    for (stream, len) in chunk_sizes(n) {
        let mut rng = stream_rng(seed, stream);
        let mut part = MatrixSums::new(rows, cols);
        for _ in 0..len {
            part.push(&f(&mut rng)?);
        }
        total.merge(part);
    }
    Ok(total.finish())
}

fn require_square(x: &CMatrix) -> Result<()> {
    if !x.is_square() {
        return Err(Error::NotSquare {
            rows: x.rows(),
            cols: x.cols(),
        });
    }
    Ok(())
}

/// Empirical mean of `U X U†` over `n` Haar samples.
pub fn average_channel_mc(x: &CMatrix, n: usize, seed: u64) -> Result<MatrixEstimate> {
    require_square(x)?;
    let d = x.dim();
    mc_matrix(n, seed, d, d, |rng| haar_sample(d, rng).conjugate(x))
}

/// `A[X] = tr(X)/d · I`
pub fn average_channel_exact(x: &CMatrix) -> Result<CMatrix> {
    let d = x.dim();
    Ok(CMatrix::identity(d).scale(x.trace()? / d as f64))
}

fn pair_dimension(y: &CMatrix) -> Result<usize> {
    require_square(y)?;
    match exact_sqrt(y.dim()) {
        Some(d) if d >= 2 => Ok(d),
        _ => Err(Error::DimensionMismatch(format!(
            "a {0}x{0} operator does not act on a pair of qudits",
            y.dim()
        ))),
    }
}

/// Empirical mean of `(U⊗U) Y (U⊗U)†` over `n` Haar samples.
pub fn twirl_mc(y: &CMatrix, n: usize, seed: u64) -> Result<MatrixEstimate> {
    let d = pair_dimension(y)?;
    let dd = d * d;
    mc_matrix(n, seed, dd, dd, |rng| {
        let u = haar_sample(d, rng);
        u.tensor(&u).conjugate(y)
    })
}

/// `T[Y] = tr(Y P₊)/d₊ · P₊ + tr(Y P₋)/d₋ · P₋`, applied to any `Y` by linearity.
pub fn twirl_exact(y: &CMatrix) -> Result<CMatrix> {
    let d = pair_dimension(y)?;
    let split = build_split(d)?;
    let a_plus = y.trace_product(&split.p_plus)? / split.d_plus() as f64;
    let a_minus = y.trace_product(&split.p_minus)? / split.d_minus() as f64;
    Ok(&split.p_plus.scale(a_plus) + &split.p_minus.scale(a_minus))
}
