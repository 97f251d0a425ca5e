//! The two linear-algebra kernels the crate needs: dense least squares by
//! Householder QR, and LU factorization of banded matrices with partial
//! pivoting.
//!
//! Both are deliberately plain implementations with fixed, deterministic
//! reduction order — no blocking, no parallelism — so results are
//! bit-reproducible across runs on the same platform.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Solves the least-squares problem `min ||A x - b||_2` for a dense
/// row-major `m x n` matrix with `m >= n`, via Householder QR.
///
/// Returns the coefficient vector of length `n`. Fails with
/// [`Error::Numerical`] if the matrix is (numerically) rank-deficient.
pub fn least_squares<T: Real>(a: &[T], m: usize, n: usize, b: &[T]) -> Result<Vec<T>> {
    if a.len() != m * n || b.len() != m {
        return Err(Error::InvalidInput(format!(
            "least_squares: matrix is {}x{} but {} entries and {} rhs values were given",
            m,
            n,
            a.len(),
            b.len()
        )));
    }
    if m < n {
        return Err(Error::InvalidInput(format!(
            "least_squares: underdetermined system ({m} rows < {n} columns)"
        )));
    }
    let mut r = a.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![T::zero(); m];

    for k in 0..n {
        // Householder vector for column k, rows k..m.
        let mut norm2 = T::zero();
        for i in k..m {
            let x = r[i * n + k];
            norm2 = norm2 + x * x;
        }
        let sigma = norm2.sqrt();
        if sigma == T::zero() {
            return Err(Error::Numerical(format!(
                "least_squares: column {k} is zero below the diagonal (rank-deficient)"
            )));
        }
        let akk = r[k * n + k];
        let alpha = if akk > T::zero() { -sigma } else { sigma };
        v[k] = akk - alpha;
        for i in (k + 1)..m {
            v[i] = r[i * n + k];
        }
        let mut vtv = T::zero();
        for i in k..m {
            vtv = vtv + v[i] * v[i];
        }
        if vtv > T::zero() {
            // Reflect the remaining columns and the right-hand side.
            for j in k..n {
                let mut s = T::zero();
                for i in k..m {
                    s = s + v[i] * r[i * n + j];
                }
                let f = (s + s) / vtv;
                for i in k..m {
                    r[i * n + j] = r[i * n + j] - f * v[i];
                }
            }
            let mut s = T::zero();
            for i in k..m {
                s = s + v[i] * y[i];
            }
            let f = (s + s) / vtv;
            for i in k..m {
                y[i] = y[i] - f * v[i];
            }
        }
        // The reflection maps the column onto alpha * e_k exactly in exact
        // arithmetic; pin it to remove the rounding residue.
        r[k * n + k] = alpha;
        for i in (k + 1)..m {
            r[i * n + k] = T::zero();
        }
    }

    // Rank check: a diagonal entry of R that is tiny relative to the largest
    // one means two columns are numerically dependent, and the corresponding
    // solution component is not determined by the data.
    let rmax = (0..n).fold(T::zero(), |mx, k| mx.max(r[k * n + k].abs()));
    let rtol = rmax * T::epsilon() * T::of_usize(16 * m.max(n));
    for k in 0..n {
        if r[k * n + k].abs() <= rtol {
            return Err(Error::Numerical(format!(
                "least_squares: rank-deficient matrix (R diagonal {k} below rank tolerance)"
            )));
        }
    }

    // Back-substitute R x = y (upper-triangular n x n block).
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for j in (i + 1)..n {
            s = s - r[i * n + j] * x[j];
        }
        x[i] = s / r[i * n + i];
    }
    Ok(x)
}

/// A square band matrix with `kl` subdiagonals and `ku` superdiagonals,
/// stored row-contiguously with `kl` extra superdiagonals of headroom for
/// the fill-in produced by partial pivoting.
///
/// Entry `(i, j)` is valid for `i - kl <= j <= i + kl + ku`; the assembly
/// window before factorization is the narrower `|i - j| <= kl, ku` band.
#[derive(Debug, Clone)]
pub struct Banded<T> {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<T>,
}

impl<T: Real> Banded<T> {
    /// Creates a zero band matrix of dimension `n`.
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let w = 2 * kl + ku + 1;
        Banded {
            n,
            kl,
            ku,
            w,
            data: vec![T::zero(); n * w],
        }
    }

    /// Matrix dimension.
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.w + (j + self.kl - i)
    }

    /// Reads entry `(i, j)`; zero outside the storage band.
    pub fn get(&self, i: usize, j: usize) -> T {
        if j + self.kl < i || j > i + self.kl + self.ku || i >= self.n || j >= self.n {
            T::zero()
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Writes entry `(i, j)`. Panics (debug) outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    /// Adds `v` to entry `(i, j)`.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let k = self.idx(i, j);
        self.data[k] = self.data[k] + v;
    }

    /// Factors the matrix in place as `P A = L U` with partial pivoting.
    pub fn factor(mut self) -> Result<BandedLu<T>> {
        let (n, kl, ku, w) = (self.n, self.kl, self.ku, self.w);
        let mut piv = vec![0usize; n];
        for k in 0..n {
            let pmax = (k + kl).min(n - 1);
            // Pivot search down the column within the band.
            let mut p = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for i in (k + 1)..=pmax {
                let v = self.data[self.idx(i, k)].abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == T::zero() {
                return Err(Error::Numerical(format!(
                    "banded factor: exact zero pivot at step {k} (singular matrix)"
                )));
            }
            piv[k] = p;
            let jmax = (k + kl + ku).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let a = self.idx(k, j);
                    let b = self.idx(p, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for i in (k + 1)..=pmax {
                let ik = self.idx(i, k);
                let l = self.data[ik] / pivot;
                self.data[ik] = l;
                // Both row slices are contiguous in j, which keeps this
                // inner loop vectorizable.
                let ri = self.idx(i, k + 1);
                let rk = self.idx(k, k + 1);
                let len = jmax.saturating_sub(k);
                for t in 0..len {
                    let u = self.data[rk + t];
                    self.data[ri + t] = self.data[ri + t] - l * u;
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            w,
            data: self.data,
            piv,
        })
    }
}

/// The factored form `P A = L U` of a [`Banded`] matrix.
#[derive(Debug, Clone)]
pub struct BandedLu<T> {
    n: usize,
    kl: usize,
    ku: usize,
    w: usize,
    data: Vec<T>,
    piv: Vec<usize>,
}

impl<T: Real> BandedLu<T> {
    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.w + (j + self.kl - i)
    }

    /// Solves `A x = rhs` in place.
    pub fn solve(&self, rhs: &mut [T]) -> Result<()> {
        let n = self.n;
        if rhs.len() != n {
            return Err(Error::InvalidInput(format!(
                "banded solve: rhs has length {} but the matrix dimension is {n}",
                rhs.len()
            )));
        }
        // Forward: apply the pivots and L.
        for k in 0..n {
            let p = self.piv[k];
            if p != k {
                rhs.swap(k, p);
            }
            let pmax = (k + self.kl).min(n - 1);
            let rk = rhs[k];
            for i in (k + 1)..=pmax {
                rhs[i] = rhs[i] - self.data[self.idx(i, k)] * rk;
            }
        }
        // Backward: U x = y.
        for i in (0..n).rev() {
            let jmax = (i + self.kl + self.ku).min(n - 1);
            let mut s = rhs[i];
            for j in (i + 1)..=jmax {
                s = s - self.data[self.idx(i, j)] * rhs[j];
            }
            rhs[i] = s / self.data[self.idx(i, i)];
        }
        Ok(())
    }
}
