//! Polynomial representation of functions of the stream-function variable
//! `p` on the strip `[p0, 0]`.
//!
//! Everything the recovery pipeline manipulates — axis data fits, vorticity
//! profiles, the Taylor coefficients of the height function — is a smooth
//! function of `p` on a fixed interval, represented here as a finite
//! Chebyshev series. The module provides two layers:
//!
//! * [`Cheb`] — the basis engine on an arbitrary interval `[a, b]`:
//!   collocation and least-squares fitting, Clenshaw evaluation, exact
//!   differentiation/antidifferentiation, and exact series products in
//!   coefficient space.
//! * [`FuncP`] — the domain type used by the pipeline: a series on
//!   `[p0, 0]` tagged with the provenance of its data.
//!
//! Products are computed directly from `T_i T_j = (T_{i+j} + T_{|i-j|})/2`
//! rather than by sampling and re-projecting: the result is the exact
//! coefficient vector of the product polynomial (no aliasing, no grid
//! phase error), which measurably tightens the agreement between
//! mathematically equivalent recursion routes.

use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::scalar::Real;

/// Hard cap on representation degree; operations truncate beyond this.
pub const MAX_DEGREE: usize = 64;

/// Default fitting degree used by the recovery pipeline.
pub const DEFAULT_DEGREE: usize = 32;

/// Where the values behind a representation came from.
///
/// The tag is informational but the recovery pipeline keys smoothing
/// decisions on it: measured data gets low-pass treatment, analytic data
/// is used at full degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Sampled from instruments or an external grid (noise assumed).
    Measured,
    /// Computed from other representations.
    Derived,
    /// Evaluated from a closed-form expression (exact up to rounding).
    Analytic,
}

impl Provenance {
    /// Provenance of the result of an operation combining `self` and `o`:
    /// exactness survives only if every operand is analytic.
    fn combine(self, o: Provenance) -> Provenance {
        if self == Provenance::Analytic && o == Provenance::Analytic {
            Provenance::Analytic
        } else {
            Provenance::Derived
        }
    }
}

/// A finite Chebyshev series `f(x) = Σ c_k T_k(t)`, `t = (2x - a - b)/(b - a)`,
/// on the interval `[a, b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cheb<T> {
    a: T,
    b: T,
    c: Vec<T>,
}

impl<T: Real> Cheb<T> {
    /// Builds a series from raw coefficients (constant term first).
    pub fn from_coeffs(a: T, b: T, c: Vec<T>) -> Self {
        debug_assert!(a < b);
        let c = if c.is_empty() { vec![T::zero()] } else { c };
        Cheb { a, b, c }
    }

    /// The constant function `v`.
    pub fn constant(a: T, b: T, v: T) -> Self {
        Cheb { a, b, c: vec![v] }
    }

    /// Interval endpoints.
    pub fn domain(&self) -> (T, T) {
        (self.a, self.b)
    }

    /// Coefficients, constant term first.
    pub fn coeffs(&self) -> &[T] {
        &self.c
    }

    /// Polynomial degree of the stored representation.
    pub fn degree(&self) -> usize {
        self.c.len() - 1
    }

    /// Chebyshev–Lobatto points of order `k` on `[a, b]`, in the native
    /// ordering `x_j = mid + half·cos(πj/k)` (so `x_0 = b`, `x_k = a`).
    pub fn nodes(a: T, b: T, k: usize) -> Vec<T> {
        let half = (b - a) / T::lit(2.0);
        let mid = (a + b) / T::lit(2.0);
        if k == 0 {
            return vec![mid];
        }
        (0..=k)
            .map(|j| mid + half * (T::PI() * T::of_usize(j) / T::of_usize(k)).cos())
            .collect()
    }

    /// Collocation transform: the unique degree-`k` series matching the
    /// given values at the `k + 1` Lobatto points of [`Cheb::nodes`].
    pub fn from_node_values(a: T, b: T, vals: &[T]) -> Self {
        let k = vals.len() - 1;
        if k == 0 {
            return Cheb::constant(a, b, vals[0]);
        }
        // cos(π m / k) table over a full 2k period; indices are folded as
        // (j·n) mod 2k so the angle argument never grows, which keeps the
        // transform's phase error at rounding level even for large j·n.
        let cos_tab: Vec<T> = (0..2 * k)
            .map(|m| (T::PI() * T::of_usize(m) / T::of_usize(k)).cos())
            .collect();
        let half = T::lit(0.5);
        let mut c = vec![T::zero(); k + 1];
        for (n, cn) in c.iter_mut().enumerate() {
            let mut s = T::zero();
            for (j, &v) in vals.iter().enumerate() {
                let w = if j == 0 || j == k { half } else { T::one() };
                let m = (j * n) % (2 * k);
                s = s + w * v * cos_tab[m];
            }
            *cn = s * T::lit(2.0) / T::of_usize(k);
        }
        c[0] = c[0] * half;
        c[k] = c[k] * half;
        Cheb { a, b, c }
    }

    /// Fits a degree-`k` series by sampling `f` at the Lobatto points.
    pub fn from_fn(a: T, b: T, k: usize, mut f: impl FnMut(T) -> T) -> Self {
        let vals: Vec<T> = Self::nodes(a, b, k).into_iter().map(&mut f).collect();
        Self::from_node_values(a, b, &vals)
    }

    /// Fits a degree-`degree` series on `[a, b]` to samples `(xs, vals)`.
    ///
    /// Uses exact collocation when the sample points are the Lobatto nodes
    /// of the requested degree (in either orientation); otherwise solves a
    /// least-squares system. Requires at least `degree + 1` distinct sample
    /// locations and finite values.
    pub fn fit(a: T, b: T, xs: &[T], vals: &[T], degree: usize) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidInput(format!(
                "fit: invalid interval [{}, {}]",
                a.widen(),
                b.widen()
            )));
        }
        if xs.len() != vals.len() {
            return Err(Error::InvalidInput(format!(
                "fit: {} sample locations but {} values",
                xs.len(),
                vals.len()
            )));
        }
        if degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "degree {degree} exceeds the maximum {MAX_DEGREE}"
            )));
        }
        if xs.iter().chain(vals.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "fit: samples contain non-finite values".into(),
            ));
        }
        // Count distinct locations (samples are expected monotone or
        // near-monotone; a sort-free scan against all previous is fine at
        // these sizes).
        let mut distinct = 0usize;
        for (i, &x) in xs.iter().enumerate() {
            if xs[..i].iter().all(|&q| q != x) {
                distinct += 1;
            }
        }
        if distinct < degree + 1 {
            return Err(Error::DegenerateFit(format!(
                "{distinct} distinct sample locations cannot determine a degree-{degree} fit \
                 (need at least {})",
                degree + 1
            )));
        }

        // Collocation short-cut when the samples already sit on the nodes.
        if xs.len() == degree + 1 {
            let nodes = Cheb::nodes(a, b, degree);
            let tol = (b - a) * T::lit(1e-12);
            let on_nodes = xs
                .iter()
                .zip(&nodes)
                .all(|(&x, &n)| (x - n).abs() <= tol);
            let reversed = xs
                .iter()
                .rev()
                .zip(&nodes)
                .all(|(&x, &n)| (x - n).abs() <= tol);
            if on_nodes || reversed {
                let v: Vec<T> = if on_nodes {
                    vals.to_vec()
                } else {
                    vals.iter().rev().copied().collect()
                };
                return Ok(Cheb::from_node_values(a, b, &v));
            }
        }

        // Least squares on the Chebyshev Vandermonde matrix.
        let m = xs.len();
        let n = degree + 1;
        let mut mat = vec![T::zero(); m * n];
        for (i, &x) in xs.iter().enumerate() {
            let t = (x + x - a - b) / (b - a);
            let mut tkm1 = T::one();
            let mut tk = t;
            mat[i * n] = T::one();
            if n > 1 {
                mat[i * n + 1] = t;
            }
            for k in 2..n {
                let next = (t + t) * tk - tkm1;
                mat[i * n + k] = next;
                tkm1 = tk;
                tk = next;
            }
        }
        let c = least_squares(&mat, m, n, vals)?;
        Ok(Cheb::from_coeffs(a, b, c))
    }

    /// Evaluates the series at `x` by Clenshaw recurrence.
    pub fn eval(&self, x: T) -> T {
        let t = (x + x - self.a - self.b) / (self.b - self.a);
        let t2 = t + t;
        let mut b1 = T::zero();
        let mut b2 = T::zero();
        for k in (1..self.c.len()).rev() {
            let b0 = t2 * b1 - b2 + self.c[k];
            b2 = b1;
            b1 = b0;
        }
        self.c[0] + t * b1 - b2
    }

    /// Derivative series (exact; degree drops by one).
    pub fn deriv(&self) -> Self {
        let n = self.degree();
        if n == 0 {
            return Cheb::constant(self.a, self.b, T::zero());
        }
        let mut d = vec![T::zero(); n];
        // Standard descending recurrence d_{k-1} = d_{k+1} + 2k c_k.
        for k in (1..=n).rev() {
            let up = if k + 1 < n { d[k + 1] } else { T::zero() };
            d[k - 1] = up + T::of_usize(2 * k) * self.c[k];
        }
        d[0] = d[0] * T::lit(0.5);
        let scale = T::lit(2.0) / (self.b - self.a);
        for v in &mut d {
            *v = *v * scale;
        }
        Cheb {
            a: self.a,
            b: self.b,
            c: d,
        }
    }

    /// Antiderivative `F` with `F(anchor) = 0` (exact; degree rises by one).
    pub fn antideriv(&self, anchor: T) -> Self {
        let n = self.degree();
        let at = |k: usize| if k <= n { self.c[k] } else { T::zero() };
        let mut ca = vec![T::zero(); n + 2];
        ca[1] = at(0) - at(2) * T::lit(0.5);
        for k in 2..=(n + 1) {
            ca[k] = (at(k - 1) - at(k + 1)) / T::of_usize(2 * k);
        }
        let scale = (self.b - self.a) * T::lit(0.5);
        for v in ca.iter_mut().skip(1) {
            *v = *v * scale;
        }
        let mut out = Cheb {
            a: self.a,
            b: self.b,
            c: ca,
        };
        let shift = out.eval(anchor);
        out.c[0] = out.c[0] - shift;
        out
    }

    /// Exact product in coefficient space via
    /// `T_i T_j = (T_{i+j} + T_{|i-j|}) / 2`, truncated at [`MAX_DEGREE`].
    pub fn mul(&self, o: &Self) -> Self {
        let n = self.degree();
        let m = o.degree();
        let mut out = vec![T::zero(); n + m + 1];
        let half = T::lit(0.5);
        for (i, &ci) in self.c.iter().enumerate() {
            if ci == T::zero() {
                continue;
            }
            for (j, &cj) in o.c.iter().enumerate() {
                let t = ci * cj * half;
                out[i + j] = out[i + j] + t;
                let d = if i >= j { i - j } else { j - i };
                out[d] = out[d] + t;
            }
        }
        out.truncate(MAX_DEGREE + 1);
        Cheb {
            a: self.a,
            b: self.b,
            c: out,
        }
    }

    /// Series sum (coefficients padded to the longer length).
    pub fn add(&self, o: &Self) -> Self {
        let len = self.c.len().max(o.c.len());
        let mut out = vec![T::zero(); len];
        for (k, v) in out.iter_mut().enumerate() {
            let x = if k < self.c.len() { self.c[k] } else { T::zero() };
            let y = if k < o.c.len() { o.c[k] } else { T::zero() };
            *v = x + y;
        }
        Cheb {
            a: self.a,
            b: self.b,
            c: out,
        }
    }

    /// Scalar multiple.
    pub fn scale(&self, s: T) -> Self {
        Cheb {
            a: self.a,
            b: self.b,
            c: self.c.iter().map(|&v| v * s).collect(),
        }
    }

    /// Truncation to degree `deg` (drops higher coefficients).
    pub fn truncated(&self, deg: usize) -> Self {
        let mut c = self.c.clone();
        c.truncate(deg + 1);
        if c.is_empty() {
            c.push(T::zero());
        }
        Cheb {
            a: self.a,
            b: self.b,
            c,
        }
    }

    /// Pointwise reciprocal, projected onto a degree-`deg` series by
    /// collocation. Fails if `f` comes within `1e-12` of zero relative to
    /// its largest sampled magnitude (the reciprocal would not be smooth).
    pub fn recip(&self, deg: usize) -> Result<Self> {
        let nodes = Self::nodes(self.a, self.b, deg);
        let vals: Vec<T> = nodes.iter().map(|&x| self.eval(x)).collect();
        let vmax = vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        let tiny = vmax * T::lit(1e-12);
        // A zero crossing shows up either as a near-zero node value or as a
        // sign change between nodes; both poison the reciprocal.
        let has_pos = vals.iter().any(|&v| v > T::zero());
        let has_neg = vals.iter().any(|&v| v < T::zero());
        if vals.iter().any(|v| v.abs() <= tiny) || (has_pos && has_neg) {
            return Err(Error::Numerical(
                "reciprocal of a function that passes through zero on its domain".into(),
            ));
        }
        let inv: Vec<T> = vals.iter().map(|&v| T::one() / v).collect();
        let mut out = Self::from_node_values(self.a, self.b, &inv);
        // The re-projection leaves O(eps) residue in modes the true
        // reciprocal does not excite (for a constant input, in every mode).
        // Differentiating twice amplifies mode k by O(k^4), so an eps-level
        // tail here becomes ~1e-10 garbage downstream; drop it.
        let floor = out.coeff_max() * T::epsilon() * T::lit(64.0);
        let mut keep = out.c.len();
        while keep > 1 && out.c[keep - 1].abs() <= floor {
            keep -= 1;
        }
        out.c.truncate(keep);
        Ok(out)
    }

    /// Supremum of `|f|` sampled on a fixed 201-point uniform grid
    /// (deterministic; adequate for the smooth, low-degree series used
    /// throughout).
    pub fn sup_norm(&self) -> T {
        let n = 200;
        let mut m = T::zero();
        for i in 0..=n {
            let x = self.a + (self.b - self.a) * T::of_usize(i) / T::of_usize(n);
            m = m.max(self.eval(x).abs());
        }
        m
    }

    /// Largest absolute coefficient.
    pub fn coeff_max(&self) -> T {
        self.c.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

/// A function of `p` on `[p0, 0]`: the representation type the recovery
/// pipeline passes around, carrying its provenance.
#[derive(Debug, Clone)]
pub struct FuncP<T> {
    series: Cheb<T>,
    provenance: Provenance,
}

impl<T: Real> FuncP<T> {
    fn check_domain(p0: T) -> Result<()> {
        if !(p0 < T::zero()) || !p0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "FuncP domain must be [p0, 0] with p0 < 0 (got p0 = {})",
                p0.widen()
            )));
        }
        Ok(())
    }

    /// Wraps an existing series (crate-internal constructor).
    pub(crate) fn from_series(series: Cheb<T>, provenance: Provenance) -> Self {
        FuncP { series, provenance }
    }

    /// The constant function `v` on `[p0, 0]`.
    pub fn constant(p0: T, v: T, provenance: Provenance) -> Result<Self> {
        Self::check_domain(p0)?;
        Ok(FuncP {
            series: Cheb::constant(p0, T::zero(), v),
            provenance,
        })
    }

    /// Builds a degree-`degree` representation by collocating a closed-form
    /// expression; tagged [`Provenance::Analytic`].
    pub fn from_fn(p0: T, degree: usize, f: impl FnMut(T) -> T) -> Result<Self> {
        Self::check_domain(p0)?;
        if degree > MAX_DEGREE {
            return Err(Error::Config(format!(
                "degree {degree} exceeds the maximum {MAX_DEGREE}"
            )));
        }
        Ok(FuncP {
            series: Cheb::from_fn(p0, T::zero(), degree, f),
            provenance: Provenance::Analytic,
        })
    }

    /// Builds the polynomial `Σ coeffs[k] p^k` exactly (collocated at its
    /// own degree); tagged [`Provenance::Analytic`].
    pub fn from_power_coeffs(p0: T, coeffs: &[T]) -> Result<Self> {
        Self::check_domain(p0)?;
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::Config(format!(
                "polynomial degree {} exceeds the maximum {MAX_DEGREE}",
                coeffs.len() - 1
            )));
        }
        let deg = coeffs.len().saturating_sub(1);
        let horner = |p: T| {
            coeffs
                .iter()
                .rev()
                .fold(T::zero(), |acc, &ck| acc * p + ck)
        };
        Ok(FuncP {
            series: Cheb::from_fn(p0, T::zero(), deg, horner),
            provenance: Provenance::Analytic,
        })
    }

    /// Fits a degree-`degree` representation to samples `(ps, vals)`.
    ///
    /// Uses exact collocation when the sample points are the Lobatto nodes
    /// of the requested degree (in either orientation); otherwise solves a
    /// least-squares system. Requires at least `degree + 1` distinct
    /// sample locations and finite values.
    pub fn fit(
        ps: &[T],
        vals: &[T],
        p0: T,
        degree: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        Self::check_domain(p0)?;
        Ok(FuncP {
            series: Cheb::fit(p0, T::zero(), ps, vals, degree)?,
            provenance,
        })
    }

    /// Lower domain endpoint `p0`.
    pub fn p0(&self) -> T {
        self.series.a
    }

    /// Domain `(p0, 0)`.
    pub fn domain(&self) -> (T, T) {
        self.series.domain()
    }

    /// Provenance tag.
    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Coefficients, constant term first.
    pub fn coeffs(&self) -> &[T] {
        self.series.coeffs()
    }

    /// Representation degree.
    pub fn degree(&self) -> usize {
        self.series.degree()
    }

    /// Access to the underlying series.
    pub(crate) fn series(&self) -> &Cheb<T> {
        &self.series
    }

    /// Evaluates at `p`.
    pub fn eval(&self, p: T) -> T {
        self.series.eval(p)
    }

    /// Evaluates at many points.
    pub fn eval_many(&self, ps: &[T]) -> Vec<T> {
        ps.iter().map(|&p| self.series.eval(p)).collect()
    }

    /// Exact derivative.
    pub fn differentiate(&self) -> Self {
        FuncP {
            series: self.series.deriv(),
            provenance: self.provenance.combine(self.provenance),
        }
    }

    /// Antiderivative vanishing at `anchor`.
    pub fn antiderivative(&self, anchor: T) -> Self {
        FuncP {
            series: self.series.antideriv(anchor),
            provenance: self.provenance.combine(self.provenance),
        }
    }

    fn require_same_domain(&self, o: &Self, op: &str) -> Result<()> {
        if self.series.a != o.series.a || self.series.b != o.series.b {
            return Err(Error::InvalidInput(format!(
                "{op}: operands live on different domains ([{}, {}] vs [{}, {}])",
                self.series.a.widen(),
                self.series.b.widen(),
                o.series.a.widen(),
                o.series.b.widen()
            )));
        }
        Ok(())
    }

    /// Exact series product (degree-capped at [`MAX_DEGREE`]).
    pub fn multiply(&self, o: &Self) -> Result<Self> {
        self.require_same_domain(o, "multiply")?;
        Ok(FuncP {
            series: self.series.mul(&o.series),
            provenance: self.provenance.combine(o.provenance),
        })
    }

    /// Series sum.
    pub fn add(&self, o: &Self) -> Result<Self> {
        self.require_same_domain(o, "add")?;
        Ok(FuncP {
            series: self.series.add(&o.series),
            provenance: self.provenance.combine(o.provenance),
        })
    }

    /// Scalar multiple.
    pub fn scale(&self, s: T) -> Self {
        FuncP {
            series: self.series.scale(s),
            provenance: self.provenance.combine(self.provenance),
        }
    }

    /// Low-pass: retains the first `keep` coefficients and drops the rest.
    /// Idempotent; `keep = 0` leaves the zero function.
    pub fn lowpass(&self, keep: usize) -> Self {
        let deg = if keep == 0 { 0 } else { keep - 1 };
        let mut s = self.series.truncated(deg);
        if keep == 0 {
            s = Cheb::constant(s.a, s.b, T::zero());
        }
        FuncP {
            series: s,
            provenance: self.provenance,
        }
    }

    /// Pointwise reciprocal projected at degree `deg`.
    pub fn recip(&self, deg: usize) -> Result<Self> {
        Ok(FuncP {
            series: self.series.recip(deg)?,
            provenance: self.provenance.combine(self.provenance),
        })
    }

    /// Supremum of `|f|` on a fixed sampling grid.
    pub fn sup_norm(&self) -> T {
        self.series.sup_norm()
    }
}
