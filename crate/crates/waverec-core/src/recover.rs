//! The inverse pipeline: from samples of the relative horizontal velocity
//! `w = u - c` on a vertical symmetry axis to the full steady wave.
//!
//! The steps mirror the constructive argument that such data determines the
//! wave uniquely when `w < 0` (no stagnation):
//!
//! 1. [`compute_flux`] — the relative mass flux `p0 = ∫ w dy < 0` over the
//!    axis column, by composite quadrature with a Richardson error estimate.
//! 2. [`psi_on_axis`] / [`compute_a0`] — the stream function restricted to
//!    the axis is `ψ(0, y) = -p0 + ∫_{-d}^y w`; inverting it yields the
//!    zeroth Taylor coefficient `a0(p) = h(0, p)`, the height of the
//!    streamline `ψ = -p` above the bed, with `a0'(p) = -1/w`.
//! 3. [`coeff_a2`] / [`coeff_next`] — the height function `h(q, p)` of a
//!    symmetric wave expands in even powers, `h = Σ a_{2n}(p) q^{2n}`, and
//!    the governing quasilinear equation turns into an explicit recursion
//!    for the `a_{2n}`: each new order is an algebraic combination of
//!    derivatives and products of the previous ones divided by `a0'²`.
//!    [`taylor_march`] is an independent engine for the same expansion that
//!    does not assume symmetry (it carries odd orders too) and is used to
//!    cross-check the recursion and to restart an expansion off-axis.
//! 4. [`estimate_radius`] — a root test on the coefficient sup-norms gives
//!    an empirical radius of convergence and a conservative trusted disk
//!    `|q| ≤ θ/L`.
//! 5. [`sum_series`] — Taylor summation with explicit tail accounting;
//!    refuses (without an override) to certify values whose truncation tail
//!    is not negligible.
//! 6. [`recover_wave`] — the one-call driver: all of the above, then a
//!    height field on a grid over the trusted window, the physical
//!    velocity/pressure field, and the surface profile.
//!
//! Measured data is regularised in exactly one place: the Chebyshev fit of
//! `w` is truncated where its coefficient tail hits the data's noise
//! plateau, and the recursion orders `n ≥ 1` are truncated to a low degree
//! and clipped to zero once negligible. Both policies are off by default
//! for analytically generated samples.

use crate::error::{Error, Result};
use crate::forward::{FlowField, HeightField};
use crate::funcrep::{Cheb, FuncP, Provenance, DEFAULT_DEGREE, MAX_DEGREE};
use crate::scalar::Real;

/// Default number of recursion orders beyond `a0` (the table then holds
/// `a_0 .. a_{2N}` with `N = DEFAULT_ORDERS`).
pub const DEFAULT_ORDERS: usize = 8;

/// Hard cap on the recursion order: beyond this the factorially growing
/// convolution count buys nothing at double precision.
pub const MAX_ORDERS: usize = 16;

/// Relative tail size above which [`sum_series`] refuses to certify a value
/// unless forced.
pub const TAIL_LIMIT: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Axis data
// ---------------------------------------------------------------------------

/// Warnings attached to axis data by extraction or loading.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AxisFlag {
    /// The samples were interpolated between grid columns rather than read
    /// off a column directly.
    Interpolated,
    /// The sampling line does not look like a symmetry axis (crest or
    /// trough); recovery assumes even symmetry and will silently symmetrize
    /// whatever it is given.
    NotSymmetryAxis,
}

/// Measurements of the relative horizontal velocity on a vertical line
/// `x = x0` through a crest or trough: `ws[j] = u(x0, ys[j]) - c`.
///
/// The samples run from the bed `ys[0] = -d` up to the surface
/// `ys.last() = η(x0)`; admissible data has `w < 0` everywhere (the flow
/// never stagnates in the wave frame). The wave speed `c` is optional —
/// it shifts the reported velocities but plays no role in the recovery
/// itself, which depends on `w` only.
#[derive(Debug, Clone)]
pub struct AxisData<T> {
    /// Horizontal position of the sampling line.
    pub x0: T,
    /// Mean depth (bed at `y = -d`).
    pub d: T,
    /// Gravitational acceleration.
    pub g: T,
    /// Wavelength.
    pub lambda: T,
    /// Wave speed, when known (metadata only).
    pub c: Option<T>,
    /// Sample ordinates, strictly increasing from `-d` to `η(x0)`.
    pub ys: Vec<T>,
    /// Relative velocity samples `u - c` at `ys`.
    pub ws: Vec<T>,
    /// Where the numbers came from; measured data is regularised, analytic
    /// data is not.
    pub provenance: Provenance,
    /// Extraction warnings.
    pub flags: Vec<AxisFlag>,
}

impl<T: Real> AxisData<T> {
    /// Validated constructor from relative velocities.
    pub fn new(
        x0: T,
        d: T,
        g: T,
        lambda: T,
        c: Option<T>,
        ys: Vec<T>,
        ws: Vec<T>,
        provenance: Provenance,
    ) -> Result<Self> {
        let axis = AxisData {
            x0,
            d,
            g,
            lambda,
            c,
            ys,
            ws,
            provenance,
            flags: Vec::new(),
        };
        axis.validate()?;
        Ok(axis)
    }

    /// Validated constructor from absolute velocities `us` and a known wave
    /// speed: `w = u - c`.
    pub fn from_velocity(
        x0: T,
        d: T,
        g: T,
        lambda: T,
        c: T,
        ys: Vec<T>,
        us: &[T],
        provenance: Provenance,
    ) -> Result<Self> {
        let ws = us.iter().map(|&u| u - c).collect();
        Self::new(x0, d, g, lambda, Some(c), ys, ws, provenance)
    }

    /// Re-checks every structural invariant (useful after literal
    /// construction or deserialization).
    pub fn validate(&self) -> Result<()> {
        if self.ys.len() != self.ws.len() {
            return Err(Error::InvalidInput(format!(
                "axis data: {} ordinates but {} velocity samples",
                self.ys.len(),
                self.ws.len()
            )));
        }
        if self.ys.len() < 2 {
            return Err(Error::InvalidInput(
                "axis data: need at least 2 samples".into(),
            ));
        }
        let scalars = [self.x0, self.d, self.g, self.lambda];
        if scalars.iter().any(|v| !v.is_finite())
            || self.c.map_or(false, |c| !c.is_finite())
            || self.ys.iter().chain(self.ws.iter()).any(|v| !v.is_finite())
        {
            return Err(Error::InvalidInput(
                "axis data: non-finite entries".into(),
            ));
        }
        if !(self.d > T::zero()) || !(self.g > T::zero()) || !(self.lambda > T::zero()) {
            return Err(Error::InvalidInput(format!(
                "axis data: d, g, lambda must be positive (got {}, {}, {})",
                self.d.widen(),
                self.g.widen(),
                self.lambda.widen()
            )));
        }
        for j in 1..self.ys.len() {
            if !(self.ys[j] > self.ys[j - 1]) {
                return Err(Error::InvalidInput(format!(
                    "axis data: ordinates must increase strictly (ys[{}] = {} after {})",
                    j,
                    self.ys[j].widen(),
                    self.ys[j - 1].widen()
                )));
            }
        }
        let bed_tol = T::lit(1e-9) * T::one().max(self.d);
        if (self.ys[0] + self.d).abs() > bed_tol {
            return Err(Error::InvalidInput(format!(
                "axis data: first sample must sit on the bed y = {} (got {})",
                (-self.d).widen(),
                self.ys[0].widen()
            )));
        }
        for (j, &w) in self.ws.iter().enumerate() {
            if !(w < T::zero()) {
                return Err(Error::Admissibility(format!(
                    "w = u - c must be negative everywhere (w[{j}] = {}); \
                     the flow stagnates in the wave frame",
                    w.widen()
                )));
            }
        }
        Ok(())
    }

    /// Surface elevation at the axis, `η(x0)` (the last sample ordinate).
    pub fn eta0(&self) -> T {
        *self.ys.last().expect("validated axis data is non-empty")
    }

    /// The column height `d + |η(x0)|`, the natural length scale for
    /// tolerances.
    pub fn height_scale(&self) -> T {
        self.d + self.eta0().abs()
    }
}

// ---------------------------------------------------------------------------
// Flux and stream function on the axis
// ---------------------------------------------------------------------------

/// Result of the flux quadrature.
#[derive(Debug, Clone, Copy)]
pub struct FluxReport<T> {
    /// Relative mass flux `p0 = ∫_{-d}^{η(x0)} w dy` (negative).
    pub p0: T,
    /// Richardson estimate of the quadrature error.
    pub quad_error: T,
}

/// Integral over `[a, b]` of the quadratic through `(xs[i], fs[i])`.
fn lagrange3_integral<T: Real>(xs: [T; 3], fs: [T; 3], a: T, b: T) -> T {
    let third = T::one() / T::lit(3.0);
    let half = T::lit(0.5);
    let mut total = T::zero();
    for i in 0..3 {
        let (r1, r2) = match i {
            0 => (xs[1], xs[2]),
            1 => (xs[0], xs[2]),
            _ => (xs[0], xs[1]),
        };
        let denom = (xs[i] - r1) * (xs[i] - r2);
        // ∫ (x - r1)(x - r2) dx = x³/3 - (r1 + r2) x²/2 + r1 r2 x.
        let prim = |x: T| ((x * third - (r1 + r2) * half) * x + r1 * r2) * x;
        total = total + fs[i] * (prim(b) - prim(a)) / denom;
    }
    total
}

/// Composite Simpson-type quadrature on (possibly nonuniform) samples:
/// exact quadratic rules over interval pairs, with the final odd interval
/// covered by the quadratic through the last three samples.
fn composite_quad<T: Real>(xs: &[T], fs: &[T]) -> T {
    let n = xs.len();
    let mut s = T::zero();
    let mut i = 0;
    while i + 2 < n {
        s = s + lagrange3_integral(
            [xs[i], xs[i + 1], xs[i + 2]],
            [fs[i], fs[i + 1], fs[i + 2]],
            xs[i],
            xs[i + 2],
        );
        i += 2;
    }
    if i + 1 < n {
        s = s + lagrange3_integral(
            [xs[n - 3], xs[n - 2], xs[n - 1]],
            [fs[n - 3], fs[n - 2], fs[n - 1]],
            xs[n - 2],
            xs[n - 1],
        );
    }
    s
}

/// Relative mass flux `p0 = ∫ w dy` over the axis column.
///
/// Uses the composite quadratic rule on all samples and on every second
/// sample; the Richardson combination of the two is reported as `p0` and
/// their discrepancy (scaled by the rule's order) as the error estimate.
/// Requires at least 9 samples; any `w ≥ 0` is rejected as stagnation.
pub fn compute_flux<T: Real>(axis: &AxisData<T>) -> Result<FluxReport<T>> {
    axis.validate()?;
    let n = axis.ys.len();
    if n < 9 {
        return Err(Error::InvalidInput(format!(
            "compute_flux: need at least 9 samples to estimate the quadrature error (got {n})"
        )));
    }
    let s_f = composite_quad(&axis.ys, &axis.ws);
    let mut idx: Vec<usize> = (0..n).step_by(2).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    let cy: Vec<T> = idx.iter().map(|&j| axis.ys[j]).collect();
    let cw: Vec<T> = idx.iter().map(|&j| axis.ws[j]).collect();
    let s_c = composite_quad(&cy, &cw);
    let corr = (s_f - s_c) / T::lit(15.0);
    Ok(FluxReport {
        p0: s_f + corr,
        quad_error: corr.abs(),
    })
}

/// Cumulative integral of the samples `(xs, fs)` starting from zero at
/// `xs[0]`, one entry per sample. Each interval increment is the average of
/// the quadratic rules through the two sample triples bracketing the
/// interval, which cancels the leading interpolation error of a single
/// lopsided rule (4th order on smooth data).
pub(crate) fn cumulative_quad<T: Real>(xs: &[T], fs: &[T]) -> Vec<T> {
    let n = xs.len();
    let half = T::lit(0.5);
    let mut out = Vec::with_capacity(n);
    out.push(T::zero());
    for j in 1..n {
        let left = (j >= 2).then(|| {
            lagrange3_integral(
                [xs[j - 2], xs[j - 1], xs[j]],
                [fs[j - 2], fs[j - 1], fs[j]],
                xs[j - 1],
                xs[j],
            )
        });
        let right = (j + 1 < n).then(|| {
            lagrange3_integral(
                [xs[j - 1], xs[j], xs[j + 1]],
                [fs[j - 1], fs[j], fs[j + 1]],
                xs[j - 1],
                xs[j],
            )
        });
        let inc = match (left, right) {
            (Some(a), Some(b)) => (a + b) * half,
            (Some(a), None) => a,
            (None, Some(b)) => b,
            (None, None) => (fs[j - 1] + fs[j]) * (xs[j] - xs[j - 1]) * half,
        };
        out.push(out[j - 1] + inc);
    }
    out
}

/// Cumulative axis stream function at the sample ordinates, starting from
/// `ψ(-d) = -p0`.
fn cumulative_psi_raw<T: Real>(axis: &AxisData<T>, p0: T) -> Vec<T> {
    cumulative_quad(&axis.ys, &axis.ws)
        .into_iter()
        .map(|v| v - p0)
        .collect()
}

/// Checks that the given flux is consistent with the samples: integrating
/// `w` up the column from `ψ(-d) = -p0` must land on `ψ(η(x0)) = 0` to
/// within quadrature accuracy.
fn check_psi_consistency<T: Real>(axis: &AxisData<T>, p0: T, quad_error: T) -> Result<Vec<T>> {
    let psi = cumulative_psi_raw(axis, p0);
    let top = *psi.last().unwrap();
    let tol = T::lit(1e-10) * T::one().max(p0.abs()) + T::lit(64.0) * quad_error;
    if top.abs() > tol {
        return Err(Error::InconsistentData(format!(
            "stream function fails its surface identity: ψ(0, η) = {} but must vanish \
             (tolerance {}); the flux p0 = {} does not match the samples",
            top.widen(),
            tol.widen(),
            p0.widen()
        )));
    }
    Ok(psi)
}

/// Chebyshev fit of the axis velocity samples on `[-d, η(x0)]`, with the
/// noise-plateau truncation applied to measured data. Returns the fit, the
/// largest sample residual, and the smallest `|w|` among the samples.
fn fit_axis_w<T: Real>(
    axis: &AxisData<T>,
    degree: usize,
    auto_chop: bool,
) -> Result<(Cheb<T>, T, T)> {
    let w = Cheb::fit(-axis.d, axis.eta0(), &axis.ys, &axis.ws, degree)?;
    let w = if auto_chop && axis.provenance == Provenance::Measured {
        w.truncated(chop_degree(w.coeffs()))
    } else {
        w
    };
    let mut resid = T::zero();
    let mut wmin = T::infinity();
    for (&y, &wv) in axis.ys.iter().zip(&axis.ws) {
        resid = resid.max((w.eval(y) - wv).abs());
        wmin = wmin.min(wv.abs());
    }
    Ok((w, resid, wmin))
}

/// Degree at which a coefficient sequence has decayed into its noise
/// plateau: the plateau level is estimated from the median of the trailing
/// third, and the cut is placed where the suffix maximum first drops within
/// an order of magnitude of it. Never truncates below degree 2.
fn chop_degree<T: Real>(c: &[T]) -> usize {
    let n = c.len();
    if n <= 3 {
        return n.saturating_sub(1);
    }
    let ca: Vec<T> = c.iter().map(|v| v.abs()).collect();
    let cmax = ca.iter().fold(T::zero(), |m, &v| m.max(v));
    if cmax == T::zero() {
        return 0;
    }
    let start = (2 * n / 3).max(2);
    let mut tail = ca[start..].to_vec();
    tail.sort_by(|a, b| a.partial_cmp(b).expect("finite coefficients"));
    let med = if tail.len() % 2 == 1 {
        tail[tail.len() / 2]
    } else {
        (tail[tail.len() / 2 - 1] + tail[tail.len() / 2]) * T::lit(0.5)
    };
    let floor = (T::lit(1e-14) * cmax).max(T::lit(4.0) * med);
    let mut suffix = ca.clone();
    for j in (0..n - 1).rev() {
        suffix[j] = suffix[j].max(suffix[j + 1]);
    }
    let cut = T::lit(10.0) * floor;
    for (m, &t) in suffix.iter().enumerate() {
        if t <= cut {
            return m.saturating_sub(1).max(2);
        }
    }
    n - 1
}

/// The stream function on the axis, `ψ(0, y) = -p0 + ∫_{-d}^y w`, as a
/// smooth function on `[-d, η(x0)]`.
///
/// The returned function is the antiderivative of the fitted velocity
/// profile, anchored to `ψ = 0` at the surface; before building it the
/// routine checks the quadrature identity that the raw samples integrate
/// from `-p0` at the bed to `0` at the surface (within the flux error
/// estimate), failing with an inconsistent-data error otherwise.
pub fn psi_on_axis<T: Real>(axis: &AxisData<T>, p0: T) -> Result<Cheb<T>> {
    let flux = compute_flux(axis)?;
    check_psi_consistency(axis, p0, flux.quad_error)?;
    let degree = DEFAULT_DEGREE.min(axis.ys.len() - 1);
    let (wfit, _, _) = fit_axis_w(axis, degree, true)?;
    Ok(wfit.antideriv(axis.eta0()))
}

/// Monotone bisection for `psi(y) = target` on `[lo, hi]` (ψ decreasing).
fn invert_psi<T: Real>(psi: &Cheb<T>, target: T, mut lo: T, mut hi: T, tol: T) -> Result<T> {
    let half = T::lit(0.5);
    let mut glo = psi.eval(lo) - target;
    if glo == T::zero() {
        return Ok(lo);
    }
    let ghi = psi.eval(hi) - target;
    if ghi == T::zero() {
        return Ok(hi);
    }
    if (glo < T::zero()) == (ghi < T::zero()) {
        return Err(Error::Admissibility(format!(
            "stream-function inversion lost its bracket near ψ = {}; \
             the fitted profile is not monotone",
            target.widen()
        )));
    }
    for _ in 0..200 {
        let mid = (lo + hi) * half;
        let gm = psi.eval(mid) - target;
        if gm == T::zero() {
            return Ok(mid);
        }
        if (gm < T::zero()) == (glo < T::zero()) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= tol {
            break;
        }
    }
    Ok((lo + hi) * half)
}

/// Zeroth expansion coefficient `a0(p) = h(0, p)`: the height of the
/// streamline `ψ = -p` above the bed on the axis.
///
/// Built through the derivative identity `a0'(p) = -1/w(y(p))`: the fitted
/// stream function is inverted at the Chebyshev nodes of `[p0, 0]` by
/// bisection, `-1/w` is collocated there, and the result is integrated up
/// from `a0(p0) = 0` (which therefore holds exactly). Monotonicity of the
/// cumulative stream function is verified on the raw samples first; ties or
/// reversals are rejected as stagnation.
pub fn compute_a0<T: Real>(
    axis: &AxisData<T>,
    p0: T,
    degree: usize,
    auto_chop: bool,
) -> Result<FuncP<T>> {
    compute_a0_detailed(axis, p0, degree, auto_chop).map(|(a0, _, _)| a0)
}

/// [`compute_a0`] plus the fit's sample residual and the smallest `|w|` at
/// the collocation points, for downstream consistency tolerances.
fn compute_a0_detailed<T: Real>(
    axis: &AxisData<T>,
    p0: T,
    degree: usize,
    auto_chop: bool,
) -> Result<(FuncP<T>, T, T)> {
    axis.validate()?;
    if !(p0 < T::zero()) || !p0.is_finite() {
        return Err(Error::InvalidInput(format!(
            "compute_a0: flux must be negative (got {})",
            p0.widen()
        )));
    }
    let deg = degree.min(axis.ys.len() - 1);

    // Strict monotonicity of ψ along the raw samples (w < 0 was already
    // enforced; this additionally rejects data whose integral stalls).
    let psi_raw = cumulative_psi_raw(axis, p0);
    for j in 1..psi_raw.len() {
        if !(psi_raw[j] < psi_raw[j - 1]) {
            return Err(Error::Admissibility(format!(
                "stream function is not strictly monotone on the axis \
                 (flat spot or reversal near y = {})",
                axis.ys[j].widen()
            )));
        }
    }

    let eta0 = axis.eta0();
    let (wfit, fit_resid, _) = fit_axis_w(axis, deg, auto_chop)?;
    let psi = wfit.antideriv(eta0);

    // Invert ψ(y) = -p at the Chebyshev points of [p0, 0]. The node list
    // descends from 0, so the first node is the surface and the last the
    // bed; both are assigned directly.
    let pnodes = Cheb::nodes(p0, T::zero(), deg);
    let tol = T::lit(1e-15) * T::one().max(axis.d);
    let mut vals = Vec::with_capacity(deg + 1);
    let mut wmin = T::infinity();
    for (k, &pk) in pnodes.iter().enumerate() {
        let y = if k == 0 {
            eta0
        } else if k == deg {
            -axis.d
        } else {
            invert_psi(&psi, -pk, -axis.d, eta0, tol)?
        };
        let wv = wfit.eval(y);
        if !(wv < T::zero()) {
            return Err(Error::Admissibility(format!(
                "fitted axis velocity is nonnegative at y = {} (w = {}); \
                 cannot form a0' = -1/w",
                y.widen(),
                wv.widen()
            )));
        }
        wmin = wmin.min(wv.abs());
        vals.push(-T::one() / wv);
    }
    let a0p = Cheb::from_node_values(p0, T::zero(), &vals);
    let a0 = FuncP::from_series(a0p.antideriv(p0), Provenance::Derived);
    Ok((a0, fit_resid, wmin))
}

// ---------------------------------------------------------------------------
// Vorticity specification
// ---------------------------------------------------------------------------

/// How the vorticity function `γ(p)` is supplied to the recovery.
///
/// The recovery cannot infer `γ` from axis data alone — it is physical
/// side information. The model is turned into a concrete function on
/// `[p0, 0]` only once the flux is known.
#[derive(Debug, Clone)]
pub enum GammaModel<T> {
    /// Irrotational flow, `γ ≡ 0` (the default).
    Zero,
    /// Polynomial in `p`: `γ(p) = Σ coeffs[k] p^k`.
    PowerCoeffs(Vec<T>),
    /// Samples `(ps[k], vals[k])`; fitted once the domain is known. The
    /// samples must cover `[p0, 0]` to within 5% of its span at both ends.
    Samples { ps: Vec<T>, vals: Vec<T> },
    /// An already-built function; re-collocated onto the recovered domain,
    /// which must agree with its own to within 5% of `|p0|`.
    Func(FuncP<T>),
}

impl<T: Real> GammaModel<T> {
    /// Concretizes the model on `[p0, 0]`.
    pub fn build(&self, p0: T) -> Result<FuncP<T>> {
        match self {
            GammaModel::Zero => FuncP::constant(p0, T::zero(), Provenance::Analytic),
            GammaModel::PowerCoeffs(c) => FuncP::from_power_coeffs(p0, c),
            GammaModel::Samples { ps, vals } => {
                if ps.is_empty() {
                    return Err(Error::InvalidInput(
                        "vorticity samples are empty".into(),
                    ));
                }
                let lo = ps.iter().fold(T::infinity(), |m, &v| m.min(v));
                let hi = ps.iter().fold(-T::infinity(), |m, &v| m.max(v));
                let slack = T::lit(0.05) * (-p0);
                if lo > p0 + slack || hi < -slack {
                    return Err(Error::InvalidInput(format!(
                        "vorticity samples cover [{}, {}] but the flow needs [{}, 0]",
                        lo.widen(),
                        hi.widen(),
                        p0.widen()
                    )));
                }
                let deg = 16usize.min(ps.len() - 1);
                FuncP::fit(ps, vals, p0, deg, Provenance::Measured)
            }
            GammaModel::Func(f) => {
                let fp0 = f.p0();
                if (fp0 - p0).abs() > T::lit(0.05) * p0.abs() {
                    return Err(Error::InvalidInput(format!(
                        "vorticity function lives on [{}, 0] but the flow needs [{}, 0]",
                        fp0.widen(),
                        p0.widen()
                    )));
                }
                if fp0 == p0 {
                    return Ok(f.clone());
                }
                let series = Cheb::from_fn(p0, T::zero(), f.degree(), |p| f.eval(p));
                Ok(FuncP::from_series(series, f.provenance()))
            }
        }
    }
}

// ---------------------------------------------------------------------------
// The coefficient recursion
// ---------------------------------------------------------------------------

/// Smallest value of a function on a dense sampling grid (501 points).
fn min_on_grid<T: Real>(f: &FuncP<T>) -> T {
    let (a, b) = f.domain();
    let n = 500;
    let mut m = T::infinity();
    for i in 0..=n {
        let x = a + (b - a) * T::of_usize(i) / T::of_usize(n);
        m = m.min(f.eval(x));
    }
    m
}

fn require_increasing_a0<T: Real>(a0p: &FuncP<T>) -> Result<()> {
    let m = min_on_grid(a0p);
    if !(m > T::zero()) {
        return Err(Error::Admissibility(format!(
            "a0' must be positive on [p0, 0] (min {}); the data implies stagnation",
            m.widen()
        )));
    }
    Ok(())
}

/// Second expansion coefficient from the Cauchy data:
/// `a2 = γ a0'/2 - a0''/(2 a0'²)`.
pub fn coeff_a2<T: Real>(a0: &FuncP<T>, gamma: &FuncP<T>) -> Result<FuncP<T>> {
    let a0p = a0.differentiate();
    require_increasing_a0(&a0p)?;
    let half = T::lit(0.5);
    let r = a0p.multiply(&a0p)?.recip(MAX_DEGREE)?;
    let t1 = gamma.multiply(&a0p)?.scale(half);
    let t2 = a0p.differentiate().multiply(&r)?.scale(half);
    t1.add(&t2.scale(-T::one()))
}

/// Next even coefficient `a_{2n+2}` from `orders = [a_0, …, a_{2n}]`.
///
/// The governing equation `(1+h_q²)h_pp - 2h_p h_q h_pq + h_p² h_qq = γ h_p³`
/// collected at `q`-order `2n` isolates `(2n+1)(2n+2) a_{2n+2} (a0')²` on
/// one side; the other side is four convolution families over the known
/// orders (second derivatives against products, first derivatives against
/// mixed products, the elliptic coupling, and the vorticity cubic).
pub fn coeff_next<T: Real>(orders: &[FuncP<T>], gamma: &FuncP<T>) -> Result<FuncP<T>> {
    if orders.len() < 2 {
        return Err(Error::InvalidInput(
            "coeff_next needs at least [a0, a2]; use coeff_a2 for the first step".into(),
        ));
    }
    let n = orders.len() - 1;
    let p0 = orders[0].p0();
    let ap: Vec<FuncP<T>> = orders.iter().map(|f| f.differentiate()).collect();
    let app: Vec<FuncP<T>> = ap.iter().map(|f| f.differentiate()).collect();
    require_increasing_a0(&ap[0])?;
    let zero = FuncP::constant(p0, T::zero(), Provenance::Analytic)?;

    // -a_{2n}'' and the second-derivative convolution family.
    let mut acc = app[n].scale(-T::one());
    for k in 1..=n {
        let mut inner = zero.clone();
        for l in 1..=k {
            let w = T::of_usize(4 * l * (k - l + 1));
            inner = inner.add(&orders[l].multiply(&orders[k - l + 1])?.scale(w))?;
        }
        acc = acc.add(&app[n - k].multiply(&inner)?.scale(-T::one()))?;
    }
    // Mixed first-derivative family (enters twice).
    for k in 0..n {
        let mut inner = zero.clone();
        for l in 1..=(k + 1) {
            let w = T::of_usize(4 * l * (k + 2 - l));
            inner = inner.add(&orders[l].multiply(&ap[k + 2 - l])?.scale(w))?;
        }
        acc = acc.add(&ap[n - k - 1].multiply(&inner)?.scale(T::lit(2.0)))?;
    }
    // Elliptic coupling of the lower orders against (h_p²) at order n-k.
    for k in 0..n {
        let mut inner = zero.clone();
        for l in 0..=(n - k) {
            inner = inner.add(&ap[l].multiply(&ap[n - k - l])?)?;
        }
        let w = T::of_usize((2 * k + 1) * (2 * k + 2));
        acc = acc.add(&orders[k + 1].multiply(&inner)?.scale(-w))?;
    }
    // Vorticity cubic γ (h_p³) at order n.
    let mut dsum = zero.clone();
    for k in 0..=n {
        let mut inner = zero.clone();
        for l in 0..=(n - k) {
            inner = inner.add(&ap[l].multiply(&ap[n - k - l])?)?;
        }
        dsum = dsum.add(&ap[k].multiply(&inner)?)?;
    }
    acc = acc.add(&gamma.multiply(&dsum)?)?;

    let r = ap[0].multiply(&ap[0])?.recip(MAX_DEGREE)?;
    let den = T::of_usize((2 * n + 1) * (2 * n + 2));
    Ok(acc.multiply(&r)?.scale(T::one() / den))
}

/// General Taylor march for `h(q, p) = Σ b_m(p) (q - q_c)^m` from Cauchy
/// data `(b0, b1)`, without any symmetry assumption.
///
/// Marches the governing equation order by order:
/// `b_{m+2} = -[collected order-m terms] / ((m+2)(m+1) b0'²)`. With
/// `b1 ≡ 0` every odd order vanishes identically (exactly, coefficient by
/// coefficient), and the even orders reproduce [`coeff_a2`]/[`coeff_next`];
/// this is the cross-check engine and the restart engine for off-axis
/// expansion. `m_max` is capped at `2 * MAX_ORDERS`.
pub fn taylor_march<T: Real>(
    b0: &FuncP<T>,
    b1: &FuncP<T>,
    gamma: &FuncP<T>,
    m_max: usize,
) -> Result<Vec<FuncP<T>>> {
    if m_max < 2 || m_max > 2 * MAX_ORDERS {
        return Err(Error::Config(format!(
            "taylor_march order must lie in [2, {}] (got {m_max})",
            2 * MAX_ORDERS
        )));
    }
    let mut b = vec![b0.clone(), b1.clone()];
    let mut bp = vec![b0.differentiate(), b1.differentiate()];
    let mut bpp = vec![bp[0].differentiate(), bp[1].differentiate()];
    require_increasing_a0(&bp[0])?;
    let r = bp[0].multiply(&bp[0])?.recip(MAX_DEGREE)?;

    for m in 0..=(m_max - 2) {
        // Coefficient extractors for the derivative fields at q-order j:
        //   h_q → (j+1) b_{j+1},   h_p → b_j',   h_pp → b_j'',
        //   h_pq → (j+1) b_{j+1}', h_qq → (j+2)(j+1) b_{j+2}.
        let hq = |j: usize| b[j + 1].scale(T::of_usize(j + 1));
        let hpq = |j: usize| bp[j + 1].scale(T::of_usize(j + 1));
        let hqq = |j: usize| b[j + 2].scale(T::of_usize((j + 2) * (j + 1)));

        let mut acc = bpp[m].clone();
        // (h_q h_q h_pp) at order m.
        for i in 0..=m {
            for j in 0..=(m - i) {
                let k = m - i - j;
                acc = acc.add(&hq(i).multiply(&hq(j))?.multiply(&bpp[k])?)?;
            }
        }
        // -2 (h_p h_q h_pq) at order m.
        for i in 0..=m {
            for j in 0..=(m - i) {
                let k = m - i - j;
                acc = acc.add(
                    &bp[i]
                        .multiply(&hq(j))?
                        .multiply(&hpq(k))?
                        .scale(-T::lit(2.0)),
                )?;
            }
        }
        // (h_p h_p h_qq) at order m, except the k = m term that holds the
        // unknown b_{m+2}.
        for k in 0..m {
            for i in 0..=(m - k) {
                let j = m - k - i;
                acc = acc.add(&bp[i].multiply(&bp[j])?.multiply(&hqq(k))?)?;
            }
        }
        // -γ (h_p h_p h_p) at order m.
        let mut cubic = FuncP::constant(b0.p0(), T::zero(), Provenance::Analytic)?;
        for i in 0..=m {
            for j in 0..=(m - i) {
                let k = m - i - j;
                cubic = cubic.add(&bp[i].multiply(&bp[j])?.multiply(&bp[k])?)?;
            }
        }
        acc = acc.add(&gamma.multiply(&cubic)?.scale(-T::one()))?;

        let den = T::of_usize((m + 2) * (m + 1));
        let next = acc.multiply(&r)?.scale(-T::one() / den);
        bp.push(next.differentiate());
        bpp.push(bp[m + 2].differentiate());
        b.push(next);
    }
    Ok(b)
}

// ---------------------------------------------------------------------------
// Coefficient tables, trust radius, summation
// ---------------------------------------------------------------------------

/// A truncated Taylor table for the height function.
///
/// In symmetric mode `orders[n]` multiplies `(q - q_center)^{2n}` (even
/// powers only, `q_center = 0` for on-axis tables); in general mode
/// `orders[m]` multiplies `(q - q_center)^m`.
#[derive(Debug, Clone)]
pub struct CoeffTable<T> {
    /// Relative mass flux (lower end of the `p`-domain).
    pub p0: T,
    /// Expansion coefficients, lowest order first.
    pub orders: Vec<FuncP<T>>,
    /// Vorticity function the table was built with.
    pub gamma: FuncP<T>,
    /// Even-powers-only table (crest/trough expansion).
    pub symmetric: bool,
    /// Expansion center in `q`.
    pub q_center: T,
}

impl<T: Real> CoeffTable<T> {
    /// Power of `(q - q_center)` multiplied by `orders[idx]`.
    pub fn power(&self, idx: usize) -> usize {
        if self.symmetric {
            2 * idx
        } else {
            idx
        }
    }

    /// Truncation order: the highest stored index.
    pub fn truncation_order(&self) -> usize {
        self.orders.len() - 1
    }
}

fn is_zero_func<T: Real>(f: &FuncP<T>) -> bool {
    f.coeffs().iter().all(|&c| c == T::zero())
}

/// Runs the symmetric recursion to `n_orders` with the table policy:
/// orders `n ≥ 1` are truncated to `table_degree` and clipped to zero once
/// their sup-norm drops below `clip_abs`. A clipped order ends the
/// recursion — every later order is then identically zero, which is exact:
/// each term of the recursion carries at least one factor of some `a_{2l}`
/// with `l ≥ 1`.
fn run_recursion<T: Real>(
    a0: &FuncP<T>,
    gamma: &FuncP<T>,
    n_orders: usize,
    table_degree: Option<usize>,
    clip_abs: Option<T>,
) -> Result<Vec<FuncP<T>>> {
    // Truncate and clip one freshly computed order; the flag says the order
    // was clipped to zero.
    fn post<T: Real>(
        f: FuncP<T>,
        table_degree: Option<usize>,
        clip_abs: Option<T>,
        zero: &FuncP<T>,
    ) -> (FuncP<T>, bool) {
        let f = match table_degree {
            Some(deg) => f.lowpass(deg + 1),
            None => f,
        };
        if let Some(clip) = clip_abs {
            if f.sup_norm() <= clip {
                return (zero.clone(), true);
            }
        }
        (f, false)
    }

    let zero = FuncP::constant(a0.p0(), T::zero(), Provenance::Analytic)?;
    let mut orders = vec![a0.clone()];
    let (a2, mut dead) = post(coeff_a2(a0, gamma)?, table_degree, clip_abs, &zero);
    orders.push(a2);
    for _n in 1..n_orders {
        if dead {
            orders.push(zero.clone());
            continue;
        }
        let (next, clipped) = post(coeff_next(&orders, gamma)?, table_degree, clip_abs, &zero);
        dead = clipped;
        orders.push(next);
    }
    Ok(orders)
}

/// Empirical convergence radius of a coefficient table.
#[derive(Debug, Clone)]
pub struct RadiusEstimate<T> {
    /// Safety factor the trusted disk was derived with.
    pub theta: T,
    /// Root-test growth rate `L = max_n sup|a_n|^{1/power(n)}`.
    pub l: T,
    /// Estimated radius of convergence `1/L` (`∞` when entire).
    pub radius: T,
    /// Trusted evaluation disk `|q - q_center| ≤ θ/L`.
    pub q_trust: T,
    /// All orders beyond the zeroth vanish — the table is (empirically) a
    /// polynomial and the radius is unbounded.
    pub entire: bool,
    /// Per-order root-test values (index 1 onward; 0 for vanished orders).
    pub per_order: Vec<T>,
}

/// Root-test estimate of the convergence radius and the trusted disk
/// `q_trust = θ/L`, `θ ∈ (0, 1)`.
///
/// Orders that are identically zero (clipped or genuinely absent) are
/// skipped; if every order beyond the zeroth vanishes the table is flagged
/// entire and the trusted disk is unbounded. Requires at least four stored
/// orders — any fewer and a growth trend is not measurable.
pub fn estimate_radius<T: Real>(table: &CoeffTable<T>, theta: T) -> Result<RadiusEstimate<T>> {
    if !(theta > T::zero()) || !(theta < T::one()) {
        return Err(Error::Config(format!(
            "trust factor must lie in (0, 1) (got {})",
            theta.widen()
        )));
    }
    if table.orders.len() < 4 {
        return Err(Error::Config(format!(
            "radius estimation needs at least 4 orders (got {})",
            table.orders.len()
        )));
    }
    let mut l = T::zero();
    let mut per_order = Vec::with_capacity(table.orders.len() - 1);
    for (i, f) in table.orders.iter().enumerate().skip(1) {
        let s = f.sup_norm();
        let li = if s == T::zero() {
            T::zero()
        } else {
            s.powf(T::one() / T::of_usize(table.power(i)))
        };
        per_order.push(li);
        l = l.max(li);
    }
    let entire = l == T::zero();
    let (radius, q_trust) = if entire {
        (T::infinity(), T::infinity())
    } else {
        (T::one() / l, theta / l)
    };
    Ok(RadiusEstimate {
        theta,
        l,
        radius,
        q_trust,
        entire,
        per_order,
    })
}

/// One point evaluation of a coefficient table.
#[derive(Debug, Clone, Copy)]
pub struct SeriesEval<T> {
    /// Height `h(q, p)`.
    pub h: T,
    /// `∂h/∂q`.
    pub h_q: T,
    /// `∂h/∂p`.
    pub h_p: T,
    /// Magnitude of the last nonvanishing term (truncation-tail indicator).
    pub tail: T,
    /// `tail` relative to `max(|h|, column height)`.
    pub tail_ratio: T,
    /// The term magnitudes were not decreasing at the tail — the point is
    /// likely outside the disk of convergence.
    pub diverging: bool,
}

/// Sums a coefficient table at `(q, p)` with explicit tail accounting.
///
/// Refuses — unless `force` is set — to certify points outside the trusted
/// disk, or points whose truncation tail exceeds [`TAIL_LIMIT`] relative to
/// the value (the tail is measured against the column height when `h`
/// itself is near zero, as at the bed). With `force` the value is returned
/// regardless, still carrying its tail indicator and a divergence flag.
pub fn sum_series<T: Real>(
    table: &CoeffTable<T>,
    radius: &RadiusEstimate<T>,
    q: T,
    p: T,
    force: bool,
) -> Result<SeriesEval<T>> {
    let slack = T::lit(1e-12) * table.p0.abs();
    if p < table.p0 - slack || p > slack {
        return Err(Error::InvalidInput(format!(
            "p = {} lies outside [{}, 0]",
            p.widen(),
            table.p0.widen()
        )));
    }
    let dq = q - table.q_center;
    let mut h = T::zero();
    let mut h_q = T::zero();
    let mut h_p = T::zero();
    let mut tail = T::zero();
    let mut prev_term = T::zero();
    let mut seen = 0usize;
    let mut diverging = false;
    for (i, f) in table.orders.iter().enumerate() {
        let pw = table.power(i);
        let x = dq.powi(pw as i32);
        let a = f.eval(p);
        let term = a * x;
        h = h + term;
        h_p = h_p + f.differentiate().eval(p) * x;
        if pw >= 1 {
            h_q = h_q + a * T::of_usize(pw) * dq.powi(pw as i32 - 1);
        }
        if i >= 1 && !is_zero_func(f) {
            if seen >= 1 && term.abs() >= prev_term && term.abs() > T::zero() {
                diverging = true;
            } else if term.abs() < prev_term {
                diverging = false;
            }
            prev_term = term.abs();
            tail = term.abs();
            seen += 1;
        }
    }
    let denom = h.abs().max(table.orders[0].sup_norm());
    let tail_ratio = if denom > T::zero() {
        tail / denom
    } else {
        T::zero()
    };
    if !force {
        if dq.abs() > radius.q_trust * (T::one() + T::lit(1e-12)) {
            return Err(Error::OutOfTrustedDisk {
                q: q.widen(),
                q_trust: radius.q_trust.widen(),
            });
        }
        if tail_ratio > T::lit(TAIL_LIMIT) {
            return Err(Error::SeriesTailTooLarge {
                q: q.widen(),
                indicator: tail_ratio.widen(),
                limit: TAIL_LIMIT,
            });
        }
    }
    Ok(SeriesEval {
        h,
        h_q,
        h_p,
        tail,
        tail_ratio,
        diverging,
    })
}

/// Restarts the expansion at a new center `q_center`, producing a general
/// (odd and even) table.
///
/// The Cauchy data `(h, h_q)` at the new center is assembled exactly in
/// coefficient space from the old table, low-passed to `keep` coefficients
/// (re-expansion amplifies the high modes of a noisy table, so the forced
/// smoothing is part of the method), and marched to order `m_max`. This is
/// the experimental analytic-continuation engine: each restart multiplies
/// the reachable window but also the error, which is why drivers must
/// surface it as experimental.
pub fn recenter_table<T: Real>(
    table: &CoeffTable<T>,
    q_center: T,
    keep: usize,
    m_max: usize,
) -> Result<CoeffTable<T>> {
    if keep == 0 {
        return Err(Error::Config(
            "recenter_table: keep must be at least 1".into(),
        ));
    }
    let dq = q_center - table.q_center;
    let mut b0 = table.orders[0].clone();
    let mut b1 = FuncP::constant(table.p0, T::zero(), Provenance::Analytic)?;
    for (i, f) in table.orders.iter().enumerate().skip(1) {
        let pw = table.power(i);
        b0 = b0.add(&f.scale(dq.powi(pw as i32)))?;
        b1 = b1.add(&f.scale(T::of_usize(pw) * dq.powi(pw as i32 - 1)))?;
    }
    let orders = taylor_march(&b0.lowpass(keep), &b1.lowpass(keep), &table.gamma, m_max)?;
    Ok(CoeffTable {
        p0: table.p0,
        orders,
        gamma: table.gamma.clone(),
        symmetric: false,
        q_center,
    })
}

// ---------------------------------------------------------------------------
// The one-call driver
// ---------------------------------------------------------------------------

/// Knobs for [`recover_wave`]. The defaults are the validated production
/// settings; loosen or tighten only with a reason.
#[derive(Debug, Clone)]
pub struct RecoverOptions<T> {
    /// Recursion orders beyond `a0` (table holds `a_0 .. a_{2 orders}`).
    pub orders: usize,
    /// Chebyshev degree of the `w` fit (capped by the sample count).
    pub fit_degree: usize,
    /// Trust factor `θ ∈ (0, 1)` for the evaluation disk.
    pub theta: T,
    /// Truncate measured `w` fits at their noise plateau.
    pub auto_chop: bool,
    /// Truncation degree for recursion orders `n ≥ 1` (`None` = full).
    pub table_degree: Option<usize>,
    /// Clip orders whose sup-norm falls below this fraction of the column
    /// height (`None` = never clip).
    pub clip_rel: Option<T>,
    /// Vorticity specification.
    pub gamma: GammaModel<T>,
    /// Output grid columns.
    pub nq: usize,
    /// Output grid row intervals.
    pub np: usize,
    /// Atmospheric pressure constant for the reconstructed field.
    pub p_atm: T,
}

impl<T: Real> Default for RecoverOptions<T> {
    fn default() -> Self {
        RecoverOptions {
            orders: DEFAULT_ORDERS,
            fit_degree: DEFAULT_DEGREE,
            theta: T::lit(0.5),
            auto_chop: true,
            table_degree: Some(8),
            clip_rel: Some(T::lit(1e-10)),
            gamma: GammaModel::Zero,
            nq: 128,
            np: 32,
            p_atm: T::zero(),
        }
    }
}

/// Everything [`recover_wave`] produces.
#[derive(Debug, Clone)]
pub struct RecoveredWave<T> {
    /// Relative mass flux.
    pub p0: T,
    /// Quadrature error estimate for `p0`.
    pub quad_error: T,
    /// Bernoulli head `Q = 1/a0'(0)² + 2 g a0(0)` recovered from the data.
    pub q_const: T,
    /// The expansion table.
    pub table: CoeffTable<T>,
    /// Trust-radius estimate.
    pub radius: RadiusEstimate<T>,
    /// The `q`-window the outputs cover, `(-W, W)`.
    pub window: (T, T),
    /// The trusted disk is smaller than the half-period: outputs cover only
    /// part of the wave.
    pub partial: bool,
    /// Profile abscissae.
    pub profile_q: Vec<T>,
    /// Surface elevation `η(q)` at `profile_q` (zero level `y = 0`, bed at
    /// `-d`).
    pub profile_eta: Vec<T>,
    /// Height function on the output grid.
    pub height: HeightField<T>,
    /// Velocity and pressure on the output grid.
    pub flow: FlowField<T>,
    /// Human-readable notes: partial windows, tail levels, missing
    /// metadata.
    pub notes: Vec<String>,
}

fn validate_options<T: Real>(opts: &RecoverOptions<T>) -> Result<()> {
    if opts.orders < 3 || opts.orders > MAX_ORDERS {
        return Err(Error::Config(format!(
            "orders must lie in [3, {MAX_ORDERS}] (got {})",
            opts.orders
        )));
    }
    if opts.fit_degree < 4 || opts.fit_degree > MAX_DEGREE {
        return Err(Error::Config(format!(
            "fit degree must lie in [4, {MAX_DEGREE}] (got {})",
            opts.fit_degree
        )));
    }
    if !(opts.theta > T::zero()) || !(opts.theta < T::one()) {
        return Err(Error::Config(format!(
            "trust factor must lie in (0, 1) (got {})",
            opts.theta.widen()
        )));
    }
    if opts.nq < 4 || opts.np < 4 {
        return Err(Error::Config(format!(
            "output grid must be at least 4×4 (got {}×{})",
            opts.nq, opts.np
        )));
    }
    if let Some(c) = opts.clip_rel {
        if !(c >= T::zero()) || !c.is_finite() {
            return Err(Error::Config("clip threshold must be finite and nonnegative".into()));
        }
    }
    if !opts.p_atm.is_finite() {
        return Err(Error::Config("atmospheric pressure must be finite".into()));
    }
    Ok(())
}

/// Recovers the wave from axis data: flux, Cauchy data, coefficient
/// recursion, trust radius, and the reconstructed fields.
///
/// The output grid covers `q ∈ [-W, W]` with `W = min(q_trust, λ/2)`; when
/// the trusted disk does not reach the half-period the result is marked
/// partial and covers only the trusted window (a note says so explicitly).
/// The reconstructed velocity field is reported in the frame of the wave
/// unless the data carried a wave speed `c`.
pub fn recover_wave<T: Real>(
    axis: &AxisData<T>,
    opts: &RecoverOptions<T>,
) -> Result<RecoveredWave<T>> {
    axis.validate()?;
    validate_options(opts)?;
    let mut notes = Vec::new();
    if axis.flags.contains(&AxisFlag::Interpolated) {
        notes.push("axis samples were interpolated between grid columns".to_string());
    }
    if axis.flags.contains(&AxisFlag::NotSymmetryAxis) {
        notes.push(
            "sampling line does not look like a symmetry axis; the recovery \
             symmetrizes the wave about it"
                .to_string(),
        );
    }
    let scale = axis.height_scale();

    // Flux and its consistency with the cumulative stream function.
    let flux = compute_flux(axis)?;
    check_psi_consistency(axis, flux.p0, flux.quad_error)?;

    // Cauchy data.
    let (a0, fit_resid, wmin) =
        compute_a0_detailed(axis, flux.p0, opts.fit_degree, opts.auto_chop)?;
    let a0p = a0.differentiate();
    require_increasing_a0(&a0p)?;
    if a0.eval(flux.p0).abs() > T::lit(1e-12) * scale {
        return Err(Error::InconsistentData(format!(
            "a0(p0) = {} but the bed must sit at height zero",
            a0.eval(flux.p0).widen()
        )));
    }
    // The integrated column height must reproduce the geometric one. The
    // tolerance grows with the fitted profile's own sample residual (the
    // propagation bound of 1/w through the integral); a clean dataset is
    // held to the tight floor.
    let top_defect = (a0.eval(T::zero()) - (axis.d + axis.eta0())).abs();
    let propagated = T::lit(4.0)
        * ((-flux.p0) * fit_resid / (wmin * wmin) + flux.quad_error / wmin);
    let top_tol = (T::lit(1e-6) * scale).max(T::lit(50.0) * propagated);
    if top_defect > top_tol {
        return Err(Error::InconsistentData(format!(
            "integrated column height a0(0) = {} differs from d + η = {} by {} \
             (tolerance {}); depth, surface, or velocity data disagree",
            a0.eval(T::zero()).widen(),
            (axis.d + axis.eta0()).widen(),
            top_defect.widen(),
            top_tol.widen()
        )));
    }
    if top_defect > T::lit(1e-8) * scale {
        notes.push(format!(
            "column-height consistency defect {:.3e} (data-limited)",
            top_defect.widen()
        ));
    }

    // Vorticity on the recovered domain, then the recursion.
    let gamma = opts.gamma.build(flux.p0)?;
    let clip_abs = opts.clip_rel.map(|r| r * scale);
    let orders = run_recursion(&a0, &gamma, opts.orders, opts.table_degree, clip_abs)?;
    let table = CoeffTable {
        p0: flux.p0,
        orders,
        gamma: gamma.clone(),
        symmetric: true,
        q_center: T::zero(),
    };
    let radius = estimate_radius(&table, opts.theta)?;

    // Bernoulli head from the Cauchy data at the crest surface point.
    let q_const =
        T::one() / (a0p.eval(T::zero()) * a0p.eval(T::zero())) + (axis.g + axis.g) * a0.eval(T::zero());

    // Output window and grid.
    let half = axis.lambda * T::lit(0.5);
    let partial = radius.q_trust < half;
    let w = radius.q_trust.min(half);
    let (qs, periodic): (Vec<T>, bool) = if partial {
        notes.push(format!(
            "trusted disk |q| <= {:.6e} is smaller than the half-period {:.6e}; \
             outputs cover only the trusted window",
            radius.q_trust.widen(),
            half.widen()
        ));
        (
            (0..opts.nq)
                .map(|i| -w + (w + w) * T::of_usize(i) / T::of_usize(opts.nq - 1))
                .collect(),
            false,
        )
    } else {
        (
            (0..opts.nq)
                .map(|i| -half + axis.lambda * T::of_usize(i) / T::of_usize(opts.nq))
                .collect(),
            true,
        )
    };
    let rows = opts.np + 1;
    let ps: Vec<T> = (0..rows)
        .map(|j| flux.p0 - flux.p0 * T::of_usize(j) / T::of_usize(opts.np))
        .collect();
    let mut h = vec![T::zero(); opts.nq * rows];
    let mut h_q = vec![T::zero(); opts.nq * rows];
    let mut h_p = vec![T::zero(); opts.nq * rows];
    let mut max_tail_ratio = T::zero();
    let mut any_diverging = false;
    for (i, &q) in qs.iter().enumerate() {
        for (j, &p) in ps.iter().enumerate() {
            let ev = sum_series(&table, &radius, q, p, true)?;
            h[i * rows + j] = ev.h;
            h_q[i * rows + j] = ev.h_q;
            h_p[i * rows + j] = ev.h_p;
            max_tail_ratio = max_tail_ratio.max(ev.tail_ratio);
            any_diverging |= ev.diverging;
        }
    }
    notes.push(format!(
        "largest truncation-tail ratio on the output grid: {:.3e}",
        max_tail_ratio.widen()
    ));
    if any_diverging {
        notes.push(
            "term magnitudes were not decreasing at some grid points; treat the \
             window edges with suspicion"
                .to_string(),
        );
    }

    let height = HeightField {
        p0: flux.p0,
        lambda: axis.lambda,
        g: axis.g,
        q_const,
        qs,
        ps,
        h,
        periodic,
        gamma,
    };
    let c = match axis.c {
        Some(c) => c,
        None => {
            notes.push(
                "axis data carried no wave speed; velocities are reported in the \
                 frame of the wave (c = 0)"
                    .to_string(),
            );
            T::zero()
        }
    };
    // Velocities and pressure from the table's own derivatives: the series
    // carries h_q and h_p analytically, and using them keeps the field free
    // of grid-differencing error (running the generic grid reconstruction
    // here would put one-sided-stencil kinks into u that every downstream
    // derivative check then amplifies).
    let big_gamma = height.gamma.antiderivative(T::zero());
    let mut ys = Vec::with_capacity(opts.nq * rows);
    let mut u = Vec::with_capacity(opts.nq * rows);
    let mut v = Vec::with_capacity(opts.nq * rows);
    let mut pr = Vec::with_capacity(opts.nq * rows);
    let mut eta = Vec::with_capacity(opts.nq);
    for i in 0..opts.nq {
        eta.push(height.h[i * rows + opts.np] - axis.d);
        for j in 0..rows {
            let k = i * rows + j;
            let (hv, hqv, hpv) = (height.h[k], h_q[k], h_p[k]);
            if hpv <= T::zero() {
                return Err(Error::Admissibility(format!(
                    "recovered h_p = {} <= 0 at q = {}, p = {}",
                    hpv.widen(),
                    height.qs[i].widen(),
                    height.ps[j].widen()
                )));
            }
            ys.push(hv - axis.d);
            u.push(c - T::one() / hpv);
            v.push(-hqv / hpv);
            pr.push(
                opts.p_atm
                    + (q_const - (T::one() + hqv * hqv) / (hpv * hpv) - (axis.g + axis.g) * hv)
                        * T::lit(0.5)
                    - big_gamma.eval(height.ps[j]),
            );
        }
    }
    let flow = FlowField {
        c,
        d: axis.d,
        g: axis.g,
        lambda: axis.lambda,
        p_atm: opts.p_atm,
        q_const,
        xs: height.qs.clone(),
        eta,
        ny: opts.np,
        ys,
        u,
        v,
        p: pr,
        periodic,
        gamma: Some(height.gamma.clone()),
    };
    let profile_q = height.qs.clone();
    let profile_eta = flow.eta.clone();

    Ok(RecoveredWave {
        p0: flux.p0,
        quad_error: flux.quad_error,
        q_const,
        table,
        radius,
        window: (-w, w),
        partial,
        profile_q,
        profile_eta,
        height,
        flow,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const G: f64 = 9.81;

    /// Still water in a frame moving at speed 1: u = 0, w ≡ -1, d = 1.
    fn still_axis(n: usize) -> AxisData<f64> {
        let ys: Vec<f64> = (0..n).map(|j| -1.0 + j as f64 / (n - 1) as f64).collect();
        let ws = vec![-1.0; n];
        AxisData::new(
            0.0,
            1.0,
            G,
            2.0 * std::f64::consts::PI,
            Some(1.0),
            ys,
            ws,
            Provenance::Analytic,
        )
        .unwrap()
    }

    /// Linear shear U(y) = y + 1 seen from c = 2: w = y - 1, γ ≡ 1,
    /// flux -3/2, and a0(p) = 2 - sqrt(1 - 2p) in closed form.
    fn shear_axis(n: usize) -> AxisData<f64> {
        let ys: Vec<f64> = (0..n).map(|j| -1.0 + j as f64 / (n - 1) as f64).collect();
        let us: Vec<f64> = ys.iter().map(|y| y + 1.0).collect();
        AxisData::from_velocity(
            0.0,
            1.0,
            G,
            2.0 * std::f64::consts::PI,
            2.0,
            ys,
            &us,
            Provenance::Analytic,
        )
        .unwrap()
    }

    /// Small-amplitude progressive wave (first order in eps) sampled on its
    /// crest line: w(y) = eps c k cosh(k(y+d))/sinh(kd) - c, with
    /// c = sqrt(g tanh(kd)/k), k = 1, d = 1.
    fn airy_axis(eps: f64, n: usize) -> AxisData<f64> {
        let (k, d) = (1.0_f64, 1.0_f64);
        let c = (G * (k * d).tanh() / k).sqrt();
        let ys: Vec<f64> = (0..n)
            .map(|j| -d + (d + eps) * j as f64 / (n - 1) as f64)
            .collect();
        let ws: Vec<f64> = ys
            .iter()
            .map(|y| eps * c * k * (k * (y + d)).cosh() / (k * d).sinh() - c)
            .collect();
        AxisData::new(
            0.0,
            d,
            G,
            2.0 * std::f64::consts::PI / k,
            Some(c),
            ys,
            ws,
            Provenance::Analytic,
        )
        .unwrap()
    }

    /// Flux of the crest-line Airy profile in closed form.
    fn airy_flux(eps: f64) -> f64 {
        let (k, d) = (1.0_f64, 1.0_f64);
        let c = (G * (k * d).tanh() / k).sqrt();
        eps * c * (k * (d + eps)).sinh() / (k * d).sinh() - c * (d + eps)
    }

    fn geometric_table(n: usize) -> CoeffTable<f64> {
        let orders: Vec<FuncP<f64>> = (0..=n)
            .map(|i| FuncP::constant(-1.0, 0.25_f64.powi(i as i32), Provenance::Analytic).unwrap())
            .collect();
        CoeffTable {
            p0: -1.0,
            orders,
            gamma: FuncP::constant(-1.0, 0.0, Provenance::Analytic).unwrap(),
            symmetric: true,
            q_center: 0.0,
        }
    }

    #[test]
    fn axis_data_validation_catches_malformed_input() {
        // Mismatched lengths.
        assert!(matches!(
            AxisData::new(0.0, 1.0, G, 6.0, None, vec![-1.0, 0.0], vec![-1.0], Provenance::Measured),
            Err(Error::InvalidInput(_))
        ));
        // First sample off the bed.
        assert!(matches!(
            AxisData::new(0.0, 1.0, G, 6.0, None, vec![-0.9, 0.0], vec![-1.0, -1.0], Provenance::Measured),
            Err(Error::InvalidInput(_))
        ));
        // Non-monotone ordinates.
        assert!(matches!(
            AxisData::new(
                0.0, 1.0, G, 6.0, None,
                vec![-1.0, -0.4, -0.4, 0.0],
                vec![-1.0; 4],
                Provenance::Measured
            ),
            Err(Error::InvalidInput(_))
        ));
        // Stagnation is an admissibility failure, not a shape failure.
        assert!(matches!(
            AxisData::new(
                0.0, 1.0, G, 6.0, None,
                vec![-1.0, -0.5, 0.0],
                vec![-1.0, 0.1, -1.0],
                Provenance::Measured
            ),
            Err(Error::Admissibility(_))
        ));
    }

    #[test]
    fn from_velocity_forms_relative_samples() {
        let axis = shear_axis(33);
        assert_eq!(axis.c, Some(2.0));
        assert_eq!(axis.eta0(), 0.0);
        for (y, w) in axis.ys.iter().zip(&axis.ws) {
            assert!((w - (y - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn flux_of_uniform_stream_is_exact() {
        let flux = compute_flux(&still_axis(33)).unwrap();
        assert!((flux.p0 + 1.0).abs() < 1e-13, "p0 = {}", flux.p0);
        assert!(flux.quad_error < 1e-13);
    }

    #[test]
    fn flux_of_linear_shear_is_exact() {
        // Exact up to the rounding accumulated across the composite rule.
        let flux = compute_flux(&shear_axis(257)).unwrap();
        assert!((flux.p0 + 1.5).abs() < 5e-12, "p0 = {}", flux.p0);
    }

    #[test]
    fn flux_of_airy_column_matches_closed_form() {
        let flux = compute_flux(&airy_axis(0.01, 257)).unwrap();
        let expect = airy_flux(0.01);
        assert!(
            (flux.p0 - expect).abs() < 1e-9,
            "p0 = {} vs {}",
            flux.p0,
            expect
        );
        assert!(flux.quad_error < 1e-8);
    }

    #[test]
    fn flux_requires_enough_samples() {
        let ys: Vec<f64> = (0..7).map(|j| -1.0 + j as f64 / 6.0).collect();
        let axis =
            AxisData::new(0.0, 1.0, G, 6.0, None, ys, vec![-1.0; 7], Provenance::Measured).unwrap();
        assert!(matches!(compute_flux(&axis), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn psi_satisfies_endpoint_identities() {
        let axis = shear_axis(257);
        let psi = psi_on_axis(&axis, -1.5).unwrap();
        // ψ(-d) = -p0 = 3/2, ψ(η) = 0, and in between
        // ψ(y) = 3/2 + ∫_{-1}^y (s-1) ds = y²/2 - y.
        assert!((psi.eval(-1.0) - 1.5).abs() < 1e-10);
        assert!(psi.eval(0.0).abs() < 1e-12);
        assert!((psi.eval(-0.5) - (0.125 + 0.5)).abs() < 1e-10);
    }

    #[test]
    fn psi_rejects_inconsistent_flux() {
        let axis = still_axis(33);
        assert!(matches!(
            psi_on_axis(&axis, -0.9),
            Err(Error::InconsistentData(_))
        ));
    }

    #[test]
    fn a0_of_uniform_stream_is_linear() {
        let a0 = compute_a0(&still_axis(33), -1.0, 32, false).unwrap();
        for j in 0..=10 {
            let p = -1.0 + j as f64 / 10.0;
            assert!((a0.eval(p) - (p + 1.0)).abs() < 1e-12, "a0({p})");
        }
    }

    #[test]
    fn a0_of_linear_shear_matches_closed_form() {
        let a0 = compute_a0(&shear_axis(257), -1.5, 32, false).unwrap();
        for j in 0..=10 {
            let p = -1.5 + 1.5 * j as f64 / 10.0;
            let expect = 2.0 - (1.0 - 2.0 * p).sqrt();
            assert!((a0.eval(p) - expect).abs() < 1e-10, "a0({p})");
        }
    }

    #[test]
    fn a2_vanishes_for_laminar_columns() {
        // Still water, irrotational.
        let a0 = compute_a0(&still_axis(33), -1.0, 32, false).unwrap();
        let gamma0 = FuncP::constant(-1.0, 0.0, Provenance::Analytic).unwrap();
        assert!(coeff_a2(&a0, &gamma0).unwrap().sup_norm() < 1e-12);
        // Linear shear with its own vorticity γ ≡ 1: the two halves of a2
        // cancel in closed form.
        let a0 = compute_a0(&shear_axis(257), -1.5, 32, false).unwrap();
        let gamma1 = FuncP::constant(-1.5, 1.0, Provenance::Analytic).unwrap();
        assert!(coeff_a2(&a0, &gamma1).unwrap().sup_norm() < 1e-8);
    }

    #[test]
    fn recursion_routes_agree_on_synthetic_cauchy_data() {
        // Linear a0 = 1.1 (p+1), quadratic γ on [-1, 0]: not a wave, just
        // smooth admissible Cauchy data. With a0 linear, 1/(a0')² is constant
        // and every recursion step is an exact polynomial product, so the two
        // engines must agree to rounding.
        let a0 = FuncP::<f64>::from_power_coeffs(-1.0, &[1.1, 1.1]).unwrap();
        let gamma = FuncP::from_power_coeffs(-1.0, &[0.3, 0.2, 0.15]).unwrap();
        let zero = FuncP::constant(-1.0, 0.0, Provenance::Analytic).unwrap();

        let mut even = vec![a0.clone(), coeff_a2(&a0, &gamma).unwrap()];
        for _ in 1..4 {
            let next = coeff_next(&even, &gamma).unwrap();
            even.push(next);
        }
        let march = taylor_march(&a0, &zero, &gamma, 8).unwrap();

        for n in 1..=4 {
            let scale = even[n].sup_norm().max(1.0);
            let diff = even[n].add(&march[2 * n].scale(-1.0)).unwrap().sup_norm();
            assert!(diff / scale < 1e-12, "order {n}: rel diff {}", diff / scale);
        }
        for m in [1, 3, 5, 7] {
            assert_eq!(march[m].sup_norm(), 0.0, "odd order {m} must vanish exactly");
        }

        // Curved a0 = (p+1) + 0.05 (p+1)²: 1/(a0')² is now a genuine series,
        // so agreement is limited by the collocated reciprocal rather than by
        // rounding. The routes still track each other far below any use of
        // the coefficients.
        let a0 = FuncP::<f64>::from_power_coeffs(-1.0, &[1.05, 1.1, 0.05]).unwrap();
        let gamma = FuncP::from_power_coeffs(-1.0, &[0.3, 0.2]).unwrap();
        let mut even = vec![a0.clone(), coeff_a2(&a0, &gamma).unwrap()];
        for _ in 1..4 {
            let next = coeff_next(&even, &gamma).unwrap();
            even.push(next);
        }
        let march = taylor_march(&a0, &zero, &gamma, 8).unwrap();
        for n in 1..=4 {
            let scale = even[n].sup_norm().max(1.0);
            let diff = even[n].add(&march[2 * n].scale(-1.0)).unwrap().sup_norm();
            assert!(diff / scale < 1e-8, "order {n}: rel diff {}", diff / scale);
        }
    }

    #[test]
    fn radius_of_geometric_table_is_two() {
        let est = estimate_radius(&geometric_table(16), 0.5).unwrap();
        assert!(!est.entire);
        assert!((est.radius - 2.0).abs() < 1e-12, "radius {}", est.radius);
        assert!((est.q_trust - 1.0).abs() < 1e-12);
        assert_eq!(est.per_order.len(), 16);
    }

    #[test]
    fn radius_flags_polynomial_tables_as_entire() {
        let mut table = geometric_table(8);
        for f in table.orders.iter_mut().skip(1) {
            *f = FuncP::constant(-1.0, 0.0, Provenance::Analytic).unwrap();
        }
        let est = estimate_radius(&table, 0.5).unwrap();
        assert!(est.entire);
        assert!(est.radius.is_infinite() && est.q_trust.is_infinite());
    }

    #[test]
    fn radius_rejects_bad_configuration() {
        let table = geometric_table(16);
        assert!(matches!(estimate_radius(&table, 0.0), Err(Error::Config(_))));
        assert!(matches!(estimate_radius(&table, 1.0), Err(Error::Config(_))));
        let short = geometric_table(2);
        assert!(matches!(estimate_radius(&short, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn sum_of_geometric_table_matches_closed_form() {
        let table = geometric_table(16);
        let est = estimate_radius(&table, 0.5).unwrap();
        // Closed form Σ (q²/4)^n = 1/(1 - q²/4); q = 1 sits exactly on the
        // trusted boundary and must be accepted.
        let ev = sum_series(&table, &est, 1.0, -0.5, false).unwrap();
        assert!((ev.h - 4.0 / 3.0).abs() <= ev.tail + 1e-15, "h = {}", ev.h);
        assert!((ev.h_q - 8.0 / 9.0).abs() < 1e-7, "h_q = {}", ev.h_q);
        assert_eq!(ev.h_p, 0.0);
        assert!(!ev.diverging);
        assert!(ev.tail_ratio < 1e-8);
    }

    #[test]
    fn sum_refuses_outside_trusted_disk() {
        let table = geometric_table(16);
        let est = estimate_radius(&table, 0.5).unwrap();
        match sum_series(&table, &est, 1.25, -0.5, false) {
            Err(Error::OutOfTrustedDisk { q, q_trust }) => {
                assert!((q - 1.25).abs() < 1e-15);
                assert!((q_trust - 1.0).abs() < 1e-12);
            }
            other => panic!("expected disk refusal, got {other:?}"),
        }
        assert!(sum_series(&table, &est, 1.25, -0.5, true).is_ok());
    }

    #[test]
    fn sum_refuses_large_tails_unless_forced() {
        // Truncating the same geometric series at order 8 leaves a relative
        // tail ≈ 1e-5 at q = 1.
        let table = geometric_table(8);
        let est = estimate_radius(&table, 0.9).unwrap();
        match sum_series(&table, &est, 1.0, -0.5, false) {
            Err(Error::SeriesTailTooLarge { indicator, limit, .. }) => {
                assert!(indicator > 1e-6 && indicator < 1e-4);
                assert_eq!(limit, TAIL_LIMIT);
            }
            other => panic!("expected tail refusal, got {other:?}"),
        }
        let ev = sum_series(&table, &est, 1.0, -0.5, true).unwrap();
        assert!(ev.tail_ratio > 1e-6);
    }

    #[test]
    fn sum_flags_divergence_outside_the_radius() {
        // Σ 2^n q^{2n} has radius 1/√2; at q = 1 the terms grow.
        let orders: Vec<FuncP<f64>> = (0..=8)
            .map(|i| FuncP::constant(-1.0, 2.0_f64.powi(i as i32), Provenance::Analytic).unwrap())
            .collect();
        let table = CoeffTable {
            p0: -1.0,
            orders,
            gamma: FuncP::constant(-1.0, 0.0, Provenance::Analytic).unwrap(),
            symmetric: true,
            q_center: 0.0,
        };
        let est = estimate_radius(&table, 0.5).unwrap();
        assert!(matches!(
            sum_series(&table, &est, 1.0, -0.5, false),
            Err(Error::OutOfTrustedDisk { .. })
        ));
        let ev = sum_series(&table, &est, 1.0, -0.5, true).unwrap();
        assert!(ev.diverging);
    }

    #[test]
    fn sum_checks_the_p_domain_even_when_forced() {
        let table = geometric_table(8);
        let est = estimate_radius(&table, 0.5).unwrap();
        assert!(matches!(
            sum_series(&table, &est, 0.0, 0.1, true),
            Err(Error::InvalidInput(_))
        ));
        assert!(matches!(
            sum_series(&table, &est, 0.0, -1.1, true),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn chop_degree_finds_the_noise_plateau() {
        let mut c = vec![0.0_f64; 33];
        for (j, v) in c.iter_mut().enumerate() {
            *v = if j <= 10 { 2.0_f64.powi(-(j as i32)) } else { 1e-13 };
        }
        assert_eq!(chop_degree(&c), 10);
        assert_eq!(chop_degree(&[0.0; 8]), 0);
        // A sequence that converges all the way to roundoff keeps every
        // coefficient above ~10× the plateau floor (here: 4^-21 ≈ 2e-13
        // against a 1e-14 floor from cmax).
        let conv: Vec<f64> = (0..33)
            .map(|j| if j <= 25 { 4.0_f64.powi(-(j as i32)) } else { 1e-16 })
            .collect();
        assert_eq!(chop_degree(&conv), 21);
    }

    #[test]
    fn recover_collapses_still_water() {
        let rec = recover_wave(&still_axis(257), &RecoverOptions::default()).unwrap();
        assert!(!rec.partial);
        assert!(rec.radius.entire);
        assert!((rec.p0 + 1.0).abs() < 1e-12);
        assert!((rec.q_const - (1.0 + 2.0 * G)).abs() < 1e-9);
        assert_eq!(rec.table.orders[1].sup_norm(), 0.0);
        let eta_max = rec.profile_eta.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        assert!(eta_max < 1e-7, "eta_max = {eta_max:.3e}");
        // Still water seen from c = 1 is at rest: u ≡ 0.
        let u_err = rec.flow.u.iter().fold(0.0_f64, |m, u| m.max(u.abs()));
        assert!(u_err < 1e-6, "u_err = {u_err:.3e}");
    }

    #[test]
    fn recover_collapses_linear_shear() {
        let mut opts = RecoverOptions::default();
        opts.gamma = GammaModel::PowerCoeffs(vec![1.0]);
        let rec = recover_wave(&shear_axis(257), &opts).unwrap();
        assert!(rec.radius.entire, "recursion must die on laminar data");
        let eta_max = rec.profile_eta.iter().fold(0.0_f64, |m, e| m.max(e.abs()));
        assert!(eta_max < 1e-7, "eta_max = {eta_max:.3e}");
        // Axis velocity straight from the recovered Cauchy data.
        let a0 = &rec.table.orders[0];
        let a0p = a0.differentiate();
        for j in 0..=20 {
            let p = rec.p0 - rec.p0 * j as f64 / 20.0;
            let y = a0.eval(p) - 1.0;
            let u = 2.0 - 1.0 / a0p.eval(p);
            assert!((u - (y + 1.0)).abs() < 1e-6, "u({y}) = {u}");
        }
    }

    #[test]
    fn recover_round_trips_a_small_wave() {
        let axis = airy_axis(0.01, 257);
        let mut opts = RecoverOptions::default();
        opts.theta = 0.6;
        let rec = recover_wave(&axis, &opts).unwrap();
        assert!(!rec.partial, "θ = 0.6 must cover the half-period");
        let mut err = 0.0_f64;
        for (q, eta) in rec.profile_q.iter().zip(&rec.profile_eta) {
            err = err.max((eta - 0.01 * q.cos()).abs());
        }
        assert!(err < 1.0e-3, "profile error {err:.3e}");
        assert!((rec.p0 - airy_flux(0.01)).abs() < 1e-8);
    }

    #[test]
    fn recover_reports_partial_windows() {
        let axis = airy_axis(0.01, 257);
        let rec = recover_wave(&axis, &RecoverOptions::default()).unwrap();
        // θ = 0.5 leaves the trusted disk short of the half-period π.
        assert!(rec.partial);
        assert!(rec.window.1 < std::f64::consts::PI && rec.window.1 > 2.0);
        assert!(!rec.flow.periodic);
        let last = *rec.profile_q.last().unwrap();
        assert!((last - rec.window.1).abs() < 1e-12);
        assert!(rec.notes.iter().any(|n| n.contains("trusted window")));
    }

    #[test]
    fn gamma_models_check_their_coverage() {
        let samples = GammaModel::Samples {
            ps: vec![-0.5, -0.25, 0.0],
            vals: vec![1.0, 1.0, 1.0],
        };
        assert!(matches!(samples.build(-1.5), Err(Error::InvalidInput(_))));
        let f = FuncP::<f64>::constant(-1.0, 1.0, Provenance::Analytic).unwrap();
        assert!(matches!(
            GammaModel::Func(f.clone()).build(-1.5),
            Err(Error::InvalidInput(_))
        ));
        // Within 5% the function is re-collocated instead.
        let g = GammaModel::Func(f).build(-1.02).unwrap();
        assert!((g.eval(-0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn recenter_restarts_the_expansion_off_axis() {
        let axis = airy_axis(0.01, 257);
        let mut opts = RecoverOptions::default();
        opts.theta = 0.6;
        let rec = recover_wave(&axis, &opts).unwrap();
        let moved = recenter_table(&rec.table, 1.0, 8, 16).unwrap();
        assert!(!moved.symmetric);
        assert_eq!(moved.q_center, 1.0);
        // Near the new center both expansions describe the same height.
        let est_old = &rec.radius;
        let est_new = estimate_radius(&moved, 0.5).unwrap();
        for q in [0.8, 1.0, 1.2] {
            let h_old = sum_series(&rec.table, est_old, q, -0.3, true).unwrap().h;
            let h_new = sum_series(&moved, &est_new, q, -0.3, true).unwrap().h;
            assert!(
                (h_old - h_new).abs() < 1e-4,
                "q = {q}: {h_old} vs {h_new}"
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        /// Doubling every velocity sample doubles the flux bitwise: the
        /// quadrature is exactly linear and scaling by 2 commutes with
        /// every rounding step.
        #[test]
        fn flux_scales_exactly_by_two(raw in proptest::collection::vec(0.1_f64..2.0, 33)) {
            let n = raw.len();
            let ys: Vec<f64> = (0..n).map(|j| -1.0 + j as f64 / (n - 1) as f64).collect();
            let ws: Vec<f64> = raw.iter().map(|r| -r).collect();
            let ws2: Vec<f64> = ws.iter().map(|w| 2.0 * w).collect();
            let a1 = AxisData::new(0.0, 1.0, G, 6.0, None, ys.clone(), ws, Provenance::Measured).unwrap();
            let a2 = AxisData::new(0.0, 1.0, G, 6.0, None, ys, ws2, Provenance::Measured).unwrap();
            let f1 = compute_flux(&a1).unwrap();
            let f2 = compute_flux(&a2).unwrap();
            prop_assert_eq!(f2.p0, 2.0 * f1.p0);
            prop_assert_eq!(f2.quad_error, 2.0 * f1.quad_error);
        }

        /// For any smooth monotone column the recovered a0 hits both of its
        /// endpoint identities: a0(p0) = 0 (exactly, by construction) and
        /// a0(0) = d + η within the advertised consistency tolerance.
        #[test]
        fn a0_endpoints_hold_for_smooth_columns(a in 0.0_f64..0.3, b in 0.0_f64..0.3) {
            let n = 65;
            let ys: Vec<f64> = (0..n).map(|j| -1.0 + j as f64 / (n - 1) as f64).collect();
            let ws: Vec<f64> = ys
                .iter()
                .map(|y| -(0.5 + a * (y + 1.0) + b * (y + 1.0) * (y + 1.0)))
                .collect();
            let axis = AxisData::new(0.0, 1.0, G, 6.0, None, ys, ws, Provenance::Analytic).unwrap();
            let flux = compute_flux(&axis).unwrap();
            let a0 = compute_a0(&axis, flux.p0, 32, false).unwrap();
            prop_assert!(a0.eval(flux.p0).abs() < 1e-13);
            prop_assert!((a0.eval(0.0) - 1.0).abs() < 1e-8);
            prop_assert!(min_on_grid(&a0.differentiate()) > 0.0);
        }

        /// The general march agrees with the even recursion and keeps the
        /// odd orders at exactly zero, for random admissible Cauchy data
        /// (linear a0, so both engines run in exact polynomial arithmetic).
        #[test]
        fn march_matches_recursion_for_random_data(
            beta in 0.5_f64..1.5,
            g0 in -0.5_f64..0.5,
            g2 in -0.5_f64..0.5,
        ) {
            let a0 = FuncP::from_power_coeffs(-1.0, &[beta, beta]).unwrap();
            let gamma = FuncP::from_power_coeffs(-1.0, &[g0, -0.2, g2]).unwrap();
            let zero = FuncP::constant(-1.0, 0.0, Provenance::Analytic).unwrap();
            let mut even = vec![a0.clone(), coeff_a2(&a0, &gamma).unwrap()];
            for _ in 1..3 {
                let next = coeff_next(&even, &gamma).unwrap();
                even.push(next);
            }
            let march = taylor_march(&a0, &zero, &gamma, 6).unwrap();
            for n in 1..=3 {
                let scale = even[n].sup_norm().max(1.0);
                let diff = even[n].add(&march[2 * n].scale(-1.0)).unwrap().sup_norm();
                prop_assert!(diff / scale < 1e-12, "order {}: {}", n, diff / scale);
            }
            for m in [1, 3, 5] {
                prop_assert_eq!(march[m].sup_norm(), 0.0);
            }
        }
    }
}
