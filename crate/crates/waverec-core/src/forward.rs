//! Forward solvers: flows whose axis data is known exactly or to a
//! controlled order, used to fabricate ground truth for the recovery
//! pipeline, plus the nonlinear height-equation solver for genuinely
//! nonlinear test waves.
//!
//! Three families are provided:
//!
//! * [`laminar_flow`] — parallel shear flows `u = U(y)`, flat surface.
//!   Their axis data is exact, and recovery must collapse them back to a
//!   flat profile.
//! * [`linear_wave`] — small-amplitude irrotational waves (first-order
//!   wave theory). Exact to `O(eps^2)`, which makes them a sharp probe of
//!   the recovery's error scaling.
//! * [`solve_height_equation`] — a damped Newton iteration for the full
//!   quasilinear height equation at fixed Bernoulli head `Q`, with an
//!   amplitude-pinned variant ([`solve_height_equation_pinned`]) that
//!   frees `Q` and prescribes the crest-to-trough half-height instead
//!   (the building block of amplitude continuation).
//!
//! [`flow_from_height`] maps a height function back to physical velocity
//! and pressure fields; [`extract_axis_data`] samples a flow on a vertical
//! line, producing the measurement-shaped input of the recovery pipeline;
//! [`gamma_from_flow`] infers the vorticity function of a flow field.

use crate::error::{Error, Result};
use crate::funcrep::{Cheb, FuncP, Provenance};
use crate::linalg::Banded;
use crate::recover::{AxisData, AxisFlag};
use crate::scalar::Real;

/// A steady velocity/pressure field on a terrain-following grid.
///
/// Columns sit at the `x`-locations `xs`; each column `i` carries
/// `ny + 1` rows from the bed `y = -d` up to the surface `y = eta[i]`,
/// with the row ordinates stored explicitly in `ys` (row-major by column,
/// ascending within a column, not necessarily uniform).
#[derive(Debug, Clone)]
pub struct FlowField<T> {
    /// Wave speed (frame speed of the steady motion).
    pub c: T,
    /// Mean depth.
    pub d: T,
    /// Gravitational acceleration.
    pub g: T,
    /// Wavelength.
    pub lambda: T,
    /// Constant surface (atmospheric) pressure.
    pub p_atm: T,
    /// Bernoulli head `|∇ψ|² + 2g(y + d)` evaluated at the surface.
    pub q_const: T,
    /// Column locations (length `nx`); when `periodic`, these cover one
    /// period `[x_first, x_first + λ)` without the duplicate endpoint.
    pub xs: Vec<T>,
    /// Surface elevation per column.
    pub eta: Vec<T>,
    /// Rows per column is `ny + 1`.
    pub ny: usize,
    /// Row ordinates, `ys[i*(ny+1) + j]`, ascending in `j`.
    pub ys: Vec<T>,
    /// Horizontal velocity `u`, same layout as `ys`.
    pub u: Vec<T>,
    /// Vertical velocity `v`, same layout.
    pub v: Vec<T>,
    /// Pressure `P`, same layout.
    pub p: Vec<T>,
    /// Whether the columns tile a full period.
    pub periodic: bool,
    /// Vorticity function `γ(p)` when known.
    pub gamma: Option<FuncP<T>>,
}

impl<T: Real> FlowField<T> {
    /// Flattened index of column `i`, row `j`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.xs.len()
    }
}

/// A height function `h(q, p)` on `[q-range] × [p0, 0]`.
///
/// `h(q, p)` is the elevation above the bed of the streamline `ψ = -p`
/// at horizontal position `q`; the bed is `h = 0` at `p = p0` and the
/// surface is `h(q, 0) = d + η(q)`.
#[derive(Debug, Clone)]
pub struct HeightField<T> {
    /// Relative mass flux (negative).
    pub p0: T,
    /// Wavelength.
    pub lambda: T,
    /// Gravitational acceleration.
    pub g: T,
    /// Bernoulli head.
    pub q_const: T,
    /// Column coordinates (length `nq`); when `periodic`, one period
    /// without the duplicate endpoint.
    pub qs: Vec<T>,
    /// Row coordinates from `p0` to `0`, length `np + 1`, ascending.
    pub ps: Vec<T>,
    /// Heights, `h[i*(np+1) + j]` for column `i`, row `j`.
    pub h: Vec<T>,
    /// Whether the columns tile a full period.
    pub periodic: bool,
    /// Vorticity function.
    pub gamma: FuncP<T>,
}

impl<T: Real> HeightField<T> {
    /// Flattened index of column `i`, row `j`.
    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * (self.ps.len()) + j
    }

    /// Number of columns.
    pub fn ncols(&self) -> usize {
        self.qs.len()
    }

    /// Number of row intervals (`np`).
    pub fn nrows(&self) -> usize {
        self.ps.len() - 1
    }

    /// Surface elevation `η(q_i) = h(q_i, 0) - d` for the given mean depth.
    pub fn eta_at(&self, i: usize, d: T) -> T {
        let np = self.nrows();
        self.h[self.idx(i, np)] - d
    }

    /// Mean depth implied by the zero-mean-η convention: the average of
    /// the surface row over the period.
    pub fn mean_depth(&self) -> T {
        let np = self.nrows();
        let n = self.ncols();
        let mut s = T::zero();
        for i in 0..n {
            s = s + self.h[self.idx(i, np)];
        }
        s / T::of_usize(n)
    }

    /// Even reflection through column 0: `h[i] <- (h[i] + h[n-i])/2`.
    ///
    /// Newton iterations preserve evenness exactly once the iterate is
    /// even, but amplitude continuation can drift sideways along the
    /// translation mode; projecting between stages keeps the crest pinned
    /// at `q = 0`.
    pub fn symmetrize(&mut self) {
        let n = self.ncols();
        let rows = self.ps.len();
        let half = T::lit(0.5);
        let old = self.h.clone();
        for i in 0..n {
            let m = (n - i) % n;
            for j in 0..rows {
                self.h[i * rows + j] = (old[i * rows + j] + old[m * rows + j]) * half;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Laminar flows
// ---------------------------------------------------------------------------

/// Builds the parallel shear flow `u = U(y)`, `v = 0`, flat surface, on a
/// `nx`-column periodic grid with `ny + 1` rows per column.
///
/// Fails with an admissibility error if `U(y) >= c` anywhere on the grid:
/// such a flow has stagnation points relative to the wave frame and falls
/// outside the recoverable class.
pub fn laminar_flow<T: Real>(
    u_of_y: impl Fn(T) -> T,
    c: T,
    d: T,
    lambda: T,
    g: T,
    ny: usize,
) -> Result<FlowField<T>> {
    if !(d > T::zero()) || !(lambda > T::zero()) || !(g > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "laminar_flow: need d, lambda, g > 0 (got d = {}, lambda = {}, g = {})",
            d.widen(),
            lambda.widen(),
            g.widen()
        )));
    }
    if ny < 4 {
        return Err(Error::Config("laminar_flow: need at least 4 rows".into()));
    }
    let nx = 16usize; // the field is x-independent; a few columns suffice
    let mut ys = Vec::with_capacity(nx * (ny + 1));
    let mut u = Vec::with_capacity(nx * (ny + 1));
    let mut v = Vec::with_capacity(nx * (ny + 1));
    let mut p = Vec::with_capacity(nx * (ny + 1));

    let col_y: Vec<T> = (0..=ny)
        .map(|j| -d + d * T::of_usize(j) / T::of_usize(ny))
        .collect();
    let col_u: Vec<T> = col_y.iter().map(|&y| u_of_y(y)).collect();
    if col_u.iter().any(|q| !q.is_finite()) {
        return Err(Error::InvalidInput(
            "laminar_flow: U(y) evaluates to a non-finite value".into(),
        ));
    }
    let umax = col_u.iter().copied().fold(T::neg_infinity(), T::max);
    if umax >= c {
        return Err(Error::Admissibility(format!(
            "laminar_flow: U reaches {} >= c = {} (stagnation in the wave frame)",
            umax.widen(),
            c.widen()
        )));
    }

    for _ in 0..nx {
        for j in 0..=ny {
            let y = col_y[j];
            ys.push(y);
            u.push(col_u[j]);
            v.push(T::zero());
            p.push(-g * y); // hydrostatic with P_atm = 0 at y = 0
        }
    }
    let xs: Vec<T> = (0..nx)
        .map(|i| lambda * T::of_usize(i) / T::of_usize(nx))
        .collect();

    // Vorticity function: γ(p(y)) = U'(y), with p(y) = p0 - ∫_{-d}^{y}(U-c).
    // Both U' and the streamline map come from a collocation fit of U.
    let ufit = Cheb::from_fn(-d, T::zero(), 24.min(ny), &u_of_y);
    let dudy = ufit.deriv();
    let wrel = ufit.add(&Cheb::constant(-d, T::zero(), -c));
    let psi_rel = wrel.antideriv(-d); // ∫_{-d}^y (U - c)
    let p0 = psi_rel.eval(T::zero());
    // Sample (p(y), U'(y)) and fit γ over [p0, 0].
    let m = 48usize;
    let mut pps = Vec::with_capacity(m + 1);
    let mut oms = Vec::with_capacity(m + 1);
    for k in 0..=m {
        let y = -d + d * T::of_usize(k) / T::of_usize(m);
        pps.push(p0 - psi_rel.eval(y));
        oms.push(dudy.eval(y));
    }
    let gamma = FuncP::fit(&pps, &oms, p0, 16, Provenance::Derived)?;

    let u_surf = u_of_y(T::zero());
    let q_const = (u_surf - c) * (u_surf - c) + (g + g) * d;

    Ok(FlowField {
        c,
        d,
        g,
        lambda,
        p_atm: T::zero(),
        q_const,
        xs,
        eta: vec![T::zero(); nx],
        ny,
        ys,
        u,
        v,
        p,
        periodic: true,
        gamma: Some(gamma),
    })
}

// ---------------------------------------------------------------------------
// Linear (small-amplitude) waves
// ---------------------------------------------------------------------------

/// First-order irrotational wave of surface amplitude `eps`, wavelength
/// `lambda`, mean depth `d`: `η = eps·cos(kx)` with the classical
/// dispersion speed `c = sqrt(g tanh(kd)/k)`. Exact to `O(eps²)`.
///
/// `eps = 0` produces still water (valid); `eps < 0` is rejected.
pub fn linear_wave<T: Real>(
    eps: T,
    lambda: T,
    d: T,
    g: T,
    nx: usize,
    ny: usize,
) -> Result<FlowField<T>> {
    if eps < T::zero() || !eps.is_finite() {
        return Err(Error::InvalidInput(format!(
            "linear_wave: amplitude must be >= 0 (got {})",
            eps.widen()
        )));
    }
    if !(d > T::zero()) || !(lambda > T::zero()) || !(g > T::zero()) {
        return Err(Error::InvalidInput(
            "linear_wave: need d, lambda, g > 0".into(),
        ));
    }
    if nx < 8 || ny < 4 {
        return Err(Error::Config(
            "linear_wave: need at least 8 columns and 4 rows".into(),
        ));
    }
    let k = T::lit(2.0) * T::PI() / lambda;
    let c = (g * (k * d).tanh() / k).sqrt();
    let sinh_kd = (k * d).sinh();
    let cosh_kd = (k * d).cosh();

    let mut xs = Vec::with_capacity(nx);
    let mut eta = Vec::with_capacity(nx);
    let mut ys = Vec::with_capacity(nx * (ny + 1));
    let mut u = Vec::with_capacity(nx * (ny + 1));
    let mut v = Vec::with_capacity(nx * (ny + 1));
    let mut p = Vec::with_capacity(nx * (ny + 1));

    for i in 0..nx {
        let x = lambda * T::of_usize(i) / T::of_usize(nx);
        xs.push(x);
        let cs = (k * x).cos();
        let sn = (k * x).sin();
        let e = eps * cs;
        eta.push(e);
        for j in 0..=ny {
            let y = -d + (e + d) * T::of_usize(j) / T::of_usize(ny);
            let ch = (k * (y + d)).cosh();
            let sh = (k * (y + d)).sinh();
            ys.push(y);
            u.push(eps * c * k * ch / sinh_kd * cs);
            v.push(eps * c * k * sh / sinh_kd * sn);
            p.push(-g * y + eps * g * ch / cosh_kd * cs);
        }
    }

    // Admissibility: the frame-relative speed must stay negative.
    let umax = u.iter().fold(T::neg_infinity(), |m, &x| m.max(x));
    if umax >= c {
        return Err(Error::Admissibility(format!(
            "linear_wave: amplitude {} too large, u reaches the wave speed",
            eps.widen()
        )));
    }

    // Bernoulli head from the crest surface point (exact for the recovered
    // nonlinear wave this field approximates).
    let u_crest = eps * c * k * (k * (eps + d)).cosh() / sinh_kd;
    let q_const = (u_crest - c) * (u_crest - c) + (g + g) * (eps + d);

    let gamma = FuncP::constant(
        -c * d, // leading-order flux; only the domain matters for γ ≡ 0
        T::zero(),
        Provenance::Analytic,
    )?;

    Ok(FlowField {
        c,
        d,
        g,
        lambda,
        p_atm: T::zero(),
        q_const,
        xs,
        eta,
        ny,
        ys,
        u,
        v,
        p,
        periodic: true,
        gamma: Some(gamma),
    })
}

// ---------------------------------------------------------------------------
// Laminar height functions and the bifurcation head
// ---------------------------------------------------------------------------

/// Integral `Γ(p) = ∫_0^p γ(s) ds` as a series.
fn gamma_integral<T: Real>(gamma: &FuncP<T>) -> Cheb<T> {
    gamma.series().antideriv(T::zero())
}

/// Evaluates the flat-flow depth `H(0; s) = ∫_{p0}^0 (s - 2Γ(p))^{-1/2} dp`
/// and the corresponding laminar height profile for a trial head parameter
/// `s` (which must exceed `2 max Γ`).
fn laminar_profile<T: Real>(gamma: &FuncP<T>, p0: T, s: T, np: usize) -> Option<(Vec<T>, T)> {
    let big_gamma = gamma_integral(gamma);
    // W(p) = (s - 2Γ)^{-1/2} must stay real: check the margin on a scan.
    let mut wmin = T::infinity();
    for i in 0..=64 {
        let p = p0 - p0 * T::of_usize(i) / T::of_usize(64);
        let arg = s - T::lit(2.0) * big_gamma.eval(p);
        if arg <= T::zero() {
            return None;
        }
        wmin = wmin.min(arg);
    }
    // H by the antiderivative of the collocated W.
    let w = Cheb::from_fn(p0, T::zero(), 32, |p| {
        (s - T::lit(2.0) * big_gamma.eval(p)).sqrt().recip()
    });
    let h_series = w.antideriv(p0);
    let depth = h_series.eval(T::zero());
    let hs: Vec<T> = (0..=np)
        .map(|j| {
            let p = p0 - p0 * T::of_usize(j) / T::of_usize(np);
            h_series.eval(p)
        })
        .collect();
    Some((hs, depth))
}

/// The laminar (flat-surface) height field for a given vorticity, head `Q`
/// and flux `p0`, on an `nq × (np+1)` periodic grid.
///
/// Solves `F(s) = s + 2g·H(0; s) - Q = 0` for the head parameter `s`,
/// taking the subcritical root (the smaller `s`, larger depth — the branch
/// waves bifurcate from). Fails with [`Error::Nonconvergence`] when no
/// laminar flow exists at this head (`Q` below the minimum).
pub fn laminar_height<T: Real>(
    gamma: &FuncP<T>,
    q_const: T,
    p0: T,
    lambda: T,
    g: T,
    nq: usize,
    np: usize,
) -> Result<HeightField<T>> {
    let big_gamma = gamma_integral(gamma);
    let mut gmax = T::zero();
    for i in 0..=128 {
        let p = p0 - p0 * T::of_usize(i) / T::of_usize(128);
        gmax = gmax.max(big_gamma.eval(p));
    }
    let s_floor = T::lit(2.0) * gmax + T::lit(1e-9) * (T::one() + gmax.abs());
    let f = |s: T| laminar_profile(gamma, p0, s, 8).map(|(_, depth)| s + (g + g) * depth - q_const);

    // Scan upward from the floor for a sign change of F. Any root has
    // s = Q - 2gH < Q, so [s_floor, Q] brackets everything; F -> +inf at
    // the floor, so the first sign change is the smaller (subcritical)
    // root — the branch waves bifurcate from.
    let s_hi = q_const;
    if s_hi <= s_floor {
        return Err(Error::Nonconvergence {
            context: format!(
                "no laminar flow at head Q = {}: it lies below the vorticity floor 2·max Γ",
                q_const.widen()
            ),
            residual: f64::NAN,
        });
    }
    let nscan = 400usize;
    let mut prev: Option<(T, T)> = None;
    let mut bracket = None;
    for i in 0..=nscan {
        let s = s_floor + (s_hi - s_floor) * T::of_usize(i) / T::of_usize(nscan);
        if let Some(fs) = f(s) {
            if let Some((sp, fp)) = prev {
                if fp > T::zero() && fs <= T::zero() {
                    bracket = Some((sp, s));
                    break;
                }
            }
            prev = Some((s, fs));
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::Nonconvergence {
        context: format!(
            "no laminar flow at head Q = {}: it lies below the minimum admissible head",
            q_const.widen()
        ),
        residual: prev.map(|(_, fp)| fp.widen().abs()).unwrap_or(f64::NAN),
    })?;
    // F changes sign from + to - across [lo, hi]; bisect to the root.
    for _ in 0..200 {
        let mid = (lo + hi) * T::lit(0.5);
        match f(mid) {
            Some(fm) if fm > T::zero() => lo = mid,
            Some(_) => hi = mid,
            None => lo = mid,
        }
        if (hi - lo).abs() <= T::lit(1e-15) * (T::one() + hi.abs()) {
            break;
        }
    }
    let s = (lo + hi) * T::lit(0.5);
    let (col, _depth) = laminar_profile(gamma, p0, s, np).ok_or_else(|| Error::Numerical(
        "laminar_height: root left the admissible range during refinement".into(),
    ))?;

    let qs: Vec<T> = (0..nq)
        .map(|i| lambda * T::of_usize(i) / T::of_usize(nq))
        .collect();
    let ps: Vec<T> = (0..=np)
        .map(|j| p0 - p0 * T::of_usize(j) / T::of_usize(np))
        .collect();
    let mut h = Vec::with_capacity(nq * (np + 1));
    for _ in 0..nq {
        h.extend_from_slice(&col);
    }
    Ok(HeightField {
        p0,
        lambda,
        g,
        q_const,
        qs,
        ps,
        h,
        periodic: true,
        gamma: gamma.clone(),
    })
}

/// Computes the bifurcation point of the laminar branch: the head parameter
/// `s*` at which small periodic waves of wavelength `lambda` first appear,
/// and the corresponding Bernoulli head `Q* = s* + 2g·H(0; s*)`.
///
/// `s*` is located by shooting on the linearized problem
/// `φ'' = k²W²φ + 3γW²φ'`, `φ(p0) = 0`, `φ'(p0) = 1`, where
/// `W = (s - 2Γ)^{-1/2}`, root-finding the surface condition
/// `G(s) = g·W(0)·φ(0) - s·φ'(0) = 0` (for `γ = 0` this reduces to the
/// classical dispersion relation `s = g·tanh(k·depth)/k`).
pub fn bifurcation_head<T: Real>(
    gamma: &FuncP<T>,
    p0: T,
    lambda: T,
    g: T,
) -> Result<(T, T)> {
    let k = T::lit(2.0) * T::PI() / lambda;
    let big_gamma = gamma_integral(gamma);
    let mut gmax = T::zero();
    for i in 0..=128 {
        let p = p0 - p0 * T::of_usize(i) / T::of_usize(128);
        gmax = gmax.max(big_gamma.eval(p));
    }
    let s_floor = T::lit(2.0) * gmax + T::lit(1e-8) * (T::one() + gmax.abs());

    // RK4 shoot of the linearized system over [p0, 0].
    let shoot = |s: T| -> (T, T) {
        let n: usize = 400;
        let ddp = -p0 / T::of_usize(n);
        let mut phi = T::zero();
        let mut dphi = T::one();
        let rhs = |p: T, ph: T, dph: T| {
            let w2 = T::one() / (s - T::lit(2.0) * big_gamma.eval(p));
            let gam = gamma.eval(p);
            (dph, k * k * w2 * ph + T::lit(3.0) * gam * w2 * dph)
        };
        let mut p = p0;
        for _ in 0..n {
            let (k1a, k1b) = rhs(p, phi, dphi);
            let h2 = ddp * T::lit(0.5);
            let (k2a, k2b) = rhs(p + h2, phi + h2 * k1a, dphi + h2 * k1b);
            let (k3a, k3b) = rhs(p + h2, phi + h2 * k2a, dphi + h2 * k2b);
            let (k4a, k4b) = rhs(p + ddp, phi + ddp * k3a, dphi + ddp * k3b);
            let six = T::lit(6.0);
            phi = phi + ddp * (k1a + T::lit(2.0) * k2a + T::lit(2.0) * k3a + k4a) / six;
            dphi = dphi + ddp * (k1b + T::lit(2.0) * k2b + T::lit(2.0) * k3b + k4b) / six;
            p = p + ddp;
        }
        (phi, dphi)
    };
    // Surface condition of the linearization: g·W(0)·φ(0) = s·φ'(0) with
    // W(0) = s^{-1/2} (Γ(0) = 0 by the anchor choice).
    let cond = |s: T| {
        let (phi, dphi) = shoot(s);
        g * phi / s.sqrt() - s * dphi
    };

    let s_hi = (g * (-p0)).powf(T::lit(2.0 / 3.0)) * T::lit(8.0) + s_floor + T::lit(50.0);
    let nscan = 600usize;
    let mut prev: Option<(T, T)> = None;
    let mut bracket = None;
    for i in 1..=nscan {
        let s = s_floor + (s_hi - s_floor) * T::of_usize(i) / T::of_usize(nscan);
        let val = cond(s);
        if let Some((sp, vp)) = prev {
            if (vp > T::zero()) != (val > T::zero()) {
                bracket = Some((sp, s));
                break;
            }
        }
        prev = Some((s, val));
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| Error::Nonconvergence {
        context: "bifurcation_head: no sign change of the dispersion condition".into(),
        residual: f64::NAN,
    })?;
    let mut flo = cond(lo);
    for _ in 0..100 {
        let mid = (lo + hi) * T::lit(0.5);
        let fm = cond(mid);
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if (hi - lo).abs() <= T::lit(1e-14) * (T::one() + hi.abs()) {
            break;
        }
    }
    let s_star = (lo + hi) * T::lit(0.5);
    let (_, depth) = laminar_profile(gamma, p0, s_star, 8).ok_or_else(|| {
        Error::Numerical("bifurcation_head: s* left the admissible range".into())
    })?;
    let q_star = s_star + (g + g) * depth;
    Ok((s_star, q_star))
}

// ---------------------------------------------------------------------------
// The height-equation Newton solver
// ---------------------------------------------------------------------------

/// Options for [`solve_height_equation`].
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Maximum Newton iterations.
    pub max_iter: usize,
    /// Absolute sup-norm residual target (scaled internally by
    /// `max(1, |Q|)`).
    pub tol: T,
    /// Maximum step-halvings per line search.
    pub max_backtracks: usize,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            max_iter: 40,
            tol: T::lit(1e-10),
            max_backtracks: 30,
        }
    }
}

/// Convergence record returned alongside a solved height field.
#[derive(Debug, Clone)]
pub struct NewtonReport<T> {
    /// Newton iterations performed.
    pub iterations: usize,
    /// Final residual sup-norm.
    pub residual: T,
    /// Total step-halvings across all line searches.
    pub backtracks: usize,
}

struct StencilGrid<T> {
    nq: usize,
    np: usize,
    dq: T,
    dp: T,
}

/// Residual of the interior height equation and the surface condition.
/// Rows `j = 1..np`; the bed row `j = 0` is the Dirichlet identity `h = 0`
/// and is excluded. Output is indexed `(j - 1) * nq + i`.
fn height_residual<T: Real>(
    gr: &StencilGrid<T>,
    h: &[T],
    gamma_rows: &[T],
    g: T,
    q_const: T,
    out: &mut [T],
) {
    let (nq, np) = (gr.nq, gr.np);
    let (dq, dp) = (gr.dq, gr.dp);
    let rows = np + 1;
    let at = |i: usize, j: usize| h[(i % nq) * rows + j];
    let two = T::lit(2.0);
    for i in 0..nq {
        let ip = (i + 1) % nq;
        let im = (i + nq - 1) % nq;
        for j in 1..np {
            let hq = (at(ip, j) - at(im, j)) / (two * dq);
            let hp = (at(i, j + 1) - at(i, j - 1)) / (two * dp);
            let hqq = (at(ip, j) - two * at(i, j) + at(im, j)) / (dq * dq);
            let hpp = (at(i, j + 1) - two * at(i, j) + at(i, j - 1)) / (dp * dp);
            let hqp = (at(ip, j + 1) - at(ip, j - 1) - at(im, j + 1) + at(im, j - 1))
                / (T::lit(4.0) * dq * dp);
            let gam = gamma_rows[j];
            out[(j - 1) * nq + i] = (T::one() + hq * hq) * hpp - two * hp * hq * hqp
                + hp * hp * hqq
                - gam * hp * hp * hp;
        }
        // Surface row: 1 + h_q² + (2g h - Q) h_p², one-sided h_p.
        let hq = (at(ip, np) - at(im, np)) / (two * dq);
        let hp = (T::lit(3.0) * at(i, np) - T::lit(4.0) * at(i, np - 1) + at(i, np - 2))
            / (two * dp);
        out[(np - 1) * nq + i] =
            T::one() + hq * hq + ((g + g) * at(i, np) - q_const) * hp * hp;
    }
}

/// Assembles the banded Jacobian of [`height_residual`] with respect to the
/// unknown rows `j = 1..=np` (column-major unknown index `(j-1)*nq + i`,
/// bandwidths `kl = ku = 2nq`).
fn height_jacobian<T: Real>(
    gr: &StencilGrid<T>,
    h: &[T],
    gamma_rows: &[T],
    g: T,
    q_const: T,
) -> Banded<T> {
    let (nq, np) = (gr.nq, gr.np);
    let (dq, dp) = (gr.dq, gr.dp);
    let rows = np + 1;
    let n = nq * np;
    let at = |i: usize, j: usize| h[(i % nq) * rows + j];
    let unk = |i: usize, j: usize| (j - 1) * nq + i; // valid for j >= 1
    let mut jac = Banded::new(n, 2 * nq, 2 * nq);
    let two = T::lit(2.0);

    for i in 0..nq {
        let ip = (i + 1) % nq;
        let im = (i + nq - 1) % nq;
        for j in 1..np {
            let r = unk(i, j);
            let hq = (at(ip, j) - at(im, j)) / (two * dq);
            let hp = (at(i, j + 1) - at(i, j - 1)) / (two * dp);
            let hqq = (at(ip, j) - two * at(i, j) + at(im, j)) / (dq * dq);
            let hpp = (at(i, j + 1) - two * at(i, j) + at(i, j - 1)) / (dp * dp);
            let hqp = (at(ip, j + 1) - at(ip, j - 1) - at(im, j + 1) + at(im, j - 1))
                / (T::lit(4.0) * dq * dp);
            let gam = gamma_rows[j];

            let a = T::one() + hq * hq; // coefficient of hpp
            let cc = hp * hp; // coefficient of hqq
            let b = -two * hp * hq; // coefficient of hqp
            let df_dhq = two * hq * hpp - two * hp * hqp;
            let df_dhp = -two * hq * hqp + two * hp * hqq - T::lit(3.0) * gam * hp * hp;

            // d/d h[i±1, j]
            jac.add(r, unk(ip, j), df_dhq / (two * dq) + cc / (dq * dq));
            jac.add(r, unk(im, j), -df_dhq / (two * dq) + cc / (dq * dq));
            // d/d h[i, j±1] (j-1 may be the bed: fixed, skip)
            jac.add(r, unk(i, j + 1), df_dhp / (two * dp) + a / (dp * dp));
            if j >= 2 {
                jac.add(r, unk(i, j - 1), -df_dhp / (two * dp) + a / (dp * dp));
            }
            // d/d h[i, j]
            jac.add(r, unk(i, j), -two * a / (dp * dp) - two * cc / (dq * dq));
            // d/d h[i±1, j±1] through hqp
            let bq = b / (T::lit(4.0) * dq * dp);
            jac.add(r, unk(ip, j + 1), bq);
            jac.add(r, unk(im, j + 1), -bq);
            if j >= 2 {
                jac.add(r, unk(ip, j - 1), -bq);
                jac.add(r, unk(im, j - 1), bq);
            }
        }
        // Surface row.
        let r = unk(i, np);
        let hq = (at(ip, np) - at(im, np)) / (two * dq);
        let hp = (T::lit(3.0) * at(i, np) - T::lit(4.0) * at(i, np - 1) + at(i, np - 2))
            / (two * dp);
        let e = (g + g) * at(i, np) - q_const;
        jac.add(r, unk(ip, np), hq / dq);
        jac.add(r, unk(im, np), -(hq / dq));
        jac.add(
            r,
            unk(i, np),
            (g + g) * hp * hp + e * two * hp * T::lit(3.0) / (two * dp),
        );
        jac.add(r, unk(i, np - 1), -e * two * hp * T::lit(4.0) / (two * dp));
        if np >= 3 {
            // np - 2 == 0 would be the fixed bed row; no Jacobian entry.
            jac.add(r, unk(i, np - 2), e * two * hp / (two * dp));
        }
    }
    jac
}

fn sup<T: Real>(xs: &[T]) -> T {
    xs.iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

/// Checks strict streamline monotonicity (`h` increasing up each column).
fn columns_monotone<T: Real>(h: &[T], nq: usize, np: usize) -> bool {
    let rows = np + 1;
    for i in 0..nq {
        for j in 1..=np {
            if h[i * rows + j] <= h[i * rows + j - 1] {
                return false;
            }
        }
    }
    true
}

fn gamma_rows_of<T: Real>(hf: &HeightField<T>) -> Vec<T> {
    hf.ps.iter().map(|&p| hf.gamma.eval(p)).collect()
}

/// Solves the height equation at the fixed Bernoulli head `init.q_const`
/// by damped Newton iteration from the given initial field.
///
/// The initial field supplies the grid, the vorticity, `Q`, and the
/// starting iterate; the solved field is returned together with a
/// convergence report. Iterates that lose streamline monotonicity
/// (`h_p <= 0`) are rejected by the line search; if no admissible damped
/// step exists the solve fails with [`Error::LeavesAdmissibleSet`], and if
/// the residual stalls above tolerance with [`Error::Nonconvergence`].
pub fn solve_height_equation<T: Real>(
    init: &HeightField<T>,
    opts: &SolveOptions<T>,
) -> Result<(HeightField<T>, NewtonReport<T>)> {
    let nq = init.ncols();
    let np = init.nrows();
    if !init.periodic {
        return Err(Error::Config(
            "solve_height_equation: the solver needs a periodic grid".into(),
        ));
    }
    if nq < 8 || np < 4 {
        return Err(Error::Config(format!(
            "solve_height_equation: grid {nq}×{np} too coarse (need ≥ 8×4)"
        )));
    }
    let gr = StencilGrid {
        nq,
        np,
        dq: init.lambda / T::of_usize(nq),
        dp: -init.p0 / T::of_usize(np),
    };
    let gamma_rows = gamma_rows_of(init);
    let scale = T::one().max(init.q_const.abs());
    let tol = opts.tol * scale;
    let n = nq * np;
    let rows = np + 1;

    let mut hf = init.clone();
    if !columns_monotone(&hf.h, nq, np) {
        return Err(Error::LeavesAdmissibleSet(
            "initial iterate has non-monotone streamlines (h_p <= 0)".into(),
        ));
    }
    let mut f = vec![T::zero(); n];
    height_residual(&gr, &hf.h, &gamma_rows, init.g, init.q_const, &mut f);
    let mut res = sup(&f);
    let mut backtracks_total = 0usize;

    for it in 0..opts.max_iter {
        if res <= tol {
            return Ok((
                hf,
                NewtonReport {
                    iterations: it,
                    residual: res,
                    backtracks: backtracks_total,
                },
            ));
        }
        let jac = height_jacobian(&gr, &hf.h, &gamma_rows, init.g, init.q_const);
        let lu = jac.factor()?;
        let mut step = f.iter().map(|&v| -v).collect::<Vec<_>>();
        lu.solve(&mut step)?;

        // Damped line search with admissibility screening.
        let mut t = T::one();
        let mut accepted = false;
        let mut trial = hf.h.clone();
        let mut ftrial = vec![T::zero(); n];
        for _ in 0..=opts.max_backtracks {
            for i in 0..nq {
                for j in 1..=np {
                    trial[i * rows + j] =
                        hf.h[i * rows + j] + t * step[(j - 1) * nq + i];
                }
            }
            if columns_monotone(&trial, nq, np) {
                height_residual(&gr, &trial, &gamma_rows, init.g, init.q_const, &mut ftrial);
                let rtrial = sup(&ftrial);
                if rtrial < res * (T::one() - T::lit(0.25) * t) || rtrial <= tol {
                    hf.h.copy_from_slice(&trial);
                    f.copy_from_slice(&ftrial);
                    res = rtrial;
                    accepted = true;
                    break;
                }
            }
            t = t * T::lit(0.5);
            backtracks_total += 1;
        }
        if !accepted {
            // Distinguish "cannot stay admissible" from plain stalling.
            let mut any_admissible = false;
            let mut tt = T::one();
            for _ in 0..=opts.max_backtracks {
                for i in 0..nq {
                    for j in 1..=np {
                        trial[i * rows + j] =
                            hf.h[i * rows + j] + tt * step[(j - 1) * nq + i];
                    }
                }
                if columns_monotone(&trial, nq, np) {
                    any_admissible = true;
                    break;
                }
                tt = tt * T::lit(0.5);
            }
            if !any_admissible {
                return Err(Error::LeavesAdmissibleSet(
                    "every damped Newton step loses streamline monotonicity".into(),
                ));
            }
            return Err(Error::Nonconvergence {
                context: "height-equation Newton stalled in the line search".into(),
                residual: res.widen(),
            });
        }
    }
    if res <= tol {
        return Ok((
            hf,
            NewtonReport {
                iterations: opts.max_iter,
                residual: res,
                backtracks: backtracks_total,
            },
        ));
    }
    Err(Error::Nonconvergence {
        context: format!(
            "height-equation Newton did not reach tolerance in {} iterations",
            opts.max_iter
        ),
        residual: res.widen(),
    })
}

/// Amplitude-pinned variant: solves for the height field *and* the head
/// `Q` such that the crest-to-trough half-height equals `a_target`
/// (crest at column 0, trough at column `nq/2`).
///
/// This is the inner step of amplitude continuation: ramping `a_target`
/// from a small seed walks up the bifurcating branch without having to
/// guess `Q`.
pub fn solve_height_equation_pinned<T: Real>(
    init: &HeightField<T>,
    a_target: T,
    opts: &SolveOptions<T>,
) -> Result<(HeightField<T>, NewtonReport<T>)> {
    let nq = init.ncols();
    let np = init.nrows();
    if !init.periodic || nq % 2 != 0 || nq < 8 || np < 4 {
        return Err(Error::Config(
            "pinned solve needs a periodic grid, an even number of columns, and at least 8×4"
                .into(),
        ));
    }
    let gr = StencilGrid {
        nq,
        np,
        dq: init.lambda / T::of_usize(nq),
        dp: -init.p0 / T::of_usize(np),
    };
    let gamma_rows = gamma_rows_of(init);
    let n = nq * np;
    let rows = np + 1;
    let i_trough = nq / 2;
    let half = T::lit(0.5);

    let mut hf = init.clone();
    let mut q = init.q_const;
    let scale = T::one().max(q.abs());
    let tol = opts.tol * scale;

    let pin_of = |h: &[T]| (h[np] - h[i_trough * rows + np]) * half; // h[0,np] is h[np]
    let mut f = vec![T::zero(); n];
    height_residual(&gr, &hf.h, &gamma_rows, init.g, q, &mut f);
    let mut pin_res = pin_of(&hf.h) - a_target;
    let mut res = sup(&f).max(pin_res.abs());
    let mut backtracks_total = 0usize;

    for it in 0..opts.max_iter {
        if res <= tol {
            hf.q_const = q;
            return Ok((
                hf,
                NewtonReport {
                    iterations: it,
                    residual: res,
                    backtracks: backtracks_total,
                },
            ));
        }
        let jac = height_jacobian(&gr, &hf.h, &gamma_rows, init.g, q);
        let lu = jac.factor()?;

        // Bordered system: [J b; rᵀ 0] [δh; δQ] = [-F; -pin_res] with
        // b = ∂F/∂Q (surface rows only, = -h_p²) and r the pin gradient.
        let mut z1: Vec<T> = f.iter().map(|&v| -v).collect();
        lu.solve(&mut z1)?;
        let mut b = vec![T::zero(); n];
        for i in 0..nq {
            let hp = (T::lit(3.0) * hf.h[i * rows + np] - T::lit(4.0) * hf.h[i * rows + np - 1]
                + hf.h[i * rows + np - 2])
                / (T::lit(2.0) * gr.dp);
            b[(np - 1) * nq + i] = -(hp * hp);
        }
        let mut z2 = b;
        lu.solve(&mut z2)?;
        // rᵀ z = (z[0,np] - z[i_trough,np]) / 2 over unknown indexing.
        let r_dot = |z: &[T]| (z[(np - 1) * nq] - z[(np - 1) * nq + i_trough]) * half;
        let denom = r_dot(&z2);
        if denom.abs() < T::lit(1e-300) {
            return Err(Error::Numerical(
                "pinned solve: singular bordered system (amplitude insensitive to Q)".into(),
            ));
        }
        let dq_step = (r_dot(&z1) + pin_res) / denom;
        let step: Vec<T> = z1
            .iter()
            .zip(&z2)
            .map(|(&a, &bb)| a - dq_step * bb)
            .collect();

        let mut t = T::one();
        let mut accepted = false;
        let mut trial = hf.h.clone();
        let mut ftrial = vec![T::zero(); n];
        for _ in 0..=opts.max_backtracks {
            for i in 0..nq {
                for j in 1..=np {
                    trial[i * rows + j] =
                        hf.h[i * rows + j] + t * step[(j - 1) * nq + i];
                }
            }
            let q_trial = q + t * dq_step;
            if columns_monotone(&trial, nq, np) {
                height_residual(&gr, &trial, &gamma_rows, init.g, q_trial, &mut ftrial);
                let pin_trial = pin_of(&trial) - a_target;
                let rtrial = sup(&ftrial).max(pin_trial.abs());
                if rtrial < res * (T::one() - T::lit(0.25) * t) || rtrial <= tol {
                    hf.h.copy_from_slice(&trial);
                    f.copy_from_slice(&ftrial);
                    q = q_trial;
                    pin_res = pin_trial;
                    res = rtrial;
                    accepted = true;
                    break;
                }
            }
            t = t * T::lit(0.5);
            backtracks_total += 1;
        }
        if !accepted {
            return Err(Error::Nonconvergence {
                context: "pinned height-equation Newton stalled in the line search".into(),
                residual: res.widen(),
            });
        }
    }
    if res <= tol {
        hf.q_const = q;
        return Ok((
            hf,
            NewtonReport {
                iterations: opts.max_iter,
                residual: res,
                backtracks: backtracks_total,
            },
        ));
    }
    Err(Error::Nonconvergence {
        context: format!(
            "pinned height-equation Newton did not reach tolerance in {} iterations",
            opts.max_iter
        ),
        residual: res.widen(),
    })
}

/// Bilinear refinement of a periodic height field onto a grid with twice
/// the columns and twice the row intervals (used by grid-continuation
/// drivers: solve coarse, refine, re-solve).
pub fn refine_height<T: Real>(hf: &HeightField<T>) -> HeightField<T> {
    let nq = hf.ncols();
    let np = hf.nrows();
    let rows = np + 1;
    let (nq2, np2) = (2 * nq, 2 * np);
    let rows2 = np2 + 1;
    let at = |i: usize, j: usize| hf.h[(i % nq) * rows + j];
    let half = T::lit(0.5);
    let quarter = T::lit(0.25);
    let mut h2 = vec![T::zero(); nq2 * rows2];
    for i in 0..nq2 {
        for j in 0..rows2 {
            let (iq, ir) = (i / 2, j / 2);
            h2[i * rows2 + j] = match (i % 2, j % 2) {
                (0, 0) => at(iq, ir),
                (1, 0) => (at(iq, ir) + at(iq + 1, ir)) * half,
                (0, 1) => (at(iq, ir) + at(iq, ir + 1)) * half,
                _ => {
                    (at(iq, ir) + at(iq + 1, ir) + at(iq, ir + 1) + at(iq + 1, ir + 1)) * quarter
                }
            };
        }
    }
    let qs = (0..nq2)
        .map(|i| hf.lambda * T::of_usize(i) / T::of_usize(nq2))
        .collect();
    let ps = (0..=np2)
        .map(|j| hf.p0 - hf.p0 * T::of_usize(j) / T::of_usize(np2))
        .collect();
    HeightField {
        p0: hf.p0,
        lambda: hf.lambda,
        g: hf.g,
        q_const: hf.q_const,
        qs,
        ps,
        h: h2,
        periodic: true,
        gamma: hf.gamma.clone(),
    }
}

/// End-to-end driver for a genuinely nonlinear steady wave of prescribed
/// crest-to-trough half-height `a_target`: locate the bifurcation head for
/// this vorticity/flux/wavelength, start from the laminar flow there, seed a
/// small crest-centered perturbation, and walk up the branch with
/// amplitude-pinned Newton solves (ramping the pin through 10%, 30%, 60%,
/// 100% of the target). The returned field is symmetric about the crest at
/// `q = 0` and satisfies the discrete height equation at the head `Q` found
/// by the final pinned solve.
///
/// Fails with the underlying solver error when the branch cannot be
/// continued to the requested amplitude on this grid.
pub fn build_steady_wave<T: Real>(
    gamma: &FuncP<T>,
    p0: T,
    lambda: T,
    g: T,
    a_target: T,
    nq: usize,
    np: usize,
    opts: &SolveOptions<T>,
) -> Result<(HeightField<T>, NewtonReport<T>)> {
    if a_target <= T::zero() {
        return Err(Error::InvalidInput(
            "build_steady_wave: amplitude must be positive".into(),
        ));
    }
    let (_s_star, q_star) = bifurcation_head(gamma, p0, lambda, g)?;
    let mut cur = laminar_height(gamma, q_star, p0, lambda, g, nq, np)?;

    // Seed the bifurcating cosine mode; the sinh profile is the vertical
    // structure of the linearized problem at γ = 0 and close enough to it
    // otherwise for Newton's basin.
    let k = T::lit(2.0) * T::PI() / lambda;
    let rows = np + 1;
    let seed = T::lit(1e-3);
    let denom = (-k * p0).sinh();
    for i in 0..nq {
        let bump = seed * (k * cur.qs[i]).cos();
        for j in 1..=np {
            cur.h[i * rows + j] =
                cur.h[i * rows + j] + bump * (k * (cur.ps[j] - p0)).sinh() / denom;
        }
    }
    cur.symmetrize();

    let mut report = NewtonReport {
        iterations: 0,
        residual: T::zero(),
        backtracks: 0,
    };
    for frac in [0.1, 0.3, 0.6, 1.0] {
        let (sol, rep) = solve_height_equation_pinned(&cur, T::lit(frac) * a_target, opts)?;
        cur = sol;
        report = rep;
    }
    cur.symmetrize();
    Ok((cur, report))
}

// ---------------------------------------------------------------------------
// Field reconstruction and extraction
// ---------------------------------------------------------------------------

/// 4th-order first derivative of a column sampled at uniform spacing `dp`.
/// Interior points use the 5-point centered stencil; the outermost two
/// rows on each side use one-sided 5-point stencils of the same order.
pub(crate) fn fd4_column<T: Real>(vals: &[T], dp: T) -> Vec<T> {
    let n = vals.len();
    let mut out = vec![T::zero(); n];
    if n < 5 {
        // Fall back to 2nd order on very short columns.
        for j in 0..n {
            out[j] = if j == 0 {
                (vals[1] - vals[0]) / dp
            } else if j == n - 1 {
                (vals[n - 1] - vals[n - 2]) / dp
            } else {
                (vals[j + 1] - vals[j - 1]) / (dp + dp)
            };
        }
        return out;
    }
    let c12 = T::lit(12.0);
    for j in 0..n {
        out[j] = if j >= 2 && j + 2 < n {
            (vals[j - 2] - T::lit(8.0) * vals[j - 1] + T::lit(8.0) * vals[j + 1] - vals[j + 2])
                / (c12 * dp)
        } else if j < 2 {
            // One-sided forward: f'(x_j) over the first five samples.
            let a = &vals[0..5];
            let co: [f64; 5] = match j {
                0 => [-25.0, 48.0, -36.0, 16.0, -3.0],
                _ => [-3.0, -10.0, 18.0, -6.0, 1.0],
            };
            let mut s = T::zero();
            for (k, &cf) in co.iter().enumerate() {
                s = s + T::lit(cf) * a[k];
            }
            s / (c12 * dp)
        } else {
            // One-sided backward (mirror of the forward coefficients).
            let a = &vals[n - 5..n];
            let co: [f64; 5] = if j == n - 1 {
                [3.0, -16.0, 36.0, -48.0, 25.0]
            } else {
                [-1.0, 6.0, -18.0, 10.0, 3.0]
            };
            let mut s = T::zero();
            for (k, &cf) in co.iter().enumerate() {
                s = s + T::lit(cf) * a[k];
            }
            s / (c12 * dp)
        };
    }
    out
}

/// Maps a height field to the physical velocity and pressure fields:
/// `u - c = -1/h_p`, `v = -h_q/h_p`, and — from Bernoulli's law for
/// rotational flows —
/// `P = P_atm + (Q - (1 + h_q²)/h_p² - 2g h)/2 - Γ(p)`
/// with `Γ(p) = ∫₀ᵖ γ(s) ds`. The vorticity integral vanishes on the
/// surface (`Γ(0) = 0`), so `P = P_atm` there; for irrotational fields the
/// formula reduces to the familiar `(Q - |∇ψ|² - 2g h)/2` form. Dropping
/// `Γ` would break the Euler momentum balance by O(1) for sheared flows
/// (check against the linear-shear laminar field, whose pressure must be
/// exactly hydrostatic).
///
/// Derivatives are 4th-order finite differences (periodic in `q` when the
/// field is periodic). The mean depth defaults to the zero-mean-η
/// convention (`d` = period average of the surface row); pass `d_known`
/// when the depth is prescribed externally (recovered windows that don't
/// span a full period).
pub fn flow_from_height<T: Real>(
    hf: &HeightField<T>,
    c: T,
    p_atm: T,
    d_known: Option<T>,
) -> Result<FlowField<T>> {
    let nq = hf.ncols();
    let np = hf.nrows();
    let rows = np + 1;
    if np < 4 || nq < 2 {
        return Err(Error::Config(
            "flow_from_height: need at least 2 columns and 4 rows".into(),
        ));
    }
    let dp = -hf.p0 / T::of_usize(np);
    let dq = hf.qs[1] - hf.qs[0];
    let d = match d_known {
        Some(d) => d,
        None if hf.periodic => hf.mean_depth(),
        None => {
            // Windowed fields: trapezoid average over the window.
            let mut s = T::zero();
            for i in 0..nq {
                let w = if i == 0 || i == nq - 1 {
                    T::lit(0.5)
                } else {
                    T::one()
                };
                s = s + w * hf.h[hf.idx(i, np)];
            }
            s / T::of_usize(nq - 1)
        }
    };

    // h_p per column (4th order), h_q per row (4th order centered when
    // periodic, one-sided at window edges otherwise).
    let mut hp = vec![T::zero(); nq * rows];
    for i in 0..nq {
        let col: Vec<T> = (0..rows).map(|j| hf.h[i * rows + j]).collect();
        let der = fd4_column(&col, dp);
        hp[i * rows..(i + 1) * rows].copy_from_slice(&der);
    }
    let mut hq = vec![T::zero(); nq * rows];
    if hf.periodic {
        let c12 = T::lit(12.0);
        for j in 0..rows {
            for i in 0..nq {
                let a2 = hf.h[((i + nq - 2) % nq) * rows + j];
                let a1 = hf.h[((i + nq - 1) % nq) * rows + j];
                let b1 = hf.h[((i + 1) % nq) * rows + j];
                let b2 = hf.h[((i + 2) % nq) * rows + j];
                hq[i * rows + j] =
                    (a2 - T::lit(8.0) * a1 + T::lit(8.0) * b1 - b2) / (c12 * dq);
            }
        }
    } else {
        for j in 0..rows {
            let vals: Vec<T> = (0..nq).map(|i| hf.h[i * rows + j]).collect();
            let der = fd4_column(&vals, dq);
            for i in 0..nq {
                hq[i * rows + j] = der[i];
            }
        }
    }

    let big_gamma = gamma_integral(&hf.gamma);
    let mut ys = Vec::with_capacity(nq * rows);
    let mut u = Vec::with_capacity(nq * rows);
    let mut v = Vec::with_capacity(nq * rows);
    let mut pr = Vec::with_capacity(nq * rows);
    let mut eta = Vec::with_capacity(nq);
    for i in 0..nq {
        eta.push(hf.h[i * rows + np] - d);
        for j in 0..rows {
            let hpx = hp[i * rows + j];
            if hpx <= T::zero() {
                return Err(Error::Admissibility(format!(
                    "flow_from_height: h_p = {} <= 0 at column {i}, row {j}",
                    hpx.widen()
                )));
            }
            let hqx = hq[i * rows + j];
            ys.push(hf.h[i * rows + j] - d);
            u.push(c - T::one() / hpx);
            v.push(-hqx / hpx);
            pr.push(
                p_atm
                    + (hf.q_const
                        - (T::one() + hqx * hqx) / (hpx * hpx)
                        - (hf.g + hf.g) * hf.h[i * rows + j])
                        * T::lit(0.5)
                    - big_gamma.eval(hf.ps[j]),
            );
        }
    }

    Ok(FlowField {
        c,
        d,
        g: hf.g,
        lambda: hf.lambda,
        p_atm,
        q_const: hf.q_const,
        xs: hf.qs.clone(),
        eta,
        ny: np,
        ys,
        u,
        v,
        p: pr,
        periodic: hf.periodic,
        gamma: Some(hf.gamma.clone()),
    })
}

/// Samples a flow field on the vertical line `x = x0`, producing axis data
/// for the recovery pipeline.
///
/// When `x0` falls between grid columns the samples are interpolated
/// (trigonometric interpolation along rows for periodic fields) and the
/// result is flagged [`AxisFlag::Interpolated`]. If the candidate column is
/// visibly not a symmetry axis (the flow to its left and right differ),
/// the result carries [`AxisFlag::NotSymmetryAxis`] as a warning.
pub fn extract_axis_data<T: Real>(flow: &FlowField<T>, x0: T) -> Result<AxisData<T>> {
    let nx = flow.ncols();
    if nx == 0 {
        return Err(Error::InvalidInput("extract_axis_data: empty field".into()));
    }
    let ny = flow.ny;
    let mut flags = Vec::new();

    // Locate x0 among the columns (within rounding of the column spacing).
    let mut col: Option<usize> = None;
    let dx = if nx > 1 { flow.xs[1] - flow.xs[0] } else { T::one() };
    let tol = dx * T::lit(1e-9);
    for (i, &x) in flow.xs.iter().enumerate() {
        let mut diff = (x - x0).abs();
        if flow.periodic {
            let period = flow.lambda;
            while diff > period * T::lit(0.5) {
                diff = (diff - period).abs();
            }
        }
        if diff <= tol {
            col = Some(i);
            break;
        }
    }

    let (ys, us): (Vec<T>, Vec<T>) = match col {
        Some(i) => (
            (0..=ny).map(|j| flow.ys[flow.idx(i, j)]).collect(),
            (0..=ny).map(|j| flow.u[flow.idx(i, j)]).collect(),
        ),
        None => {
            if !flow.periodic {
                return Err(Error::InvalidInput(format!(
                    "extract_axis_data: x0 = {} is not a grid column of a non-periodic field",
                    x0.widen()
                )));
            }
            flags.push(AxisFlag::Interpolated);
            let mut ys = Vec::with_capacity(ny + 1);
            let mut us = Vec::with_capacity(ny + 1);
            for j in 0..=ny {
                let yrow: Vec<T> = (0..nx).map(|i| flow.ys[flow.idx(i, j)]).collect();
                let urow: Vec<T> = (0..nx).map(|i| flow.u[flow.idx(i, j)]).collect();
                ys.push(trig_interp(&yrow, flow.lambda, flow.xs[0], x0));
                us.push(trig_interp(&urow, flow.lambda, flow.xs[0], x0));
            }
            (ys, us)
        }
    };

    // Symmetry check: compare u just left and right of the axis.
    if flow.periodic && nx >= 8 {
        let probe = dx * T::lit(1.5);
        let mut asym = T::zero();
        let mut scale = T::zero();
        for j in (0..=ny).step_by((ny / 4).max(1)) {
            let urow: Vec<T> = (0..nx).map(|i| flow.u[flow.idx(i, j)]).collect();
            let up = trig_interp(&urow, flow.lambda, flow.xs[0], x0 + probe);
            let um = trig_interp(&urow, flow.lambda, flow.xs[0], x0 - probe);
            asym = asym.max((up - um).abs());
            scale = scale.max(up.abs()).max(um.abs());
        }
        if asym > T::lit(1e-8) * (T::one() + scale) {
            flags.push(AxisFlag::NotSymmetryAxis);
        }
    }

    let ws: Vec<T> = us.iter().map(|&u| u - flow.c).collect();
    Ok(AxisData {
        x0,
        d: flow.d,
        g: flow.g,
        lambda: flow.lambda,
        c: Some(flow.c),
        ys,
        ws,
        provenance: Provenance::Measured,
        flags,
    })
}

/// Trigonometric interpolation of `nx` uniform periodic samples starting
/// at `x_first` with period `lambda`, evaluated at `x`.
pub(crate) fn trig_interp<T: Real>(vals: &[T], lambda: T, x_first: T, x: T) -> T {
    let n = vals.len();
    let tau = (x - x_first) / lambda * T::of_usize(n); // in sample units
    // Dirichlet-kernel form: exact for trigonometric polynomials up to the
    // Nyquist mode; O(n) per evaluation which is fine at these sizes.
    let pi = T::PI();
    let mut num = T::zero();
    let mut den = T::zero();
    for (j, &vj) in vals.iter().enumerate() {
        let del = (tau - T::of_usize(j)) * pi / T::of_usize(n);
        if del.abs() < T::lit(1e-14) {
            return vj;
        }
        // Even n: cot kernel; weights alternate sign.
        let w = T::one() / del.tan();
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        num = num + sign * w * vj;
        den = den + sign * w;
    }
    num / den
}

/// Infers the vorticity function `γ(p)` of a flow field by matching the
/// measured vorticity `ω = u_y - v_x` against the streamline coordinate
/// `p = -ψ`. Returns the fitted function together with the worst spread of
/// `ω` around it; a spread above `1e-6·(1 + |ω|_∞)` marks the field as not
/// a steady water wave (flag `true`).
pub fn gamma_from_flow<T: Real>(flow: &FlowField<T>) -> Result<(FuncP<T>, T, bool)> {
    let nx = flow.ncols();
    let ny = flow.ny;
    if nx < 4 || ny < 8 {
        return Err(Error::Config(
            "gamma_from_flow: grid too coarse to difference".into(),
        ));
    }
    // Per-column flux and stream function by trapezoid cumulative sums.
    let mut p0_cols = Vec::with_capacity(nx);
    let mut psi = vec![T::zero(); nx * (ny + 1)];
    let half = T::lit(0.5);
    for i in 0..nx {
        let mut acc = T::zero();
        for j in 1..=ny {
            let y0 = flow.ys[flow.idx(i, j - 1)];
            let y1 = flow.ys[flow.idx(i, j)];
            let w0 = flow.u[flow.idx(i, j - 1)] - flow.c;
            let w1 = flow.u[flow.idx(i, j)] - flow.c;
            acc = acc + (w0 + w1) * half * (y1 - y0);
            psi[flow.idx(i, j)] = acc;
        }
        p0_cols.push(acc);
    }
    let p0 = p0_cols.iter().fold(T::zero(), |s, &v| s + v) / T::of_usize(nx);
    if !(p0 < T::zero()) {
        return Err(Error::Admissibility(
            "gamma_from_flow: non-negative flux (u >= c on average)".into(),
        ));
    }

    // Vorticity ω = u_y - v_x on interior rows, with terrain-following
    // corrections for the x-derivative.
    let mut ps_samples = Vec::new();
    let mut om_samples = Vec::new();
    for i in 0..nx {
        let ip = (i + 1) % nx;
        let im = (i + nx - 1) % nx;
        if !flow.periodic && (i == 0 || i == nx - 1) {
            continue;
        }
        let dx = if flow.periodic {
            flow.lambda / T::of_usize(nx)
        } else {
            (flow.xs[ip] - flow.xs[im]) * half
        };
        for j in 1..ny {
            let ym = flow.ys[flow.idx(i, j - 1)];
            let yp = flow.ys[flow.idx(i, j + 1)];
            let u_y = (flow.u[flow.idx(i, j + 1)] - flow.u[flow.idx(i, j - 1)]) / (yp - ym);
            let v_y = (flow.v[flow.idx(i, j + 1)] - flow.v[flow.idx(i, j - 1)]) / (yp - ym);
            // v_x along the grid row, then correct for the row's slope.
            let v_row = (flow.v[flow.idx(ip, j)] - flow.v[flow.idx(im, j)]) / (dx + dx);
            let y_row = (flow.ys[flow.idx(ip, j)] - flow.ys[flow.idx(im, j)]) / (dx + dx);
            let v_x = v_row - v_y * y_row;
            om_samples.push(u_y - v_x);
            ps_samples.push(-(-p0 + psi[flow.idx(i, j)])); // p = -ψ_total
        }
    }
    let om_max = om_samples.iter().fold(T::zero(), |m, v| m.max(v.abs()));

    // Fit γ against p and measure the scatter around the fit.
    let deg = 10usize.min(ps_samples.len().saturating_sub(1));
    let gamma = FuncP::fit(&ps_samples, &om_samples, p0, deg, Provenance::Derived)?;
    let mut spread = T::zero();
    for (&p, &om) in ps_samples.iter().zip(&om_samples) {
        spread = spread.max((gamma.eval(p) - om).abs());
    }
    let warn = spread > T::lit(1e-6) * (T::one() + om_max);
    Ok((gamma, spread, warn))
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.81;
    const TAU: f64 = 2.0 * std::f64::consts::PI;

    #[test]
    fn laminar_still_water_is_hydrostatic_with_exact_flux() {
        let flow = laminar_flow(|_y: f64| 0.0, 1.0, 1.0, TAU, G, 64).unwrap();
        assert_eq!(flow.eta.iter().fold(0.0f64, |m, e| m.max(e.abs())), 0.0);
        // P = -g y exactly on the grid.
        for i in 0..flow.ncols() {
            for j in 0..=flow.ny {
                let y = flow.ys[flow.idx(i, j)];
                assert!((flow.p[flow.idx(i, j)] - (-G * y)).abs() < 1e-13);
            }
        }
        // γ ≈ 0 for a uniform stream.
        let gam = flow.gamma.as_ref().unwrap();
        assert!(gam.sup_norm() < 1e-9);
        // Q = c² + 2gd.
        assert!((flow.q_const - (1.0 + 2.0 * G)).abs() < 1e-12);
    }

    #[test]
    fn laminar_shear_has_unit_vorticity() {
        // U(y) = y + 1, c = 2: γ = U' = 1 along every streamline.
        let flow = laminar_flow(|y: f64| y + 1.0, 2.0, 1.0, TAU, G, 64).unwrap();
        let gam = flow.gamma.as_ref().unwrap();
        let (p0, _) = gam.domain();
        for i in 0..=16 {
            let p = p0 + (0.0 - p0) * i as f64 / 16.0;
            assert!((gam.eval(p) - 1.0).abs() < 1e-8, "γ({p}) = {}", gam.eval(p));
        }
        // Flux of U - c = y - 1 over [-1, 0] is -3/2.
        let psi_dom = gam.domain().0;
        assert!((psi_dom - (-1.5)).abs() < 1e-10);
    }

    #[test]
    fn laminar_rejects_stagnation() {
        let res = laminar_flow(|y: f64| y + 2.0, 2.0, 1.0, TAU, G, 32);
        assert!(matches!(res, Err(Error::Admissibility(_))));
    }

    #[test]
    fn linear_wave_satisfies_first_order_identities() {
        let eps = 0.01;
        let flow = linear_wave(eps, TAU, 1.0, G, 64, 32).unwrap();
        // Dispersion speed.
        let c_exact = (G * 1.0f64.tanh()).sqrt();
        assert!((flow.c - c_exact).abs() < 1e-14);
        // Surface kinematic condition v = (u - c) η' to O(eps²).
        let k = TAU / flow.lambda;
        let mut worst = 0.0f64;
        for i in 0..flow.ncols() {
            let x = flow.xs[i];
            let etap = -eps * k * (k * x).sin();
            let j = flow.ny;
            let lhs = flow.v[flow.idx(i, j)];
            let rhs = (flow.u[flow.idx(i, j)] - flow.c) * etap;
            worst = worst.max((lhs - rhs).abs());
        }
        assert!(worst < 10.0 * eps * eps, "kinematic defect {worst}");
        // Surface pressure is atmospheric to O(eps²)·g.
        let mut pworst = 0.0f64;
        for i in 0..flow.ncols() {
            pworst = pworst.max(flow.p[flow.idx(i, flow.ny)].abs());
        }
        assert!(pworst < 10.0 * G * eps * eps, "surface pressure {pworst}");
    }

    #[test]
    fn linear_wave_zero_amplitude_is_still_water() {
        let flow = linear_wave(0.0, TAU, 1.0, G, 16, 8).unwrap();
        assert!(flow.u.iter().all(|&u| u == 0.0));
        assert!(flow.v.iter().all(|&v| v == 0.0));
        assert!(flow.eta.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn linear_wave_rejects_negative_amplitude() {
        assert!(matches!(
            linear_wave(-0.01, TAU, 1.0, G, 16, 8),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn bifurcation_head_matches_dispersion_for_irrotational_flow() {
        // γ = 0, depth d: s* = g tanh(kd)/k (classical dispersion) and
        // Q* = s* + 2gd, with p0 = -c0 d the still-water flux.
        let d = 1.0f64;
        let k = TAU / TAU; // λ = 2π
        let c0 = (G * (k * d).tanh() / k).sqrt();
        let p0 = -c0 * d;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        let (s_star, q_star) = bifurcation_head(&gamma, p0, TAU, G).unwrap();
        assert!((s_star - c0 * c0).abs() < 1e-6, "s* = {s_star}");
        assert!((q_star - (c0 * c0 + 2.0 * G * d)).abs() < 1e-5, "Q* = {q_star}");
    }

    #[test]
    fn laminar_height_reproduces_closed_form_for_zero_vorticity() {
        // γ = 0: H(p) = (p - p0)/sqrt(s) with s the subcritical root of
        // s + 2g(-p0)/sqrt(s) = Q. For p0 = -c0 d and Q = c0² + 2gd the
        // root is s = c0², giving depth exactly d.
        let d = 1.0f64;
        let c0 = (G * 1.0f64.tanh()).sqrt();
        let p0 = -c0 * d;
        let q = c0 * c0 + 2.0 * G * d;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        let hf = laminar_height(&gamma, q, p0, TAU, G, 16, 32).unwrap();
        let np = hf.nrows();
        for j in 0..=np {
            let p = hf.ps[j];
            let want = (p - p0) / c0;
            assert!(
                (hf.h[hf.idx(3, j)] - want).abs() < 1e-9,
                "H({p}) = {} want {want}",
                hf.h[hf.idx(3, j)]
            );
        }
        assert!((hf.mean_depth() - d).abs() < 1e-9);
    }

    #[test]
    fn laminar_height_rejects_head_below_minimum() {
        let p0 = -2.7f64;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        // The minimum head for this flux is ~3(g |p0|)^{2/3} ≈ 26.7; ask
        // for far less.
        let res = laminar_height(&gamma, 0.0, p0, TAU, G, 16, 16);
        assert!(matches!(res, Err(Error::Nonconvergence { .. })));
    }

    #[test]
    fn newton_keeps_laminar_solution_fixed() {
        // The flat flow solves the height equation exactly (up to stencil
        // rounding); Newton from it must converge immediately and not move.
        let d = 1.0f64;
        let c0 = (G * 1.0f64.tanh()).sqrt();
        let p0 = -c0 * d;
        let q = c0 * c0 + 2.0 * G * d + 0.5;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        let init = laminar_height(&gamma, q, p0, TAU, G, 32, 16).unwrap();
        let (sol, report) = solve_height_equation(&init, &SolveOptions::default()).unwrap();
        assert!(report.iterations <= 2, "iterations = {}", report.iterations);
        let drift: f64 = sol
            .h
            .iter()
            .zip(&init.h)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(drift < 1e-8, "laminar drifted by {drift}");
    }

    #[test]
    fn pinned_newton_reaches_requested_amplitude() {
        let d = 1.0f64;
        let c0 = (G * 1.0f64.tanh()).sqrt();
        let p0 = -c0 * d;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        let (_s, q_star) = bifurcation_head(&gamma, p0, TAU, G).unwrap();
        let init = laminar_height(&gamma, q_star, p0, TAU, G, 32, 16).unwrap();
        // Seed the surface with a small cosine and pin a modest amplitude.
        let mut seeded = init.clone();
        let np = seeded.nrows();
        let rows = np + 1;
        let a0 = 0.01;
        for i in 0..seeded.ncols() {
            let qx = seeded.qs[i];
            let bump = a0 * (TAU * qx / seeded.lambda).cos();
            for j in 1..=np {
                let frac = (seeded.ps[j] - p0) / (-p0);
                seeded.h[i * rows + j] += bump * frac * frac;
            }
        }
        let a_target = 0.02;
        let (sol, report) =
            solve_height_equation_pinned(&seeded, a_target, &SolveOptions::default()).unwrap();
        assert!(report.residual < 1e-9);
        let got = (sol.h[sol.idx(0, np)] - sol.h[sol.idx(sol.ncols() / 2, np)]) / 2.0;
        assert!((got - a_target).abs() < 1e-10, "amplitude {got}");
        assert!(sol.q_const > q_star, "Q did not move up the branch");
        // The solved wave is even in q (crest pinned at column 0).
        let n = sol.ncols();
        for i in 1..n / 2 {
            let diff = (sol.h[sol.idx(i, np)] - sol.h[sol.idx(n - i, np)]).abs();
            assert!(diff < 1e-9, "evenness defect {diff} at {i}");
        }
    }

    #[test]
    fn flow_from_laminar_height_matches_closed_form() {
        let d = 1.0f64;
        let c = 2.0;
        let c0sq = 4.0; // pick s = 4 directly: W = 1/2, depth = -p0/2
        let p0 = -2.0 * d; // gives depth exactly 1
        let q = c0sq + 2.0 * G * d;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        let hf = laminar_height(&gamma, q, p0, TAU, G, 16, 32).unwrap();
        let flow = flow_from_height(&hf, c, 0.0, None).unwrap();
        // u - c = -1/h_p = -sqrt(s) = -2, so u = 0 everywhere; v = 0.
        for i in 0..flow.ncols() {
            for j in 0..=flow.ny {
                assert!((flow.u[flow.idx(i, j)]).abs() < 1e-9);
                assert!((flow.v[flow.idx(i, j)]).abs() < 1e-12);
            }
        }
        // Surface pressure equals the atmospheric constant.
        for i in 0..flow.ncols() {
            assert!(flow.p[flow.idx(i, flow.ny)].abs() < 1e-10);
        }
    }

    #[test]
    fn flow_from_sheared_height_has_hydrostatic_pressure() {
        // U(y) = y + 1, c = 2, d = 1: γ ≡ 1, p0 = -3/2, Q = 1 + 2g, and the
        // height function is h(p) = 2 - sqrt(1 - 2p). The physical pressure
        // of a laminar flow is exactly hydrostatic, which only works out if
        // the vorticity integral Γ(p) enters the Bernoulli pressure; without
        // it the defect would be |p - p²/2| = O(1).
        let p0 = -1.5f64;
        let q = 1.0 + 2.0 * G;
        let (nq, np) = (8usize, 128usize);
        let rows = np + 1;
        let gamma = FuncP::constant(p0, 1.0, Provenance::Analytic).unwrap();
        let qs: Vec<f64> = (0..nq).map(|i| TAU * i as f64 / nq as f64).collect();
        let ps: Vec<f64> = (0..=np)
            .map(|j| p0 + (0.0 - p0) * j as f64 / np as f64)
            .collect();
        let mut h = vec![0.0; nq * rows];
        for i in 0..nq {
            for j in 0..rows {
                h[i * rows + j] = 2.0 - (1.0 - 2.0 * ps[j]).sqrt();
            }
        }
        let hf = HeightField {
            p0,
            lambda: TAU,
            g: G,
            q_const: q,
            qs,
            ps,
            h,
            periodic: true,
            gamma,
        };
        let flow = flow_from_height(&hf, 2.0, 0.0, None).unwrap();
        for i in 0..flow.ncols() {
            for j in 0..=flow.ny {
                let y = flow.ys[flow.idx(i, j)];
                let du = flow.u[flow.idx(i, j)] - (y + 1.0);
                let dp = flow.p[flow.idx(i, j)] - (-G * y);
                assert!(du.abs() < 1e-6, "u defect {du} at row {j}");
                assert!(dp.abs() < 1e-5, "P defect {dp} at row {j}");
            }
        }
    }

    #[test]
    fn extract_axis_on_grid_column_is_exact_and_unflagged() {
        let flow = linear_wave(0.01, TAU, 1.0, G, 64, 32).unwrap();
        let axis = extract_axis_data(&flow, 0.0).unwrap();
        assert!(axis.flags.is_empty());
        assert_eq!(axis.ys.len(), 33);
        assert_eq!(axis.c, Some(flow.c));
        // Samples equal column 0 of the field exactly.
        for j in 0..=flow.ny {
            assert_eq!(axis.ws[j], flow.u[flow.idx(0, j)] - flow.c);
        }
    }

    #[test]
    fn extract_axis_between_columns_is_flagged_interpolated() {
        let flow = linear_wave(0.01, TAU, 1.0, G, 64, 16).unwrap();
        let dx = flow.xs[1] - flow.xs[0];
        let axis = extract_axis_data(&flow, 0.37 * dx).unwrap();
        assert!(axis.flags.contains(&AxisFlag::Interpolated));
        // Interpolation of a smooth periodic field is spectrally accurate;
        // compare w at the mid-depth row against the closed form.
        let k = TAU / flow.lambda;
        let j = 8;
        let y = axis.ys[j];
        let want =
            0.01 * flow.c * k * (k * (y + 1.0)).cosh() / (k * 1.0f64).sinh() * (k * 0.37 * dx).cos()
                - flow.c;
        assert!((axis.ws[j] - want).abs() < 1e-9);
    }

    #[test]
    fn extract_axis_off_symmetry_axis_warns() {
        let flow = linear_wave(0.01, TAU, 1.0, G, 64, 16).unwrap();
        let dx = flow.xs[1] - flow.xs[0];
        // Column 5 is neither crest nor trough.
        let axis = extract_axis_data(&flow, 5.0 * dx).unwrap();
        assert!(axis.flags.contains(&AxisFlag::NotSymmetryAxis));
    }

    #[test]
    fn gamma_from_flow_recovers_constant_shear() {
        let flow = laminar_flow(|y: f64| 0.5 * (y + 1.0), 2.0, 1.0, TAU, G, 96).unwrap();
        let (gam, spread, warn) = gamma_from_flow(&flow).unwrap();
        assert!(!warn, "spread = {spread}");
        let (p0, _) = gam.domain();
        for i in 0..=10 {
            let p = p0 + (0.0 - p0) * i as f64 / 10.0;
            assert!((gam.eval(p) - 0.5).abs() < 1e-5);
        }
    }

    #[test]
    fn trig_interp_reproduces_modes_exactly() {
        let n = 16;
        let lambda = TAU;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let x = lambda * i as f64 / n as f64;
                1.0 + 0.5 * (x).cos() + 0.25 * (3.0 * x).sin()
            })
            .collect();
        for &x in &[0.3f64, 1.7, 4.2] {
            let want = 1.0 + 0.5 * x.cos() + 0.25 * (3.0 * x).sin();
            let got = trig_interp(&vals, lambda, 0.0, x);
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn refinement_convergence_of_the_newton_solver() {
        // Solve the same pinned wave on 16×8 and 32×16 and compare both to
        // 64×32: the 2nd-order scheme must shrink the profile error by at
        // least 3.5× per refinement.
        let d = 1.0f64;
        let c0 = (G * 1.0f64.tanh()).sqrt();
        let p0 = -c0 * d;
        let gamma = FuncP::constant(p0, 0.0, Provenance::Analytic).unwrap();
        let (_s, q_star) = bifurcation_head(&gamma, p0, TAU, G).unwrap();
        let a_target = 0.03;

        let solve_at = |nq: usize, np: usize| {
            let init = laminar_height(&gamma, q_star, p0, TAU, G, nq, np).unwrap();
            let mut seeded = init.clone();
            let rows = np + 1;
            for i in 0..nq {
                let qx = seeded.qs[i];
                let bump = 0.5 * a_target * (TAU * qx / seeded.lambda).cos();
                for j in 1..=np {
                    let frac = (seeded.ps[j] - p0) / (-p0);
                    seeded.h[i * rows + j] += bump * frac * frac;
                }
            }
            let (sol, _) =
                solve_height_equation_pinned(&seeded, a_target, &SolveOptions::default())
                    .unwrap();
            sol
        };
        let h16 = solve_at(16, 8);
        let h32 = solve_at(32, 16);
        let h64 = solve_at(64, 32);
        let err = |coarse: &HeightField<f64>, fine: &HeightField<f64>| {
            let stride = fine.ncols() / coarse.ncols();
            let npc = coarse.nrows();
            let npf = fine.nrows();
            let mut worst = 0.0f64;
            for i in 0..coarse.ncols() {
                let a = coarse.h[coarse.idx(i, npc)];
                let b = fine.h[fine.idx(i * stride, npf)];
                worst = worst.max((a - b).abs());
            }
            worst
        };
        let e16 = err(&h16, &h64);
        let e32 = err(&h32, &h64);
        assert!(
            e16 / e32 >= 3.5,
            "refinement ratio {} (e16 = {e16:e}, e32 = {e32:e})",
            e16 / e32
        );
    }
}
