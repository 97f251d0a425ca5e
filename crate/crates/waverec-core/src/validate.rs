//! Residual checks of computed flows against the governing equations, in
//! all three formulations, plus profile comparison metrics.
//!
//! A steady wave can be written three ways — velocity/pressure fields
//! satisfying Euler's equations, a stream function satisfying the vorticity
//! Poisson equation with a Bernoulli surface condition, and a height
//! function satisfying the quasilinear hodograph equation. Whatever a
//! solver or the recovery produced, the corresponding validator here
//! rebuilds every equation residual on the field's own grid with its own
//! finite-difference stencils and reports scaled norms, so that agreement
//! is evidence about the solution and not about shared code paths.
//!
//! All derivative stencils are 4th order (centered in the interior,
//! one-sided at boundaries): the validators' own discretization error must
//! sit well below the tolerances they certify, and second-order one-sided
//! stencils would contribute boundary-row errors of the same size as the
//! defects being measured.
//!
//! Residuals are scaled: each equation's residual grid is normalized by the
//! largest magnitude among that equation's terms (with a physically
//! motivated floor, e.g. `g` for momentum balances), so "1e-6" means
//! one part in a million of the competing terms, independent of units.

use crate::error::{Error, Result};
use crate::forward::{fd4_column, trig_interp, FlowField, HeightField};
use crate::funcrep::FuncP;
use crate::recover::cumulative_quad;
use crate::scalar::Real;

// ---------------------------------------------------------------------------
// Report types
// ---------------------------------------------------------------------------

/// One equation's residual grid and its scaled norms.
#[derive(Debug, Clone)]
pub struct ResidualComponent<T> {
    /// Which identity this measures.
    pub name: &'static str,
    /// Raw (unscaled) residual values, in the layout of the source grid.
    pub values: Vec<T>,
    /// Characteristic magnitude of the equation's terms; the norms below
    /// are of `values / scale`.
    pub scale: T,
    /// Scaled sup-norm.
    pub sup: T,
    /// Scaled root-mean-square norm.
    pub l2: T,
}

impl<T: Real> ResidualComponent<T> {
    fn new(name: &'static str, values: Vec<T>, scale: T) -> Self {
        let scale = scale.max(T::lit(1e-300));
        let mut sup = T::zero();
        let mut sq = T::zero();
        for &v in &values {
            sup = sup.max(v.abs());
            sq = sq + v * v;
        }
        let n = T::of_usize(values.len().max(1));
        ResidualComponent {
            name,
            sup: sup / scale,
            l2: (sq / n).sqrt() / scale,
            values,
            scale,
        }
    }
}

/// A strict-inequality constraint margin; the configuration is admissible
/// only while the margin stays positive.
#[derive(Debug, Clone, Copy)]
pub struct ConstraintMargin<T> {
    /// Which constraint.
    pub name: &'static str,
    /// Worst-case margin over the grid.
    pub value: T,
}

/// Everything a validator measured, with the verdict against the supplied
/// tolerance.
#[derive(Debug, Clone)]
pub struct ResidualReport<T> {
    /// Per-equation residuals.
    pub components: Vec<ResidualComponent<T>>,
    /// Admissibility margins (must all be positive).
    pub margins: Vec<ConstraintMargin<T>>,
    /// Tolerance the verdict was taken against.
    pub tolerance: T,
    /// True iff every scaled sup-norm is within tolerance and every margin
    /// is positive.
    pub pass: bool,
}

impl<T: Real> ResidualReport<T> {
    fn finish(
        components: Vec<ResidualComponent<T>>,
        margins: Vec<ConstraintMargin<T>>,
        tolerance: T,
    ) -> Self {
        let pass = components.iter().all(|c| c.sup <= tolerance)
            && margins.iter().all(|m| m.value > T::zero());
        ResidualReport {
            components,
            margins,
            tolerance,
            pass,
        }
    }

    /// Largest scaled sup-norm across all components.
    pub fn worst(&self) -> T {
        self.components
            .iter()
            .fold(T::zero(), |m, c| m.max(c.sup))
    }

    /// Looks up a component by name.
    pub fn component(&self, name: &str) -> Option<&ResidualComponent<T>> {
        self.components.iter().find(|c| c.name == name)
    }
}

// ---------------------------------------------------------------------------
// Stencil plumbing
// ---------------------------------------------------------------------------

/// 4th-order first derivative of uniformly spaced samples; periodic wrap or
/// one-sided boundary stencils.
fn d1_uniform<T: Real>(vals: &[T], dx: T, periodic: bool) -> Vec<T> {
    if !periodic {
        return fd4_column(vals, dx);
    }
    let n = vals.len();
    let mut out = vec![T::zero(); n];
    let c8 = T::lit(8.0);
    let denom = T::lit(12.0) * dx;
    for i in 0..n {
        let m2 = vals[(i + n - 2) % n];
        let m1 = vals[(i + n - 1) % n];
        let p1 = vals[(i + 1) % n];
        let p2 = vals[(i + 2) % n];
        out[i] = (m2 - c8 * m1 + c8 * p1 - p2) / denom;
    }
    out
}

/// 4th-order second derivative of uniformly spaced samples.
///
/// A dedicated stencil, not two passes of [`d1_uniform`]: composing first
/// derivatives drops an order at the boundary rows and turns the
/// stencil-constant steps between one-sided rows into spurious
/// second-derivative spikes.
fn d2_uniform<T: Real>(vals: &[T], dx: T, periodic: bool) -> Vec<T> {
    let n = vals.len();
    let mut out = vec![T::zero(); n];
    let dx2 = dx * dx;
    let c16 = T::lit(16.0);
    let c30 = T::lit(30.0);
    let denom = T::lit(12.0) * dx2;
    let centered = |m2: T, m1: T, z: T, p1: T, p2: T| {
        (-m2 + c16 * m1 - c30 * z + c16 * p1 - p2) / denom
    };
    if periodic {
        for i in 0..n {
            out[i] = centered(
                vals[(i + n - 2) % n],
                vals[(i + n - 1) % n],
                vals[i],
                vals[(i + 1) % n],
                vals[(i + 2) % n],
            );
        }
        return out;
    }
    // Boundary rows use 6-point one-sided stencils of matching order.
    let edge = [
        T::lit(15.0 / 4.0),
        T::lit(-77.0 / 6.0),
        T::lit(107.0 / 6.0),
        T::lit(-13.0),
        T::lit(61.0 / 12.0),
        T::lit(-5.0 / 6.0),
    ];
    let near = [
        T::lit(5.0 / 6.0),
        T::lit(-5.0 / 4.0),
        T::lit(-1.0 / 3.0),
        T::lit(7.0 / 6.0),
        T::lit(-1.0 / 2.0),
        T::lit(1.0 / 12.0),
    ];
    let apply = |coeffs: &[T; 6], take: &dyn Fn(usize) -> T| {
        let mut s = T::zero();
        for (k, &c) in coeffs.iter().enumerate() {
            s = s + c * take(k);
        }
        s / dx2
    };
    out[0] = apply(&edge, &|k| vals[k]);
    out[1] = apply(&near, &|k| vals[k]);
    out[n - 1] = apply(&edge, &|k| vals[n - 1 - k]);
    out[n - 2] = apply(&near, &|k| vals[n - 1 - k]);
    for i in 2..n - 2 {
        out[i] = centered(vals[i - 2], vals[i - 1], vals[i], vals[i + 1], vals[i + 2]);
    }
    out
}

fn check_uniform<T: Real>(xs: &[T], what: &str) -> Result<T> {
    if xs.len() < 2 {
        return Err(Error::InvalidInput(format!("{what}: too few points")));
    }
    let dx = xs[1] - xs[0];
    if !(dx > T::zero()) {
        return Err(Error::InvalidInput(format!(
            "{what}: coordinates must increase"
        )));
    }
    for i in 1..xs.len() {
        if ((xs[i] - xs[i - 1]) - dx).abs() > T::lit(1e-9) * dx {
            return Err(Error::InvalidInput(format!(
                "{what}: spacing must be uniform (index {i})"
            )));
        }
    }
    Ok(dx)
}

/// Derivatives of a scalar field sampled on a terrain-following grid
/// (columns at uniform `x`, rows following the flow): physical `∂/∂x` at
/// fixed `y` and `∂/∂y`, via the chain rule through the row parameter.
struct TerrainDiff<T> {
    nx: usize,
    rows: usize,
    dq: T,
    periodic: bool,
    /// dy/dσ per node (σ = row index).
    y_sig: Vec<T>,
    /// dy/dx at fixed σ per node.
    y_q: Vec<T>,
}

impl<T: Real> TerrainDiff<T> {
    fn new(ff: &FlowField<T>) -> Result<Self> {
        let nx = ff.xs.len();
        let rows = ff.ny + 1;
        let dq = check_uniform(&ff.xs, "flow field columns")?;
        let mut td = TerrainDiff {
            nx,
            rows,
            dq,
            periodic: ff.periodic,
            y_sig: Vec::new(),
            y_q: Vec::new(),
        };
        let (y_q, y_sig) = td.raw_derivs(&ff.ys);
        for (j, &v) in y_sig.iter().enumerate() {
            if !(v > T::zero()) {
                return Err(Error::InvalidInput(format!(
                    "flow field rows must increase strictly within each column (node {j})"
                )));
            }
        }
        td.y_sig = y_sig;
        td.y_q = y_q;
        Ok(td)
    }

    /// (∂F/∂x at fixed σ, ∂F/∂σ) on the grid.
    fn raw_derivs(&self, vals: &[T]) -> (Vec<T>, Vec<T>) {
        let (nx, rows) = (self.nx, self.rows);
        let mut dq = vec![T::zero(); nx * rows];
        let mut dsig = vec![T::zero(); nx * rows];
        let mut col = vec![T::zero(); rows];
        for i in 0..nx {
            col.copy_from_slice(&vals[i * rows..(i + 1) * rows]);
            let d = fd4_column(&col, T::one());
            dsig[i * rows..(i + 1) * rows].copy_from_slice(&d);
        }
        let mut row = vec![T::zero(); nx];
        for j in 0..rows {
            for i in 0..nx {
                row[i] = vals[i * rows + j];
            }
            let d = d1_uniform(&row, self.dq, self.periodic);
            for i in 0..nx {
                dq[i * rows + j] = d[i];
            }
        }
        (dq, dsig)
    }

    /// Physical derivatives (`F_x` at fixed `y`, `F_y`).
    fn derivs(&self, vals: &[T]) -> (Vec<T>, Vec<T>) {
        let (fq, fsig) = self.raw_derivs(vals);
        let n = vals.len();
        let mut fx = vec![T::zero(); n];
        let mut fy = vec![T::zero(); n];
        for k in 0..n {
            fy[k] = fsig[k] / self.y_sig[k];
            fx[k] = fq[k] - self.y_q[k] * fy[k];
        }
        (fx, fy)
    }
}

fn validate_flow<T: Real>(ff: &FlowField<T>) -> Result<()> {
    let nx = ff.xs.len();
    let rows = ff.ny + 1;
    if nx < 5 || (ff.periodic && nx < 8) || rows < 5 {
        return Err(Error::InvalidInput(format!(
            "flow field too coarse for validation ({nx} columns × {rows} rows)"
        )));
    }
    let n = nx * rows;
    if ff.ys.len() != n || ff.u.len() != n || ff.v.len() != n || ff.p.len() != n {
        return Err(Error::InvalidInput(
            "flow field arrays disagree with the grid shape".into(),
        ));
    }
    if ff.eta.len() != nx {
        return Err(Error::InvalidInput(
            "flow field surface array disagrees with the column count".into(),
        ));
    }
    let finite = ff
        .ys
        .iter()
        .chain(&ff.u)
        .chain(&ff.v)
        .chain(&ff.p)
        .chain(&ff.eta)
        .all(|v| v.is_finite());
    if !finite || !ff.c.is_finite() || !(ff.g > T::zero()) || !(ff.d > T::zero()) {
        return Err(Error::InvalidInput(
            "flow field contains non-finite or non-physical entries".into(),
        ));
    }
    Ok(())
}

fn sup<T: Real>(vals: impl IntoIterator<Item = T>) -> T {
    vals.into_iter().fold(T::zero(), |m, v| m.max(v.abs()))
}

// ---------------------------------------------------------------------------
// Euler-form validation
// ---------------------------------------------------------------------------

/// Residuals of the velocity/pressure formulation on the field's grid.
///
/// Interior identities: mass conservation `u_x + v_y = 0` and both steady
/// momentum balances `(u-c) u_x + v u_y + P_x = 0`,
/// `(u-c) v_x + v v_y + P_y + g = 0`. Boundary identities: constant surface
/// pressure `P = P_atm`, the kinematic surface condition `v = (u-c) η'`,
/// and impermeability `v = 0` at the bed. The margin is `min(c - u)` — the
/// no-stagnation constraint.
pub fn euler_residual<T: Real>(ff: &FlowField<T>, tolerance: T) -> Result<ResidualReport<T>> {
    validate_flow(ff)?;
    let td = TerrainDiff::new(ff)?;
    let (ux, uy) = td.derivs(&ff.u);
    let (vx, vy) = td.derivs(&ff.v);
    let (px, py) = td.derivs(&ff.p);
    let n = ff.u.len();
    let nx = ff.xs.len();
    let rows = ff.ny + 1;
    let u_scale = sup(ff.u.iter().map(|&u| u - ff.c)).max(T::lit(1e-30));

    let mut mass = vec![T::zero(); n];
    let mut xmom = vec![T::zero(); n];
    let mut ymom = vec![T::zero(); n];
    let mut mass_scale = u_scale / ff.d;
    let mut xmom_scale = ff.g;
    let mut ymom_scale = ff.g;
    for k in 0..n {
        let rel = ff.u[k] - ff.c;
        mass[k] = ux[k] + vy[k];
        mass_scale = mass_scale.max(ux[k].abs()).max(vy[k].abs());
        xmom[k] = rel * ux[k] + ff.v[k] * uy[k] + px[k];
        xmom_scale = xmom_scale
            .max((rel * ux[k]).abs())
            .max((ff.v[k] * uy[k]).abs())
            .max(px[k].abs());
        ymom[k] = rel * vx[k] + ff.v[k] * vy[k] + py[k] + ff.g;
        ymom_scale = ymom_scale
            .max((rel * vx[k]).abs())
            .max((ff.v[k] * vy[k]).abs())
            .max(py[k].abs());
    }

    let eta_x = d1_uniform(&ff.eta, td.dq, ff.periodic);
    let top = rows - 1;
    let mut surf_p = Vec::with_capacity(nx);
    let mut kinematic = Vec::with_capacity(nx);
    let mut bed = Vec::with_capacity(nx);
    for i in 0..nx {
        let k = i * rows + top;
        surf_p.push(ff.p[k] - ff.p_atm);
        kinematic.push(ff.v[k] - (ff.u[k] - ff.c) * eta_x[i]);
        bed.push(ff.v[i * rows]);
    }

    let margin = ConstraintMargin {
        name: "min(c - u)",
        value: ff
            .u
            .iter()
            .fold(T::infinity(), |m, &u| m.min(ff.c - u)),
    };
    let components = vec![
        ResidualComponent::new("mass", mass, mass_scale),
        ResidualComponent::new("x-momentum", xmom, xmom_scale),
        ResidualComponent::new("y-momentum", ymom, ymom_scale),
        ResidualComponent::new("surface-pressure", surf_p, ff.g * ff.d),
        ResidualComponent::new("surface-kinematic", kinematic, u_scale),
        ResidualComponent::new("bed-impermeability", bed, u_scale),
    ];
    Ok(ResidualReport::finish(components, vec![margin], tolerance))
}

// ---------------------------------------------------------------------------
// Stream-function validation
// ---------------------------------------------------------------------------

/// Residuals of the stream-function formulation.
///
/// The stream function is rebuilt from the velocities by vertical
/// quadrature in each column (anchored to zero at the surface, up to one
/// global constant fixed by the mean). Identities checked: the vorticity
/// equation `Δψ = γ(-ψ)`, the surface Bernoulli identity
/// `|∇ψ|² + 2g(y+d) = Q` on `y = η`, and constancy of the per-column flux
/// `∫ (u-c) dy` (whose common value is `p0`). The margin is `min(c - u)`,
/// i.e. `-max ψ_y`.
pub fn stream_residual<T: Real>(
    ff: &FlowField<T>,
    gamma: &FuncP<T>,
    q_const: T,
    tolerance: T,
) -> Result<ResidualReport<T>> {
    validate_flow(ff)?;
    let td = TerrainDiff::new(ff)?;
    let nx = ff.xs.len();
    let rows = ff.ny + 1;
    let u_scale = sup(ff.u.iter().map(|&u| u - ff.c)).max(T::lit(1e-30));

    // Rebuild ψ column by column: ψ̂(y) = ∫_{bed}^{y} (u - c), so the
    // column tops are the per-column flux.
    let mut psi = vec![T::zero(); nx * rows];
    let mut tops = Vec::with_capacity(nx);
    let mut ys_col = vec![T::zero(); rows];
    let mut w_col = vec![T::zero(); rows];
    for i in 0..nx {
        for j in 0..rows {
            ys_col[j] = ff.ys[i * rows + j];
            w_col[j] = ff.u[i * rows + j] - ff.c;
        }
        let cum = cumulative_quad(&ys_col, &w_col);
        tops.push(*cum.last().unwrap());
        psi[i * rows..(i + 1) * rows].copy_from_slice(&cum);
    }
    let mean_top = tops.iter().fold(T::zero(), |s, &t| s + t) / T::of_usize(nx);
    // One global shift puts ψ = 0 at the surface (exactly so in the mean);
    // a per-column shift would hide the flux-constancy defect.
    for v in psi.iter_mut() {
        *v = *v - mean_top;
    }
    let flux_dev: Vec<T> = tops.iter().map(|&t| t - mean_top).collect();

    // Vorticity equation. ψ_y = u - c holds by construction (it is the
    // quadrature's integrand), so take it directly: differentiating the
    // cumulative sums numerically would re-inject the panel structure of
    // the quadrature rule, which the second y-derivative then amplifies at
    // the boundary rows.
    let psi_y: Vec<T> = ff.u.iter().map(|&u| u - ff.c).collect();
    let (psi_x, _) = td.derivs(&psi);
    let (psi_xx, _) = td.derivs(&psi_x);
    let (_, psi_yy) = td.derivs(&psi_y);
    let mut vort = vec![T::zero(); nx * rows];
    let mut vort_scale = u_scale / ff.d;
    for k in 0..nx * rows {
        let rhs = gamma.eval(-psi[k]);
        vort[k] = psi_xx[k] + psi_yy[k] - rhs;
        vort_scale = vort_scale
            .max(psi_xx[k].abs())
            .max(psi_yy[k].abs())
            .max(rhs.abs());
    }

    // Surface Bernoulli.
    let top = rows - 1;
    let mut bern = Vec::with_capacity(nx);
    let mut bern_scale = q_const.abs().max(T::lit(1e-30));
    for i in 0..nx {
        let k = i * rows + top;
        let rel = ff.u[k] - ff.c;
        let speed2 = rel * rel + ff.v[k] * ff.v[k];
        let head = (ff.g + ff.g) * (ff.eta[i] + ff.d);
        bern.push(speed2 + head - q_const);
        bern_scale = bern_scale.max(speed2).max(head.abs());
    }

    let margin = ConstraintMargin {
        name: "min(c - u)",
        value: ff
            .u
            .iter()
            .fold(T::infinity(), |m, &u| m.min(ff.c - u)),
    };
    let components = vec![
        ResidualComponent::new("vorticity", vort, vort_scale),
        ResidualComponent::new("surface-bernoulli", bern, bern_scale),
        ResidualComponent::new(
            "flux-constancy",
            flux_dev,
            mean_top.abs().max(u_scale * ff.d),
        ),
    ];
    Ok(ResidualReport::finish(components, vec![margin], tolerance))
}

// ---------------------------------------------------------------------------
// Height-equation validation
// ---------------------------------------------------------------------------

/// Residuals of the hodograph (height-function) formulation on the field's
/// own `(q, p)` grid.
///
/// Interior: `(1+h_q²) h_pp - 2 h_p h_q h_pq + h_p² h_qq - γ(p) h_p³ = 0`.
/// Boundaries: `1 + h_q² + (2 g h - Q) h_p² = 0` on `p = 0` and `h = 0` on
/// `p = p0`. The margin is `min h_p` — the hodograph form of the
/// no-stagnation constraint.
pub fn height_eq_residual<T: Real>(
    hf: &HeightField<T>,
    tolerance: T,
) -> Result<ResidualReport<T>> {
    let nq = hf.ncols();
    let rows = hf.ps.len();
    if nq < 6 || (hf.periodic && nq < 8) || rows < 6 {
        return Err(Error::InvalidInput(format!(
            "height field too coarse for validation ({nq} columns × {rows} rows)"
        )));
    }
    if hf.h.len() != nq * rows {
        return Err(Error::InvalidInput(
            "height array disagrees with the grid shape".into(),
        ));
    }
    if hf.h.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("height field has non-finite entries".into()));
    }
    let dq = check_uniform(&hf.qs, "height field columns")?;
    let dp = check_uniform(&hf.ps, "height field rows")?;
    if (hf.ps[0] - hf.p0).abs() > T::lit(1e-9) * hf.p0.abs()
        || hf.ps[rows - 1].abs() > T::lit(1e-9) * hf.p0.abs()
    {
        return Err(Error::InvalidInput(
            "height field rows must run from p0 to 0".into(),
        ));
    }

    // Derivative grids with the module's own stencils.
    let n = nq * rows;
    let mut h_p = vec![T::zero(); n];
    let mut h_pp = vec![T::zero(); n];
    let mut col = vec![T::zero(); rows];
    for i in 0..nq {
        col.copy_from_slice(&hf.h[i * rows..(i + 1) * rows]);
        let d1 = fd4_column(&col, dp);
        let d2 = d2_uniform(&col, dp, false);
        h_p[i * rows..(i + 1) * rows].copy_from_slice(&d1);
        h_pp[i * rows..(i + 1) * rows].copy_from_slice(&d2);
    }
    let mut h_q = vec![T::zero(); n];
    let mut h_qq = vec![T::zero(); n];
    let mut h_pq = vec![T::zero(); n];
    let mut row = vec![T::zero(); nq];
    for j in 0..rows {
        for i in 0..nq {
            row[i] = hf.h[i * rows + j];
        }
        let d1 = d1_uniform(&row, dq, hf.periodic);
        let d2 = d2_uniform(&row, dq, hf.periodic);
        for i in 0..nq {
            h_q[i * rows + j] = d1[i];
            h_qq[i * rows + j] = d2[i];
        }
        for i in 0..nq {
            row[i] = h_p[i * rows + j];
        }
        let dpq = d1_uniform(&row, dq, hf.periodic);
        for i in 0..nq {
            h_pq[i * rows + j] = dpq[i];
        }
    }

    let h_sup = sup(hf.h.iter().copied()).max(T::lit(1e-30));
    let mut interior = vec![T::zero(); n];
    let mut int_scale = h_sup / (hf.p0 * hf.p0);
    let mut min_hp = T::infinity();
    for i in 0..nq {
        for j in 0..rows {
            let k = i * rows + j;
            let t1 = (T::one() + h_q[k] * h_q[k]) * h_pp[k];
            let t2 = T::lit(2.0) * h_p[k] * h_q[k] * h_pq[k];
            let t3 = h_p[k] * h_p[k] * h_qq[k];
            let t4 = hf.gamma.eval(hf.ps[j]) * h_p[k] * h_p[k] * h_p[k];
            interior[k] = t1 - t2 + t3 - t4;
            int_scale = int_scale
                .max(t1.abs())
                .max(t2.abs())
                .max(t3.abs())
                .max(t4.abs());
            min_hp = min_hp.min(h_p[k]);
        }
    }

    let top = rows - 1;
    let mut surf = Vec::with_capacity(nq);
    let mut surf_scale = T::one();
    let mut bed = Vec::with_capacity(nq);
    for i in 0..nq {
        let k = i * rows + top;
        let press = ((hf.g + hf.g) * hf.h[k] - hf.q_const) * h_p[k] * h_p[k];
        surf.push(T::one() + h_q[k] * h_q[k] + press);
        surf_scale = surf_scale.max(press.abs());
        bed.push(hf.h[i * rows]);
    }

    let margin = ConstraintMargin {
        name: "min h_p",
        value: min_hp,
    };
    let components = vec![
        ResidualComponent::new("interior", interior, int_scale),
        ResidualComponent::new("surface-boundary", surf, surf_scale),
        ResidualComponent::new("bed-height", bed, h_sup),
    ];
    Ok(ResidualReport::finish(components, vec![margin], tolerance))
}

// ---------------------------------------------------------------------------
// Profile comparison
// ---------------------------------------------------------------------------

/// Distance metrics between two periodic surface profiles.
#[derive(Debug, Clone, Copy)]
pub struct ProfileMetrics<T> {
    /// Pointwise sup-distance at matching abscissae.
    pub sup: T,
    /// Root-mean-square distance at matching abscissae.
    pub l2: T,
    /// Sup-distance after the optimal horizontal alignment.
    pub aligned_sup: T,
    /// The aligning shift: the second profile evaluated at `x + shift`
    /// best matches the first.
    pub shift: T,
}

/// Strips the closing duplicate from a closed uniform profile and returns
/// `(period, open samples, first abscissa)`.
fn open_profile<T: Real>(xs: &[T], es: &[T]) -> Result<(T, Vec<T>, T)> {
    if xs.len() != es.len() {
        return Err(Error::InvalidInput(
            "profile abscissae and elevations differ in length".into(),
        ));
    }
    if xs.len() < 9 {
        return Err(Error::InvalidInput(
            "profile needs at least 9 samples over the closed period".into(),
        ));
    }
    if xs.iter().chain(es.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("profile has non-finite entries".into()));
    }
    check_uniform(xs, "profile abscissae")?;
    let period = *xs.last().unwrap() - xs[0];
    Ok((period, es[..es.len() - 1].to_vec(), xs[0]))
}

/// Compares two surface profiles, each sampled uniformly over one closed
/// period (both endpoints present).
///
/// Both profiles are resampled trigonometrically onto a common grid; `sup`
/// and `l2` compare them at matching abscissae, and the aligned metric
/// reports the sup-distance after shifting the second profile by the
/// horizontal offset that best matches the first (found by a scan over a
/// fine shift grid and a parabolic refinement). The metrics are symmetric
/// in the two arguments up to the sign of `shift`. Periods must agree to
/// within `1e-9` relative; otherwise the profiles describe different waves
/// and the comparison is refused.
pub fn compare_profiles<T: Real>(
    xs1: &[T],
    es1: &[T],
    xs2: &[T],
    es2: &[T],
) -> Result<ProfileMetrics<T>> {
    let (per1, v1, x01) = open_profile(xs1, es1)?;
    let (per2, v2, x02) = open_profile(xs2, es2)?;
    if (per1 - per2).abs() > T::lit(1e-9) * per1.abs().max(per2.abs()) {
        return Err(Error::InvalidInput(format!(
            "profile periods differ: {} vs {}",
            per1.widen(),
            per2.widen()
        )));
    }
    let period = (per1 + per2) * T::lit(0.5);

    // Common comparison grid and a 4× finer sampling of the second profile
    // for the shift scan.
    let n = v1.len().max(v2.len()).max(64);
    let fine = 4 * n;
    let xk = |k: usize, m: usize| period * T::of_usize(k) / T::of_usize(m);
    let f1: Vec<T> = (0..n).map(|k| trig_interp(&v1, period, x01, xk(k, n))).collect();
    let f2: Vec<T> = (0..n).map(|k| trig_interp(&v2, period, x02, xk(k, n))).collect();
    let f2_fine: Vec<T> = (0..fine)
        .map(|k| trig_interp(&v2, period, x02, xk(k, fine)))
        .collect();

    let mut sup_d = T::zero();
    let mut sq = T::zero();
    for k in 0..n {
        let d = f1[k] - f2[k];
        sup_d = sup_d.max(d.abs());
        sq = sq + d * d;
    }
    let l2 = (sq / T::of_usize(n)).sqrt();

    // L² objective on the fine shift grid: shifting by j fine steps aligns
    // f1[k] with f2_fine[4k + j].
    let objective = |j: usize| -> T {
        let mut s = T::zero();
        for k in 0..n {
            let d = f1[k] - f2_fine[(4 * k + j) % fine];
            s = s + d * d;
        }
        s
    };
    let mut best_j = 0usize;
    let mut best = objective(0);
    for j in 1..fine {
        let o = objective(j);
        if o < best {
            best = o;
            best_j = j;
        }
    }
    // Parabolic refinement through the neighbouring shifts.
    let om = objective((best_j + fine - 1) % fine);
    let op = objective((best_j + 1) % fine);
    let denom = om - best - best + op;
    let frac = if denom > T::zero() {
        (T::lit(0.5) * (om - op) / denom).max(-T::one()).min(T::one())
    } else {
        T::zero()
    };
    let ds = period / T::of_usize(fine);
    let mut shift = (T::of_usize(best_j) + frac) * ds;
    if shift > period * T::lit(0.5) {
        shift = shift - period;
    }

    let mut aligned = T::zero();
    for k in 0..n {
        let d = f1[k] - trig_interp(&v2, period, x02, xk(k, n) + shift);
        aligned = aligned.max(d.abs());
    }
    Ok(ProfileMetrics {
        sup: sup_d,
        l2,
        aligned_sup: aligned.min(sup_d),
        shift,
    })
}
