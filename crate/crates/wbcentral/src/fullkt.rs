//! Fully-discrete well-balanced central scheme on quadrilateral Riemann-fan
//! subdomains.
//!
//! One step runs Reconstruction → Evolution → Projection on the deviation
//! field. The one-sided local speeds `a±_{i+1/2,k}`, `b±_{j,m+1/2}` (from the
//! full state, floored at ±ε) place the fan vertices around every cell
//! corner; the cell splits into nine subdomains: the smooth central
//! quadrilateral `D_{j,k}`, four side trapezoids over the interfaces and four
//! corner rectangles over the cell corners. Each subdomain is evolved by the
//! divergence theorem: its old average (exact centroid values of the linear
//! reconstruction on the overlap pieces `C^I`), a midpoint-in-time /
//! trapezoid-in-space edge-flux quadrature fed by a Taylor half-step
//! predictor, and an area-weighted source average. The projection rebuilds
//! uniform cell averages from linear reconstructions of the unsmooth
//! subdomains about their centers of mass.

use crate::geometry::{Rect, SmallPoly};
use crate::grid::{fill_ghosts, BoundarySpec, Field2, Grid2D, StateField};
use crate::models::{Axis, BalanceLaw, ModelError, StationaryField};
use crate::reconstruct::{
    interface_states, mc_theta_slopes, minmod3, point_value_unchecked, InterfaceStates,
    SlopeField,
};
use crate::{SchemeConfig, SolverError};

/// Interface-local one-sided speeds. `a±` lives on x-interfaces `(i+1/2, k)`
/// for `i ∈ [−1, nx−1]`, `k ∈ [−1, ny]`; `b±` on y-interfaces `(j, m+1/2)`
/// for `j ∈ [−1, nx]`, `m ∈ [−1, ny−1]`. Lookups outside those ranges wrap
/// under periodic boundaries and clamp otherwise.
#[derive(Debug, Clone)]
pub struct SpeedField {
    pub a_plus: Field2<f64>,
    pub a_minus: Field2<f64>,
    pub b_plus: Field2<f64>,
    pub b_minus: Field2<f64>,
    periodic_x: bool,
    periodic_y: bool,
    nx: isize,
    ny: isize,
}

#[inline]
fn resolve(i: isize, lo: isize, hi: isize, periodic: bool, n: isize) -> isize {
    if i >= lo && i <= hi {
        i
    } else if periodic {
        i.rem_euclid(n)
    } else {
        i.clamp(lo, hi)
    }
}

impl SpeedField {
    /// `(a⁻, a⁺)` at x-interface `(i+1/2, k)`.
    #[inline]
    pub fn a(&self, i: isize, k: isize) -> (f64, f64) {
        let (il, ih, kl, kh) = self.a_plus.bounds();
        let i = resolve(i, il, ih, self.periodic_x, self.nx);
        let k = resolve(k, kl, kh, self.periodic_y, self.ny);
        (self.a_minus.at(i, k), self.a_plus.at(i, k))
    }

    /// `(b⁻, b⁺)` at y-interface `(j, m+1/2)`.
    #[inline]
    pub fn b(&self, j: isize, m: isize) -> (f64, f64) {
        let (jl, jh, ml, mh) = self.b_plus.bounds();
        let j = resolve(j, jl, jh, self.periodic_x, self.nx);
        let m = resolve(m, ml, mh, self.periodic_y, self.ny);
        (self.b_minus.at(j, m), self.b_plus.at(j, m))
    }

    /// `(max(a⁺, −a⁻), max(b⁺, −b⁻))` over the interfaces of interior cells.
    pub fn max_interior(&self, grid: &Grid2D) -> (f64, f64) {
        let (nx, ny) = (grid.nx as isize, grid.ny as isize);
        let mut ma: f64 = 0.0;
        let mut mb: f64 = 0.0;
        for k in 0..ny {
            for i in -1..nx {
                let (am, ap) = self.a(i, k);
                ma = ma.max(ap).max(-am);
            }
        }
        for m in -1..ny {
            for j in 0..nx {
                let (bm, bp) = self.b(j, m);
                mb = mb.max(bp).max(-bm);
            }
        }
        (ma, mb)
    }
}

#[inline]
fn add<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for c in 0..N {
        out[c] = a[c] + b[c];
    }
    out
}

#[inline]
fn sub<const N: usize>(a: &[f64; N], b: &[f64; N]) -> [f64; N] {
    let mut out = [0.0; N];
    for c in 0..N {
        out[c] = a[c] - b[c];
    }
    out
}

/// Adds the stationary field at the cell-edge midpoints to deviation
/// interface values, giving full-state interface values for the speed
/// estimates.
pub fn full_interface_states<S, const N: usize>(
    dev_iface: &InterfaceStates<N>,
    stat: &S,
    grid: &Grid2D,
) -> InterfaceStates<N>
where
    S: StationaryField<N>,
{
    let mut out = dev_iface.clone();
    let (jl, jh, kl, kh) = dev_iface.east.bounds();
    for k in kl..=kh {
        for j in jl..=jh {
            let (xc, yc) = (grid.xc(j), grid.yc(k));
            out.east
                .set(j, k, add(&dev_iface.east.at(j, k), &stat.value(grid.xi(j), yc)));
            out.west.set(
                j,
                k,
                add(&dev_iface.west.at(j, k), &stat.value(grid.xi(j - 1), yc)),
            );
            out.north
                .set(j, k, add(&dev_iface.north.at(j, k), &stat.value(xc, grid.yi(k))));
            out.south.set(
                j,
                k,
                add(&dev_iface.south.at(j, k), &stat.value(xc, grid.yi(k - 1))),
            );
        }
    }
    out
}

/// One-sided speeds from full-state interface values: per x-interface,
/// `a⁺ = max(λ_N(left), λ_N(right), ε)` and
/// `a⁻ = min(λ_1(left), λ_1(right), −ε)`; likewise for `b±` in y.
pub fn local_speeds<M, const N: usize>(
    full_iface: &InterfaceStates<N>,
    model: &M,
    eps: f64,
    bc: &BoundarySpec,
    grid: &Grid2D,
) -> Result<SpeedField, SolverError>
where
    M: BalanceLaw<N>,
{
    let (jl, jh, kl, kh) = full_iface.east.bounds();
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut a_plus = Field2::filled(jl, jh - 1, kl, kh, 0.0);
    let mut a_minus = a_plus.clone();
    for k in kl..=kh {
        for i in jl..jh {
            let left = full_iface.east.at(i, k);
            let right = full_iface.west.at(i + 1, k);
            let (l1l, lnl) = model
                .wave_bounds(&left, Axis::X)
                .map_err(|e| SolverError::nonphysical(format!("x-interface ({i}+1/2, {k})"), e))?;
            let (l1r, lnr) = model
                .wave_bounds(&right, Axis::X)
                .map_err(|e| SolverError::nonphysical(format!("x-interface ({i}+1/2, {k})"), e))?;
            a_plus.set(i, k, lnl.max(lnr).max(eps));
            a_minus.set(i, k, l1l.min(l1r).min(-eps));
        }
    }
    let mut b_plus = Field2::filled(jl, jh, kl, kh - 1, 0.0);
    let mut b_minus = b_plus.clone();
    for m in kl..kh {
        for j in jl..=jh {
            let lower = full_iface.north.at(j, m);
            let upper = full_iface.south.at(j, m + 1);
            let (l1l, lnl) = model
                .wave_bounds(&lower, Axis::Y)
                .map_err(|e| SolverError::nonphysical(format!("y-interface ({j}, {m}+1/2)"), e))?;
            let (l1r, lnr) = model
                .wave_bounds(&upper, Axis::Y)
                .map_err(|e| SolverError::nonphysical(format!("y-interface ({j}, {m}+1/2)"), e))?;
            b_plus.set(j, m, lnl.max(lnr).max(eps));
            b_minus.set(j, m, l1l.min(l1r).min(-eps));
        }
    }
    Ok(SpeedField {
        a_plus,
        a_minus,
        b_plus,
        b_minus,
        periodic_x: bc.periodic_x(),
        periodic_y: bc.periodic_y(),
        nx,
        ny,
    })
}

/// Fan-vertex lattice. Around each cell corner `(x_{i+1/2}, y_{m+1/2})` sit
/// four vertices `(x∓, y∓)`:
///
/// ```text
/// x⁻ = x_{i+1/2} + dt·min(a⁻_{i+1/2,m}, a⁻_{i+1/2,m+1})
/// x⁺ = x_{i+1/2} + dt·max(a⁺_{i+1/2,m}, a⁺_{i+1/2,m+1})
/// y⁻ = y_{m+1/2} + dt·min(b⁻_{i,m+1/2}, b⁻_{i+1,m+1/2})
/// y⁺ = y_{m+1/2} + dt·max(b⁺_{i,m+1/2}, b⁺_{i+1,m+1/2})
/// ```
///
/// Stored for corners `(i, m) ∈ [−2, nx] × [−2, ny]`.
#[derive(Debug, Clone)]
pub struct FanVertices {
    pub xm: Field2<f64>,
    pub xp: Field2<f64>,
    pub ym: Field2<f64>,
    pub yp: Field2<f64>,
}

impl FanVertices {
    /// Vertex at corner `(i, m)`, side `(sx, sy)` with `false = minus`.
    #[inline]
    pub fn vertex(&self, i: isize, m: isize, sx: bool, sy: bool) -> (f64, f64) {
        (
            if sx { self.xp.at(i, m) } else { self.xm.at(i, m) },
            if sy { self.yp.at(i, m) } else { self.ym.at(i, m) },
        )
    }

    /// Central subdomain `D_{j,k}`, counter-clockwise from the SW vertex.
    pub fn central_quad(&self, j: isize, k: isize) -> [(f64, f64); 4] {
        [
            self.vertex(j - 1, k - 1, true, true),
            self.vertex(j, k - 1, false, true),
            self.vertex(j, k, false, false),
            self.vertex(j - 1, k, true, false),
        ]
    }

    /// Side subdomain over x-interface `(i+1/2, k)` (horizontal top/bottom
    /// edges, slanted left/right edges).
    pub fn xside_quad(&self, i: isize, k: isize) -> [(f64, f64); 4] {
        [
            self.vertex(i, k - 1, false, true),
            self.vertex(i, k - 1, true, true),
            self.vertex(i, k, true, false),
            self.vertex(i, k, false, false),
        ]
    }

    /// Side subdomain over y-interface `(j, m+1/2)` (vertical left/right
    /// edges).
    pub fn yside_quad(&self, j: isize, m: isize) -> [(f64, f64); 4] {
        [
            self.vertex(j - 1, m, true, false),
            self.vertex(j, m, false, false),
            self.vertex(j, m, false, true),
            self.vertex(j - 1, m, true, true),
        ]
    }

    /// Corner subdomain at corner `(i, m)`: an axis-aligned rectangle.
    pub fn corner_quad(&self, i: isize, m: isize) -> [(f64, f64); 4] {
        [
            self.vertex(i, m, false, false),
            self.vertex(i, m, true, false),
            self.vertex(i, m, true, true),
            self.vertex(i, m, false, true),
        ]
    }
}

/// Places the fan vertices for time step `dt` and rejects any `dt` that
/// pushes a vertex out of its cell or collapses a central subdomain.
pub fn fan_vertices(
    speeds: &SpeedField,
    dt: f64,
    grid: &Grid2D,
) -> Result<FanVertices, SolverError> {
    if dt < 0.0 || !dt.is_finite() {
        return Err(SolverError::DegenerateFan { j: 0, k: 0, dt });
    }
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let (il, ih, ml, mh) = (-2, nx, -2, ny);
    let mut xm = Field2::filled(il, ih, ml, mh, 0.0);
    let mut xp = xm.clone();
    let mut ym = xm.clone();
    let mut yp = xm.clone();
    for m in ml..=mh {
        for i in il..=ih {
            let (am0, ap0) = speeds.a(i, m);
            let (am1, ap1) = speeds.a(i, m + 1);
            xm.set(i, m, grid.xi(i) + dt * am0.min(am1));
            xp.set(i, m, grid.xi(i) + dt * ap0.max(ap1));
            let (bm0, bp0) = speeds.b(i, m);
            let (bm1, bp1) = speeds.b(i + 1, m);
            ym.set(i, m, grid.yi(m) + dt * bm0.min(bm1));
            yp.set(i, m, grid.yi(m) + dt * bp0.max(bp1));
        }
    }
    let verts = FanVertices { xm, xp, ym, yp };

    // A valid fan keeps the vertex lattice ordered along both axes around
    // every cell (which also keeps each vertex inside its cell, since
    // a⁺ > 0 > a⁻ pins the fans to their interfaces) and the central
    // subdomain at positive area.
    for k in -1..=ny {
        for j in -1..=nx {
            let ordered = (k - 1..=k).all(|m| verts.xp.at(j - 1, m) <= verts.xm.at(j, m))
                && (j - 1..=j).all(|i| verts.yp.at(i, k - 1) <= verts.ym.at(i, k));
            let (area, _) = SmallPoly::from_points(&verts.central_quad(j, k)).area_centroid();
            if !ordered || area <= 0.0 {
                return Err(SolverError::DegenerateFan { j, k, dt });
            }
        }
    }
    Ok(verts)
}

/// Overlap-piece index within a cell: central, four sides, four corners.
pub const OV_C: usize = 0;
pub const OV_E: usize = 1;
pub const OV_W: usize = 2;
pub const OV_N: usize = 3;
pub const OV_S: usize = 4;
pub const OV_NE: usize = 5;
pub const OV_NW: usize = 6;
pub const OV_SE: usize = 7;
pub const OV_SW: usize = 8;

/// Area and center of mass of one overlap `C^I_{j,k}`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct OverlapPiece {
    pub area: f64,
    pub cx: f64,
    pub cy: f64,
}

/// The nine overlap pieces of every cell in `[−1, nx] × [−1, ny]`. Their
/// areas partition dx·dy cell by cell.
#[derive(Debug, Clone)]
pub struct FanGeometry {
    pub pieces: Field2<[OverlapPiece; 9]>,
}

fn piece_of(poly: &SmallPoly) -> OverlapPiece {
    let (area, (cx, cy)) = poly.area_centroid();
    OverlapPiece {
        area: area.max(0.0),
        cx,
        cy,
    }
}

/// Clips each subdomain against the cells it touches with the generic
/// convex-polygon routine. Cells are independent, so the fill runs
/// row-parallel with deterministic output.
pub fn fan_geometry(verts: &FanVertices, grid: &Grid2D) -> FanGeometry {
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut pieces = Field2::filled(-1, nx, -1, ny, [OverlapPiece::default(); 9]);
    pieces.par_fill(|j, k| {
        let rect = Rect {
            x_lo: grid.xi(j - 1),
            x_hi: grid.xi(j),
            y_lo: grid.yi(k - 1),
            y_hi: grid.yi(k),
        };
        let clip =
            |quad: [(f64, f64); 4]| piece_of(&SmallPoly::from_points(&quad).clip_rect(rect));
        let mut cell = [OverlapPiece::default(); 9];
        cell[OV_C] = piece_of(&SmallPoly::from_points(&verts.central_quad(j, k)));
        cell[OV_E] = clip(verts.xside_quad(j, k));
        cell[OV_W] = clip(verts.xside_quad(j - 1, k));
        cell[OV_N] = clip(verts.yside_quad(j, k));
        cell[OV_S] = clip(verts.yside_quad(j, k - 1));
        cell[OV_NE] = clip(verts.corner_quad(j, k));
        cell[OV_NW] = clip(verts.corner_quad(j - 1, k));
        cell[OV_SE] = clip(verts.corner_quad(j, k - 1));
        cell[OV_SW] = clip(verts.corner_quad(j - 1, k - 1));
        cell
    });
    FanGeometry { pieces }
}

/// A fan subdomain, addressed on the staggered lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subdomain {
    Central { j: isize, k: isize },
    /// Over x-interface `(i+1/2, k)`.
    XSide { i: isize, k: isize },
    /// Over y-interface `(j, m+1/2)`.
    YSide { j: isize, m: isize },
    /// Over cell corner `(i+1/2, m+1/2)`.
    Corner { i: isize, m: isize },
}

/// `(cell_j, cell_k, piece index)` for the overlap pieces composing a
/// subdomain.
fn sub_pieces(sub: Subdomain) -> ([(isize, isize, usize); 4], usize) {
    match sub {
        Subdomain::Central { j, k } => ([(j, k, OV_C), (0, 0, 0), (0, 0, 0), (0, 0, 0)], 1),
        Subdomain::XSide { i, k } => (
            [(i, k, OV_E), (i + 1, k, OV_W), (0, 0, 0), (0, 0, 0)],
            2,
        ),
        Subdomain::YSide { j, m } => (
            [(j, m, OV_N), (j, m + 1, OV_S), (0, 0, 0), (0, 0, 0)],
            2,
        ),
        Subdomain::Corner { i, m } => (
            [
                (i, m, OV_NE),
                (i + 1, m, OV_NW),
                (i, m + 1, OV_SE),
                (i + 1, m + 1, OV_SW),
            ],
            4,
        ),
    }
}

/// Area-weighted average of the piecewise-linear reconstruction over a
/// subdomain: exact, since the mean of a linear function over a polygon is
/// its centroid value and each overlap piece is averaged with its owning
/// cell's reconstruction.
pub fn subdomain_average<const N: usize>(
    dev: &StateField<N>,
    slopes: &SlopeField<N>,
    geom: &FanGeometry,
    sub: Subdomain,
) -> Result<[f64; N], SolverError> {
    let (pieces, n) = sub_pieces(sub);
    let mut total = 0.0;
    let mut acc = [0.0; N];
    for &(j, k, idx) in &pieces[..n] {
        let p = geom.pieces.at(j, k)[idx];
        if p.area == 0.0 {
            continue;
        }
        let q = point_value_unchecked(dev, slopes, j, k, p.cx, p.cy);
        for c in 0..N {
            acc[c] += p.area * q[c];
        }
        total += p.area;
    }
    if total <= 0.0 {
        let (j, k) = match sub {
            Subdomain::Central { j, k } => (j, k),
            Subdomain::XSide { i, k } => (i, k),
            Subdomain::YSide { j, m } => (j, m),
            Subdomain::Corner { i, m } => (i, m),
        };
        return Err(SolverError::DegenerateFan { j, k, dt: 0.0 });
    }
    for c in acc.iter_mut() {
        *c /= total;
    }
    Ok(acc)
}

/// Taylor half-step value `Δq^{n+1/2}` of cell `(j, k)` at an in-cell point:
/// the reconstructed point value advanced by half a step with the cell's
/// limited slopes of the deviation-flux values and the source at the point.
pub fn predictor_midpoint<M, S, const N: usize>(
    dev: &StateField<N>,
    stat: &S,
    model: &M,
    dt: f64,
    theta: f64,
    j: isize,
    k: isize,
    x: f64,
    y: f64,
) -> Result<[f64; N], SolverError>
where
    M: BalanceLaw<N>,
    S: StationaryField<N>,
{
    let grid = dev.grid;
    let slopes = mc_theta_slopes(dev, theta);
    let fcell = |jj: isize, kk: isize, axis: Axis| -> Result<[f64; N], SolverError> {
        let qt = stat.value(grid.xc(jj), grid.yc(kk));
        let full = add(&dev.at(jj, kk), &qt);
        let (f, f0) = match axis {
            Axis::X => (model.flux_x(&full), model.flux_x(&qt)),
            Axis::Y => (model.flux_y(&full), model.flux_y(&qt)),
        };
        let err = |e: ModelError| SolverError::nonphysical(format!("cell ({jj}, {kk})"), e);
        Ok(sub(&f.map_err(err)?, &f0.map_err(err)?))
    };
    let fe = fcell(j + 1, k, Axis::X)?;
    let fc = fcell(j, k, Axis::X)?;
    let fw = fcell(j - 1, k, Axis::X)?;
    let gn = fcell(j, k + 1, Axis::Y)?;
    let gc = fcell(j, k, Axis::Y)?;
    let gs = fcell(j, k - 1, Axis::Y)?;
    let mut fx = [0.0; N];
    let mut gy = [0.0; N];
    for c in 0..N {
        fx[c] = minmod3(
            theta * (fe[c] - fc[c]) / grid.dx,
            (fe[c] - fw[c]) / (2.0 * grid.dx),
            theta * (fc[c] - fw[c]) / grid.dx,
        );
        gy[c] = minmod3(
            theta * (gn[c] - gc[c]) / grid.dy,
            (gn[c] - gs[c]) / (2.0 * grid.dy),
            theta * (gc[c] - gs[c]) / grid.dy,
        );
    }
    let dqn = crate::reconstruct::point_value(dev, &slopes, j, k, x, y)?;
    let src = model.source(&dqn, x, y);
    let mut out = dqn;
    for c in 0..N {
        out[c] += 0.5 * dt * (src[c] - fx[c] - gy[c]);
    }
    Ok(out)
}

/// Orientation of an edge-flux segment: `Vertical` edges carry the
/// east-pointing normal (rotate the bottom→top direction clockwise),
/// `Horizontal` edges the north-pointing normal (rotate west→east
/// counter-clockwise).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeCase {
    Vertical,
    Horizontal,
}

/// Trapezoid edge flux
/// `H = (1/2)[Nx·(F̂₁ + F̂₂) + Ny·(Ĝ₁ + Ĝ₂)]` with the unnormalized normal
/// `N` of length `|p2 − p1|` and deviation fluxes
/// `F̂ᵢ = f(Δqᵢ + q̃ᵢ) − f(q̃ᵢ)` at the endpoints. Zero-length edges return
/// zero.
pub fn edge_flux<M, const N: usize>(
    case: EdgeCase,
    p1: (f64, f64),
    p2: (f64, f64),
    dev_half: (&[f64; N], &[f64; N]),
    stat_vals: (&[f64; N], &[f64; N]),
    model: &M,
) -> Result<[f64; N], SolverError>
where
    M: BalanceLaw<N>,
{
    let err = |e: ModelError| {
        SolverError::nonphysical(format!("edge ({:?}) – ({:?})", p1, p2), e)
    };
    let fg = |dev: &[f64; N], qt: &[f64; N]| -> Result<([f64; N], [f64; N]), SolverError> {
        let full = add(dev, qt);
        let f = sub(&model.flux_x(&full).map_err(err)?, &model.flux_x(qt).map_err(err)?);
        let g = sub(&model.flux_y(&full).map_err(err)?, &model.flux_y(qt).map_err(err)?);
        Ok((f, g))
    };
    let (f1, g1) = fg(dev_half.0, stat_vals.0)?;
    let (f2, g2) = fg(dev_half.1, stat_vals.1)?;
    let (dx, dy) = (p2.0 - p1.0, p2.1 - p1.1);
    let (nx_, ny_) = match case {
        EdgeCase::Vertical => (dy, -dx),
        EdgeCase::Horizontal => (-dy, dx),
    };
    let mut out = [0.0; N];
    for c in 0..N {
        out[c] = 0.5 * (nx_ * (f1[c] + f2[c]) + ny_ * (g1[c] + g2[c]));
    }
    Ok(out)
}

/// Area-weighted source average over a subdomain from
/// `(area, centroid, Δq^{n+1/2} at centroid)` triples of its pieces.
pub fn source_average<M, const N: usize>(
    model: &M,
    pieces: &[(f64, (f64, f64), [f64; N])],
) -> Result<[f64; N], SolverError>
where
    M: BalanceLaw<N>,
{
    let total: f64 = pieces.iter().map(|p| p.0).sum();
    if total <= 0.0 {
        return Err(SolverError::DegenerateFan { j: 0, k: 0, dt: 0.0 });
    }
    let mut acc = [0.0; N];
    for (area, (x, y), dq) in pieces {
        let s = model.source(dq, *x, *y);
        for c in 0..N {
            acc[c] += area * s[c];
        }
    }
    for c in acc.iter_mut() {
        *c /= total;
    }
    Ok(acc)
}

/// Intermediate averages, centroids, and projection slopes of one subdomain
/// family.
#[derive(Debug, Clone)]
pub struct SubdomainSet<const N: usize> {
    pub avg: Field2<[f64; N]>,
    pub area: Field2<f64>,
    pub cx: Field2<f64>,
    pub cy: Field2<f64>,
    pub wx: Field2<[f64; N]>,
    pub wy: Field2<[f64; N]>,
}

impl<const N: usize> SubdomainSet<N> {
    fn new(j_lo: isize, j_hi: isize, k_lo: isize, k_hi: isize) -> Self {
        SubdomainSet {
            avg: Field2::filled(j_lo, j_hi, k_lo, k_hi, [0.0; N]),
            area: Field2::filled(j_lo, j_hi, k_lo, k_hi, 0.0),
            cx: Field2::filled(j_lo, j_hi, k_lo, k_hi, 0.0),
            cy: Field2::filled(j_lo, j_hi, k_lo, k_hi, 0.0),
            wx: Field2::filled(j_lo, j_hi, k_lo, k_hi, [0.0; N]),
            wy: Field2::filled(j_lo, j_hi, k_lo, k_hi, [0.0; N]),
        }
    }
}

/// All evolved subdomain averages `w̄^{n+1}` of one step.
#[derive(Debug, Clone)]
pub struct Intermediate<const N: usize> {
    pub central: SubdomainSet<N>,
    pub xside: SubdomainSet<N>,
    pub yside: SubdomainSet<N>,
    pub corner: SubdomainSet<N>,
}

/// Deviation fluxes at one fan vertex at the half step.
#[derive(Debug, Clone, Copy)]
struct VertFlux<const N: usize> {
    f: [f64; N],
    g: [f64; N],
}

impl<const N: usize> Default for VertFlux<N> {
    fn default() -> Self {
        VertFlux {
            f: [0.0; N],
            g: [0.0; N],
        }
    }
}

/// Ghost-filled data, limited slopes, and interface speeds of one step —
/// everything the time-step controller needs before `dt` is chosen.
pub struct StepPrelude<const N: usize> {
    pub dev: StateField<N>,
    pub slopes: SlopeField<N>,
    pub speeds: SpeedField,
}

/// Fills ghosts and computes the reconstruction and one-sided speeds shared
/// by the time-step choice and the step itself.
pub fn step_prelude<M, S, const N: usize>(
    dev0: &StateField<N>,
    stat: &S,
    model: &M,
    cfg: &SchemeConfig,
) -> Result<StepPrelude<N>, SolverError>
where
    M: BalanceLaw<N>,
    S: StationaryField<N>,
{
    let grid = dev0.grid;
    let mut dev = dev0.clone();
    fill_ghosts(&mut dev, &cfg.bc, model);
    let slopes = mc_theta_slopes(&dev, cfg.theta);
    let dev_iface = interface_states(&dev, &slopes);
    let full_iface = full_interface_states(&dev_iface, stat, &grid);
    let speeds = local_speeds(&full_iface, model, cfg.eps, &cfg.bc, &grid)?;
    Ok(StepPrelude { dev, slopes, speeds })
}

/// One prepared step of the fully-discrete scheme: ghost-filled data,
/// slopes, speeds, fan geometry, and the half-step vertex fluxes.
pub struct FullKtStep<'a, M, S, const N: usize> {
    pub grid: Grid2D,
    model: &'a M,
    stat: &'a S,
    cfg: &'a SchemeConfig,
    pub dt: f64,
    dev: StateField<N>,
    slopes: SlopeField<N>,
    fx_slope: Field2<[f64; N]>,
    gy_slope: Field2<[f64; N]>,
    pub speeds: SpeedField,
    pub verts: FanVertices,
    pub geom: FanGeometry,
    vflux: Field2<[VertFlux<N>; 4]>,
}

impl<'a, M, S, const N: usize> FullKtStep<'a, M, S, N>
where
    M: BalanceLaw<N>,
    S: StationaryField<N>,
{
    pub fn prepare(
        dev0: &StateField<N>,
        stat: &'a S,
        model: &'a M,
        cfg: &'a SchemeConfig,
        dt: f64,
    ) -> Result<Self, SolverError> {
        Self::from_prelude(step_prelude(dev0, stat, model, cfg)?, stat, model, cfg, dt)
    }

    /// Builds the step from an already-computed prelude (reusing the pass
    /// the time-step controller ran).
    pub fn from_prelude(
        prelude: StepPrelude<N>,
        stat: &'a S,
        model: &'a M,
        cfg: &'a SchemeConfig,
        dt: f64,
    ) -> Result<Self, SolverError> {
        let StepPrelude { dev, slopes, speeds } = prelude;
        let grid = dev.grid;
        let (nx, ny) = (grid.nx as isize, grid.ny as isize);
        let verts = fan_vertices(&speeds, dt, &grid)?;
        let geom = fan_geometry(&verts, &grid);

        // Cellwise deviation-flux values and their limited slopes, shared by
        // every predictor point of the cell.
        let g = grid.ghost as isize;
        let mut fgcell =
            Field2::filled(-g, nx + g - 1, -g, ny + g - 1, ([0.0; N], [0.0; N]));
        fgcell.par_try_fill(|j, k| {
            let qt = stat.value(grid.xc(j), grid.yc(k));
            let full = add(&dev.at(j, k), &qt);
            let err = |e: ModelError| SolverError::nonphysical(format!("cell ({j}, {k})"), e);
            Ok((
                sub(&model.flux_x(&full).map_err(err)?, &model.flux_x(&qt).map_err(err)?),
                sub(&model.flux_y(&full).map_err(err)?, &model.flux_y(&qt).map_err(err)?),
            ))
        })?;
        let mut fx_slope = Field2::filled(-1, nx, -1, ny, [0.0; N]);
        let mut gy_slope = fx_slope.clone();
        for k in -1..=ny {
            for j in -1..=nx {
                let fe = fgcell.at(j + 1, k).0;
                let fc = fgcell.at(j, k).0;
                let fw = fgcell.at(j - 1, k).0;
                let gn = fgcell.at(j, k + 1).1;
                let gc = fgcell.at(j, k).1;
                let gs = fgcell.at(j, k - 1).1;
                let mut fx = [0.0; N];
                let mut gy = [0.0; N];
                for c in 0..N {
                    fx[c] = minmod3(
                        cfg.theta * (fe[c] - fc[c]) / grid.dx,
                        (fe[c] - fw[c]) / (2.0 * grid.dx),
                        cfg.theta * (fc[c] - fw[c]) / grid.dx,
                    );
                    gy[c] = minmod3(
                        cfg.theta * (gn[c] - gc[c]) / grid.dy,
                        (gn[c] - gs[c]) / (2.0 * grid.dy),
                        cfg.theta * (gc[c] - gs[c]) / grid.dy,
                    );
                }
                fx_slope.set(j, k, fx);
                gy_slope.set(j, k, gy);
            }
        }

        let mut step = FullKtStep {
            grid,
            model,
            stat,
            cfg,
            dt,
            dev,
            slopes,
            fx_slope,
            gy_slope,
            speeds,
            verts,
            geom,
            vflux: Field2::filled(-2, nx, -2, ny, [VertFlux::default(); 4]),
        };
        step.vflux = step.vertex_fluxes()?;
        Ok(step)
    }

    /// Half-step deviation value of cell `(j, k)` at an in-cell point.
    fn predictor_at(&self, j: isize, k: isize, x: f64, y: f64) -> [f64; N] {
        let dqn = point_value_unchecked(&self.dev, &self.slopes, j, k, x, y);
        let fx = self.fx_slope.at(j, k);
        let gy = self.gy_slope.at(j, k);
        let src = self.model.source(&dqn, x, y);
        let mut out = dqn;
        for c in 0..N {
            out[c] += 0.5 * self.dt * (src[c] - fx[c] - gy[c]);
        }
        out
    }

    fn vertex_fluxes(&self) -> Result<Field2<[VertFlux<N>; 4]>, SolverError> {
        let (il, ih, ml, mh) = self.vflux.bounds();
        let mut vflux = Field2::filled(il, ih, ml, mh, [VertFlux::default(); 4]);
        vflux.par_try_fill(|i, m| {
            let mut four = [VertFlux::default(); 4];
            for (slot, (sx, sy)) in [(false, false), (true, false), (false, true), (true, true)]
                .into_iter()
                .enumerate()
            {
                let owner = (i + sx as isize, m + sy as isize);
                if !self.slopes.sx.contains(owner.0, owner.1) {
                    continue;
                }
                let (x, y) = self.verts.vertex(i, m, sx, sy);
                let dqh = self.predictor_at(owner.0, owner.1, x, y);
                let qt = self.stat.value(x, y);
                let full = add(&dqh, &qt);
                let err = |e: ModelError| {
                    SolverError::nonphysical(
                        format!("predictor vertex at corner ({i}, {m}), cell {owner:?}"),
                        e,
                    )
                };
                four[slot] = VertFlux {
                    f: sub(
                        &self.model.flux_x(&full).map_err(err)?,
                        &self.model.flux_x(&qt).map_err(err)?,
                    ),
                    g: sub(
                        &self.model.flux_y(&full).map_err(err)?,
                        &self.model.flux_y(&qt).map_err(err)?,
                    ),
                };
            }
            Ok(four)
        })?;
        Ok(vflux)
    }

    #[inline]
    fn vert_flux(&self, i: isize, m: isize, sx: bool, sy: bool) -> VertFlux<N> {
        self.vflux.at(i, m)[sx as usize + 2 * (sy as usize)]
    }

    /// Edge flux between two lattice vertices with the stored half-step
    /// fluxes; `p1 → p2` runs bottom→top (vertical case) or west→east.
    fn edge_h(
        &self,
        case: EdgeCase,
        v1: (isize, isize, bool, bool),
        v2: (isize, isize, bool, bool),
    ) -> [f64; N] {
        let p1 = self.verts.vertex(v1.0, v1.1, v1.2, v1.3);
        let p2 = self.verts.vertex(v2.0, v2.1, v2.2, v2.3);
        let f1 = self.vert_flux(v1.0, v1.1, v1.2, v1.3);
        let f2 = self.vert_flux(v2.0, v2.1, v2.2, v2.3);
        let (dx, dy) = (p2.0 - p1.0, p2.1 - p1.1);
        let (nx_, ny_) = match case {
            EdgeCase::Vertical => (dy, -dx),
            EdgeCase::Horizontal => (-dy, dx),
        };
        let mut out = [0.0; N];
        for c in 0..N {
            out[c] = 0.5 * (nx_ * (f1.f[c] + f2.f[c]) + ny_ * (f1.g[c] + f2.g[c]));
        }
        out
    }

    /// `H_E − H_W + H_N − H_S` over the four edges of a subdomain.
    fn flux_divergence(&self, sub: Subdomain) -> [f64; N] {
        use EdgeCase::{Horizontal, Vertical};
        let (he, hw, hn, hs) = match sub {
            Subdomain::Central { j, k } => (
                self.edge_h(Vertical, (j, k - 1, false, true), (j, k, false, false)),
                self.edge_h(Vertical, (j - 1, k - 1, true, true), (j - 1, k, true, false)),
                self.edge_h(Horizontal, (j - 1, k, true, false), (j, k, false, false)),
                self.edge_h(Horizontal, (j - 1, k - 1, true, true), (j, k - 1, false, true)),
            ),
            Subdomain::XSide { i, k } => (
                self.edge_h(Vertical, (i, k - 1, true, true), (i, k, true, false)),
                self.edge_h(Vertical, (i, k - 1, false, true), (i, k, false, false)),
                self.edge_h(Horizontal, (i, k, false, false), (i, k, true, false)),
                self.edge_h(Horizontal, (i, k - 1, false, true), (i, k - 1, true, true)),
            ),
            Subdomain::YSide { j, m } => (
                self.edge_h(Vertical, (j, m, false, false), (j, m, false, true)),
                self.edge_h(Vertical, (j - 1, m, true, false), (j - 1, m, true, true)),
                self.edge_h(Horizontal, (j - 1, m, true, true), (j, m, false, true)),
                self.edge_h(Horizontal, (j - 1, m, true, false), (j, m, false, false)),
            ),
            Subdomain::Corner { i, m } => (
                self.edge_h(Vertical, (i, m, true, false), (i, m, true, true)),
                self.edge_h(Vertical, (i, m, false, false), (i, m, false, true)),
                self.edge_h(Horizontal, (i, m, false, true), (i, m, true, true)),
                self.edge_h(Horizontal, (i, m, false, false), (i, m, true, false)),
            ),
        };
        let mut out = [0.0; N];
        for c in 0..N {
            out[c] = he[c] - hw[c] + hn[c] - hs[c];
        }
        out
    }

    /// Evolved average, area, and centroid of one subdomain; `None` for a
    /// collapsed subdomain (dt → 0 sides/corners), whose projection weight
    /// is zero.
    fn evolve_value(
        &self,
        sub: Subdomain,
    ) -> Result<Option<([f64; N], f64, f64, f64)>, SolverError> {
        let (pieces, n) = sub_pieces(sub);
        let mut total = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut wbar = [0.0; N];
        let mut src = [0.0; N];
        let with_source = self.model.has_source();
        for &(j, k, idx) in &pieces[..n] {
            let p = self.geom.pieces.at(j, k)[idx];
            if p.area == 0.0 {
                continue;
            }
            let q = point_value_unchecked(&self.dev, &self.slopes, j, k, p.cx, p.cy);
            for c in 0..N {
                wbar[c] += p.area * q[c];
            }
            if with_source {
                let dqh = self.predictor_at(j, k, p.cx, p.cy);
                let s = self.model.source(&dqh, p.cx, p.cy);
                for c in 0..N {
                    src[c] += p.area * s[c];
                }
            }
            total += p.area;
            cx += p.area * p.cx;
            cy += p.area * p.cy;
        }
        if total <= 0.0 {
            return Ok(None);
        }
        let div = self.flux_divergence(sub);
        let mut avg = [0.0; N];
        for c in 0..N {
            avg[c] = wbar[c] / total - self.dt / total * div[c] + self.dt * src[c] / total;
        }
        Ok(Some((avg, total, cx / total, cy / total)))
    }

    fn evolve_family(
        &self,
        set: &mut SubdomainSet<N>,
        make: impl Fn(isize, isize) -> Subdomain + Sync,
    ) -> Result<(), SolverError> {
        let (jl, jh, kl, kh) = set.area.bounds();
        let mut values = Field2::filled(jl, jh, kl, kh, None);
        values.par_try_fill(|j, k| self.evolve_value(make(j, k)))?;
        for k in kl..=kh {
            for j in jl..=jh {
                if let Some((avg, area, cx, cy)) = values.at(j, k) {
                    set.avg.set(j, k, avg);
                    set.area.set(j, k, area);
                    set.cx.set(j, k, cx);
                    set.cy.set(j, k, cy);
                }
            }
        }
        Ok(())
    }

    /// Evolves every subdomain average to `t^{n+1}`:
    /// `w̄^{n+1} = w̄^n − (dt/|D|)(H_E − H_W + H_N − H_S) + dt·S_D`.
    pub fn evolve_subdomains(&self) -> Result<Intermediate<N>, SolverError> {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        let mut inter = Intermediate {
            central: SubdomainSet::new(-1, nx, -1, ny),
            xside: SubdomainSet::new(-1, nx - 1, -1, ny),
            yside: SubdomainSet::new(-1, nx, -1, ny - 1),
            corner: SubdomainSet::new(-1, nx - 1, -1, ny - 1),
        };
        self.evolve_family(&mut inter.central, |j, k| Subdomain::Central { j, k })?;
        self.evolve_family(&mut inter.xside, |i, k| Subdomain::XSide { i, k })?;
        self.evolve_family(&mut inter.yside, |j, m| Subdomain::YSide { j, m })?;
        self.evolve_family(&mut inter.corner, |i, m| Subdomain::Corner { i, m })?;
        if self.cfg.projection_reconstruction {
            projection_slopes(&mut inter, self.cfg.theta);
        }
        Ok(inter)
    }

    /// Projects the evolved subdomain reconstructions back to uniform cell
    /// averages over the interior.
    pub fn project(&self, inter: &Intermediate<N>) -> StateField<N> {
        project(inter, &self.geom, &self.grid)
    }
}

type Neighbor<const N: usize> = Option<([f64; N], f64)>;

fn one_dir_slope<const N: usize>(
    avg: &[f64; N],
    center: f64,
    left: Neighbor<N>,
    right: Neighbor<N>,
    theta: f64,
) -> [f64; N] {
    let mut out = [0.0; N];
    let ratio = |n: &([f64; N], f64), c: usize, from: f64, to: f64| {
        let d = to - from;
        if d.abs() < 1e-300 {
            None
        } else {
            Some((n.0[c], d))
        }
    };
    for c in 0..N {
        let l = left.as_ref().and_then(|n| ratio(n, c, n.1, center));
        let r = right.as_ref().and_then(|n| ratio(n, c, center, n.1));
        out[c] = match (l, r) {
            (Some((vl, dl)), Some((vr, dr))) => {
                let full = right.as_ref().unwrap().1 - left.as_ref().unwrap().1;
                minmod3(
                    theta * (avg[c] - vl) / dl,
                    (vr - vl) / full,
                    theta * (vr - avg[c]) / dr,
                )
            }
            // One-sided argument duplicated at boundaries or collapsed
            // neighbours: minmod returns the interior-biased safe slope.
            (Some((vl, dl)), None) => {
                let r1 = (avg[c] - vl) / dl;
                minmod3(theta * r1, r1, theta * r1)
            }
            (None, Some((vr, dr))) => {
                let r1 = (vr - avg[c]) / dr;
                minmod3(theta * r1, r1, theta * r1)
            }
            (None, None) => 0.0,
        };
    }
    out
}

fn neighbor<const N: usize>(set: &SubdomainSet<N>, j: isize, k: isize, x_dir: bool) -> Neighbor<N> {
    if !set.area.contains(j, k) || set.area.at(j, k) == 0.0 {
        return None;
    }
    let c = if x_dir { set.cx.at(j, k) } else { set.cy.at(j, k) };
    Some((set.avg.at(j, k), c))
}

/// Limited linear slopes of the unsmooth subdomains about their centers of
/// mass, from same-row/column neighbouring subdomain averages scaled by the
/// centroid distances.
pub fn projection_slopes<const N: usize>(inter: &mut Intermediate<N>, theta: f64) {
    let (il, ih, kl, kh) = inter.xside.area.bounds();
    for k in kl..=kh {
        for i in il..=ih {
            if inter.xside.area.at(i, k) == 0.0 {
                continue;
            }
            let avg = inter.xside.avg.at(i, k);
            let wx = one_dir_slope(
                &avg,
                inter.xside.cx.at(i, k),
                neighbor(&inter.central, i, k, true),
                neighbor(&inter.central, i + 1, k, true),
                theta,
            );
            let wy = one_dir_slope(
                &avg,
                inter.xside.cy.at(i, k),
                neighbor(&inter.corner, i, k - 1, false),
                neighbor(&inter.corner, i, k, false),
                theta,
            );
            inter.xside.wx.set(i, k, wx);
            inter.xside.wy.set(i, k, wy);
        }
    }
    let (jl, jh, ml, mh) = inter.yside.area.bounds();
    for m in ml..=mh {
        for j in jl..=jh {
            if inter.yside.area.at(j, m) == 0.0 {
                continue;
            }
            let avg = inter.yside.avg.at(j, m);
            let wx = one_dir_slope(
                &avg,
                inter.yside.cx.at(j, m),
                neighbor(&inter.corner, j - 1, m, true),
                neighbor(&inter.corner, j, m, true),
                theta,
            );
            let wy = one_dir_slope(
                &avg,
                inter.yside.cy.at(j, m),
                neighbor(&inter.central, j, m, false),
                neighbor(&inter.central, j, m + 1, false),
                theta,
            );
            inter.yside.wx.set(j, m, wx);
            inter.yside.wy.set(j, m, wy);
        }
    }
    let (il, ih, ml, mh) = inter.corner.area.bounds();
    for m in ml..=mh {
        for i in il..=ih {
            if inter.corner.area.at(i, m) == 0.0 {
                continue;
            }
            let avg = inter.corner.avg.at(i, m);
            let wx = one_dir_slope(
                &avg,
                inter.corner.cx.at(i, m),
                neighbor(&inter.yside, i, m, true),
                neighbor(&inter.yside, i + 1, m, true),
                theta,
            );
            let wy = one_dir_slope(
                &avg,
                inter.corner.cy.at(i, m),
                neighbor(&inter.xside, i, m, false),
                neighbor(&inter.xside, i, m + 1, false),
                theta,
            );
            inter.corner.wx.set(i, m, wx);
            inter.corner.wy.set(i, m, wy);
        }
    }
}

/// New uniform cell averages: the area-weighted sum of the nine subdomain
/// reconstructions over their overlap pieces, evaluated at the overlap
/// centroids (exact for linears), divided by dx·dy.
pub fn project<const N: usize>(
    inter: &Intermediate<N>,
    geom: &FanGeometry,
    grid: &Grid2D,
) -> StateField<N> {
    let inv = 1.0 / (grid.dx * grid.dy);
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    let mut values = Field2::filled(0, nx - 1, 0, ny - 1, [0.0; N]);
    values.par_fill(|j, k| {
        let p = geom.pieces.at(j, k);
        let mut acc = [0.0; N];
        let central = inter.central.avg.at(j, k);
        for c in 0..N {
            acc[c] = p[OV_C].area * central[c];
        }
        let parts: [(&SubdomainSet<N>, isize, isize, usize); 8] = [
            (&inter.xside, j, k, OV_E),
            (&inter.xside, j - 1, k, OV_W),
            (&inter.yside, j, k, OV_N),
            (&inter.yside, j, k - 1, OV_S),
            (&inter.corner, j, k, OV_NE),
            (&inter.corner, j - 1, k, OV_NW),
            (&inter.corner, j, k - 1, OV_SE),
            (&inter.corner, j - 1, k - 1, OV_SW),
        ];
        for (set, sj, sk, idx) in parts {
            let piece = p[idx];
            if piece.area == 0.0 {
                continue;
            }
            let avg = set.avg.at(sj, sk);
            let wx = set.wx.at(sj, sk);
            let wy = set.wy.at(sj, sk);
            let (ox, oy) = (piece.cx - set.cx.at(sj, sk), piece.cy - set.cy.at(sj, sk));
            for c in 0..N {
                acc[c] += piece.area * (avg[c] + ox * wx[c] + oy * wy[c]);
            }
        }
        for c in acc.iter_mut() {
            *c *= inv;
        }
        acc
    });
    let mut out = StateField::zeros(grid);
    for k in 0..ny {
        for j in 0..nx {
            out.set(j, k, values.at(j, k));
        }
    }
    out
}

/// One full Reconstruction → Evolution → Projection cycle on the deviation
/// field. Ghost cells are filled internally; `dt` must satisfy the CFL
/// constraint (checked through the fan geometry).
pub fn step_fully_discrete<M, S, const N: usize>(
    dev: &StateField<N>,
    stat: &S,
    model: &M,
    cfg: &SchemeConfig,
    dt: f64,
) -> Result<StateField<N>, SolverError>
where
    M: BalanceLaw<N>,
    S: StationaryField<N>,
{
    let step = FullKtStep::prepare(dev, stat, model, cfg, dt)?;
    let inter = step.evolve_subdomains()?;
    Ok(step.project(&inter))
}
