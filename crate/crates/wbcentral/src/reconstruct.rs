//! Slope limiting and piecewise-linear reconstruction.
//!
//! Per cell, the reconstruction is
//! `Q_{j,k}(x, y) = q_{j,k} + (x − x_j)·sx_{j,k} + (y − y_k)·sy_{j,k}` with the
//! MC-θ limited derivatives
//! `sx = minmod(θ Δ⁺ₓ, Δ⁰ₓ, θ Δ⁻ₓ)`, where `Δ⁺ₓ`, `Δ⁰ₓ`, `Δ⁻ₓ` are the
//! forward, centered, and backward divided differences and `θ ∈ [1, 2]`.

use crate::grid::{Field2, StateField};
use crate::SolverError;

/// Minmod of three values: the argument of least magnitude when all three
/// share a sign, zero otherwise. Sign comparison only, no divisions.
#[inline]
pub fn minmod3(a: f64, b: f64, c: f64) -> f64 {
    if a > 0.0 && b > 0.0 && c > 0.0 {
        a.min(b).min(c)
    } else if a < 0.0 && b < 0.0 && c < 0.0 {
        a.max(b).max(c)
    } else {
        0.0
    }
}

/// Per-cell limited derivatives of a ghosted field (state units per length).
#[derive(Debug, Clone)]
pub struct SlopeField<const N: usize> {
    pub sx: Field2<[f64; N]>,
    pub sy: Field2<[f64; N]>,
}

/// Applies the MC-θ limiter componentwise over every cell whose 3-point
/// stencil is available (interior plus `ghost − 1` rings).
pub fn mc_theta_slopes<const N: usize>(field: &StateField<N>, theta: f64) -> SlopeField<N> {
    debug_assert!((1.0..=2.0).contains(&theta), "theta must lie in [1, 2]");
    let grid = &field.grid;
    let g = grid.ghost as isize;
    let (jl, jh) = (-g + 1, grid.nx as isize + g - 2);
    let (kl, kh) = (-g + 1, grid.ny as isize + g - 2);
    let mut sx = Field2::filled(jl, jh, kl, kh, [0.0; N]);
    let mut sy = Field2::filled(jl, jh, kl, kh, [0.0; N]);
    for k in kl..=kh {
        for j in jl..=jh {
            let c = field.at(j, k);
            let e = field.at(j + 1, k);
            let w = field.at(j - 1, k);
            let n = field.at(j, k + 1);
            let s = field.at(j, k - 1);
            let mut vx = [0.0; N];
            let mut vy = [0.0; N];
            for comp in 0..N {
                vx[comp] = minmod3(
                    theta * (e[comp] - c[comp]) / grid.dx,
                    (e[comp] - w[comp]) / (2.0 * grid.dx),
                    theta * (c[comp] - w[comp]) / grid.dx,
                );
                vy[comp] = minmod3(
                    theta * (n[comp] - c[comp]) / grid.dy,
                    (n[comp] - s[comp]) / (2.0 * grid.dy),
                    theta * (c[comp] - s[comp]) / grid.dy,
                );
            }
            sx.set(j, k, vx);
            sy.set(j, k, vy);
        }
    }
    SlopeField { sx, sy }
}

/// One-sided point values at the four cell-edge midpoints:
/// `east = q + (dx/2)·sx`, `west = q − (dx/2)·sx`, and likewise north/south.
#[derive(Debug, Clone)]
pub struct InterfaceStates<const N: usize> {
    pub east: Field2<[f64; N]>,
    pub west: Field2<[f64; N]>,
    pub north: Field2<[f64; N]>,
    pub south: Field2<[f64; N]>,
}

pub fn interface_states<const N: usize>(
    field: &StateField<N>,
    slopes: &SlopeField<N>,
) -> InterfaceStates<N> {
    let grid = &field.grid;
    let (jl, jh, kl, kh) = slopes.sx.bounds();
    let mut east = Field2::filled(jl, jh, kl, kh, [0.0; N]);
    let mut west = east.clone();
    let mut north = east.clone();
    let mut south = east.clone();
    let (hx, hy) = (0.5 * grid.dx, 0.5 * grid.dy);
    for k in kl..=kh {
        for j in jl..=jh {
            let c = field.at(j, k);
            let sx = slopes.sx.at(j, k);
            let sy = slopes.sy.at(j, k);
            let mut ve = [0.0; N];
            let mut vw = [0.0; N];
            let mut vn = [0.0; N];
            let mut vs = [0.0; N];
            for comp in 0..N {
                ve[comp] = c[comp] + hx * sx[comp];
                vw[comp] = c[comp] - hx * sx[comp];
                vn[comp] = c[comp] + hy * sy[comp];
                vs[comp] = c[comp] - hy * sy[comp];
            }
            east.set(j, k, ve);
            west.set(j, k, vw);
            north.set(j, k, vn);
            south.set(j, k, vs);
        }
    }
    InterfaceStates {
        east,
        west,
        north,
        south,
    }
}

/// Reconstruction of cell `(j, k)` at an in-cell point, without the
/// containment check. Used by the solver loops where containment is
/// guaranteed by the fan geometry.
#[inline]
pub fn point_value_unchecked<const N: usize>(
    field: &StateField<N>,
    slopes: &SlopeField<N>,
    j: isize,
    k: isize,
    x: f64,
    y: f64,
) -> [f64; N] {
    let c = field.at(j, k);
    let sx = slopes.sx.at(j, k);
    let sy = slopes.sy.at(j, k);
    let (ox, oy) = (x - field.grid.xc(j), y - field.grid.yc(k));
    let mut out = [0.0; N];
    for comp in 0..N {
        out[comp] = c[comp] + ox * sx[comp] + oy * sy[comp];
    }
    out
}

/// Reconstruction of cell `(j, k)` at a point that must lie inside the cell
/// (within `1e−12·max(dx, dy)` of its closure).
pub fn point_value<const N: usize>(
    field: &StateField<N>,
    slopes: &SlopeField<N>,
    j: isize,
    k: isize,
    x: f64,
    y: f64,
) -> Result<[f64; N], SolverError> {
    let grid = &field.grid;
    let tol = 1e-12 * grid.dx.max(grid.dy);
    if (x - grid.xc(j)).abs() > 0.5 * grid.dx + tol
        || (y - grid.yc(k)).abs() > 0.5 * grid.dy + tol
    {
        return Err(SolverError::PointOutsideCell { j, k, x, y });
    }
    Ok(point_value_unchecked(field, slopes, j, k, x, y))
}
