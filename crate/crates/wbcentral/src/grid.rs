//! Structured 2D mesh with ghost layers, ghosted per-cell storage, and
//! boundary-condition filling.
//!
//! Interior cells are indexed `j ∈ [0, nx)`, `k ∈ [0, ny)`; ghost cells carry
//! negative (or `≥ nx`) signed offsets. Cell `(j, k)` has center
//! `(x_min + (j + 1/2)·dx, y_min + (k + 1/2)·dy)`, and the interface
//! `x_{i+1/2}` separating cells `i` and `i+1` sits at `x_min + (i + 1)·dx`.

use thiserror::Error;

use crate::models::{Axis, BalanceLaw};

/// Configuration errors from grid construction.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid grid: {0}")]
    Invalid(String),
}

/// Uniform structured mesh over `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub dx: f64,
    pub dy: f64,
    /// Ghost-layer width in cells. The scheme's widest stencil (limited
    /// slopes of neighbour flux differences) fits in 2.
    pub ghost: usize,
}

impl Grid2D {
    /// Center x-coordinate of cell column `j` (ghost columns allowed).
    #[inline]
    pub fn xc(&self, j: isize) -> f64 {
        self.x_min + (j as f64 + 0.5) * self.dx
    }

    /// Center y-coordinate of cell row `k`.
    #[inline]
    pub fn yc(&self, k: isize) -> f64 {
        self.y_min + (k as f64 + 0.5) * self.dy
    }

    /// x-coordinate of the interface `x_{i+1/2}` between columns `i` and `i+1`.
    #[inline]
    pub fn xi(&self, i: isize) -> f64 {
        self.x_min + (i as f64 + 1.0) * self.dx
    }

    /// y-coordinate of the interface `y_{m+1/2}` between rows `m` and `m+1`.
    #[inline]
    pub fn yi(&self, m: isize) -> f64 {
        self.y_min + (m as f64 + 1.0) * self.dy
    }

    pub fn n_interior(&self) -> usize {
        self.nx * self.ny
    }
}

/// Builds a [`Grid2D`], rejecting degenerate configurations.
pub fn make_grid(
    nx: usize,
    ny: usize,
    bounds: [f64; 4],
    ghost: usize,
) -> Result<Grid2D, GridError> {
    let [x_min, x_max, y_min, y_max] = bounds;
    if nx < 1 || ny < 1 {
        return Err(GridError::Invalid(format!(
            "cell counts must be >= 1, got nx={nx}, ny={ny}"
        )));
    }
    if !(x_max > x_min) || !(y_max > y_min) {
        return Err(GridError::Invalid(format!(
            "domain bounds are degenerate: [{x_min}, {x_max}] x [{y_min}, {y_max}]"
        )));
    }
    if ghost < 2 {
        return Err(GridError::Invalid(format!(
            "ghost width must be >= 2 (stencil of the limiter plus neighbour limiter), got {ghost}"
        )));
    }
    let dx = (x_max - x_min) / nx as f64;
    let dy = (y_max - y_min) / ny as f64;
    Ok(Grid2D {
        nx,
        ny,
        x_min,
        x_max,
        y_min,
        y_max,
        dx,
        dy,
        ghost,
    })
}

/// Dense 2D storage addressed by signed cell/interface indices.
///
/// Index bounds are inclusive on both ends and fixed at construction; reads
/// and writes outside them panic in debug builds.
#[derive(Debug, Clone, PartialEq)]
pub struct Field2<T> {
    j_lo: isize,
    k_lo: isize,
    nj: usize,
    nk: usize,
    data: Vec<T>,
}

impl<T: Copy> Field2<T> {
    pub fn filled(j_lo: isize, j_hi: isize, k_lo: isize, k_hi: isize, value: T) -> Self {
        assert!(j_hi >= j_lo && k_hi >= k_lo, "empty Field2 range");
        let nj = (j_hi - j_lo + 1) as usize;
        let nk = (k_hi - k_lo + 1) as usize;
        Field2 {
            j_lo,
            k_lo,
            nj,
            nk,
            data: vec![value; nj * nk],
        }
    }

    #[inline]
    fn idx(&self, j: isize, k: isize) -> usize {
        debug_assert!(
            self.contains(j, k),
            "Field2 index ({j}, {k}) outside [{}, {}] x [{}, {}]",
            self.j_lo,
            self.j_lo + self.nj as isize - 1,
            self.k_lo,
            self.k_lo + self.nk as isize - 1
        );
        (k - self.k_lo) as usize * self.nj + (j - self.j_lo) as usize
    }

    #[inline]
    pub fn at(&self, j: isize, k: isize) -> T {
        self.data[self.idx(j, k)]
    }

    #[inline]
    pub fn set(&mut self, j: isize, k: isize, value: T) {
        let i = self.idx(j, k);
        self.data[i] = value;
    }

    #[inline]
    pub fn contains(&self, j: isize, k: isize) -> bool {
        j >= self.j_lo
            && j < self.j_lo + self.nj as isize
            && k >= self.k_lo
            && k < self.k_lo + self.nk as isize
    }

    /// Inclusive index bounds `(j_lo, j_hi, k_lo, k_hi)`.
    pub fn bounds(&self) -> (isize, isize, isize, isize) {
        (
            self.j_lo,
            self.j_lo + self.nj as isize - 1,
            self.k_lo,
            self.k_lo + self.nk as isize - 1,
        )
    }

    pub fn iter_indices(&self) -> impl Iterator<Item = (isize, isize)> {
        let (jl, jh, kl, kh) = self.bounds();
        (kl..=kh).flat_map(move |k| (jl..=jh).map(move |j| (j, k)))
    }

    pub fn raw(&self) -> &[T] {
        &self.data
    }
}

impl<T: Copy + Send> Field2<T> {
    /// Fills every entry from `f(j, k)`, row-parallel and in place. The
    /// output is independent of the scheduling (each entry is written once
    /// from its own indices).
    pub fn par_fill(&mut self, f: impl Fn(isize, isize) -> T + Sync) {
        use rayon::prelude::*;
        let (j_lo, k_lo, nj) = (self.j_lo, self.k_lo, self.nj);
        self.data
            .par_chunks_mut(nj)
            .enumerate()
            .for_each(|(row, chunk)| {
                let k = k_lo + row as isize;
                for (col, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(j_lo + col as isize, k);
                }
            });
    }

    /// Fallible [`Field2::par_fill`]; the first error (in scheduling order)
    /// aborts the fill.
    pub fn par_try_fill<E: Send>(
        &mut self,
        f: impl Fn(isize, isize) -> Result<T, E> + Sync,
    ) -> Result<(), E> {
        use rayon::prelude::*;
        let (j_lo, k_lo, nj) = (self.j_lo, self.k_lo, self.nj);
        self.data
            .par_chunks_mut(nj)
            .enumerate()
            .try_for_each(|(row, chunk)| {
                let k = k_lo + row as isize;
                for (col, slot) in chunk.iter_mut().enumerate() {
                    *slot = f(j_lo + col as isize, k)?;
                }
                Ok(())
            })
    }
}

/// Per-cell vectors of `N` conserved components on a ghosted grid.
///
/// Holds the deviation `Δq`, the stationary field `q̃`, or the full state
/// `q = Δq + q̃`, depending on context.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField<const N: usize> {
    pub grid: Grid2D,
    pub data: Field2<[f64; N]>,
}

impl<const N: usize> StateField<N> {
    pub fn zeros(grid: &Grid2D) -> Self {
        let g = grid.ghost as isize;
        StateField {
            grid: *grid,
            data: Field2::filled(
                -g,
                grid.nx as isize + g - 1,
                -g,
                grid.ny as isize + g - 1,
                [0.0; N],
            ),
        }
    }

    /// Samples `f` at cell centers over the whole ghosted range.
    pub fn from_centers(grid: &Grid2D, f: impl Fn(f64, f64) -> [f64; N]) -> Self {
        let mut field = Self::zeros(grid);
        let (jl, jh, kl, kh) = field.data.bounds();
        for k in kl..=kh {
            for j in jl..=jh {
                field.data.set(j, k, f(grid.xc(j), grid.yc(k)));
            }
        }
        field
    }

    #[inline]
    pub fn at(&self, j: isize, k: isize) -> [f64; N] {
        self.data.at(j, k)
    }

    #[inline]
    pub fn set(&mut self, j: isize, k: isize, value: [f64; N]) {
        self.data.set(j, k, value);
    }

    pub fn interior(&self) -> impl Iterator<Item = (isize, isize)> {
        let (nx, ny) = (self.grid.nx as isize, self.grid.ny as isize);
        (0..ny).flat_map(move |k| (0..nx).map(move |j| (j, k)))
    }

    /// Max-norm of component `comp` over interior cells.
    pub fn max_abs_interior(&self, comp: usize) -> f64 {
        self.interior()
            .map(|(j, k)| self.at(j, k)[comp].abs())
            .fold(0.0, f64::max)
    }

    /// (min, max) of component `comp` over interior cells.
    pub fn min_max_interior(&self, comp: usize) -> (f64, f64) {
        self.interior().fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), (j, k)| {
                let v = self.at(j, k)[comp];
                (lo.min(v), hi.max(v))
            },
        )
    }

    pub fn is_finite(&self) -> bool {
        self.data.raw().iter().all(|q| q.iter().all(|v| v.is_finite()))
    }
}

/// Boundary condition applied on one side of the domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// Copies the nearest interior cell outward.
    Outflow,
    /// Mirrors interior cells and negates the boundary-normal momentum.
    Reflecting,
    /// Wraps around the opposite side.
    Periodic,
}

impl BcKind {
    pub fn parse(s: &str) -> Result<Self, GridError> {
        match s {
            "outflow" => Ok(BcKind::Outflow),
            "reflecting" => Ok(BcKind::Reflecting),
            "periodic" => Ok(BcKind::Periodic),
            other => Err(GridError::Invalid(format!(
                "unknown boundary condition '{other}' (expected outflow|reflecting|periodic)"
            ))),
        }
    }
}

/// Per-side boundary conditions. Periodic sides must come in pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundarySpec {
    pub west: BcKind,
    pub east: BcKind,
    pub south: BcKind,
    pub north: BcKind,
}

impl BoundarySpec {
    pub fn uniform(kind: BcKind) -> Self {
        BoundarySpec {
            west: kind,
            east: kind,
            south: kind,
            north: kind,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if (self.west == BcKind::Periodic) != (self.east == BcKind::Periodic) {
            return Err(GridError::Invalid(
                "periodic boundary in x must be set on both west and east".into(),
            ));
        }
        if (self.south == BcKind::Periodic) != (self.north == BcKind::Periodic) {
            return Err(GridError::Invalid(
                "periodic boundary in y must be set on both south and north".into(),
            ));
        }
        Ok(())
    }

    pub fn periodic_x(&self) -> bool {
        self.west == BcKind::Periodic
    }

    pub fn periodic_y(&self) -> bool {
        self.south == BcKind::Periodic
    }
}

/// Fills the ghost layers of a deviation field.
///
/// Outflow copies the nearest interior cell outward, reflecting mirrors the
/// interior and flips the boundary-normal momentum component designated by
/// the model, periodic wraps. The stationary field `q̃` is never filled this
/// way — it is evaluated analytically at ghost-cell centers — so the fill
/// acts on `Δq` alone.
pub fn fill_ghosts<M: BalanceLaw<N>, const N: usize>(
    field: &mut StateField<N>,
    bc: &BoundarySpec,
    model: &M,
) {
    let g = field.grid.ghost as isize;
    let nx = field.grid.nx as isize;
    let ny = field.grid.ny as isize;
    let flip_x = model.reflect_flip(Axis::X);
    let flip_y = model.reflect_flip(Axis::Y);

    // x-sides over interior rows, then y-sides over every column so the
    // corner ghosts pick up the freshly filled x-ghost columns.
    for k in 0..ny {
        for t in 0..g {
            let west = match bc.west {
                BcKind::Outflow => field.at(0, k),
                BcKind::Reflecting => {
                    let mut q = field.at(t, k);
                    if let Some(c) = flip_x {
                        q[c] = -q[c];
                    }
                    q
                }
                BcKind::Periodic => field.at(nx - 1 - t, k),
            };
            field.set(-1 - t, k, west);
            let east = match bc.east {
                BcKind::Outflow => field.at(nx - 1, k),
                BcKind::Reflecting => {
                    let mut q = field.at(nx - 1 - t, k);
                    if let Some(c) = flip_x {
                        q[c] = -q[c];
                    }
                    q
                }
                BcKind::Periodic => field.at(t, k),
            };
            field.set(nx + t, k, east);
        }
    }
    for j in -g..nx + g {
        for t in 0..g {
            let south = match bc.south {
                BcKind::Outflow => field.at(j, 0),
                BcKind::Reflecting => {
                    let mut q = field.at(j, t);
                    if let Some(c) = flip_y {
                        q[c] = -q[c];
                    }
                    q
                }
                BcKind::Periodic => field.at(j, ny - 1 - t),
            };
            field.set(j, -1 - t, south);
            let north = match bc.north {
                BcKind::Outflow => field.at(j, ny - 1),
                BcKind::Reflecting => {
                    let mut q = field.at(j, ny - 1 - t);
                    if let Some(c) = flip_y {
                        q[c] = -q[c];
                    }
                    q
                }
                BcKind::Periodic => field.at(j, t),
            };
            field.set(j, ny + t, north);
        }
    }
}
