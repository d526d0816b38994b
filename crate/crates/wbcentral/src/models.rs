//! Balance-law definitions: the 2D Euler equations with a gravitational
//! source term, scalar conservation laws, and analytic equilibrium
//! constructors used as stationary fields `q̃`.
//!
//! The Euler state is `q = (ρ, ρu1, ρu2, E)` with
//! `E = p/(γ−1) + ρ(u1² + u2²)/2`, fluxes
//!
//! ```text
//! f(q) = (ρu1, ρu1² + p, ρu1u2, (E + p)u1)
//! g(q) = (ρu2, ρu1u2, ρu2² + p, (E + p)u2)
//! ```
//!
//! and source `S(q) = (0, −ρφx, −ρφy, −ρu1φx − ρu2φy)` for a prescribed
//! potential gradient `(φx, φy)`. The source is linear in the conserved
//! variables, which is what makes the deviation form close exactly.

use thiserror::Error;

/// Spatial axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("nonphysical state: rho={rho}, p={p}")]
    NonphysicalState { rho: f64, p: f64 },
}

/// Primitive variables (ρ, u1, u2, p).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitiveState {
    pub rho: f64,
    pub u1: f64,
    pub u2: f64,
    pub p: f64,
}

/// (ρ, u1, u2, p) → (ρ, ρu1, ρu2, E).
pub fn euler_to_conserved(w: &PrimitiveState, gamma: f64) -> [f64; 4] {
    let energy = w.p / (gamma - 1.0) + 0.5 * w.rho * (w.u1 * w.u1 + w.u2 * w.u2);
    [w.rho, w.rho * w.u1, w.rho * w.u2, energy]
}

/// Pressure from a conserved state; fails when ρ ≤ 0 or p ≤ 0.
pub fn euler_pressure(q: &[f64; 4], gamma: f64) -> Result<f64, ModelError> {
    let rho = q[0];
    if rho <= 0.0 {
        return Err(ModelError::NonphysicalState { rho, p: f64::NAN });
    }
    let p = (gamma - 1.0) * (q[3] - 0.5 * (q[1] * q[1] + q[2] * q[2]) / rho);
    if p <= 0.0 {
        return Err(ModelError::NonphysicalState { rho, p });
    }
    Ok(p)
}

/// Conserved → primitive.
pub fn euler_primitive(q: &[f64; 4], gamma: f64) -> Result<PrimitiveState, ModelError> {
    let p = euler_pressure(q, gamma)?;
    Ok(PrimitiveState {
        rho: q[0],
        u1: q[1] / q[0],
        u2: q[2] / q[0],
        p,
    })
}

pub fn euler_flux_x(q: &[f64; 4], gamma: f64) -> Result<[f64; 4], ModelError> {
    let p = euler_pressure(q, gamma)?;
    let u1 = q[1] / q[0];
    Ok([q[1], q[1] * u1 + p, q[2] * u1, (q[3] + p) * u1])
}

pub fn euler_flux_y(q: &[f64; 4], gamma: f64) -> Result<[f64; 4], ModelError> {
    let p = euler_pressure(q, gamma)?;
    let u2 = q[2] / q[0];
    Ok([q[2], q[1] * u2, q[2] * u2 + p, (q[3] + p) * u2])
}

/// Smallest and largest eigenvalue of the flux Jacobian along `axis`:
/// `u_axis ∓ c` with `c = sqrt(γ p / ρ)`.
pub fn euler_speed_bounds(q: &[f64; 4], gamma: f64, axis: Axis) -> Result<(f64, f64), ModelError> {
    let p = euler_pressure(q, gamma)?;
    let c = (gamma * p / q[0]).sqrt();
    let u = match axis {
        Axis::X => q[1] / q[0],
        Axis::Y => q[2] / q[0],
    };
    Ok((u - c, u + c))
}

/// Gravitational source applied to a (deviation) state; linear in `dq`.
pub fn euler_source(dq: &[f64; 4], grad_phi: (f64, f64)) -> [f64; 4] {
    let (gx, gy) = grad_phi;
    [
        0.0,
        -dq[0] * gx,
        -dq[0] * gy,
        -dq[1] * gx - dq[2] * gy,
    ]
}

/// Isothermal hydrostatic equilibrium for a linear potential
/// `φ = φx·x + φy·y`:
///
/// ```text
/// ρ = ρ0 exp(−(ρ0/p0)(φx x + φy y)),  u = 0,  p = (p0/ρ0) ρ
/// ```
pub fn isothermal_equilibrium(
    x: f64,
    y: f64,
    rho0: f64,
    p0: f64,
    phi_x: f64,
    phi_y: f64,
) -> PrimitiveState {
    let e = (-(rho0 / p0) * (phi_x * x + phi_y * y)).exp();
    PrimitiveState {
        rho: rho0 * e,
        u1: 0.0,
        u2: 0.0,
        p: p0 * e,
    }
}

/// Moving-equilibrium state along the diagonal `s = x + y`:
///
/// ```text
/// ρ = ρ0 exp(−(ρ0 g/p0) s),  u1 = u2 = exp(s),  p = exp(−γ (ρ0 g/p0) s)
/// ```
pub fn moving_equilibrium(x: f64, y: f64, rho0: f64, p0: f64, g: f64, gamma: f64) -> PrimitiveState {
    let s = x + y;
    let a = rho0 * g / p0;
    PrimitiveState {
        rho: rho0 * (-a * s).exp(),
        u1: s.exp(),
        u2: s.exp(),
        p: (-gamma * a * s).exp(),
    }
}

/// Gradient of the companion potential
/// `φ(s) = e^s (−e^s + γ e^{−γ s})`, `s = x + y`, evaluated analytically:
/// `φ' (s) = −2 e^{2s} + γ(1−γ) e^{(1−γ)s}`, with `φx = φy = φ'`.
pub fn moving_equilibrium_grad_phi(x: f64, y: f64, gamma: f64) -> (f64, f64) {
    let s = x + y;
    let d = -2.0 * (2.0 * s).exp() + gamma * (1.0 - gamma) * ((1.0 - gamma) * s).exp();
    (d, d)
}

/// Isothermal equilibrium (ρ0 = p0 = 1, unit potential slope along `axis`)
/// with a Gaussian pressure bump of amplitude `eta` centered at s = 0.5:
///
/// ```text
/// ρ = exp(−s),  u = 0,  p = exp(−s) + η exp(−100 (s − 0.5)²)
/// ```
pub fn perturbed_isothermal(x: f64, y: f64, eta: f64, axis: Axis) -> PrimitiveState {
    let s = match axis {
        Axis::X => x,
        Axis::Y => y,
    };
    let base = (-s).exp();
    let b = s - 0.5;
    PrimitiveState {
        rho: base,
        u1: 0.0,
        u2: 0.0,
        p: base + eta * (-100.0 * b * b).exp(),
    }
}

/// Prescribed gravitational-potential gradient `(φx, φy)(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialGradient {
    Zero,
    Constant { gx: f64, gy: f64 },
    /// Gradient of the companion potential of [`moving_equilibrium`].
    MovingEquilibrium { gamma: f64 },
}

impl PotentialGradient {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            PotentialGradient::Zero => (0.0, 0.0),
            PotentialGradient::Constant { gx, gy } => (gx, gy),
            PotentialGradient::MovingEquilibrium { gamma } => {
                moving_equilibrium_grad_phi(x, y, gamma)
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(
            *self,
            PotentialGradient::Zero
                | PotentialGradient::Constant { gx: 0.0, gy: 0.0 }
        )
    }
}

/// Flux pair, wave-speed bounds, and source of a balance law with `N`
/// conserved components.
pub trait BalanceLaw<const N: usize>: Sync {
    fn flux_x(&self, q: &[f64; N]) -> Result<[f64; N], ModelError>;
    fn flux_y(&self, q: &[f64; N]) -> Result<[f64; N], ModelError>;
    /// `(λ_1, λ_N)` of the flux Jacobian along `axis` at `q`.
    fn wave_bounds(&self, q: &[f64; N], axis: Axis) -> Result<(f64, f64), ModelError>;
    /// Source applied to a deviation state at `(x, y)`; must be linear in `dq`.
    fn source(&self, dq: &[f64; N], x: f64, y: f64) -> [f64; N];
    fn has_source(&self) -> bool;
    /// Momentum component negated at a reflecting wall normal to `axis`.
    fn reflect_flip(&self, axis: Axis) -> Option<usize>;
}

/// 2D Euler equations with ideal-gas EOS and prescribed gravity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerModel {
    pub gamma: f64,
    pub gravity: PotentialGradient,
}

impl EulerModel {
    pub fn new(gamma: f64, gravity: PotentialGradient) -> Result<Self, ModelError> {
        if !(gamma > 1.0) {
            // Reuse the nonphysical error: γ ≤ 1 makes every state nonphysical.
            return Err(ModelError::NonphysicalState {
                rho: f64::NAN,
                p: f64::NAN,
            });
        }
        Ok(EulerModel { gamma, gravity })
    }
}

impl BalanceLaw<4> for EulerModel {
    fn flux_x(&self, q: &[f64; 4]) -> Result<[f64; 4], ModelError> {
        euler_flux_x(q, self.gamma)
    }

    fn flux_y(&self, q: &[f64; 4]) -> Result<[f64; 4], ModelError> {
        euler_flux_y(q, self.gamma)
    }

    fn wave_bounds(&self, q: &[f64; 4], axis: Axis) -> Result<(f64, f64), ModelError> {
        euler_speed_bounds(q, self.gamma, axis)
    }

    fn source(&self, dq: &[f64; 4], x: f64, y: f64) -> [f64; 4] {
        euler_source(dq, self.gravity.eval(x, y))
    }

    fn has_source(&self) -> bool {
        !self.gravity.is_zero()
    }

    fn reflect_flip(&self, axis: Axis) -> Option<usize> {
        Some(match axis {
            Axis::X => 1,
            Axis::Y => 2,
        })
    }
}

/// Homogeneous scalar conservation laws used in the maximum-principle tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalarModel {
    /// f = ax·u, g = ay·u.
    Advection { ax: f64, ay: f64 },
    /// f = g = u²/2.
    Burgers,
}

impl ScalarModel {
    pub fn flux(&self, axis: Axis, u: f64) -> f64 {
        match (*self, axis) {
            (ScalarModel::Advection { ax, .. }, Axis::X) => ax * u,
            (ScalarModel::Advection { ay, .. }, Axis::Y) => ay * u,
            (ScalarModel::Burgers, _) => 0.5 * u * u,
        }
    }

    /// d(flux)/du along `axis`.
    pub fn dflux(&self, axis: Axis, u: f64) -> f64 {
        match (*self, axis) {
            (ScalarModel::Advection { ax, .. }, Axis::X) => ax,
            (ScalarModel::Advection { ay, .. }, Axis::Y) => ay,
            (ScalarModel::Burgers, _) => u,
        }
    }
}

impl BalanceLaw<1> for ScalarModel {
    fn flux_x(&self, q: &[f64; 1]) -> Result<[f64; 1], ModelError> {
        Ok([self.flux(Axis::X, q[0])])
    }

    fn flux_y(&self, q: &[f64; 1]) -> Result<[f64; 1], ModelError> {
        Ok([self.flux(Axis::Y, q[0])])
    }

    fn wave_bounds(&self, q: &[f64; 1], axis: Axis) -> Result<(f64, f64), ModelError> {
        let d = self.dflux(axis, q[0]);
        Ok((d, d))
    }

    fn source(&self, _dq: &[f64; 1], _x: f64, _y: f64) -> [f64; 1] {
        [0.0]
    }

    fn has_source(&self) -> bool {
        false
    }

    fn reflect_flip(&self, _axis: Axis) -> Option<usize> {
        None
    }
}

/// Analytic stationary field `q̃`, evaluable at arbitrary points (cell
/// centers, interface midpoints, fan vertices, overlap centroids).
pub trait StationaryField<const N: usize>: Sync {
    fn value(&self, x: f64, y: f64) -> [f64; N];
}

/// `q̃ ≡ 0`: the deviation coincides with the full state and the scheme
/// reduces to the plain central scheme.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroStationary;

impl<const N: usize> StationaryField<N> for ZeroStationary {
    fn value(&self, _x: f64, _y: f64) -> [f64; N] {
        [0.0; N]
    }
}

impl<F, const N: usize> StationaryField<N> for F
where
    F: Fn(f64, f64) -> [f64; N] + Sync,
{
    fn value(&self, x: f64, y: f64) -> [f64; N] {
        self(x, y)
    }
}

/// Built-in Euler stationary fields, selectable by name in run configs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EulerEquilibrium {
    None,
    Isothermal {
        rho0: f64,
        p0: f64,
        phi_x: f64,
        phi_y: f64,
        gamma: f64,
    },
    Moving {
        rho0: f64,
        p0: f64,
        g: f64,
        gamma: f64,
    },
    PerturbedIsothermal {
        eta: f64,
        axis: Axis,
        gamma: f64,
    },
}

impl EulerEquilibrium {
    pub fn primitive(&self, x: f64, y: f64) -> Option<PrimitiveState> {
        match *self {
            EulerEquilibrium::None => None,
            EulerEquilibrium::Isothermal {
                rho0,
                p0,
                phi_x,
                phi_y,
                ..
            } => Some(isothermal_equilibrium(x, y, rho0, p0, phi_x, phi_y)),
            EulerEquilibrium::Moving { rho0, p0, g, gamma } => {
                Some(moving_equilibrium(x, y, rho0, p0, g, gamma))
            }
            EulerEquilibrium::PerturbedIsothermal { eta, axis, .. } => {
                Some(perturbed_isothermal(x, y, eta, axis))
            }
        }
    }

    fn gamma(&self) -> f64 {
        match *self {
            EulerEquilibrium::None => 1.4,
            EulerEquilibrium::Isothermal { gamma, .. }
            | EulerEquilibrium::Moving { gamma, .. }
            | EulerEquilibrium::PerturbedIsothermal { gamma, .. } => gamma,
        }
    }
}

impl StationaryField<4> for EulerEquilibrium {
    fn value(&self, x: f64, y: f64) -> [f64; 4] {
        match self.primitive(x, y) {
            None => [0.0; 4],
            Some(w) => euler_to_conserved(&w, self.gamma()),
        }
    }
}
