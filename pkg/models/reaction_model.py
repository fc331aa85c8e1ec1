# models/reaction_model.py

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np
from numba import njit, prange
from scipy.optimize import brentq

from models.errors import ConfigError, DimensionMismatch, NumericalBlowup

if TYPE_CHECKING:
    from models.ca_model import LightGrid
    from models.gate_model import InitiationMask
    from models.imaging_model import GridGeometry

DEFAULT_EPOCH_ITERATIONS = 600
# long enough for ignited trunks to push a front into every open finger,
# short enough that the seed's second pulse has not reached the grid
DEFAULT_INIT_ITERATIONS = 5000
IGNITION_U = 1.0


@dataclass(frozen=True)
class KineticParams:
    """
    Photosensitive two-variable Oregonator constants and the Euler grid.
    """
    epsilon: float = 0.11
    f: float = 1.1
    q: float = 0.0002
    d_u: float = 1.0
    d_v: float = 0.0
    dt: float = 0.001
    dx: float = 0.62

    def __post_init__(self):
        for name in ("epsilon", "q", "dt", "dx"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be > 0, got {getattr(self, name)}.")
        if self.d_u < 0 or self.d_v < 0:
            raise ConfigError("Diffusion coefficients must be >= 0.")
        # explicit Euler diffusion stability
        ratio = max(self.d_u, self.d_v) * self.dt / self.dx ** 2
        if ratio >= 0.25:
            raise ConfigError(
                f"Unstable diffusion: D*dt/dx^2={ratio:.4f} must be < 0.25."
            )


@dataclass(frozen=True)
class LightLevels:
    """
    Excitability values for the three projected light intensities.
    Trit 0 is low, 1 is the sub-excitable threshold, 2 is high.
    """
    high: float = 0.093023
    threshold: float = 0.04
    low: float = 0.000876

    def __post_init__(self):
        if not (self.high > self.threshold > self.low >= 0):
            raise ConfigError(
                f"Light levels must satisfy high > threshold > low >= 0, got "
                f"{self.high}, {self.threshold}, {self.low}."
            )

    def as_array(self) -> np.ndarray:
        return np.array([self.low, self.threshold, self.high], dtype=np.float64)


@dataclass
class MediumState:
    """
    The u and v concentration fields plus the excitability field phi.
    Arrays are indexed [y, x] (row, column), shape (height, width).
    """
    u: np.ndarray
    v: np.ndarray
    phi: np.ndarray = field(default=None)

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=np.float64)
        self.v = np.asarray(self.v, dtype=np.float64)
        if self.phi is None:
            self.phi = np.zeros_like(self.u)
        self.phi = np.asarray(self.phi, dtype=np.float64)
        if self.u.ndim != 2 or self.u.shape != self.v.shape or self.u.shape != self.phi.shape:
            raise DimensionMismatch(
                f"u, v and phi must share one 2-D shape, got "
                f"{self.u.shape}, {self.v.shape}, {self.phi.shape}."
            )
        if np.any(self.phi < 0):
            raise ConfigError("phi must be >= 0 everywhere.")

    @property
    def height(self) -> int:
        return self.u.shape[0]

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @classmethod
    def dark(cls, width: int, height: int) -> "MediumState":
        """All-zero medium: u = v = phi = 0."""
        zeros = np.zeros((height, width), dtype=np.float64)
        return cls(zeros, zeros.copy(), zeros.copy())

    def copy(self) -> "MediumState":
        return MediumState(self.u.copy(), self.v.copy(), self.phi.copy())


def laplacian5(field: np.ndarray, x: int, y: int, dx: float) -> float:
    """
    Five-node Laplacian at column x, row y. Out-of-domain neighbours take
    the value of the boundary point itself (zero flux across the edge).
    """
    h, w = field.shape
    c = field[y, x]
    left = field[y, x - 1] if x > 0 else c
    right = field[y, x + 1] if x < w - 1 else c
    up = field[y - 1, x] if y > 0 else c
    down = field[y + 1, x] if y < h - 1 else c
    return float((left + right + up + down - 4.0 * c) / (dx * dx))


@njit(parallel=True, cache=True)
def _euler_kernel(u, v, phi, n_iter, epsilon, f, q, d_u, d_v, dt, dx, kinetics):
    h, w = u.shape
    dx2 = dx * dx
    cur_u = u.copy()
    cur_v = v.copy()
    nxt_u = np.empty_like(cur_u)
    nxt_v = np.empty_like(cur_v)
    for _ in range(n_iter):
        # each row band reads only the pre-step buffers
        for y in prange(h):
            ym = y - 1 if y > 0 else 0
            yp = y + 1 if y < h - 1 else h - 1
            for x in range(w):
                xm = x - 1 if x > 0 else 0
                xp = x + 1 if x < w - 1 else w - 1
                uc = cur_u[y, x]
                vc = cur_v[y, x]
                lap_u = (cur_u[y, xm] + cur_u[y, xp] + cur_u[ym, x] + cur_u[yp, x] - 4.0 * uc) / dx2
                du = d_u * lap_u
                dv = 0.0
                if d_v != 0.0:
                    lap_v = (cur_v[y, xm] + cur_v[y, xp] + cur_v[ym, x] + cur_v[yp, x] - 4.0 * vc) / dx2
                    dv = d_v * lap_v
                if kinetics:
                    du = du + (uc - uc * uc - (f * vc + phi[y, x]) * (uc - q) / (uc + q)) / epsilon
                    dv = dv + (uc - vc)
                nu = uc + dt * du
                nv = vc + dt * dv
                # concentrations stay non-negative; NaN passes through to the blowup check
                nxt_u[y, x] = 0.0 if nu < 0.0 else nu
                nxt_v[y, x] = 0.0 if nv < 0.0 else nv
        cur_u, nxt_u = nxt_u, cur_u
        cur_v, nxt_v = nxt_v, cur_v
    return cur_u, cur_v


def integrate(state: MediumState, params: KineticParams, n_iter: int,
              kinetics: bool = True) -> MediumState:
    """
    Apply n_iter explicit Euler steps under the state's own phi field.
    `kinetics=False` leaves only the diffusion terms (used to check the
    boundary handling conserves mass).
    """
    if n_iter < 0:
        raise ConfigError(f"n_iter must be >= 0, got {n_iter}.")
    if n_iter == 0:
        return state.copy()
    u, v = _euler_kernel(
        state.u, state.v, state.phi, int(n_iter),
        params.epsilon, params.f, params.q, params.d_u, params.d_v,
        params.dt, params.dx, bool(kinetics)
    )
    # non-finite values never become finite again, so one check covers every step
    if not (np.isfinite(u).all() and np.isfinite(v).all()):
        raise NumericalBlowup(f"Non-finite concentration within {n_iter} Euler steps.")
    return MediumState(u, v, state.phi.copy())


def step(state: MediumState, params: KineticParams, kinetics: bool = True) -> MediumState:
    return integrate(state, params, 1, kinetics=kinetics)


def rasterize_light(phi: np.ndarray, light: "LightGrid", geometry: "GridGeometry",
                    levels: LightLevels) -> np.ndarray:
    """
    Copy of phi with every point of CA cell (i, j) set to that cell's light level.
    Points outside the grid region keep their value.
    """
    cell_phi = levels.as_array()[light.actions].reshape(geometry.rows, geometry.cols)
    block = np.repeat(np.repeat(cell_phi, geometry.cell_h, axis=0), geometry.cell_w, axis=1)
    out = phi.copy()
    out[geometry.region] = block
    return out


def run_epoch(state: MediumState, light: "LightGrid", geometry: "GridGeometry",
              n_iter: int = DEFAULT_EPOCH_ITERATIONS,
              levels: LightLevels = LightLevels(),
              params: KineticParams = KineticParams()) -> MediumState:
    """
    Project the light grid onto the medium, then run n_iter simulator steps.
    """
    geometry.check_fits(state.width, state.height)
    lit = MediumState(state.u, state.v, rasterize_light(state.phi, light, geometry, levels))
    return integrate(lit, params, n_iter)


def initiate_waves(state: MediumState, mask: "InitiationMask", input_bits,
                   n_iter: int = DEFAULT_INIT_ITERATIONS,
                   levels: LightLevels = LightLevels(),
                   params: KineticParams = KineticParams(),
                   ignite: bool = True) -> MediumState:
    """
    Apply the initiation light pattern for the given input bits and run
    n_iter steps so excitation fills the open tree branches.

    With `ignite` the seed and the trunks start in the excited state
    (u = IGNITION_U), so every open branch is fed at the same moment.
    Without it the waves wait for the phi = 0 seed to self-excite, which
    takes thousands of steps from u = v = 0.
    """
    if mask.shape != state.u.shape:
        raise DimensionMismatch(
            f"Mask shape {mask.shape} does not match medium {state.u.shape}."
        )
    phi = mask.phi_for_input(input_bits, levels)
    u = state.u.copy()
    if ignite:
        u[mask.ignition_region()] = IGNITION_U
    logging.debug(f"Initiating waves for input {tuple(input_bits)} over {n_iter} steps "
                  f"({'ignited' if ignite else 'self-exciting'} seed).")
    return integrate(MediumState(u, state.v, phi), params, n_iter)


def rest_state(phi: float, params: KineticParams = KineticParams()) -> tuple:
    """
    Lower-branch fixed point (u*, v*) of the space-clamped model at constant phi.
    With f > 1 the nullcline intersection below u = 1 is unique.
    """
    f, q = params.f, params.q

    def rhs(u):
        return u - u * u - (f * u + phi) * (u - q) / (u + q)

    u_star = brentq(rhs, q, 1.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return u_star, u_star


def quiescent_medium(width: int, height: int, phi: float,
                     params: KineticParams = KineticParams()) -> MediumState:
    """Homogeneous medium resting at the fixed point for a uniform phi."""
    u_star, v_star = rest_state(phi, params)
    shape = (height, width)
    return MediumState(np.full(shape, u_star), np.full(shape, v_star), np.full(shape, phi))
