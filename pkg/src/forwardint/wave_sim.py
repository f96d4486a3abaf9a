"""Boundary-damped wave equation with an output integrator.

Unit-speed string on [0,1], pinned at x=0, actuated through the stress at
x=1: the boundary slope is set to psi(u), where u is the feedback

    u = -v(1) - mu*z - mu*int_0^1 x*v dx,

and z integrates the tip displacement, z' = y(1). The discretization is an
explicit two-field scheme on co-located (y, v) nodes: second-order central
differences in space, a ghost node for the stress boundary, and a
velocity-Verlet double kick in time, stable for dt/dx <= 1.

The applied boundary flux is resolved implicitly within each step: the
update is affine in the flux w, so the consistency relation
u = alpha - beta*psi(u) (beta > 0 a mesh constant) pins the unique flux
that matches the post-step velocity it acts on. Saturation and identity
admit closed forms; other monotone maps fall back to a bracketed root
solve. A purely explicit flux evaluation excites a persistent bang-bang
boundary mode at the stability limit; the implicit closure removes it.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .nonlinearity import Nonlinearity

__all__ = [
    "WaveConfig",
    "WaveState",
    "DiagnosticsRow",
    "init",
    "control",
    "step",
    "simulate",
    "energy",
    "m_functional",
    "lyapunov",
    "analytic_mode",
    "rows_to_arrays",
]

GRID_TOL = 1e-9
BLOWUP_FACTOR = 1e6

_PROFILES = ("linear_x", "eigenmode", "zero")


@dataclass(frozen=True)
class WaveConfig:
    """Mesh, horizon, feedback weight and initial data for one run.

    y0 and v0 name a profile ('linear_x', 'eigenmode', 'zero') or carry a
    sampled node vector. open_loop forces the applied flux to zero (the
    feedback value is still reported as a diagnostic).
    """

    dx: float
    dt: float
    t_end: float
    mu: float
    psi: Nonlinearity
    y0: object = "linear_x"
    v0: object = "zero"
    z0: float = 0.0
    record_stride: int = 10
    snapshot_stride: int = 0
    open_loop: bool = False

    def __post_init__(self):
        if self.dx <= 0 or self.dt <= 0 or self.t_end <= 0:
            raise ValueError("dx, dt, t_end must be positive")
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")
        if self.dt / self.dx > 1.0 + GRID_TOL:
            raise ValueError(f"CFL violated: dt/dx = {self.dt / self.dx:.6f} > 1")
        n = round(1.0 / self.dx)
        if abs(n * self.dx - 1.0) > GRID_TOL or n < 2:
            raise ValueError("1/dx must be an integer (uniform grid on [0,1])")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        if self.snapshot_stride < 0:
            raise ValueError("snapshot_stride must be >= 0")
        for name, prof in (("y0", self.y0), ("v0", self.v0)):
            if isinstance(prof, str) and prof not in _PROFILES:
                raise ValueError(f"{name} must be one of {_PROFILES} or a vector")

    @property
    def n_nodes(self):
        return round(1.0 / self.dx) + 1


@dataclass
class WaveState:
    y: np.ndarray   # displacement at nodes i*dx
    v: np.ndarray   # velocity at the same nodes
    z: float        # tip-displacement integral
    t: float


@dataclass(frozen=True)
class DiagnosticsRow:
    t: float
    u: float
    psi_u: float
    energy: float
    m_fun: float
    lyap: float
    z: float
    y_l2: float
    v_l2: float


def _grid(cfg):
    return np.linspace(0.0, 1.0, cfg.n_nodes)


def _sample_profile(prof, x, name):
    if isinstance(prof, str):
        if prof == "linear_x":
            return x.copy()
        if prof == "eigenmode":
            return np.sin(np.pi * x / 2.0)
        return np.zeros_like(x)
    arr = np.asarray(prof, dtype=float)
    if arr.shape != x.shape:
        raise ValueError(f"{name} vector must have {x.size} nodes, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} vector has non-finite entries")
    if abs(arr[0]) > GRID_TOL:
        raise ValueError(f"{name} violates the pinned end: value {arr[0]} at x=0")
    return arr.copy()


def init(cfg):
    """Sample the configured profiles onto the grid."""
    x = _grid(cfg)
    y = _sample_profile(cfg.y0, x, "y0")
    v = _sample_profile(cfg.v0, x, "v0")
    y[0] = 0.0
    v[0] = 0.0
    return WaveState(y=y, v=v, z=float(cfg.z0), t=0.0)


def control(state, mu):
    """Boundary feedback read off a state: tip velocity, integrator, and
    the velocity moment, trapezoid rule on the grid."""
    v = state.v
    n = v.size - 1
    x = np.linspace(0.0, 1.0, v.size)
    dx = 1.0 / n
    return float(-v[n] - mu * state.z - mu * np.trapezoid(x * v, dx=dx))


def energy(state):
    """Field energy with centered interior slopes, one-sided at the ends."""
    y, v = state.y, state.v
    n = y.size - 1
    dx = 1.0 / n
    yx = np.empty_like(y)
    yx[0] = (y[1] - y[0]) / dx
    yx[-1] = (y[-1] - y[-2]) / dx
    yx[1:-1] = (y[2:] - y[:-2]) / (2.0 * dx)
    return float(0.5 * np.trapezoid(v * v + yx * yx, dx=dx))


def m_functional(state):
    """Velocity moment -int x*v dx, the forwarding functional of the tip
    integrator."""
    v = state.v
    n = v.size - 1
    x = np.linspace(0.0, 1.0, v.size)
    return float(-np.trapezoid(x * v, dx=1.0 / n))


def lyapunov(state, mu):
    r = state.z - m_functional(state)
    return energy(state) + 0.5 * mu * r * r


def analytic_mode(x, t):
    """Slowest pinned-free mode, the open-loop oracle: period 4 in time."""
    x = np.asarray(x, dtype=float)
    if np.any(x < -GRID_TOL) or np.any(x > 1.0 + GRID_TOL):
        raise ValueError("x must lie in [0, 1]")
    w = np.pi / 2.0
    y = np.sin(w * x) * np.cos(w * t)
    yt = -w * np.sin(w * x) * np.sin(w * t)
    if y.ndim == 0:
        return float(y), float(yt)
    return y, yt


class _Stepper:
    """Precomputed machinery for one mesh: the homogeneous double kick and
    the constant influence of a unit boundary flux."""

    def __init__(self, cfg):
        self.cfg = cfg
        self.x = _grid(cfg)
        self.n = cfg.n_nodes - 1
        self.dx = cfg.dx
        self.dt = cfg.dt
        self.inv_dx2 = 1.0 / (cfg.dx * cfg.dx)
        zeros = np.zeros(cfg.n_nodes)
        self.flux_y, self.flux_v = self._kick_drift_kick(zeros, zeros, 1.0)
        # how a unit flux moves the feedback value through the step
        self.beta = float(self.flux_v[self.n]
                          + cfg.mu * np.trapezoid(self.x * self.flux_v, dx=cfg.dx))

    def _accel(self, y, w):
        a = np.zeros_like(y)
        a[1:-1] = (y[2:] - 2.0 * y[1:-1] + y[:-2]) * self.inv_dx2
        # ghost node y[n+1] = y[n-1] + 2*dx*w folded into the end stencil
        a[self.n] = 2.0 * (y[self.n - 1] - y[self.n]) * self.inv_dx2 \
            + 2.0 * w / self.dx
        a[0] = 0.0
        return a

    def _kick_drift_kick(self, y, v, w):
        dt = self.dt
        a0 = self._accel(y, w)
        vh = v + 0.5 * dt * a0
        vh[0] = 0.0
        yn = y + dt * vh
        yn[0] = 0.0
        a1 = self._accel(yn, w)
        vn = vh + 0.5 * dt * a1
        vn[0] = 0.0
        return yn, vn

    def _solve_flux(self, alpha):
        """Root of u + beta*psi(u) = alpha; unique since psi is monotone."""
        psi = self.cfg.psi
        beta = self.beta
        if psi.kind == "id":
            return alpha / (1.0 + beta)
        if psi.kind == "sat":
            lvl = psi.level
            u = alpha / (1.0 + beta)
            if abs(u) <= lvl:
                return u
            return alpha - beta * lvl * np.sign(alpha)
        lip = psi.lipschitz
        lo = min(alpha, alpha / (1.0 + beta * lip))
        hi = max(alpha, alpha / (1.0 + beta * lip))
        if hi - lo < 1e-15:
            return alpha
        return brentq(lambda s: s + beta * psi.eval(s) - alpha, lo, hi,
                      xtol=1e-14)

    def advance(self, state):
        cfg = self.cfg
        y, v, z = state.y, state.v, state.z
        znew = z + self.dt * y[self.n]
        yf, vf = self._kick_drift_kick(y, v, 0.0)
        if cfg.open_loop:
            w = 0.0
            ynew, vnew = yf, vf
        else:
            alpha = float(-vf[self.n] - cfg.mu * znew
                          - cfg.mu * np.trapezoid(self.x * vf, dx=self.dx))
            u = self._solve_flux(alpha)
            w = cfg.psi.eval(u)
            ynew = yf + w * self.flux_y
            vnew = vf + w * self.flux_v
        return WaveState(y=ynew, v=vnew, z=znew, t=state.t + self.dt)


def step(state, cfg):
    """Advance one dt. Convenience wrapper; simulate() amortizes setup."""
    if not np.all(np.isfinite(state.y)) or not np.all(np.isfinite(state.v)):
        raise FloatingPointError("non-finite state")
    return _Stepper(cfg).advance(state)


def _diag_row(state, cfg):
    e = energy(state)
    m = m_functional(state)
    u = control(state, cfg.mu)
    psi_u = 0.0 if cfg.open_loop else float(cfg.psi.eval(u))
    r = state.z - m
    dx = cfg.dx
    return DiagnosticsRow(
        t=state.t, u=u, psi_u=psi_u, energy=e, m_fun=m,
        lyap=e + 0.5 * cfg.mu * r * r, z=state.z,
        y_l2=float(np.sqrt(np.trapezoid(state.y ** 2, dx=dx))),
        v_l2=float(np.sqrt(np.trapezoid(state.v ** 2, dx=dx))),
    )


def simulate(cfg, on_snapshot=None):
    """Run init + step to t_end, recording every record_stride steps.

    Returns the list of DiagnosticsRow. on_snapshot(step_index, state) is
    called every snapshot_stride steps when that stride is positive.
    Aborts with diagnostics when the state leaves the finite range or the
    energy exceeds a large multiple of its initial value.
    """
    stepper = _Stepper(cfg)
    state = init(cfg)
    nsteps = int(round(cfg.t_end / cfg.dt))
    e0 = energy(state)
    e_limit = BLOWUP_FACTOR * (e0 if e0 > 0 else 1.0)
    rows = []
    for k in range(nsteps + 1):
        recorded = k % cfg.record_stride == 0 or k == nsteps
        if recorded:
            row = _diag_row(state, cfg)
            if not np.isfinite(row.energy) or row.energy > e_limit:
                raise FloatingPointError(
                    f"blow-up at t={state.t:.6g} (step {k}): "
                    f"energy {row.energy:.3e} vs initial {e0:.3e}")
            rows.append(row)
        if cfg.snapshot_stride and k % cfg.snapshot_stride == 0 and on_snapshot:
            on_snapshot(k, state)
        if k == nsteps:
            break
        state = stepper.advance(state)
        state.t = (k + 1) * cfg.dt   # exact grid time, no accumulation drift
        if not np.all(np.isfinite(state.v)):
            raise FloatingPointError(
                f"blow-up at t={state.t:.6g} (step {k + 1}): non-finite state")
    return rows


def rows_to_arrays(rows):
    """Column view of a diagnostics list as a dict of numpy arrays."""
    cols = ("t", "u", "psi_u", "energy", "m_fun", "lyap", "z", "y_l2", "v_l2")
    return {c: np.array([getattr(r, c) for r in rows]) for c in cols}
