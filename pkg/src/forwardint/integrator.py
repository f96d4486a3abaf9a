"""Time integration of the finite-dimensional closed loop.

Two schemes: classic rk4 (default) and an implicit midpoint rule whose
stage equation is solved by fixed-point iteration (the input map is only
Lipschitz, so no derivatives are assumed). The state is advanced as a flat
vector (x, z); a matrix of columns integrates a whole batch of initial
states through the same arithmetic path.
"""

from dataclasses import dataclass

import numpy as np

from .abstract_core import ExtendedState

__all__ = ["IntegratorConfig", "Trajectory", "integrate"]

FIXED_POINT_TOL = 1e-12
FIXED_POINT_CAP = 100


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float
    t_end: float
    scheme: str = "rk4"
    record_stride: int = 1

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0 or self.dt > self.t_end:
            raise ValueError("need 0 < dt <= t_end")
        if self.scheme not in ("rk4", "implicit_midpoint"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Recorded closed-loop solution.

    states has shape (steps, n+1) for a single run, (steps, n+1, m) for a
    batch of m initial states; u, psi_u and lyap follow suit.
    """

    times: np.ndarray
    states: np.ndarray
    u: np.ndarray
    psi_u: np.ndarray
    lyap: np.ndarray

    def to_csv(self, path):
        if self.states.ndim != 2:
            raise ValueError("CSV export is defined for single trajectories")
        n = self.states.shape[1] - 1
        header = ",".join(["t"] + [f"x{i+1}" for i in range(n)]
                          + ["z", "u", "psi_u", "V"])
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for k in range(len(self.times)):
                cells = [self.times[k], *self.states[k], self.u[k],
                         self.psi_u[k], self.lyap[k]]
                fh.write(",".join(repr(float(v)) for v in cells) + "\n")


def _as_state_matrix(xi0, n):
    if isinstance(xi0, ExtendedState):
        vec = xi0.as_vector()
    else:
        vec = np.asarray(xi0, dtype=float)
    if not np.all(np.isfinite(vec)):
        raise ValueError("initial state must be finite")
    if vec.ndim == 1:
        if vec.size != n + 1:
            raise ValueError(f"initial state must have length {n + 1}")
        return vec.reshape(n + 1, 1), True
    if vec.ndim == 2 and vec.shape[0] == n + 1:
        return vec.copy(), False
    raise ValueError("initial state must be a vector or an (n+1) x m matrix")


def integrate(sys, design, psi, xi0, cfg):
    """Advance the closed loop and record a Trajectory.

    xi0 may be an ExtendedState, a flat vector, or an (n+1) x m matrix of
    column states for a batched run. Raises on non-finite states and on
    fixed-point stalls in the implicit scheme.
    """
    if not design.admissible:
        raise ValueError("design is not admissible: steady-state gain is zero")
    n = sys.n
    X, single = _as_state_matrix(xi0, n)

    a = sys.a
    b = sys.b.ravel()[:, None]
    c = sys.c.ravel()
    p = sys.p
    bp = design.bp_row
    row = design.row
    weight = design.weight
    steady = design.steady_gain

    def u_of(X):
        x, z = X[:n], X[n]
        return -bp @ x + weight * steady * (z - row @ x)

    def rhs(X):
        x = X[:n]
        w = psi.eval(u_of(X))
        out = np.empty_like(X)
        out[:n] = a @ x + b * w
        out[n] = c @ x
        return out

    def lyap_of(X):
        x, z = X[:n], X[n]
        r = z - row @ x
        return np.sum(x * (p @ x), axis=0) + weight * r * r

    dt = cfg.dt
    nsteps = int(round(cfg.t_end / dt))

    times, staterec, urec = [], [], []
    def record(k, X):
        times.append(k * dt)
        staterec.append(X.copy())
        urec.append(u_of(X))

    for k in range(nsteps + 1):
        if k % cfg.record_stride == 0 or k == nsteps:
            record(k, X)
        if k == nsteps:
            break
        try:
            if cfg.scheme == "rk4":
                k1 = rhs(X)
                k2 = rhs(X + 0.5 * dt * k1)
                k3 = rhs(X + 0.5 * dt * k2)
                k4 = rhs(X + dt * k3)
                X = X + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            else:
                Y = X + dt * rhs(X)                 # explicit predictor
                for _ in range(FIXED_POINT_CAP):
                    Ynew = X + dt * rhs(0.5 * (X + Y))
                    delta = np.max(np.abs(Ynew - Y))
                    Y = Ynew
                    if delta <= FIXED_POINT_TOL:
                        break
                else:
                    raise RuntimeError(
                        "implicit midpoint stage did not converge; "
                        "reduce dt")
                X = Y
        except ValueError as exc:
            # a non-finite control value mid-step is a blow-up, not bad input
            raise FloatingPointError(f"state blew up at step {k + 1}") from exc
        if not np.all(np.isfinite(X)):
            raise FloatingPointError(f"state blew up at step {k + 1}")

    times = np.array(times)
    states = np.stack(staterec)                     # (steps, n+1, m)
    u = np.stack(urec)
    psi_u = np.stack([np.asarray(psi.eval(ui)) for ui in u])
    lyap = np.stack([lyap_of(s) for s in staterec])
    if single:
        states = states[:, :, 0]
        u = u[:, 0]
        psi_u = psi_u.reshape(len(times), -1)[:, 0]
        lyap = lyap[:, 0]
    return Trajectory(times=times, states=states, u=u, psi_u=psi_u, lyap=lyap)
