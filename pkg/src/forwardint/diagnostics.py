"""Post-processing for simulation output.

Three consumers share this module: the command line front end (summary
tables), the sweep driver (per-gain summaries), and the test suite
(threshold-crossing and monotonicity checks).  Everything here operates on
plain arrays so it works identically on recorded wave diagnostics and on
finite-dimensional trajectories.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .wave_sim import WaveConfig, rows_to_arrays, simulate

# Interval endpoints closer than this (relative to the series span) are
# considered touching and get merged.
_MERGE_REL = 1e-12

# Default threshold on y_l2 + |z| below which the closed loop counts as
# settled.  Chosen to match the acceptance threshold on the final state.
SETTLE_EPS = 0.05


def _segment_active(t0, t1, u0, u1, level):
    """Sub-intervals of [t0, t1] where the linear interpolant of u
    satisfies |u| >= level.

    Returns a list of (a, b) pairs.  A segment whose endpoints both exceed
    the threshold with opposite signs contributes two pieces, because the
    interpolant passes through zero in between.
    """
    pieces = []
    for sign in (1.0, -1.0):
        g0 = sign * u0 - level
        g1 = sign * u1 - level
        if g0 >= 0.0 and g1 >= 0.0:
            pieces.append((t0, t1))
        elif g0 >= 0.0 and g1 < 0.0:
            tc = t0 + g0 / (g0 - g1) * (t1 - t0)
            pieces.append((t0, tc))
        elif g0 < 0.0 and g1 >= 0.0:
            tc = t0 + g0 / (g0 - g1) * (t1 - t0)
            pieces.append((tc, t1))
    pieces.sort()
    return pieces


def saturation_intervals(times, u, level, min_length=None):
    """Maximal time intervals on which |u| >= level.

    The control series is treated as piecewise linear between samples, so
    interval endpoints fall on interpolated crossing times rather than on
    the sample grid.  A sign flip inside one sample step splits an interval
    when the interpolant dips below the threshold in between.

    Intervals shorter than ``min_length`` are discarded; the default is
    twice the first sample spacing, which suppresses single-sample blips
    while keeping anything that persists across steps.

    Parameters
    ----------
    times, u : arrays of equal length, times strictly increasing.
    level : positive threshold.
    min_length : minimal reported duration, or None for the default.

    Returns a list of (t_on, t_off) tuples in increasing order.
    """
    times = np.asarray(times, dtype=float)
    u = np.asarray(u, dtype=float)
    if times.ndim != 1 or times.shape != u.shape:
        raise ValueError("times and u must be one-dimensional arrays of equal length")
    if times.size < 2:
        raise ValueError("need at least two samples")
    if not np.all(np.diff(times) > 0.0):
        raise ValueError("times must be strictly increasing")
    if not level > 0.0:
        raise ValueError("level must be positive")
    if min_length is None:
        min_length = 2.0 * (times[1] - times[0])

    raw = []
    for k in range(times.size - 1):
        raw.extend(_segment_active(times[k], times[k + 1], u[k], u[k + 1], level))

    if not raw:
        return []
    raw.sort()
    gap = _MERGE_REL * (times[-1] - times[0])
    merged = [list(raw[0])]
    for a, b in raw[1:]:
        if a <= merged[-1][1] + gap:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])

    # the slack keeps an interval whose length equals min_length up to roundoff
    return [(float(a), float(b)) for a, b in merged if b - a >= min_length - gap]


def monotonicity_audit(values, tol_step):
    """Count increases of a series that should be non-increasing.

    A step ``values[k+1] - values[k] > tol_step`` is a violation.  Returns
    ``(violation_count, worst_increase)`` where the worst increase is the
    largest step taken over the whole series, negative when the series
    decreases strictly everywhere.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise ValueError("need a one-dimensional series with at least two samples")
    if not math.isfinite(tol_step) or tol_step < 0.0:
        raise ValueError("tol_step must be a finite non-negative number")
    steps = np.diff(values)
    violations = int(np.count_nonzero(steps > tol_step))
    return violations, float(steps.max())


def settle_time(times, norms, eps):
    """First recorded time after which the norm series stays below eps.

    Returns None when the series has not settled by the final sample, and
    the initial time when it never reaches eps at all.
    """
    times = np.asarray(times, dtype=float)
    norms = np.asarray(norms, dtype=float)
    above = np.flatnonzero(norms >= eps)
    if above.size == 0:
        return float(times[0])
    last = above[-1]
    if last == norms.size - 1:
        return None
    return float(times[last + 1])


@dataclass(frozen=True)
class SweepSummary:
    """Scalar outcomes of one closed-loop run inside a gain sweep."""

    mu: float
    z_min: float
    u_peak: float
    psi_u_peak: float
    settle_time: float | None
    final_norm: float

    def settle_label(self):
        if self.settle_time is None:
            return "not settled"
        return repr(float(self.settle_time))


def summarize(cfg: WaveConfig, data, eps=SETTLE_EPS):
    """Reduce one run's recorded diagnostics to a SweepSummary.

    ``data`` is the dict produced by ``rows_to_arrays``.  The final norm is
    the settling metric y_l2 + |z| at the last recorded time.
    """
    norms = data["y_l2"] + np.abs(data["z"])
    return SweepSummary(
        mu=cfg.mu,
        z_min=float(data["z"].min()),
        u_peak=float(np.abs(data["u"]).max()),
        psi_u_peak=float(np.abs(data["psi_u"]).max()),
        settle_time=settle_time(data["t"], norms, eps),
        final_norm=float(norms[-1]),
    )


def sweep(base_cfg: WaveConfig, mus, eps=SETTLE_EPS):
    """Run the wave loop once per integrator gain and summarize each run.

    All runs share the base configuration except for ``mu``.  Returns the
    summaries in the order the gains were given.
    """
    mus = [float(m) for m in mus]
    if not mus:
        raise ValueError("need at least one gain value")
    summaries = []
    for m in mus:
        cfg = dataclasses.replace(base_cfg, mu=m)
        rows = simulate(cfg)
        summaries.append(summarize(cfg, rows_to_arrays(rows), eps=eps))
    return summaries


def lyapunov_audit_tol(v0, rel=1e-6):
    """Audit tolerance scaled to the initial Lyapunov value."""
    return rel * (1.0 + float(v0))


def audit_wave_run(cfg: WaveConfig, data, rel=1e-6):
    """Monotonicity audit of the recorded Lyapunov series of a wave run.

    The tolerance per recorded step is rel * (1 + V(0)) with V(0) taken
    from the recorded series.  Returns (violations, worst_increase, tol).
    """
    lyap = data["lyap"]
    tol = lyapunov_audit_tol(lyap[0], rel)
    violations, worst = monotonicity_audit(lyap, tol)
    return violations, worst, tol


__all__ = [
    "SETTLE_EPS",
    "SweepSummary",
    "audit_wave_run",
    "lyapunov_audit_tol",
    "monotonicity_audit",
    "saturation_intervals",
    "settle_time",
    "summarize",
    "sweep",
]
