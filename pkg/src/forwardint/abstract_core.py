"""Finite-dimensional forwarding design for conservative plants.

The plant is x' = Ax + B psi(u), with a scalar input channel, an output row
C driving an appended integrator z' = Cx, and a supplied energy weight P
certifying that A is dissipative in the P-inner product. The design builds
the row vector solving row*A = C, couples the integrator through it with a
positive weight, and damps the combined energy

    <P x, x> + weight * (z - row*x)^2,

under which the closed loop is monotone dissipative for every admissible
input nonlinearity.
"""

from dataclasses import dataclass

import numpy as np

__all__ = [
    "AbstractSystem",
    "abstract_system",
    "load_matrix",
    "ExtendedState",
    "state_from_vector",
    "AssumptionReport",
    "validate_assumptions",
    "forwarding_operator",
    "ForwardingDesign",
    "gain",
    "control",
    "closed_loop_field",
    "lyap_inner",
    "NormBounds",
    "norm_equivalence",
    "ProbeResult",
    "dissipativity_probe",
]

# Tolerances for the assumption audit. The source framework works in exact
# arithmetic; these are the finite-precision stand-ins.
DISSIPATIVITY_TOL_REL = 1e-9     # scaled by ||P||
INVERTIBILITY_TOL_REL = 1e-12    # min singular value vs max
RANK_GAP_REL = 1e-8              # singular-value threshold for Kalman rank
COERCIVITY_TOL_REL = 1e-12      # min eigenvalue of P vs its norm
SYMMETRY_TOL_REL = 1e-9
FORWARDING_RESIDUAL_TOL = 1e-10
STEADY_GAIN_TOL = 1e-12
WEAK_COERCIVITY_REL = 1e-8


@dataclass(frozen=True)
class AbstractSystem:
    """Matrix quadruple (a, b, c, p): state, input, output, energy weight."""

    n: int
    a: np.ndarray   # n x n state matrix
    b: np.ndarray   # n x 1 input column
    c: np.ndarray   # 1 x n output row
    p: np.ndarray   # n x n symmetric energy weight


def abstract_system(a, b, c, p):
    """Validate shapes and build an AbstractSystem.

    b and c may be given as flat vectors. p must be symmetric within
    tolerance; definiteness and invertibility of a are audited separately
    so that deliberately broken systems can still be constructed and
    reported on.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    p = np.atleast_2d(np.asarray(p, dtype=float))
    b = np.asarray(b, dtype=float).reshape(-1, 1)
    c = np.asarray(c, dtype=float).reshape(1, -1)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError(f"state matrix must be square, got {a.shape}")
    if b.shape != (n, 1):
        raise ValueError(f"input column must be {n}x1, got {b.shape}")
    if c.shape != (1, n):
        raise ValueError(f"output row must be 1x{n}, got {c.shape}")
    if p.shape != (n, n):
        raise ValueError(f"energy weight must be {n}x{n}, got {p.shape}")
    for name, m in (("a", a), ("b", b), ("c", c), ("p", p)):
        if not np.all(np.isfinite(m)):
            raise ValueError(f"matrix {name} has non-finite entries")
    scale = np.linalg.norm(p, np.inf)
    if np.linalg.norm(p - p.T, np.inf) > SYMMETRY_TOL_REL * max(scale, 1.0):
        raise ValueError("energy weight matrix is not symmetric")
    return AbstractSystem(n=n, a=a, b=b, c=c, p=p)


def load_matrix(path):
    """Read a whitespace-separated plain-text matrix file."""
    try:
        m = np.loadtxt(path, ndmin=2)
    except OSError:
        raise
    except Exception as exc:
        raise ValueError(f"cannot parse matrix file {path}: {exc}") from exc
    if not np.all(np.isfinite(m)):
        raise ValueError(f"matrix file {path} has non-finite entries")
    return m


@dataclass(frozen=True)
class ExtendedState:
    """Plant state x together with the integrator state z."""

    x: np.ndarray
    z: float

    def as_vector(self):
        return np.concatenate([np.asarray(self.x, dtype=float).ravel(),
                               [float(self.z)]])


def state_from_vector(vec):
    vec = np.asarray(vec, dtype=float).ravel()
    return ExtendedState(x=vec[:-1].copy(), z=float(vec[-1]))


@dataclass(frozen=True)
class AssumptionReport:
    """Audit of the standing assumptions, one flag plus witness each.

    The compact-injection hypothesis of the underlying framework has no
    finite-dimensional content and is reported vacuously true.
    """

    dissipative: bool
    worst_dissipation_eig: float
    invertible: bool
    min_singular_value: float
    coercive: bool
    min_energy_eig: float
    observable: bool
    observability_rank: int
    steady_state_gain_nonzero: bool
    steady_state_gain: float
    compact_injection: bool = True

    @property
    def all_pass(self):
        return (self.dissipative and self.invertible and self.coercive
                and self.observable and self.steady_state_gain_nonzero)

    def as_records(self):
        return {
            "dissipative": self.dissipative,
            "dissipative.worst_eig": self.worst_dissipation_eig,
            "invertible": self.invertible,
            "invertible.min_sv": self.min_singular_value,
            "coercive": self.coercive,
            "coercive.min_eig": self.min_energy_eig,
            "observable": self.observable,
            "observable.rank": self.observability_rank,
            "steady_state_gain_nonzero": self.steady_state_gain_nonzero,
            "steady_state_gain": self.steady_state_gain,
            "compact_injection": self.compact_injection,
        }

    def as_table(self):
        rows = [
            ("energy dissipation", self.dissipative,
             f"worst eig {self.worst_dissipation_eig:.3e}"),
            ("state matrix invertible", self.invertible,
             f"min sv {self.min_singular_value:.3e}"),
            ("energy weight coercive", self.coercive,
             f"min eig {self.min_energy_eig:.3e}"),
            ("observable feedback pair", self.observable,
             f"rank {self.observability_rank}"),
            ("steady-state gain nonzero", self.steady_state_gain_nonzero,
             f"value {self.steady_state_gain:.6g}"),
            ("compact injection", True, "automatic (finite dimension)"),
        ]
        width = max(len(r[0]) for r in rows)
        lines = [f"{name:<{width}}  {'ok' if ok else 'FAIL':<4}  {detail}"
                 for name, ok, detail in rows]
        return "\n".join(lines)


def validate_assumptions(sys, tol=None):
    """Run the five executable assumption checks.

    tol overrides the absolute dissipativity threshold; by default it is
    scaled from the energy weight's norm. Observability is the Kalman rank
    of the pair (A, B'P): the feedback's measurement row, not the plant
    output row.
    """
    a, b, p = sys.a, sys.b, sys.p
    n = sys.n

    sym = a.T @ p + p @ a
    worst = float(np.max(np.linalg.eigvalsh(0.5 * (sym + sym.T))))
    p_norm = float(np.linalg.norm(p, 2))
    diss_tol = DISSIPATIVITY_TOL_REL * max(p_norm, 1.0) if tol is None else tol
    dissipative = worst <= diss_tol

    svals = np.linalg.svd(a, compute_uv=False)
    min_sv, max_sv = float(svals[-1]), float(svals[0])
    invertible = min_sv > INVERTIBILITY_TOL_REL * max(max_sv, 1.0)

    eigs_p = np.linalg.eigvalsh(0.5 * (p + p.T))
    min_eig = float(eigs_p[0])
    coercive = min_eig > COERCIVITY_TOL_REL * max(float(np.max(np.abs(eigs_p))), 1.0)

    meas = (b.T @ p).ravel()
    rows = [meas]
    for _ in range(n - 1):
        rows.append(rows[-1] @ a)
    obs = np.vstack(rows)
    obs_sv = np.linalg.svd(obs, compute_uv=False)
    rank = int(np.sum(obs_sv > RANK_GAP_REL * max(float(obs_sv[0]), 1e-300)))
    observable = rank == n

    if invertible:
        g = float(sys.c.ravel() @ np.linalg.solve(a, b).ravel())
    else:
        g = float("nan")
    gain_ok = invertible and abs(g) > STEADY_GAIN_TOL

    return AssumptionReport(
        dissipative=dissipative,
        worst_dissipation_eig=worst,
        invertible=invertible,
        min_singular_value=min_sv,
        coercive=coercive,
        min_energy_eig=min_eig,
        observable=observable,
        observability_rank=rank,
        steady_state_gain_nonzero=gain_ok,
        steady_state_gain=g,
    )


def forwarding_operator(sys):
    """Row vector solving row * A = C, via a linear solve against A'.

    Raises if A is numerically singular: the design needs an invertible
    state matrix to lift the output row.
    """
    svals = np.linalg.svd(sys.a, compute_uv=False)
    if svals[-1] <= INVERTIBILITY_TOL_REL * max(float(svals[0]), 1.0):
        raise np.linalg.LinAlgError(
            "state matrix is singular; the forwarding row requires an "
            "invertible state matrix")
    row = np.linalg.solve(sys.a.T, sys.c.ravel())
    resid = np.linalg.norm(row @ sys.a - sys.c.ravel(), np.inf)
    scale = max(np.linalg.norm(sys.c.ravel(), np.inf), 1.0)
    if resid > FORWARDING_RESIDUAL_TOL * scale:
        raise np.linalg.LinAlgError(
            f"forwarding residual {resid:.3e} exceeds tolerance; state "
            "matrix too ill-conditioned")
    return row


@dataclass(frozen=True)
class ForwardingDesign:
    """Assembled feedback: u = gain . (x, z).

    row lifts the output through the state matrix (row*A = C), weight is
    the positive integrator coupling, steady_gain = row*B is the scalar
    whose non-vanishing makes the integrator controllable through the
    plant; bp_row is B'P, the energy-damping measurement.
    """

    row: np.ndarray
    weight: float
    gain: np.ndarray
    bp_row: np.ndarray
    steady_gain: float
    admissible: bool


def gain(sys, row, mu):
    """Assemble the feedback row for integrator weight mu > 0."""
    if mu <= 0:
        raise ValueError("integrator weight must be positive")
    row = np.asarray(row, dtype=float).ravel()
    bp_row = (sys.b.T @ sys.p).ravel()
    steady = float(row @ sys.b.ravel())
    k_state = -bp_row - mu * steady * row
    k = np.concatenate([k_state, [mu * steady]])
    return ForwardingDesign(
        row=row,
        weight=float(mu),
        gain=k,
        bp_row=bp_row,
        steady_gain=steady,
        admissible=abs(steady) > STEADY_GAIN_TOL,
    )


def control(design, state):
    """Feedback value from the structured form.

    Computed as -B'P x + weight*(row*B)*(z - row*x); the test suite checks
    it against the flat gain-row product as an independent path.
    """
    x = np.asarray(state.x, dtype=float).ravel()
    return float(-design.bp_row @ x
                 + design.weight * design.steady_gain * (state.z - design.row @ x))


def closed_loop_field(sys, design, psi, state):
    """Right-hand side (x', z') = (Ax + B psi(u), Cx) of the closed loop."""
    if not design.admissible:
        raise ValueError("design is not admissible: steady-state gain is zero")
    x = np.asarray(state.x, dtype=float).ravel()
    u = control(design, state)
    w = psi.eval(u) if hasattr(psi, "eval") else psi(u)
    dx = sys.a @ x + sys.b.ravel() * w
    dz = float(sys.c.ravel() @ x)
    return ExtendedState(x=dx, z=dz)


def lyap_inner(sys, design, xi1, xi2):
    """The damped-energy inner product of two extended states."""
    x1 = np.asarray(xi1.x, dtype=float).ravel()
    x2 = np.asarray(xi2.x, dtype=float).ravel()
    r1 = xi1.z - design.row @ x1
    r2 = xi2.z - design.row @ x2
    return float(x1 @ sys.p @ x2 + design.weight * r1 * r2)


@dataclass(frozen=True)
class NormBounds:
    """Extremal eigenvalues sandwiching the energy form in the 2-norm."""

    lo: float
    hi: float
    weakly_coercive: bool


def quad_form_matrix(sys, design):
    """Symmetric matrix of the extended-state energy quadratic form."""
    n = sys.n
    m_col = design.row.reshape(n, 1)
    q = np.empty((n + 1, n + 1))
    q[:n, :n] = sys.p + design.weight * (m_col @ m_col.T)
    q[:n, n] = -design.weight * design.row
    q[n, :n] = -design.weight * design.row
    q[n, n] = design.weight
    return q


def norm_equivalence(sys, design):
    """Sandwich constants lo, hi with lo*|xi|^2 <= energy(xi) <= hi*|xi|^2."""
    q = quad_form_matrix(sys, design)
    asym = np.linalg.norm(q - q.T, np.inf)
    if asym > 1e-12 * max(np.linalg.norm(q, np.inf), 1.0):
        raise AssertionError(f"energy form assembly is asymmetric ({asym:.3e})")
    eigs = np.linalg.eigvalsh(q)
    lo, hi = float(eigs[0]), float(eigs[-1])
    return NormBounds(lo=lo, hi=hi,
                      weakly_coercive=lo > WEAK_COERCIVITY_REL * max(hi, 1.0))


@dataclass(frozen=True)
class ProbeResult:
    """Worst observed monotonicity defect over sampled state pairs."""

    max_inner: float
    max_normalized: float
    samples: int
    seed: int


def dissipativity_probe(sys, design, psi, sample_count, seed):
    """Sample pairs (xi1, xi2) and bound <F(xi1)-F(xi2), xi1-xi2> in the
    energy inner product. Theory says the value is never positive; the
    normalized figure divides by 1 + |xi1-xi2|^2 for scale-free reporting.
    """
    rng = np.random.default_rng(seed)
    worst = -np.inf
    worst_norm = -np.inf
    for _ in range(sample_count):
        v1 = rng.standard_normal(sys.n + 1)
        v2 = rng.standard_normal(sys.n + 1)
        s1 = state_from_vector(v1)
        s2 = state_from_vector(v2)
        f1 = closed_loop_field(sys, design, psi, s1)
        f2 = closed_loop_field(sys, design, psi, s2)
        df = ExtendedState(x=f1.x - f2.x, z=f1.z - f2.z)
        ds = ExtendedState(x=s1.x - s2.x, z=s1.z - s2.z)
        val = lyap_inner(sys, design, df, ds)
        worst = max(worst, val)
        worst_norm = max(worst_norm, val / (1.0 + float(np.sum(ds.as_vector() ** 2))))
    return ProbeResult(max_inner=worst, max_normalized=worst_norm,
                       samples=sample_count, seed=seed)
