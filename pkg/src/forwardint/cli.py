"""Command line front end.

Four subcommands: ``wave_run`` and ``wave_sweep`` drive the boundary-damped
string with its tip integrator, ``abstract_check`` audits a user-supplied
finite-dimensional system against the standing assumptions, and
``abstract_run`` integrates the assembled closed loop.  Configuration comes
from flat ``key=value`` files; every run writes CSV output into ``--out``
and optionally SVG plots.

Exit codes: 0 success, 2 configuration error, 3 assumption or
admissibility failure, 4 numerical failure during integration.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import abstract_core, diagnostics, integrator, nonlinearity, wave_sim

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTIONS = 3
EXIT_NUMERICAL = 4

# Lyapunov audit tolerance per recorded step, relative to 1 + V(0).
AUDIT_REL = {"rk4": 1e-6, "implicit_midpoint": 1e-8, "wave": 1e-6}

# Allowed roundoff on the normalized dissipativity defect.
PROBE_TOL = 1e-10

_REQUIRED = object()


class ConfigError(Exception):
    """Missing, malformed or contradictory configuration input."""


class AssumptionError(Exception):
    """A standing assumption fails or the design is inadmissible."""


class NumericalError(Exception):
    """The integration broke down (blow-up, non-convergence)."""


def _fmt(x):
    return repr(float(x))


class Config:
    """Flat key=value configuration with typed access and typo detection.

    Keys are consumed as they are read; ``finish()`` rejects leftovers so a
    misspelled key fails loudly instead of silently using a default.
    Relative paths resolve against the directory of the config file.
    """

    def __init__(self, mapping, base_dir):
        self._map = dict(mapping)
        self._used = set()
        self.base_dir = Path(base_dir)

    @classmethod
    def load(cls, path):
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        mapping = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            key = key.strip()
            value = value.strip()
            if not sep or not key:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            if key in mapping:
                raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
            mapping[key] = value
        return cls(mapping, path.parent)

    def _raw(self, key, default):
        self._used.add(key)
        if key in self._map:
            return self._map[key]
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r}")
        return None

    def get_str(self, key, default=_REQUIRED, choices=None):
        raw = self._raw(key, default)
        if raw is None:
            return default if default is not _REQUIRED else None
        if choices is not None and raw not in choices:
            raise ConfigError(f"{key} must be one of {sorted(choices)}, got {raw!r}")
        return raw

    def get_float(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default if default is not _REQUIRED else None
        try:
            return float(raw)
        except ValueError as exc:
            raise ConfigError(f"{key} must be a number, got {raw!r}") from exc

    def get_int(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default if default is not _REQUIRED else None
        try:
            return int(raw)
        except ValueError as exc:
            raise ConfigError(f"{key} must be an integer, got {raw!r}") from exc

    def get_bool(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default if default is not _REQUIRED else None
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"{key} must be true or false, got {raw!r}")

    def get_float_list(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default if default is not _REQUIRED else None
        parts = [p.strip() for p in raw.split(",") if p.strip()]
        if not parts:
            raise ConfigError(f"{key} must be a comma-separated list of numbers")
        try:
            return [float(p) for p in parts]
        except ValueError as exc:
            raise ConfigError(f"{key} must list numbers, got {raw!r}") from exc

    def get_path(self, key, default=_REQUIRED):
        raw = self._raw(key, default)
        if raw is None:
            return default if default is not _REQUIRED else None
        p = Path(raw)
        return p if p.is_absolute() else self.base_dir / p

    def finish(self):
        unknown = sorted(set(self._map) - self._used)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


def _psi_from(cfg):
    kind = cfg.get_str("psi.kind", choices=("sat", "id", "tanh"))
    level = cfg.get_float("psi.level", default=None)
    try:
        return nonlinearity.from_config(kind, level)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _wave_config_from(cfg, need_mu=True, mu_fallback=None):
    mu = cfg.get_float("mu", default=_REQUIRED if need_mu else None)
    if mu is None:
        mu = mu_fallback
    kwargs = dict(
        dx=cfg.get_float("dx"),
        dt=cfg.get_float("dt"),
        t_end=cfg.get_float("t_end"),
        mu=mu,
        psi=_psi_from(cfg),
        y0=cfg.get_str("y0", default="linear_x"),
        v0=cfg.get_str("v0", default="zero"),
        z0=cfg.get_float("z0", default=0.0),
        record_stride=cfg.get_int("record_stride", default=10),
        snapshot_stride=cfg.get_int("snapshot_stride", default=0),
        open_loop=cfg.get_bool("open_loop", default=False),
    )
    try:
        return wave_sim.WaveConfig(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def _outdir(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_columns(path, header, columns):
    rows = len(columns[0])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for i in range(rows):
            fh.write(",".join(_fmt(col[i]) for col in columns) + "\n")


WAVE_CSV_COLUMNS = (
    ("t", "t"), ("u", "u"), ("psi_u", "psi_u"), ("E", "energy"),
    ("M", "m_fun"), ("V", "lyap"), ("z", "z"), ("y_l2", "y_l2"),
    ("v_l2", "v_l2"),
)


def _write_wave_csv(path, data):
    header = [h for h, _ in WAVE_CSV_COLUMNS]
    columns = [data[k] for _, k in WAVE_CSV_COLUMNS]
    _write_columns(path, header, columns)


def _plot_backend():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _wave_plots(outdir, data):
    plt = _plot_backend()

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(data["t"], data["y_l2"], label="||y||")
    ax.plot(data["t"], data["v_l2"], label="||y_t||")
    ax.plot(data["t"], np.abs(data["z"]), label="|z|")
    ax.set_xlabel("t")
    ax.set_yscale("log")
    ax.legend()
    fig.savefig(outdir / "norms.svg", format="svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(data["t"], data["u"], label="u")
    ax.plot(data["t"], data["psi_u"], label="psi(u)")
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(outdir / "control.svg", format="svg")
    plt.close(fig)

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(data["t"], data["energy"], label="E")
    ax.plot(data["t"], data["lyap"], label="V")
    ax.set_xlabel("t")
    ax.legend()
    fig.savefig(outdir / "energy.svg", format="svg")
    plt.close(fig)


def _snapshot_writer(outdir, cfg):
    x = np.linspace(0.0, 1.0, cfg.n_nodes)

    def write(step_index, state):
        path = outdir / f"y_{step_index:04d}.csv"
        _write_columns(path, ["x", "y", "v"], [x, state.y, state.v])

    return write


def cmd_wave_run(args):
    cfg = Config.load(args.config)
    wc = _wave_config_from(cfg)
    cfg.finish()
    outdir = _outdir(args)

    on_snapshot = _snapshot_writer(outdir, wc) if wc.snapshot_stride else None
    t0 = time.perf_counter()
    try:
        rows = wave_sim.simulate(wc, on_snapshot=on_snapshot)
    except FloatingPointError as exc:
        raise NumericalError(str(exc)) from exc
    elapsed = time.perf_counter() - t0
    data = wave_sim.rows_to_arrays(rows)
    _write_wave_csv(outdir / "diagnostics.csv", data)

    summ = diagnostics.summarize(wc, data)
    print(f"wave run: dx={wc.dx:g} dt={wc.dt:g} t_end={wc.t_end:g} "
          f"mu={wc.mu:g} psi={wc.psi.kind}"
          + (f"({wc.psi.level:g})" if wc.psi.level is not None else "")
          + ("  [open loop]" if wc.open_loop else ""))
    print(f"  wall time {elapsed:.2f} s, {len(rows)} recorded samples")
    print(f"  final: ||y|| = {data['y_l2'][-1]:.3e}  |z| = {abs(data['z'][-1]):.3e}"
          f"  E = {data['energy'][-1]:.3e}  V = {data['lyap'][-1]:.3e}")

    if wc.open_loop:
        drift = float(np.max(np.abs(data["energy"] - data["energy"][0])))
        print(f"  energy drift: max |E(t) - E(0)| = {drift:.3e}")
    else:
        violations, worst, tol = diagnostics.audit_wave_run(
            wc, data, rel=AUDIT_REL["wave"])
        print(f"  Lyapunov audit: {violations} increases above {tol:.3e} "
              f"per step (worst step {worst:+.3e})")
        print(f"  settle (y+|z| < {diagnostics.SETTLE_EPS:g}): "
              f"{summ.settle_label()}")
        if wc.psi.bounded:
            ivals = diagnostics.saturation_intervals(
                data["t"], data["u"], wc.psi.level)
            if ivals:
                txt = ", ".join(f"({a:.3f}, {b:.3f})" for a, b in ivals)
            else:
                txt = "none"
            print(f"  saturation intervals (|u| >= {wc.psi.level:g}): {txt}")

    if args.plots:
        _wave_plots(outdir, data)
    print(f"  wrote {outdir / 'diagnostics.csv'}")
    return EXIT_OK


def cmd_wave_sweep(args):
    cfg = Config.load(args.config)
    mus = cfg.get_float_list("mu_list")
    wc = _wave_config_from(cfg, need_mu=False, mu_fallback=mus[0])
    cfg.finish()
    outdir = _outdir(args)

    try:
        summaries = diagnostics.sweep(wc, mus)
    except FloatingPointError as exc:
        raise NumericalError(str(exc)) from exc

    path = outdir / "sweep.csv"
    with open(path, "w") as fh:
        fh.write("mu,z_min,u_peak,psi_u_peak,settle_time,final_norm\n")
        for s in summaries:
            fh.write(",".join([
                _fmt(s.mu), _fmt(s.z_min), _fmt(s.u_peak), _fmt(s.psi_u_peak),
                s.settle_label(), _fmt(s.final_norm),
            ]) + "\n")

    print(f"{'mu':>6}  {'z_min':>14}  {'u_peak':>10}  {'psi_u_peak':>10}  "
          f"{'settle':>12}  {'final_norm':>12}")
    for s in summaries:
        settle = "not settled" if s.settle_time is None else f"{s.settle_time:.3f}"
        print(f"{s.mu:>6g}  {s.z_min:>14.8e}  {s.u_peak:>10.4f}  "
              f"{s.psi_u_peak:>10.4f}  {settle:>12}  {s.final_norm:>12.3e}")

    if args.plots:
        plt = _plot_backend()
        fig, axes = plt.subplots(1, 2, figsize=(9, 4))
        axes[0].plot(mus, [s.z_min for s in summaries], "o-")
        axes[0].set_xlabel("mu")
        axes[0].set_ylabel("z_min")
        axes[1].plot(mus, [s.psi_u_peak for s in summaries], "o-")
        axes[1].set_xlabel("mu")
        axes[1].set_ylabel("psi_u peak")
        fig.savefig(outdir / "sweep.svg", format="svg")
        plt.close(fig)

    print(f"wrote {path}")
    return EXIT_OK


def _system_from(cfg):
    mats = {}
    for key in ("a_file", "b_file", "c_file", "p_file"):
        path = cfg.get_path(key)
        try:
            mats[key[0]] = abstract_core.load_matrix(path)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"{key}: {exc}") from exc
    try:
        return abstract_core.abstract_system(mats["a"], mats["b"],
                                             mats["c"], mats["p"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _check_assumptions(sys_):
    report = abstract_core.validate_assumptions(sys_)
    print(report.as_table())
    if not report.all_pass:
        failed = [name for name, ok in (
            ("energy dissipation", report.dissipative),
            ("state-matrix invertibility", report.invertible),
            ("energy-weight coercivity", report.coercive),
            ("observability of the feedback pair", report.observable),
            ("nonzero steady-state gain", report.steady_state_gain_nonzero),
        ) if not ok]
        raise AssumptionError("failed: " + "; ".join(failed))
    return report


def cmd_abstract_check(args):
    cfg = Config.load(args.config)
    sys_ = _system_from(cfg)
    mu = cfg.get_float("mu")
    psi = _psi_from(cfg)
    probe_samples = cfg.get_int("probe_samples", default=1000)
    cfg.finish()
    outdir = _outdir(args)

    report = abstract_core.validate_assumptions(sys_)
    print(report.as_table())
    with open(outdir / "assumptions.kv", "w") as fh:
        for key, value in report.as_records().items():
            fh.write(f"{key}={value}\n")
    if not report.all_pass:
        raise AssumptionError("assumption audit failed; see table above")

    row = abstract_core.forwarding_operator(sys_)
    design = abstract_core.gain(sys_, row, mu)
    bounds = abstract_core.norm_equivalence(sys_, design)
    probe = abstract_core.dissipativity_probe(
        sys_, design, psi, probe_samples, args.seed)

    np.set_printoptions(precision=6, suppress=False)
    print(f"forwarding row: {row}")
    print(f"feedback gain:  {design.gain}")
    print(f"steady-state gain: {design.steady_gain:.6g}")
    print(f"energy-form sandwich: lo = {bounds.lo:.6f}, hi = {bounds.hi:.6f}, "
          f"coercive = {bounds.weakly_coercive}")
    print(f"dissipativity probe ({probe.samples} pairs, seed {probe.seed}): "
          f"max normalized defect {probe.max_normalized:.3e}")
    if probe.max_normalized > PROBE_TOL:
        raise AssumptionError(
            f"dissipativity probe found a positive defect "
            f"({probe.max_normalized:.3e} normalized, tol {PROBE_TOL:g})")
    return EXIT_OK


def cmd_abstract_run(args):
    cfg = Config.load(args.config)
    sys_ = _system_from(cfg)
    mu = cfg.get_float("mu")
    psi = _psi_from(cfg)
    xi0 = cfg.get_float_list("xi0")
    icfg_kwargs = dict(
        dt=cfg.get_float("dt"),
        t_end=cfg.get_float("t_end"),
        scheme=cfg.get_str("scheme", default="rk4",
                           choices=("rk4", "implicit_midpoint")),
        record_stride=cfg.get_int("record_stride", default=1),
    )
    cfg.finish()
    if len(xi0) != sys_.n + 1:
        raise ConfigError(
            f"xi0 must list {sys_.n + 1} numbers (state plus integrator), "
            f"got {len(xi0)}")
    try:
        icfg = integrator.IntegratorConfig(**icfg_kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    outdir = _outdir(args)

    _check_assumptions(sys_)
    try:
        row = abstract_core.forwarding_operator(sys_)
    except np.linalg.LinAlgError as exc:
        raise AssumptionError(str(exc)) from exc
    design = abstract_core.gain(sys_, row, mu)
    if not design.admissible:
        raise AssumptionError(
            "design inadmissible: the forwarding row annihilates the input "
            "direction (steady-state gain is zero)")

    try:
        traj = integrator.integrate(sys_, design, psi, np.array(xi0), icfg)
    except (FloatingPointError, RuntimeError) as exc:
        raise NumericalError(str(exc)) from exc

    traj.to_csv(outdir / "trajectory.csv")
    tol = diagnostics.lyapunov_audit_tol(traj.lyap[0], AUDIT_REL[icfg.scheme])
    violations, worst = diagnostics.monotonicity_audit(traj.lyap, tol)
    final = float(np.linalg.norm(traj.states[-1]))
    print(f"abstract run: n={sys_.n} mu={mu:g} scheme={icfg.scheme} "
          f"dt={icfg.dt:g} t_end={icfg.t_end:g}")
    print(f"  V: {traj.lyap[0]:.6e} -> {traj.lyap[-1]:.6e}")
    print(f"  Lyapunov audit: {violations} increases above {tol:.3e} "
          f"per step (worst step {worst:+.3e})")
    print(f"  final state norm: {final:.6e}")

    if args.plots:
        plt = _plot_backend()
        fig, axes = plt.subplots(1, 2, figsize=(9, 4))
        for i in range(sys_.n):
            axes[0].plot(traj.times, traj.states[:, i], label=f"x{i + 1}")
        axes[0].plot(traj.times, traj.states[:, -1], label="z")
        axes[0].set_xlabel("t")
        axes[0].legend()
        axes[1].plot(traj.times, traj.lyap)
        axes[1].set_xlabel("t")
        axes[1].set_ylabel("V")
        axes[1].set_yscale("log")
        fig.savefig(outdir / "trajectory.svg", format="svg")
        plt.close(fig)

    print(f"  wrote {outdir / 'trajectory.csv'}")
    return EXIT_OK


_COMMANDS = {
    "wave_run": cmd_wave_run,
    "wave_sweep": cmd_wave_sweep,
    "abstract_check": cmd_abstract_check,
    "abstract_run": cmd_abstract_run,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="forwardint",
        description="Integral-action boundary feedback: simulation and "
                    "assumption audits.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "wave_run": "simulate the boundary-controlled string once",
        "wave_sweep": "repeat the string run over a list of integrator weights",
        "abstract_check": "audit a matrix system against the assumptions",
        "abstract_run": "integrate the finite-dimensional closed loop",
    }
    for name, handler in _COMMANDS.items():
        p = sub.add_parser(name, help=helps[name])
        p.add_argument("--config", required=True, help="key=value config file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--plots", action="store_true", help="write SVG plots")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for sampling-based checks")
        p.set_defaults(handler=handler)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionError as exc:
        print(f"assumption failure: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTIONS
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
