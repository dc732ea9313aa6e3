"""Experiment orchestration: config parsing, sweeps, and output files.

Three experiment families are supported: the two single-particle studies
(parabolic magnetic field, with or without the shear electric field) that
sweep (epsilon, dt, order) and tabulate trajectory errors, and the
self-consistent Vlasov-Poisson run on the disk that emits a diagnostics
time series plus density snapshots.

Config files are flat ``key = value`` text; ``#`` starts a comment.
Unknown keys are rejected with their line number.  Every omitted key is
filled with the family's default.
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .diagnostics import ErrorReport, adiabatic_invariant, energy_parts, l1_trajectory_error
from .fields import DiskConfinementB, FieldModel, Vec2, full_drift, make_model
from .integrators import (
    GuidingCenterState,
    NonFiniteStateError,
    ParticleState,
    SchemeParams,
    integrate_trajectory,
    limit_reference_trajectory,
    make_stepper,
    num_steps,
    orbit_b_bound,
    reference_trajectory,
)
from .pic import (
    Grid,
    InitialDataSpec,
    deposit_charge,
    push_ensemble_frozen,
    sample_initial,
    solve_poisson,
)

FAMILIES = ("SingleParticleNoE", "SingleParticleWithE", "VlasovPoisson")

ERRORS_CSV_COLUMNS = (
    "family,order,epsilon,dt,x_err_ref,w_err_ref_scaled,e_err_ref,"
    "x_err_limit,w_err_drift,e_err_limit,status"
)
TIMESERIES_COLUMNS = "t,total_energy,kinetic,field,adiabatic_invariant,escaped_count"


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass
class ExperimentConfig:
    family: str
    epsilon_list: list[float] = field(default_factory=list)
    dt_list: list[float] = field(default_factory=list)
    orders: list[int] = field(default_factory=list)
    T: float = -1.0
    x0: Vec2 = (5.0, 4.0)
    v0: Vec2 = (5.0, 6.0)
    alpha: float = 0.5
    N: int = 10000
    seed: int = 0
    nx: int = 65
    snapshot_times: list[float] = field(default_factory=list)
    out_dir: str = "out"
    ref_dt_factor: float = 0.1
    ref_max_steps: int = 20_000_000
    limit_ref_substeps: int = 100
    dump_trajectories: bool = False
    dump_particles: bool = False
    workers: int = 1

    def validate(self) -> "ExperimentConfig":
        if self.family not in FAMILIES:
            raise ConfigError(f"family must be one of {FAMILIES}, got {self.family!r}")
        if not self.epsilon_list:
            raise ConfigError("epsilon_list must not be empty")
        for v in self.epsilon_list:
            if v <= 0.0:
                raise ConfigError(f"epsilon values must be positive, got {v!r}")
        if not self.dt_list or any(v <= 0.0 for v in self.dt_list):
            raise ConfigError("dt_list must contain positive values")
        if not self.orders or any(k not in (1, 2, 3) for k in self.orders):
            raise ConfigError("orders must be a non-empty subset of {1, 2, 3}")
        if self.T < 0.0:
            raise ConfigError("T must be non-negative")
        if self.alpha <= 0.0:
            raise ConfigError("alpha must be positive")
        if self.N < 1:
            raise ConfigError("N must be at least 1")
        if self.nx < 3:
            raise ConfigError("nx must be at least 3")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.ref_dt_factor <= 0.0:
            raise ConfigError("ref_dt_factor must be positive")
        return self


def _default_epsilon_sweep() -> list[float]:
    return [float(v) for v in np.geomspace(1e-3, 3.0, 25)]


def default_config(family: str) -> ExperimentConfig:
    """Family defaults: the experiment parameters used throughout."""
    if family in ("SingleParticleNoE", "SingleParticleWithE"):
        return ExperimentConfig(
            family=family,
            epsilon_list=_default_epsilon_sweep(),
            dt_list=[0.01, 0.005, 0.0025],
            orders=[3],
            T=2.0,
        )
    if family == "VlasovPoisson":
        return ExperimentConfig(
            family=family,
            epsilon_list=[1.0, 0.05],
            dt_list=[0.1],
            orders=[3],
            T=80.0,
            snapshot_times=[10.0, 20.0, 55.0, 80.0],
        )
    raise ConfigError(f"family must be one of {FAMILIES}, got {family!r}")


_FLOAT_LIST_KEYS = {"epsilon_list", "dt_list", "snapshot_times"}
_PAIR_KEYS = {"x0", "v0"}
_FLOAT_KEYS = {"T", "alpha", "ref_dt_factor"}
_INT_KEYS = {"N", "seed", "nx", "workers", "ref_max_steps", "limit_ref_substeps"}
_BOOL_KEYS = {"dump_trajectories", "dump_particles"}
_STR_KEYS = {"out_dir"}

_FAMILY_ALIASES = {
    "singleparticlenoe": "SingleParticleNoE",
    "single_particle_no_e": "SingleParticleNoE",
    "singleparticlewithe": "SingleParticleWithE",
    "single_particle_with_e": "SingleParticleWithE",
    "vlasovpoisson": "VlasovPoisson",
    "vlasov_poisson": "VlasovPoisson",
}


def _parse_floats(text: str) -> list[float]:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    return [float(p) for p in parts]


def parse_config(path: str) -> ExperimentConfig:
    """Read and validate a config file, filling defaults for omitted keys."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as err:
        raise ConfigError(f"cannot read config file {path!r}: {err}") from err

    entries: dict[str, tuple[int, str]] = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        entries[key] = (lineno, value)

    if "family" not in entries:
        raise ConfigError(f"{path}: missing required key 'family'")
    lineno, fam_raw = entries.pop("family")
    family = _FAMILY_ALIASES.get(fam_raw.lower())
    if family is None:
        raise ConfigError(f"{path}:{lineno}: family must be one of {FAMILIES}, got {fam_raw!r}")

    cfg = default_config(family)
    for key, (lineno, value) in entries.items():
        try:
            if key in _FLOAT_LIST_KEYS:
                cfg = replace(cfg, **{key: _parse_floats(value)})
            elif key in _PAIR_KEYS:
                pair = _parse_floats(value)
                if len(pair) != 2:
                    raise ValueError("expected exactly two numbers")
                cfg = replace(cfg, **{key: (pair[0], pair[1])})
            elif key in _FLOAT_KEYS:
                cfg = replace(cfg, **{key: float(value)})
            elif key in _INT_KEYS:
                cfg = replace(cfg, **{key: int(value)})
            elif key in _BOOL_KEYS:
                low = value.lower()
                if low not in ("true", "false", "1", "0", "yes", "no"):
                    raise ValueError("expected a boolean")
                cfg = replace(cfg, **{key: low in ("true", "1", "yes")})
            elif key in _STR_KEYS:
                cfg = replace(cfg, **{key: value})
            elif key == "orders":
                cfg = replace(cfg, orders=[int(v) for v in _parse_floats(value)])
            else:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        except ConfigError:
            raise
        except ValueError as err:
            raise ConfigError(f"{path}:{lineno}: bad value for {key!r}: {err}") from err

    try:
        return cfg.validate()
    except ConfigError as err:
        raise ConfigError(f"{path}: {err}") from err


def _fmt(v: float) -> str:
    return repr(float(v))


def _open_run_log(out_dir: str) -> logging.Logger:
    os.makedirs(out_dir, exist_ok=True)
    logger = logging.getLogger(f"gyropic.run.{id(object())}")
    logger.setLevel(logging.INFO)
    logger.propagate = False
    handler = logging.FileHandler(os.path.join(out_dir, "run.log"), mode="w", encoding="utf-8")
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    logger.addHandler(handler)
    return logger


def _close_run_log(logger: logging.Logger) -> None:
    for h in list(logger.handlers):
        h.close()
        logger.removeHandler(h)


def sweep_model(cfg: ExperimentConfig) -> FieldModel:
    name = "ParabolicB_NoE" if cfg.family == "SingleParticleNoE" else "ParabolicB_LinearE"
    return make_model(name, alpha=cfg.alpha)


def sweep_cell(
    cfg: ExperimentConfig, model: FieldModel, order: int, eps: float, dt: float
) -> tuple[ErrorReport, list[ParticleState] | None]:
    """Error norms of one (order, epsilon, dt) cell against both references."""
    e0 = 0.5 * (cfg.v0[0] ** 2 + cfg.v0[1] ** 2)
    s0 = ParticleState(cfg.x0, e0, cfg.v0)
    params = SchemeParams(eps, dt, order).validate()
    stepper = make_stepper(order)
    report = ErrorReport(epsilon=eps, dt=dt, order=order)

    try:
        semi = integrate_trajectory(s0, 0.0, cfg.T, dt, lambda s, t: stepper(s, t, params, model))
    except NonFiniteStateError:
        report.status = "failed"
        return report, None

    X = np.array([s.x for s in semi])
    Ee = np.array([s.e for s in semi])
    W = np.array([s.w for s in semi])

    lim = limit_reference_trajectory(
        GuidingCenterState(cfg.x0, e0), 0.0, cfg.T, dt, model, cfg.limit_ref_substeps
    )
    Y = np.array([s.y for s in lim])
    G = np.array([s.g for s in lim])
    U0 = np.array([full_drift(model, n * dt, s.y, s.g) for n, s in enumerate(lim)])
    # Limit-system comparisons start after the accommodation step: the
    # initial w/eps = v0/eps predates the drift regime and would swamp the
    # norm, while x and e coincide with (Y, g) at n = 0 by construction.
    report.x_err_limit = l1_trajectory_error(X[1:], Y[1:], dt, cfg.T)
    report.e_err_limit = l1_trajectory_error(Ee[1:], G[1:], dt, cfg.T)
    report.w_err_drift = l1_trajectory_error(W[1:] / eps, U0[1:], dt, cfg.T)

    # The fine step must resolve the gyration rate b/eps^2, not just eps^2
    # itself: a step of eps^2/10 turns over 1.35 rad per step where b = 13.5
    # and silently corrupts the oracle.
    n_coarse = num_steps(0.0, cfg.T, dt)
    b_bound = orbit_b_bound(model, semi, [n * dt for n in range(len(semi))], eps)
    dt_fine_target = cfg.ref_dt_factor * min(eps * eps / b_bound, dt)
    n_sub = max(1, int(math.ceil(dt / dt_fine_target - 1e-9)))
    if n_coarse * n_sub > cfg.ref_max_steps:
        report.status = "no_ref"
        return report, semi

    try:
        ref = reference_trajectory(s0, 0.0, cfg.T, dt, eps, model, dt_fine_target)
    except NonFiniteStateError:
        report.status = "failed"
        return report, semi
    Xr = np.array([s.x for s in ref])
    Er = np.array([s.e for s in ref])
    Wr = np.array([s.w for s in ref])
    report.x_err_ref = l1_trajectory_error(X, Xr, dt, cfg.T)
    report.w_err_ref_scaled = l1_trajectory_error(W, Wr, dt, cfg.T) / eps
    report.e_err_ref = l1_trajectory_error(Ee, Er, dt, cfg.T)
    return report, semi


def _report_row(family: str, r: ErrorReport) -> str:
    cells = [family, str(r.order), _fmt(r.epsilon), _fmt(r.dt)]
    for v in (
        r.x_err_ref, r.w_err_ref_scaled, r.e_err_ref,
        r.x_err_limit, r.w_err_drift, r.e_err_limit,
    ):
        if v is None or not math.isfinite(v):
            cells.append("")
        else:
            cells.append(_fmt(v))
    cells.append(r.status)
    return ",".join(cells)


def write_errors_csv(path: str, family: str, reports: list[ErrorReport]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(ERRORS_CSV_COLUMNS + "\n")
        for r in reports:
            fh.write(_report_row(family, r) + "\n")


def _write_trajectory_csv(path: str, dt: float, states: list[ParticleState]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("t,x1,x2,e,w1,w2\n")
        for n, s in enumerate(states):
            fh.write(
                ",".join(
                    [_fmt(n * dt), _fmt(s.x[0]), _fmt(s.x[1]), _fmt(s.e), _fmt(s.w[0]), _fmt(s.w[1])]
                )
                + "\n"
            )


def run_single_particle_sweep(cfg: ExperimentConfig) -> list[ErrorReport]:
    """Sweep (order, epsilon, dt), writing errors.csv and the run log."""
    cfg.validate()
    model = sweep_model(cfg)
    log = _open_run_log(cfg.out_dir)
    reports: list[ErrorReport] = []
    try:
        log.info(
            "single-particle sweep family=%s orders=%s epsilons=%d dts=%s T=%s",
            cfg.family, cfg.orders, len(cfg.epsilon_list), cfg.dt_list, cfg.T,
        )
        for order in sorted(cfg.orders):
            for eps in sorted(cfg.epsilon_list):
                for dt in sorted(cfg.dt_list):
                    report, semi = sweep_cell(cfg, model, order, eps, dt)
                    reports.append(report)
                    log.info(
                        "cell order=%d eps=%s dt=%s status=%s", order, eps, dt, report.status
                    )
                    if cfg.dump_trajectories and semi is not None:
                        _write_trajectory_csv(
                            os.path.join(
                                cfg.out_dir,
                                f"trajectory_order{order}_eps{eps:g}_dt{dt:g}.csv",
                            ),
                            dt,
                            semi,
                        )
        write_errors_csv(os.path.join(cfg.out_dir, "errors.csv"), cfg.family, reports)
        log.info("wrote %d rows to errors.csv", len(reports))
    finally:
        _close_run_log(log)
    return reports


def write_density_snapshot(path: str, grid: Grid, t: float) -> None:
    """Header 'nx ny L t', then ny rows of nx space-separated densities."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"{grid.nx} {grid.ny} {_fmt(grid.L)} {_fmt(t)}\n")
        for iy in range(grid.ny):
            fh.write(" ".join(_fmt(v) for v in grid.rho[iy]) + "\n")


def _write_particles_csv(path: str, ens) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id,x1,x2,e,w1,w2,weight\n")
        for k in range(ens.count):
            fh.write(
                ",".join(
                    [
                        str(k),
                        _fmt(ens.x[k, 0]), _fmt(ens.x[k, 1]), _fmt(ens.e[k]),
                        _fmt(ens.w[k, 0]), _fmt(ens.w[k, 1]), _fmt(ens.weight[k]),
                    ]
                )
                + "\n"
            )


@dataclass
class VlasovPoissonSummary:
    epsilon: float
    out_dir: str
    energy_drift: float
    invariant_drift: float
    max_escaped_fraction: float
    rows: int


def run_vlasov_poisson_case(
    cfg: ExperimentConfig, eps: float, dt: float, order: int, out_dir: str
) -> VlasovPoissonSummary:
    """One self-consistent run; emits timeseries.csv and density snapshots."""
    model = DiskConfinementB()
    ens = sample_initial(InitialDataSpec(), cfg.N, cfg.seed)
    grid = Grid(nx=cfg.nx)
    params = SchemeParams(eps, dt, order).validate()
    n_steps = num_steps(0.0, cfg.T, dt)

    snap_steps: dict[int, float] = {0: 0.0}
    for s in cfg.snapshot_times:
        n = int(round(s / dt))
        if 0 <= n <= n_steps:
            snap_steps[n] = s

    log = _open_run_log(out_dir)
    rows: list[str] = []
    energies: list[float] = []
    invariants: list[float] = []
    max_escaped = 0
    try:
        log.info(
            "vlasov-poisson run eps=%s dt=%s order=%d N=%d nx=%d T=%s workers=%d",
            eps, dt, order, cfg.N, cfg.nx, cfg.T, cfg.workers,
        )
        for n in range(n_steps + 1):
            t = n * dt
            escaped = deposit_charge(ens, grid, cfg.workers)
            iters = solve_poisson(grid)
            kinetic, fld = energy_parts(ens, grid)
            mu = adiabatic_invariant(ens, model, t, grid.L)
            rows.append(
                ",".join(
                    [
                        _fmt(t), _fmt(kinetic + fld), _fmt(kinetic), _fmt(fld),
                        _fmt(mu), str(escaped),
                    ]
                )
            )
            energies.append(kinetic + fld)
            invariants.append(mu)
            max_escaped = max(max_escaped, escaped)
            if n in snap_steps:
                write_density_snapshot(
                    os.path.join(out_dir, f"density_t{snap_steps[n]:g}.txt"), grid, t
                )
            if n < n_steps:
                try:
                    push_ensemble_frozen(ens, grid, t, params, model, cfg.workers)
                except Exception:
                    log.error("push failed at step %d (t=%s)", n + 1, t)
                    raise
                if not (
                    np.all(np.isfinite(ens.x))
                    and np.all(np.isfinite(ens.e))
                    and np.all(np.isfinite(ens.w))
                ):
                    log.error("non-finite particle state at step %d", n + 1)
                    raise NonFiniteStateError(n + 1)
            if n % 50 == 0:
                log.info("step %d/%d: cg_iters=%d escaped=%d", n, n_steps, iters, escaped)

        with open(os.path.join(out_dir, "timeseries.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(TIMESERIES_COLUMNS + "\n")
            for row in rows:
                fh.write(row + "\n")
        if cfg.dump_particles:
            _write_particles_csv(os.path.join(out_dir, "particles.csv"), ens)

        e0, m0 = energies[0], invariants[0]
        energy_drift = max(abs(v - e0) for v in energies) / abs(e0)
        invariant_drift = max(abs(v - m0) for v in invariants) / abs(m0)
        summary = VlasovPoissonSummary(
            epsilon=eps,
            out_dir=out_dir,
            energy_drift=energy_drift,
            invariant_drift=invariant_drift,
            max_escaped_fraction=max_escaped / ens.count,
            rows=len(rows),
        )
        log.info(
            "done: energy_drift=%.4f invariant_drift=%.4f max_escaped_fraction=%.5f",
            summary.energy_drift, summary.invariant_drift, summary.max_escaped_fraction,
        )
        return summary
    finally:
        _close_run_log(log)


def run_vlasov_poisson(cfg: ExperimentConfig) -> list[VlasovPoissonSummary]:
    """Run every (epsilon, dt, order) combination of a Vlasov-Poisson config."""
    cfg.validate()
    combos = [(e, d, k) for k in sorted(cfg.orders) for e in sorted(cfg.epsilon_list) for d in sorted(cfg.dt_list)]
    summaries = []
    for eps, dt, order in combos:
        if len(combos) == 1:
            out_dir = cfg.out_dir
        else:
            out_dir = os.path.join(cfg.out_dir, f"eps{eps:g}_dt{dt:g}_order{order}")
        summaries.append(run_vlasov_poisson_case(cfg, eps, dt, order, out_dir))
    return summaries


def run_experiment(cfg: ExperimentConfig):
    """Dispatch a validated config to its family's runner."""
    if cfg.family == "VlasovPoisson":
        return run_vlasov_poisson(cfg)
    return run_single_particle_sweep(cfg)
