"""Time evolution of the master equation.

``integrate`` is an explicit Dormand-Prince 5(4) integrator with PI step-size
control and 4th-order dense output. ``propagate_exact`` exponentiates the
superoperator and serves as the independent reference. ``find_steady_state``
runs either one until the sink (and ground) populations stop moving.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .errors import ConfigError, InvariantViolation, PropagatorTooLarge, StepSizeUnderflow
from .lindblad import Layout, LindbladModel, apply_rhs, build_liouvillian
from .numerics import devectorize, expm, expm_action, vectorize

TRACE_ERROR_LIMIT = 1e-6
EXACT_DIM_CAP = 12


@dataclass(frozen=True)
class IntegratorConfig:
    """Integration settings. Times are in units of ``1 / omega``.

    ``sample_times`` overrides the uniform grid of ``n_samples`` points on
    ``[0, t_max]``; ``grid="log"`` spaces the grid logarithmically from
    ``log_start`` instead (``t = 0`` is always included).
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    t_max: float = 300.0
    n_samples: int = 601
    grid: str = "linear"
    log_start: float = 1e-2
    sample_times: tuple[float, ...] | None = None
    convergence_window: float = 10.0
    convergence_tol: float = 1e-7
    max_steps: int = 2_000_000
    store_states: bool = False
    rhs: str = "auto"

    def __post_init__(self):
        problems = validate_integrator(self)
        if problems:
            raise ConfigError("; ".join(problems))

    def times(self) -> np.ndarray:
        if self.sample_times is not None:
            return np.asarray(self.sample_times, dtype=float)
        if self.grid == "log":
            tail = np.geomspace(self.log_start, self.t_max, self.n_samples - 1)
            return np.concatenate([[0.0], tail])
        return np.linspace(0.0, self.t_max, self.n_samples)

    def to_dict(self) -> dict:
        out = {
            k: getattr(self, k)
            for k in ("rel_tol", "abs_tol", "t_max", "n_samples", "grid", "log_start",
                      "convergence_window", "convergence_tol", "max_steps", "rhs")
        }
        out["sample_times"] = None if self.sample_times is None else [float(t) for t in self.sample_times]
        return out


def validate_integrator(cfg: IntegratorConfig) -> list[str]:
    out = []
    if not (cfg.rel_tol > 0 and cfg.abs_tol > 0):
        out.append("integrator tolerances must be > 0")
    if not cfg.t_max > 0:
        out.append("t_max must be > 0")
    if cfg.n_samples < 2:
        out.append("n_samples must be >= 2")
    if cfg.grid not in ("linear", "log"):
        out.append(f"grid must be 'linear' or 'log', got {cfg.grid!r}")
    if not (cfg.convergence_window > 0 and cfg.convergence_tol > 0):
        out.append("convergence window and tolerance must be > 0")
    if cfg.rhs not in ("auto", "superoperator", "matrix_free"):
        out.append(f"unknown rhs mode {cfg.rhs!r}")
    if cfg.sample_times is not None:
        t = np.asarray(cfg.sample_times, dtype=float)
        if t.ndim != 1 or t.size < 1 or np.any(t < 0) or np.any(np.diff(t) < 0):
            out.append("sample_times must be a non-empty ascending list of times >= 0")
    return out


@dataclass(eq=False)
class Trajectory:
    """Sampled solution of the master equation.

    ``populations[k, j]`` is the population of basis level ``j`` at
    ``times[k]``; column order follows ``layout.labels()``.
    """

    times: np.ndarray
    populations: np.ndarray
    trace_dev: np.ndarray
    min_eig: np.ndarray
    purity: np.ndarray
    layout: Layout
    states: np.ndarray | None = None
    n_steps: int = 0
    n_rejected: int = 0
    stopped_early: bool = False

    @property
    def sink(self) -> np.ndarray:
        return self.populations[:, self.layout.sink]

    @property
    def ground(self) -> np.ndarray:
        if not self.layout.has_ground:
            return np.zeros(len(self.times))
        return self.populations[:, self.layout.ground]

    def site(self, n: int) -> np.ndarray:
        """Population series of 0-based network site ``n``."""
        return self.populations[:, self.layout.site(n)]

    @property
    def network(self) -> np.ndarray:
        return self.populations[:, self.layout.sites].sum(axis=1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        labels = ["pop_" + x for x in self.layout.labels()]
        w.writerow(["time"] + labels + ["trace_dev", "min_eig", "purity"])
        for k, t in enumerate(self.times):
            w.writerow(
                [repr(float(t))]
                + [repr(float(p)) for p in self.populations[k]]
                + [repr(float(self.trace_dev[k])), repr(float(self.min_eig[k])),
                   repr(float(self.purity[k]))]
            )
        return buf.getvalue()


def check_density_matrix(rho, dim: int, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (dim, dim):
        raise ConfigError(f"initial state has shape {rho.shape}, model needs ({dim}, {dim})")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ConfigError("initial state is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ConfigError(f"initial state has trace {np.trace(rho).real}, expected 1")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -tol:
        raise ConfigError("initial state is not positive semidefinite")
    return rho


# Dormand-Prince 5(4) tableau with Shampine's 4th-order continuous extension.
_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1])
_A = [np.array(row) for row in [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
]]
_B = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_E = np.array([-71 / 57600, 0, 71 / 16695, -71 / 1920, 17253 / 339200, -22 / 525, 1 / 40])
_P = np.array([
    [1, -8048581381 / 2820520608, 8663915743 / 2820520608, -12715105075 / 11282082432],
    [0, 0, 0, 0],
    [0, 131558114200 / 32700410799, -68118460800 / 10900136933, 87487479700 / 32700410799],
    [0, -1754552775 / 470086768, 14199869525 / 1410260304, -10690763975 / 1880347072],
    [0, 127303824393 / 49829197408, -318862633887 / 49829197408, 701980252875 / 199316789632],
    [0, -282668133 / 205662961, 2019193451 / 616988883, -1453857185 / 822651844],
    [0, 40617522 / 29380423, -110615467 / 29380423, 69997945 / 29380423],
])

_POWERS = np.arange(1, 5)
_SAFETY = 0.9
_ALPHA = 0.7 / 5  # PI controller exponents (Hairer & Wanner, DOPRI5)
_BETA = 0.4 / 5
_MIN_FACTOR = 0.2
_MAX_FACTOR = 10.0


def _rhs_function(model: LindbladModel, mode: str) -> Callable[[np.ndarray], np.ndarray]:
    d = model.dim
    if mode == "auto":
        mode = "superoperator" if d <= EXACT_DIM_CAP else "matrix_free"
    if mode == "superoperator":
        s = build_liouvillian(model)
        return lambda y: s @ y
    return lambda y: vectorize(apply_rhs(model, devectorize(y, d)))


def _symmetrize(y: np.ndarray, d: int) -> np.ndarray:
    rho = y.reshape(d, d, order="F")
    return (0.5 * (rho + rho.conj().T)).reshape(-1, order="F")


def _initial_step(f, y0, f0, rtol, atol) -> float:
    scale = atol + rtol * np.abs(y0)
    d0 = np.sqrt(np.mean(np.abs(y0 / scale) ** 2))
    d1 = np.sqrt(np.mean(np.abs(f0 / scale) ** 2))
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    f1 = f(y0 + h0 * f0)
    d2 = np.sqrt(np.mean(np.abs((f1 - f0) / scale) ** 2)) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate(
    model: LindbladModel,
    rho0=None,
    cfg: IntegratorConfig | None = None,
    stop: Callable[[float, np.ndarray], bool] | None = None,
) -> Trajectory:
    """Integrate the master equation from ``rho0`` over ``cfg.times()``.

    Parameters
    ----------
    model : LindbladModel
    rho0 : array, optional
        Initial density matrix; defaults to the injection site.
    cfg : IntegratorConfig, optional
    stop : callable, optional
        ``stop(t, populations)`` is evaluated at every sample time; when it
        returns True the integration ends after that sample.

    Raises
    ------
    StepSizeUnderflow
        If the step size collapses below round-off or ``cfg.max_steps`` is hit.
    InvariantViolation
        If the trace drifts from 1 by more than ``1e-6``.
    """
    cfg = IntegratorConfig() if cfg is None else cfg
    d = model.dim
    rho0 = model.initial_state() if rho0 is None else check_density_matrix(rho0, d)
    times = cfg.times()
    f = _rhs_function(model, cfg.rhs)
    rtol, atol = cfg.rel_tol, cfg.abs_tol

    n_out = len(times)
    chunks: list[tuple] = []
    pending: list[np.ndarray] = []
    n_pending = 0
    filled = 0
    t = 0.0
    y = vectorize(rho0).copy()
    stopped = False

    def flush():
        nonlocal n_pending
        if pending:
            rho = np.concatenate(pending)
            chunks.append(_diagnostics(rho) + ((rho,) if cfg.store_states else ()))
            pending.clear()
            n_pending = 0

    def emit(k_lo, k_hi, values):
        nonlocal filled, stopped, n_pending
        rho = np.asarray(values).reshape(k_hi - k_lo, d, d).transpose(0, 2, 1)
        rho = 0.5 * (rho + rho.conj().transpose(0, 2, 1))
        if stop is not None:
            pops = np.einsum("kii->ki", rho).real
            for j in range(k_hi - k_lo):
                if stop(times[k_lo + j], pops[j]):
                    stopped = True
                    rho = rho[: j + 1]
                    break
        pending.append(rho)
        n_pending += len(rho)
        filled = k_lo + len(rho)
        if n_pending >= 4096:
            flush()

    # Samples at t = 0 (and any before the start) come straight from rho0.
    k0 = int(np.searchsorted(times, 0.0, side="right"))
    emit(0, k0, [y] * k0)

    t_end = float(times[-1])
    fy = f(y)
    h = _initial_step(f, y, fy, rtol, atol) if t_end > 0 else 0.0
    err_prev = 1e-4
    n_steps = n_rejected = 0
    k = np.empty((7, y.size), dtype=complex)

    while filled < n_out and not stopped:
        if n_steps + n_rejected >= cfg.max_steps:
            raise StepSizeUnderflow(f"step budget of {cfg.max_steps} exhausted at t = {t:.6g}")
        h = min(h, t_end - t)
        if h <= 1e-14 * max(1.0, abs(t)):
            raise StepSizeUnderflow(
                f"step size {h:.3e} underflowed at t = {t:.6g}; try propagate_exact"
            )
        k[0] = fy
        for i in range(1, 6):
            k[i] = f(y + h * (_A[i] @ k[:i]))
        y_new = y + h * (_B[:6] @ k[:6])
        k[6] = f(y_new)
        err_vec = h * (_E @ k)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = err_vec / scale
        err = math.sqrt(float(np.vdot(ratio, ratio).real) / ratio.size)

        if err <= 1.0:
            t_new = t + h
            lo = filled
            hi = int(np.searchsorted(times, t_new, side="right"))
            if hi == n_out - 1 and t_end - t_new <= 1e-12 * max(1.0, t_end):
                hi = n_out
            if hi > lo:
                theta = np.clip((times[lo:hi] - t) / h, 0.0, 1.0)
                powers = theta[:, None] ** _POWERS
                q = k.T @ _P  # (size, 4)
                values = y[None, :] + h * (powers @ q.T)
                emit(lo, hi, values)
            t = t_new
            y = _symmetrize(y_new, d)
            # The Lindblad generator commutes with the adjoint, so the FSAL stage
            # can be symmetrized instead of re-evaluated.
            fy = _symmetrize(k[6], d)
            n_steps += 1
            factor = _SAFETY * max(err, 1e-10) ** -_ALPHA * err_prev ** _BETA
            h *= min(_MAX_FACTOR, max(_MIN_FACTOR, factor))
            err_prev = max(err, 1e-4)
        else:
            n_rejected += 1
            h *= max(_MIN_FACTOR, _SAFETY * err ** -(1 / 5))

    flush()
    parts = list(zip(*chunks))
    pops, trace_dev, min_eig, purity = (np.concatenate(p) for p in parts[:4])
    traj = Trajectory(times[:filled].astype(float), pops, trace_dev, min_eig, purity,
                      model.layout, n_steps=n_steps, n_rejected=n_rejected,
                      stopped_early=stopped)
    if cfg.store_states:
        traj.states = np.concatenate(parts[4])
    bad = np.flatnonzero(traj.trace_dev > TRACE_ERROR_LIMIT)
    if bad.size:
        raise InvariantViolation(
            f"trace deviation {traj.trace_dev[bad[0]]:.3e} at t = {traj.times[bad[0]]:.6g}"
        )
    return traj


def _diagnostics(states: np.ndarray) -> tuple[np.ndarray, ...]:
    """Populations, trace deviation, minimum eigenvalue and purity per state."""
    pops = np.einsum("kii->ki", states).real
    trace_dev = np.abs(np.einsum("kii->k", states) - 1.0)
    min_eig = np.linalg.eigvalsh(states)[:, 0] if len(states) else np.empty(0)
    purity = np.einsum("kij,kji->k", states, states).real
    return pops, trace_dev, min_eig, purity


def _diagnose(times, states, layout: Layout) -> Trajectory:
    return Trajectory(np.asarray(times, dtype=float), *_diagnostics(states), layout,
                      states=states)


def propagate_exact(model: LindbladModel, rho0, t: float, cap: int = EXACT_DIM_CAP) -> np.ndarray:
    """``rho(t)`` via the exponential of the dense superoperator."""
    if model.dim > cap:
        raise PropagatorTooLarge(f"model dim {model.dim} exceeds the exact-propagation cap {cap}")
    rho0 = check_density_matrix(rho0, model.dim)
    return devectorize(expm_action(build_liouvillian(model), vectorize(rho0), t), model.dim)


def exact_trajectory(model: LindbladModel, rho0, times, cap: int = EXACT_DIM_CAP) -> Trajectory:
    """Sample ``propagate_exact`` on a grid by chaining one-step propagators."""
    if model.dim > cap:
        raise PropagatorTooLarge(f"model dim {model.dim} exceeds the exact-propagation cap {cap}")
    rho0 = check_density_matrix(rho0, model.dim)
    times = np.asarray(times, dtype=float)
    s = build_liouvillian(model)
    d = model.dim
    y = vectorize(rho0)
    states = np.empty((len(times), d, d), dtype=complex)
    t_prev = 0.0
    cache: dict[float, np.ndarray] = {}
    for i, t in enumerate(times):
        dt = round(float(t - t_prev), 12)
        if dt != 0.0:
            if dt not in cache:
                cache[dt] = expm(s, dt)
            y = cache[dt] @ y
        states[i] = devectorize(y, d)
        t_prev = t
    return _diagnose(times, states, model.layout)


@dataclass(frozen=True)
class SteadyState:
    """Long-time result: final state, sink population and convergence info."""

    rho: np.ndarray
    eta: float
    converged_at: float
    converged: bool
    trajectory: Trajectory | None = field(default=None, repr=False)


def find_steady_state(
    model: LindbladModel,
    rho0=None,
    cfg: IntegratorConfig | None = None,
    method: str = "rk",
) -> SteadyState:
    """Evolve until sink and ground populations are stationary.

    Populations are compared at checkpoints one ``convergence_window`` apart;
    the run is converged once both change by less than ``convergence_tol``.
    Otherwise evolution stops at ``t_max`` and the result carries
    ``converged=False`` with the best available estimate.

    ``method="rk"`` uses :func:`integrate`; ``method="expm"`` steps the exact
    propagator ``exp(S * window)``, which is much cheaper for ensembles.
    """
    cfg = IntegratorConfig() if cfg is None else cfg
    rho0 = model.initial_state() if rho0 is None else check_density_matrix(rho0, model.dim)
    w = cfg.convergence_window
    n_check = max(1, math.ceil(cfg.t_max / w - 1e-12))
    checkpoints = np.minimum(np.arange(n_check + 1) * w, cfg.t_max)
    lay = model.layout

    def absorbed(pops):
        g = pops[lay.ground] if lay.has_ground else 0.0
        return pops[lay.sink], g

    if method == "rk":
        prev = {}

        def stop(t, pops):
            cur = absorbed(pops)
            last = prev.get("v")
            prev["v"] = cur
            return last is not None and t > 0 and all(
                abs(a - b) < cfg.convergence_tol for a, b in zip(cur, last)
            )

        traj = integrate(model, rho0, replace(cfg, sample_times=tuple(checkpoints),
                                              store_states=True), stop=stop)
        rho = traj.states[-1]
        t_final = float(traj.times[-1])
        return SteadyState(rho, float(rho[lay.sink, lay.sink].real), t_final,
                           traj.stopped_early, traj)
    if method == "expm":
        if model.dim > EXACT_DIM_CAP:
            raise PropagatorTooLarge(f"model dim {model.dim} exceeds the exact-propagation cap")
        s = build_liouvillian(model)
        step = expm(s, w)
        d = model.dim
        y = vectorize(rho0)
        last = absorbed(rho0.diagonal().real)
        t = 0.0
        for t_next in checkpoints[1:]:
            y = (step if t_next - t == w else expm(s, t_next - t)) @ y
            t = float(t_next)
            rho = devectorize(y, d)
            cur = absorbed(rho.diagonal().real)
            if all(abs(a - b) < cfg.convergence_tol for a, b in zip(cur, last)):
                return SteadyState(rho, float(cur[0]), t, True)
            last = cur
        rho = devectorize(y, d)
        return SteadyState(rho, float(rho[lay.sink, lay.sink].real), t, False)
    raise ConfigError(f"unknown steady-state method {method!r}")
