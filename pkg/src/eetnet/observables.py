"""Efficiency, saturation time and steady-state structure."""

from __future__ import annotations

import csv
import hashlib
import io
import json
from dataclasses import asdict, dataclass

import numpy as np

from .evolve import SteadyState, Trajectory
from .lindblad import Layout

COHERENCE_THRESHOLD = 1e-3


@dataclass(frozen=True)
class NotReached:
    """Marker for a threshold that was never crossed before ``cap``."""

    cap: float

    def __float__(self) -> float:
        return float(self.cap)


def efficiency(result) -> float:
    """Sink population at the end of a trajectory or steady-state run."""
    if isinstance(result, SteadyState):
        return result.eta
    if isinstance(result, Trajectory):
        return float(result.sink[-1])
    raise TypeError(f"cannot take the efficiency of {type(result).__name__}")


def saturation_time(traj: Trajectory, fraction: float = 0.99, cap: float | None = None):
    """First time the sink holds ``fraction`` of the injected excitation.

    The crossing is located by linear interpolation between samples. Returns a
    float, or ``NotReached(cap)`` when the threshold is never reached (``cap``
    defaults to the last sample time).
    """
    if not 0 < fraction < 1:
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    times, sink = traj.times, traj.sink
    cap = float(times[-1]) if cap is None else float(cap)
    hit = np.flatnonzero(sink >= fraction)
    if hit.size == 0 or times[hit[0]] > cap:
        return NotReached(cap)
    k = int(hit[0])
    if k == 0:
        return float(times[0])
    t0, t1 = times[k - 1], times[k]
    p0, p1 = sink[k - 1], sink[k]
    return float(t0 + (fraction - p0) * (t1 - t0) / (p1 - p0))



@dataclass(frozen=True)
class LocalizationReport:
    """Magnitudes of the stationary density matrix and their block structure.

    ``offsink_count`` counts entries with ``|rho_ij| > 1e-3`` other than the sink
    diagonal; it is zero when everything has left the network.
    """

    magnitudes: np.ndarray
    labels: tuple[str, ...]
    network_population: float
    sink_population: float
    ground_population: float
    offsink_count: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([""] + list(self.labels))
        for label, row in zip(self.labels, self.magnitudes):
            w.writerow([label] + [repr(float(x)) for x in row])
        return buf.getvalue()


def localization_report(rho, layout: Layout | None = None) -> LocalizationReport:
    """Summarize where population and coherence sit in ``rho``.

    Without a layout the whole matrix is treated as the network block.
    """
    rho = np.asarray(rho, dtype=complex)
    mag = np.abs(rho)
    d = rho.shape[0]
    if layout is None:
        labels = tuple(f"level_{k + 1}" for k in range(d))
        return LocalizationReport(mag, labels, float(np.trace(rho).real), 0.0, 0.0,
                                  int(np.count_nonzero(mag > COHERENCE_THRESHOLD)))
    sites = layout.sites
    mask = mag > COHERENCE_THRESHOLD
    mask[layout.sink, layout.sink] = False
    return LocalizationReport(
        mag,
        tuple(layout.labels()),
        float(rho.diagonal()[sites].real.sum()),
        float(rho[layout.sink, layout.sink].real),
        float(rho[layout.ground, layout.ground].real) if layout.has_ground else 0.0,
        int(np.count_nonzero(mask)),
    )


def config_digest(config: dict) -> str:
    """SHA-256 of the canonical JSON form (sorted keys), stable under reordering."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=_jsonable)
    return hashlib.sha256(blob.encode()).hexdigest()


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"not serializable: {type(x).__name__}")


@dataclass(frozen=True)
class RunSummary:
    eta_inf: float
    tau_s: float | None
    tau_reached: bool
    residual_network_population: float
    residual_ground_population: float
    converged: bool
    config_digest: str = ""
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps({"schema_version": 1, **self.to_dict()}, indent=2, sort_keys=True)


def summarize(steady: SteadyState, layout: Layout, tau=None, digest: str = "", seed: int = 0) -> RunSummary:
    rho = steady.rho
    network = float(rho.diagonal()[layout.sites].real.sum())
    ground = float(rho[layout.ground, layout.ground].real) if layout.has_ground else 0.0
    reached = tau is not None and not isinstance(tau, NotReached)
    return RunSummary(
        eta_inf=float(steady.eta),
        tau_s=None if tau is None else float(tau),
        tau_reached=reached,
        residual_network_population=network,
        residual_ground_population=ground,
        converged=bool(steady.converged),
        config_digest=digest,
        seed=seed,
    )
