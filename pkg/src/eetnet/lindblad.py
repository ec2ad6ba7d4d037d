"""Open-system model in the single-excitation manifold.

Basis layout: ``[ground] + sites 1..N + [sink]``. The ground level is present
only when some site dissipates. Each collapse operator ``A`` with rate ``r``
enters the master equation as

    r * (2 A rho A^H - {A^H A, rho}),

i.e. rates keep the explicit factor 2 of the dissipators they come from, so a
sink rate of 0.5 empties an isolated site as ``exp(-t)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError
from .hamiltonian import hamiltonian_matrix
from .network import NetworkSpec
from .numerics import kron

DEFAULT_GAMMA_SINK = 0.5


@dataclass(frozen=True)
class NoiseConfig:
    gamma_sink: float = DEFAULT_GAMMA_SINK
    gamma_deph: float = 0.0
    gamma_diss: tuple[float, ...] | float = 0.0

    def __post_init__(self):
        problems = validate_noise(self)
        if problems:
            raise ConfigError("; ".join(problems))

    def dissipation_rates(self, n_sites: int) -> np.ndarray:
        g = np.asarray(self.gamma_diss, dtype=float)
        if g.ndim == 0:
            return np.full(n_sites, float(g))
        if g.shape != (n_sites,):
            raise ConfigError(f"gamma_diss has {g.size} entries for {n_sites} sites")
        return g

    def to_dict(self) -> dict:
        g = self.gamma_diss
        return {
            "gamma_sink": float(self.gamma_sink),
            "gamma_deph": float(self.gamma_deph),
            "gamma_diss": float(g) if np.ndim(g) == 0 else [float(x) for x in g],
        }


def validate_noise(noise: NoiseConfig) -> list[str]:
    out = []
    if not noise.gamma_sink >= 0:
        out.append("gamma_sink must be >= 0")
    if not noise.gamma_deph >= 0:
        out.append("gamma_deph must be >= 0")
    if np.any(~(np.asarray(noise.gamma_diss, dtype=float) >= 0)):
        out.append("gamma_diss must be >= 0")
    return out


@dataclass(frozen=True)
class Layout:
    """Index map of the model basis."""

    n_sites: int
    has_ground: bool

    @property
    def ground(self) -> int | None:
        return 0 if self.has_ground else None

    @property
    def offset(self) -> int:
        return 1 if self.has_ground else 0

    @property
    def sites(self) -> np.ndarray:
        return np.arange(self.offset, self.offset + self.n_sites)

    def site(self, n: int) -> int:
        """Basis index of (0-based) network site ``n``."""
        return self.offset + n

    @property
    def sink(self) -> int:
        return self.offset + self.n_sites

    @property
    def dim(self) -> int:
        return self.n_sites + 1 + self.offset

    def labels(self) -> list[str]:
        names = ["ground"] if self.has_ground else []
        names += [f"site_{n + 1}" for n in range(self.n_sites)]
        return names + ["sink"]


@dataclass(frozen=True, eq=False)
class LindbladModel:
    hamiltonian_full: np.ndarray
    collapses: tuple[tuple[np.ndarray, float], ...]
    layout: Layout
    spec: NetworkSpec
    noise: NoiseConfig
    # Cached pieces of the right-hand side.
    _h_eff: np.ndarray = field(repr=False, default=None)
    _jumps: np.ndarray = field(repr=False, default=None)

    @property
    def dim(self) -> int:
        return self.layout.dim

    def pure_state(self, site: int) -> np.ndarray:
        """``|site><site|`` for a 0-based network site."""
        rho = np.zeros((self.dim, self.dim), dtype=complex)
        k = self.layout.site(site)
        rho[k, k] = 1.0
        return rho

    def initial_state(self) -> np.ndarray:
        return self.pure_state(self.spec.injection_site)


def _unit(dim: int, row: int, col: int) -> np.ndarray:
    a = np.zeros((dim, dim), dtype=complex)
    a[row, col] = 1.0
    a.flags.writeable = False
    return a


def build_model(spec: NetworkSpec, noise: NoiseConfig | None = None) -> LindbladModel:
    """Hamiltonian plus sink, dephasing and dissipation channels.

    Collapse operators, in order: ``|sink><f|`` at ``gamma_sink``; ``|n><n|``
    at ``gamma_deph`` for every network site (if ``gamma_deph > 0``);
    ``|ground><n|`` at ``gamma_n`` for every site with ``gamma_n > 0``.
    """
    noise = NoiseConfig() if noise is None else noise
    n = spec.n_sites
    diss = noise.dissipation_rates(n)
    layout = Layout(n, bool(np.any(diss > 0)))
    d = layout.dim
    h = np.zeros((d, d), dtype=complex)
    s = layout.sites
    h[np.ix_(s, s)] = hamiltonian_matrix(spec)
    h.flags.writeable = False

    ops = [(_unit(d, layout.sink, layout.site(spec.sink_site)), float(noise.gamma_sink))]
    if noise.gamma_deph > 0:
        ops += [(_unit(d, k, k), float(noise.gamma_deph)) for k in s]
    if layout.has_ground:
        ops += [
            (_unit(d, layout.ground, layout.site(m)), float(diss[m]))
            for m in range(n)
            if diss[m] > 0
        ]

    k_sum = sum((r * (a.conj().T @ a) for a, r in ops), np.zeros((d, d), dtype=complex))
    h_eff = h - 1j * k_sum
    jumps = np.array([np.sqrt(2.0 * r) * a for a, r in ops]) if ops else np.zeros((0, d, d))
    return LindbladModel(h, tuple(ops), layout, spec, noise, h_eff, jumps)


def build_liouvillian(model: LindbladModel) -> np.ndarray:
    """Superoperator ``S`` with ``vec(drho/dt) = S vec(rho)`` (column stacking)."""
    d = model.dim
    eye = np.eye(d)
    h = model.hamiltonian_full
    s = -1j * (kron(eye, h) - kron(h.T, eye))
    for a, r in model.collapses:
        ada = a.conj().T @ a
        s += r * (2.0 * kron(a.conj(), a) - kron(eye, ada) - kron(ada.T, eye))
    return s


def apply_rhs(model: LindbladModel, rho) -> np.ndarray:
    """Matrix-free Lindblad right-hand side.

    Written as ``-i (H_eff rho - rho H_eff^H) + sum_k L_k rho L_k^H`` with
    ``H_eff = H - i sum_k r_k A_k^H A_k`` and ``L_k = sqrt(2 r_k) A_k``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (model.dim, model.dim):
        raise DimensionError(f"state of shape {rho.shape} does not match model dim {model.dim}")
    h = model._h_eff
    out = -1j * (h @ rho - rho @ h.conj().T)
    if len(model._jumps):
        jumps = model._jumps
        out += np.einsum("kij,jl,kml->im", jumps, rho, jumps.conj())
    return out
