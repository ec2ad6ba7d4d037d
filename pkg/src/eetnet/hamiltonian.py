"""Tight-binding Hamiltonian and the dark-state localization analysis.

A dark state is a Hamiltonian eigenvector with no amplitude on the sink-coupled
site. Such states never feed the sink, so in the noiseless limit the weight of
the initial state inside the dark subspace stays trapped forever:

    eta_inf = 1 - ||P_dark |i>||^2

All quantities here are defined through projectors, so they do not depend on
how a degenerate eigenvalue block happens to be diagonalized.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DarkBlockNotDegenerate
from .network import NetworkSpec
from .numerics import SpectralDecomposition, eig_hermitian

DARK_TOL = 1e-9
DEGENERACY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class SiteHamiltonian:
    matrix: np.ndarray
    spectrum: SpectralDecomposition
    source: NetworkSpec

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


def hamiltonian_matrix(spec: NetworkSpec) -> np.ndarray:
    """``H = diag(omega) + J`` over the single-excitation site basis."""
    h = np.diag(spec.site_energies).astype(complex) + spec.hopping
    h.flags.writeable = False
    return h


def build_hamiltonian(spec: NetworkSpec) -> SiteHamiltonian:
    h = hamiltonian_matrix(spec)
    return SiteHamiltonian(h, eig_hermitian(h), spec)


def _check_index(h: SiteHamiltonian, idx: int, name: str) -> None:
    if not 0 <= idx < h.n_sites:
        raise ConfigError(f"{name} index {idx + 1} out of range 1..{h.n_sites}")


@dataclass(frozen=True)
class ExpansionReport:
    """Initial state written in the eigenbasis of ``H``.

    ``coefficients[k] = <psi_k|initial>``. ``block_ids`` groups degenerate
    eigenvalues, ``block_weights`` holds the gauge-free overlap
    ``||P_block |initial>||^2`` for each block, and ``dark_flags[k]`` says
    whether eigenvector ``k`` has (numerically) zero amplitude at the sink.
    """

    eigenvalues: np.ndarray
    coefficients: np.ndarray
    eigenvectors: np.ndarray
    dark_flags: np.ndarray
    block_ids: np.ndarray
    block_weights: np.ndarray

    def rows(self) -> list[dict]:
        return [
            {
                "eigenvalue": float(self.eigenvalues[k]),
                "block_id": int(self.block_ids[k]),
                "overlap_weight": float(abs(self.coefficients[k]) ** 2),
                "block_weight": float(self.block_weights[self.block_ids[k]]),
                "dark": bool(self.dark_flags[k]),
            }
            for k in range(len(self.eigenvalues))
        ]

    def to_json(self) -> str:
        return json.dumps({"schema_version": 1, "eigenstates": self.rows()}, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        writer = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()


def expand_initial_state(
    h: SiteHamiltonian, initial: int, sink: int, dark_tol: float = DARK_TOL
) -> ExpansionReport:
    _check_index(h, initial, "initial")
    _check_index(h, sink, "sink")
    lam, v = h.spectrum.eigenvalues, h.spectrum.eigenvectors
    coeffs = v[initial, :].conj()
    scale = np.max(np.abs(v), axis=0)
    dark = np.abs(v[sink, :]) < dark_tol * scale
    blocks = h.spectrum.blocks(DEGENERACY_TOL)
    ids = np.empty(len(lam), dtype=int)
    weights = np.empty(len(blocks))
    for b, idx in enumerate(blocks):
        ids[idx] = b
        weights[b] = float(np.sum(np.abs(coeffs[idx]) ** 2))
    return ExpansionReport(lam, coeffs, v, dark, ids, weights)


def _dark_block_projectors(h: SiteHamiltonian, sink: int, dark_tol: float):
    """Yield ``(block_indices, projector)`` for every block with a dark part.

    Within a degenerate block spanned by columns ``V_b``, the dark subspace is
    the kernel of the sink-row functional ``s = V_b[sink, :]``:
    ``P_b = V_b (I - s^H s / |s|^2) V_b^H``.
    """
    v = h.spectrum.eigenvectors
    for idx in h.spectrum.blocks(DEGENERACY_TOL):
        vb = v[:, idx]
        s = vb[sink, :]
        s_norm = np.linalg.norm(s)
        if s_norm < dark_tol:
            p = vb @ vb.conj().T
        elif len(idx) == 1:
            continue
        else:
            u = vb @ s.conj() / s_norm
            p = vb @ vb.conj().T - np.outer(u, u.conj())
        yield idx, p


def dark_projector(h: SiteHamiltonian, sink: int, dark_tol: float = DARK_TOL) -> np.ndarray:
    """Orthogonal projector onto the H-invariant subspace invisible to the sink."""
    _check_index(h, sink, "sink")
    p = np.zeros_like(h.matrix, dtype=complex)
    for _, pb in _dark_block_projectors(h, sink, dark_tol):
        p += pb
    return 0.5 * (p + p.conj().T)


def dark_dimension(h: SiteHamiltonian, sink: int, dark_tol: float = DARK_TOL) -> int:
    return int(round(np.trace(dark_projector(h, sink, dark_tol)).real))


def dark_weight(h: SiteHamiltonian, initial: int, sink: int, dark_tol: float = DARK_TOL) -> float:
    """Trapped weight ``||P_dark |initial>||^2``."""
    _check_index(h, initial, "initial")
    p = dark_projector(h, sink, dark_tol)
    return float(np.vdot(p[:, initial], p[:, initial]).real)


def accessible_dark_dimension(
    h: SiteHamiltonian, initial: int, sink: int, dark_tol: float = DARK_TOL
) -> int:
    """Number of dark directions the initial state actually populates.

    Inside each eigenvalue block the initial state has a single component, so
    this counts the blocks ``b`` with ``P_dark,b |initial> != 0``. Unlike
    :func:`dark_dimension` it ignores dark states orthogonal to the initial
    state (e.g. antisymmetric combinations of symmetry-equivalent sites).
    """
    _check_index(h, initial, "initial")
    return len(_trapped_components(h, initial, sink, dark_tol))


def _trapped_components(h, initial, sink, dark_tol):
    out = []
    for idx, pb in _dark_block_projectors(h, sink, dark_tol):
        comp = pb[:, initial]
        if np.linalg.norm(comp) > dark_tol:
            out.append((idx, comp))
    return out


def predicted_efficiency(h: SiteHamiltonian, initial: int, sink: int, dark_tol: float = DARK_TOL) -> float:
    """Noiseless long-time sink population predicted from the dark subspace."""
    return 1.0 - dark_weight(h, initial, sink, dark_tol)


def predicted_residual_populations(
    h: SiteHamiltonian, initial: int, sink: int, dark_tol: float = DARK_TOL
) -> np.ndarray:
    """Stationary site populations ``|(P_dark |initial>)_n|^2``.

    Valid only when the trapped component of the initial state lies inside one
    eigenvalue block: then it is itself stationary. If it is spread over dark
    states at several energies it keeps oscillating and only time evolution
    gives the long-time populations.

    Raises
    ------
    DarkBlockNotDegenerate
        If the trapped component spans more than one eigenvalue.
    """
    _check_index(h, initial, "initial")
    parts = _trapped_components(h, initial, sink, dark_tol)
    if not parts:
        return np.zeros(h.n_sites)
    if len(parts) > 1:
        raise DarkBlockNotDegenerate(
            f"trapped weight spread over {len(parts)} distinct eigenvalues"
        )
    return np.abs(parts[0][1]) ** 2
