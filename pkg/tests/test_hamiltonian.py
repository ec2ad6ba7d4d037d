import json

import numpy as np
import pytest
import scipy.linalg

from eetnet.errors import DarkBlockNotDegenerate, DimensionError
from eetnet.hamiltonian import (
    SiteHamiltonian,
    accessible_dark_dimension,
    build_hamiltonian,
    dark_dimension,
    dark_projector,
    dark_weight,
    expand_initial_state,
    hamiltonian_matrix,
    predicted_efficiency,
    predicted_residual_populations,
)
from eetnet.network import NetworkSpec, complete_network, delete_edge, set_hopping
from eetnet.numerics import SpectralDecomposition


def path_network(n):
    j = np.zeros((n, n))
    for k in range(n - 1):
        j[k, k + 1] = j[k + 1, k] = 1.0
    return NetworkSpec(j, np.ones(n), 0, n - 1)


def test_hamiltonian_convention():
    spec = set_hopping(complete_network(4), 0, 3, 2.5)
    h = hamiltonian_matrix(spec)
    assert h[0, 3] == h[3, 0] == 2.5
    assert np.all(np.diag(h) == 1.0)


@pytest.mark.parametrize("n", range(3, 9))
def test_fcn_spectrum(n):
    h = build_hamiltonian(complete_network(n))
    lam = h.spectrum.eigenvalues
    # H = I + (ones - I) = ones: eigenvalues 0 (n-1 fold) and n.
    assert np.allclose(lam[:-1], 0.0, atol=1e-12)
    assert lam[-1] == pytest.approx(n)


@pytest.mark.parametrize("n", range(3, 9))
def test_fcn_dark_dimension_and_efficiency(n):
    h = build_hamiltonian(complete_network(n))
    assert dark_dimension(h, n - 1) == n - 2
    assert accessible_dark_dimension(h, 0, n - 1) == 1
    assert predicted_efficiency(h, 0, n - 1) == pytest.approx(1 / (n - 1), abs=1e-12)


def test_fcn6_residuals():
    h = build_hamiltonian(complete_network(6))
    pops = predicted_residual_populations(h, 0, 5)
    assert pops[0] == pytest.approx(0.64, abs=1e-12)
    assert np.allclose(pops[1:5], 0.04, atol=1e-12)
    assert pops[5] == pytest.approx(0.0, abs=1e-14)
    assert pops.sum() == pytest.approx(0.8)


def test_fcn3_residuals():
    h = build_hamiltonian(complete_network(3))
    pops = predicted_residual_populations(h, 0, 2)
    assert np.allclose(pops, [0.25, 0.25, 0.0], atol=1e-12)


def test_projector_is_orthogonal_and_commutes_with_h():
    for spec in (complete_network(6), delete_edge(complete_network(6), 1, 2), path_network(5)):
        h = build_hamiltonian(spec)
        p = dark_projector(h, spec.sink_site)
        assert np.allclose(p @ p, p, atol=1e-12)
        assert np.allclose(p, p.conj().T)
        assert np.allclose(p @ h.matrix, h.matrix @ p, atol=1e-12)
        assert np.allclose(p[spec.sink_site], 0, atol=1e-12)


def test_projector_is_gauge_invariant():
    # Rotating eigenvectors inside a degenerate block must not change the answer.
    spec = complete_network(6)
    h = build_hamiltonian(spec)
    rng = np.random.default_rng(3)
    v = np.array(h.spectrum.eigenvectors)
    for idx in h.spectrum.blocks():
        k = len(idx)
        q, _ = np.linalg.qr(rng.normal(size=(k, k)) + 1j * rng.normal(size=(k, k)))
        v[:, idx] = v[:, idx] @ q
    rotated = SiteHamiltonian(h.matrix, SpectralDecomposition(h.spectrum.eigenvalues, v), spec)
    assert np.allclose(dark_projector(rotated, 5), dark_projector(h, 5), atol=1e-12)
    assert dark_weight(rotated, 0, 5) == pytest.approx(0.8, abs=1e-12)
    rep = expand_initial_state(rotated, 0, 5)
    assert np.allclose(rep.block_weights, expand_initial_state(h, 0, 5).block_weights)


def test_dark_projector_matches_nullspace_oracle():
    # Dark subspace = largest H-invariant subspace in the kernel of <sink|:
    # the kernel of the observability matrix [e_f^T; e_f^T H; ...].
    for spec in (complete_network(6), delete_edge(complete_network(6), 0, 1),
                 delete_edge(complete_network(6), 0, 5), path_network(6)):
        h = hamiltonian_matrix(spec)
        n = spec.n_sites
        e = np.zeros(n)
        e[spec.sink_site] = 1
        obs = np.array([e @ np.linalg.matrix_power(h, k) for k in range(n)])
        null = scipy.linalg.null_space(obs)
        oracle = null @ null.T
        p = dark_projector(build_hamiltonian(spec), spec.sink_site)
        assert np.allclose(p, oracle, atol=1e-9)


def test_path_graph_has_no_dark_states():
    h = build_hamiltonian(path_network(6))
    assert dark_dimension(h, 5) == 0
    assert predicted_efficiency(h, 0, 5) == pytest.approx(1.0)


def test_edge_deletion_dark_structure():
    base = complete_network(6)
    cut16 = build_hamiltonian(delete_edge(base, 0, 5))
    assert accessible_dark_dimension(cut16, 0, 5) == 0
    assert predicted_efficiency(cut16, 0, 5) == pytest.approx(1.0, abs=1e-12)
    for a, b in [(0, 1), (1, 2), (1, 5)]:
        h = build_hamiltonian(delete_edge(base, a, b))
        assert accessible_dark_dimension(h, 0, 5) == 1
        assert predicted_efficiency(h, 0, 5) < 0.9


def test_residuals_raise_when_trapped_part_spans_blocks():
    # Two disconnected pairs with different splittings: the trapped part of
    # site 1 lives at two energies and keeps oscillating.
    j = np.zeros((5, 5))
    j[0, 1] = j[1, 0] = 1.0
    j[0, 2] = j[2, 0] = 0.3
    j[3, 4] = j[4, 3] = 1.0
    h = build_hamiltonian(NetworkSpec(j, np.ones(5), 0, 4))
    with pytest.raises(DarkBlockNotDegenerate):
        predicted_residual_populations(h, 0, 4)


def test_expansion_report():
    h = build_hamiltonian(complete_network(6))
    rep = expand_initial_state(h, 0, 5)
    assert np.sum(np.abs(rep.coefficients) ** 2) == pytest.approx(1.0)
    # Overlap with the uniform (bright) eigenvector.
    top = int(np.argmax(rep.eigenvalues))
    assert abs(rep.coefficients[top]) == pytest.approx(1 / np.sqrt(6))
    assert not rep.dark_flags[top]
    assert rep.block_weights.sum() == pytest.approx(1.0)
    doc = json.loads(rep.to_json())
    assert doc["schema_version"] == 1
    assert len(rep.rows()) == 6
    assert rep.to_csv().count("\n") == 7


def test_index_errors():
    h = build_hamiltonian(complete_network(4))
    with pytest.raises((DimensionError, ValueError)):
        dark_projector(h, 4)
    with pytest.raises((DimensionError, ValueError)):
        expand_initial_state(h, -1, 3)
