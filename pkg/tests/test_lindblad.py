import numpy as np
import pytest

from eetnet.errors import ConfigError, DimensionError
from eetnet.lindblad import NoiseConfig, apply_rhs, build_liouvillian, build_model
from eetnet.network import NetworkSpec, complete_network
from eetnet.numerics import devectorize, vectorize


def random_state(rng, d):
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def reference_rhs(h, collapses, rho):
    """Textbook form: -i[H, rho] + sum r (2 A rho A^+ - {A^+ A, rho})."""
    out = -1j * (h @ rho - rho @ h)
    for a, r in collapses:
        ad = a.conj().T
        out += r * (2 * a @ rho @ ad - ad @ a @ rho - rho @ ad @ a)
    return out


@pytest.mark.parametrize(
    "noise, n_collapse, dim",
    [
        (NoiseConfig(), 1, 7),
        (NoiseConfig(gamma_deph=0.1), 7, 7),
        (NoiseConfig(gamma_deph=0.1, gamma_diss=0.01), 13, 8),
        (NoiseConfig(gamma_diss=0.01), 7, 8),
    ],
)
def test_collapse_counts_and_layout(noise, n_collapse, dim):
    model = build_model(complete_network(6), noise)
    assert len(model.collapses) == n_collapse
    assert model.dim == dim
    labels = model.layout.labels()
    assert labels[-1] == "sink"
    assert (labels[0] == "ground") == (dim == 8)


def test_sink_channel_structure():
    model = build_model(complete_network(4), NoiseConfig(gamma_sink=0.7))
    a, r = model.collapses[0]
    lay = model.layout
    assert r == 0.7
    assert a[lay.sink, lay.site(3)] == 1 and np.count_nonzero(a) == 1


def test_per_site_dissipation_rates():
    model = build_model(complete_network(3), NoiseConfig(gamma_diss=(0.0, 0.02, 0.0)))
    assert len(model.collapses) == 2
    with pytest.raises(ConfigError):
        build_model(complete_network(3), NoiseConfig(gamma_diss=(0.1, 0.2)))
    with pytest.raises(ConfigError):
        NoiseConfig(gamma_sink=-1)


@pytest.mark.parametrize("noise", [NoiseConfig(), NoiseConfig(0.3, 0.2, 0.05)])
def test_rhs_paths_agree_with_reference(noise):
    rng = np.random.default_rng(1)
    spec = NetworkSpec.from_dict({
        "n_sites": 4, "edges": [[1, 2, 0.7], [2, 3, -1.1], [1, 4, 0.4], [3, 4, 2.0]],
        "site_energies": [1.0, 1.3, 0.8, 1.1], "injection_site": 1, "sink_site": 4,
    })
    model = build_model(spec, noise)
    s = build_liouvillian(model)
    for _ in range(3):
        rho = random_state(rng, model.dim)
        ref = reference_rhs(model.hamiltonian_full, model.collapses, rho)
        assert np.allclose(apply_rhs(model, rho), ref, atol=1e-12)
        assert np.allclose(devectorize(s @ vectorize(rho)), ref, atol=1e-12)


def test_generator_is_trace_free_and_hermiticity_preserving():
    rng = np.random.default_rng(2)
    model = build_model(complete_network(5), NoiseConfig(0.5, 0.1, 0.02))
    for _ in range(5):
        rho = random_state(rng, model.dim)
        d = apply_rhs(model, rho)
        assert abs(np.trace(d)) < 1e-13
        assert np.allclose(d, d.conj().T, atol=1e-13)
    # Trace preservation as a superoperator identity: vec(I)^T S = 0.
    s = build_liouvillian(model)
    assert np.allclose(vectorize(np.eye(model.dim)) @ s, 0, atol=1e-13)


def test_dark_state_is_stationary():
    model = build_model(complete_network(6))
    dark = np.zeros(model.dim, dtype=complex)
    dark[model.layout.site(1)] = 1 / np.sqrt(2)
    dark[model.layout.site(2)] = -1 / np.sqrt(2)
    rho = np.outer(dark, dark.conj())
    assert np.allclose(apply_rhs(model, rho), 0, atol=1e-14)


def test_amplitude_damping_liouvillian():
    # One site (energy 1) decaying into the sink at rate g: 4x4 by hand.
    spec = NetworkSpec(np.zeros((1, 1)), np.ones(1), 0, 0)
    g = 0.5
    model = build_model(spec, NoiseConfig(gamma_sink=g))
    s = build_liouvillian(model)
    # Basis (site, sink); vec order: 00, 10, 01, 11. Coherence rho_10 rotates
    # at -i(E_sink - E_site) = +i and decays at g.
    i = 1j
    expected = np.array([
        [-2 * g, 0, 0, 0],
        [0, -g + i, 0, 0],
        [0, 0, -g - i, 0],
        [2 * g, 0, 0, 0],
    ])
    assert np.allclose(s, expected)


def test_rhs_shape_check():
    model = build_model(complete_network(3))
    with pytest.raises(DimensionError):
        apply_rhs(model, np.eye(3))
