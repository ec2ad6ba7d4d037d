"""Network topologies: complete graphs, edge edits, off-diagonal disorder.

Site indices are 0-based in the API and 1-based in serialized documents, so a
file saying ``"injection_site": 1`` refers to ``spec.injection_site == 0``.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from math import comb

import networkx as nx
import numpy as np

from .errors import ConfigError


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """N two-level sites with symmetric real hopping and a sink-coupled site.

    Parameters
    ----------
    hopping : (N, N) array
        Symmetric coupling matrix ``J`` with zero diagonal, in units of the
        site energy.
    site_energies : (N,) array
        On-site excitation energies, all positive.
    injection_site, sink_site : int
        0-based indices of the initially excited site and of the site that
        feeds the sink.
    """

    hopping: np.ndarray
    site_energies: np.ndarray
    injection_site: int
    sink_site: int

    def __post_init__(self):
        j = _frozen(self.hopping)
        if j.ndim != 2 or j.shape[0] != j.shape[1]:
            raise ConfigError(f"hopping must be square, got shape {j.shape}")
        n = j.shape[0]
        w = _frozen(
            np.ones(n) if self.site_energies is None else self.site_energies
        )
        object.__setattr__(self, "hopping", j)
        object.__setattr__(self, "site_energies", w)
        problems = validate_network(self)
        if problems:
            raise ConfigError("; ".join(problems))

    @property
    def n_sites(self) -> int:
        return self.hopping.shape[0]

    @property
    def edges(self) -> list[tuple[int, int, float]]:
        """Nonzero couplings as ``(a, b, J_ab)`` with ``a < b``."""
        n = self.n_sites
        return [
            (a, b, float(self.hopping[a, b]))
            for a in range(n)
            for b in range(a + 1, n)
            if self.hopping[a, b] != 0.0
        ]

    def __eq__(self, other):
        if not isinstance(other, NetworkSpec):
            return NotImplemented
        return (
            self.injection_site == other.injection_site
            and self.sink_site == other.sink_site
            and np.array_equal(self.hopping, other.hopping)
            and np.array_equal(self.site_energies, other.site_energies)
        )

    def __hash__(self):
        return hash(
            (self.hopping.tobytes(), self.site_energies.tobytes(),
             self.injection_site, self.sink_site)
        )

    def replace(self, **changes) -> "NetworkSpec":
        fields = dict(
            hopping=self.hopping,
            site_energies=self.site_energies,
            injection_site=self.injection_site,
            sink_site=self.sink_site,
        )
        fields.update(changes)
        return NetworkSpec(**fields)

    def to_dict(self) -> dict:
        """Serializable form with 1-based node labels."""
        return {
            "n_sites": self.n_sites,
            "edges": [[a + 1, b + 1, w] for a, b, w in self.edges],
            "site_energies": [float(x) for x in self.site_energies],
            "injection_site": self.injection_site + 1,
            "sink_site": self.sink_site + 1,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "NetworkSpec":
        try:
            n = int(doc["n_sites"])
            j = np.zeros((n, n))
            for a, b, w in doc["edges"]:
                a, b = int(a) - 1, int(b) - 1
                if not (0 <= a < n and 0 <= b < n) or a == b:
                    raise ConfigError(f"bad edge [{a + 1}, {b + 1}] for {n} sites")
                j[a, b] = j[b, a] = float(w)
            energies = doc.get("site_energies") or [1.0] * n
            return cls(j, energies, int(doc["injection_site"]) - 1, int(doc["sink_site"]) - 1)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed network document: {exc!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "NetworkSpec":
        return cls.from_dict(json.loads(text))

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.n_sites))
        g.add_edges_from((a, b) for a, b, _ in self.edges)
        return g


def validate_network(spec: NetworkSpec) -> list[str]:
    """List every invariant violation of ``spec`` (empty when valid)."""
    out = []
    j, w = spec.hopping, spec.site_energies
    n = j.shape[0]
    if n < 1:
        out.append("network needs at least one site")
    if w.shape != (n,):
        out.append(f"site_energies must have length {n}")
    elif np.any(w <= 0):
        out.append("site energies must be > 0")
    if not np.all(np.isfinite(j)):
        out.append("hopping must be finite")
    if not np.array_equal(j, j.T):
        out.append("hopping must be symmetric")
    if np.any(np.diag(j) != 0):
        out.append("hopping diagonal must be zero")
    for name in ("injection_site", "sink_site"):
        idx = getattr(spec, name)
        if not 0 <= idx < n:
            out.append(f"{name} index {idx + 1} out of range 1..{n}")
    if n > 1 and spec.injection_site == spec.sink_site:
        out.append("injection_site must differ from sink_site")
    return out


def _check_pair(spec: NetworkSpec, a: int, b: int) -> None:
    n = spec.n_sites
    if not (0 <= a < n and 0 <= b < n):
        raise ConfigError(f"edge ({a + 1}, {b + 1}) out of range for {n} sites")
    if a == b:
        raise ConfigError(f"edge endpoints must differ, got ({a + 1}, {a + 1})")


def complete_network(n: int, injection: int = 0, sink: int | None = None) -> NetworkSpec:
    """Fully connected network: unit hopping between every pair, unit energies.

    ``sink`` defaults to the last site.
    """
    if n < 2:
        raise ConfigError(f"complete network needs n >= 2, got {n}")
    sink = n - 1 if sink is None else sink
    return NetworkSpec(np.ones((n, n)) - np.eye(n), np.ones(n), injection, sink)


def set_hopping(spec: NetworkSpec, a: int, b: int, value: float) -> NetworkSpec:
    _check_pair(spec, a, b)
    j = spec.hopping.copy()
    j[a, b] = j[b, a] = float(value)
    return spec.replace(hopping=j)


def delete_edge(spec: NetworkSpec, a: int, b: int) -> NetworkSpec:
    """Copy of ``spec`` with the coupling between ``a`` and ``b`` removed."""
    return set_hopping(spec, a, b, 0.0)


@dataclass(frozen=True)
class DisorderConfig:
    """Multiplicative off-diagonal disorder ``J -> J (1 + delta)``.

    ``delta`` is uniform on ``[-chi, chi]``, drawn once per unordered pair.
    """

    chi: float
    seed: int = 0
    realizations: int = 200

    def __post_init__(self):
        if not self.chi >= 0:
            raise ConfigError(f"chi must be >= 0, got {self.chi}")
        if self.realizations < 1:
            raise ConfigError(f"realizations must be >= 1, got {self.realizations}")


_MASK64 = (1 << 64) - 1


def _pair_uniform(seed: int, realization: int, a: int, b: int) -> float:
    # Philox is counter-based: the draw depends only on (key, counter), never on
    # how many other draws happened before it.
    key = np.random.SeedSequence(seed & _MASK64).generate_state(2, np.uint64)
    counter = np.array([realization, a, b, 0], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key, counter=counter))
    return float(gen.random())


def disorder_deltas(config: DisorderConfig, n: int, realization: int) -> np.ndarray:
    """Symmetric matrix of relative perturbations for one realization."""
    d = np.zeros((n, n))
    if config.chi == 0:
        return d
    for a, b in itertools.combinations(range(n), 2):
        u = _pair_uniform(config.seed, realization, a, b)
        d[a, b] = d[b, a] = config.chi * (2.0 * u - 1.0)
    return d


def apply_disorder(spec: NetworkSpec, config: DisorderConfig, realization: int) -> NetworkSpec:
    """Perturb every existing coupling by an independent factor ``1 + delta``.

    Deleted edges stay deleted and site energies are left alone. The result is
    a pure function of ``(config.seed, realization)`` and the input spec.
    """
    if not 0 <= realization < config.realizations:
        raise ConfigError(
            f"realization {realization} outside 0..{config.realizations - 1}"
        )
    if config.chi == 0:
        return spec
    j = spec.hopping * (1.0 + disorder_deltas(config, spec.n_sites, realization))
    return spec.replace(hopping=j)


def _rooted_iso_classes(n: int, m: int, injection: int, sink: int) -> list[tuple]:
    """Non-isomorphic connected graphs with ``m`` edges, injection/sink labels fixed."""
    pairs = list(itertools.combinations(range(n), 2))
    role = {v: ("i" if v == injection else "f" if v == sink else "x") for v in range(n)}
    by_invariant: dict[tuple, list[nx.Graph]] = {}
    reps: list[tuple] = []
    match = nx.algorithms.isomorphism.categorical_node_match("role", "x")
    for chosen in itertools.combinations(pairs, m):
        g = nx.Graph()
        g.add_nodes_from((v, {"role": role[v]}) for v in range(n))
        g.add_edges_from(chosen)
        if not nx.is_connected(g):
            continue
        inv = (
            tuple(sorted(d for _, d in g.degree())),
            g.degree(injection),
            g.degree(sink),
            g.has_edge(injection, sink),
        )
        bucket = by_invariant.setdefault(inv, [])
        if any(nx.is_isomorphic(g, h, node_match=match) for h in bucket):
            continue
        bucket.append(g)
        reps.append(chosen)
    return reps


def enumerate_topologies(
    n: int,
    edge_counts,
    seed: int = 0,
    per_count: int | None = None,
    injection: int = 0,
    sink: int | None = None,
    exhaustive_limit: int = 6,
) -> list[NetworkSpec]:
    """Connected unit-hopping networks at each requested edge count.

    For ``n <= exhaustive_limit`` every connected graph is generated and reduced
    to one representative per isomorphism class (isomorphisms must map the
    injection site to itself and the sink site to itself). Larger networks are
    sampled at random. ``per_count`` caps how many networks are returned for
    each edge count; when the cap bites, the subset is chosen with ``seed``.
    Output order is deterministic: by edge count, then by generation order.
    """
    sink = n - 1 if sink is None else sink
    max_edges = comb(n, 2)
    out: list[NetworkSpec] = []
    rng = np.random.default_rng(seed)
    pairs = list(itertools.combinations(range(n), 2))
    for m in edge_counts:
        m = int(m)
        if m > max_edges:
            raise ConfigError(f"{m} edges exceed the {max_edges} possible on {n} sites")
        if m < n - 1:
            continue
        if n <= exhaustive_limit:
            chosen_sets = _rooted_iso_classes(n, m, injection, sink)
            if per_count is not None and per_count < len(chosen_sets):
                pick = np.sort(rng.choice(len(chosen_sets), per_count, replace=False))
                chosen_sets = [chosen_sets[k] for k in pick]
        else:
            want = per_count or 1
            chosen_sets, seen, attempts = [], set(), 0
            while len(chosen_sets) < want and attempts < 1000 * want:
                attempts += 1
                idx = tuple(sorted(rng.choice(len(pairs), m, replace=False)))
                if idx in seen:
                    continue
                g = nx.Graph()
                g.add_nodes_from(range(n))
                g.add_edges_from(pairs[k] for k in idx)
                if nx.is_connected(g):
                    seen.add(idx)
                    chosen_sets.append(tuple(pairs[k] for k in idx))
        for chosen in chosen_sets:
            j = np.zeros((n, n))
            for a, b in chosen:
                j[a, b] = j[b, a] = 1.0
            out.append(NetworkSpec(j, np.ones(n), injection, sink))
    return out


def scan_family(seed: int = 0, n: int = 6) -> list[NetworkSpec]:
    """A 28-network family from ``n`` edges up to the complete graph.

    Three networks per edge count from ``n`` to ``C(n,2) - 1`` plus the complete
    graph (for ``n = 6``: 9 counts x 3 + 1 = 28).
    """
    counts = list(range(n, comb(n, 2)))
    return enumerate_topologies(n, counts, seed=seed, per_count=3) + [complete_network(n)]
