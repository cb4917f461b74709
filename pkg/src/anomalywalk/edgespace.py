"""Walk Hilbert space: directed-edge and loop basis states over a star graph.

The enumeration order is frozen so CSV dumps and golden tests are stable:
all hub-outgoing states (0,j) for j = 1..N, then all hub-incoming states
(j,0), then anomaly states in a fixed documented order (extra-edge pair,
loop states ascending vertex, extension pair).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DimensionMismatchError, NumericalFailureError
from .numerics import DEFAULT_POLICY, NumericPolicy
from .stargraph import StarGraph


@dataclass(frozen=True, order=True)
class BasisLabel:
    """Either a directed edge (u -> v, u != v) or a loop sitting at one vertex."""

    kind: str  # "edge" or "loop"
    u: int
    v: int

    @staticmethod
    def edge(u: int, v: int) -> "BasisLabel":
        if u == v:
            raise ConfigurationError("directed edge endpoints must differ")
        return BasisLabel("edge", u, v)

    @staticmethod
    def loop(at: int) -> "BasisLabel":
        return BasisLabel("loop", at, at)

    @property
    def at(self) -> int:
        if self.kind != "loop":
            raise ConfigurationError("not a loop label")
        return self.u

    def __str__(self) -> str:
        if self.kind == "loop":
            return f"l{self.u}"
        return f"{self.u}->{self.v}"


@dataclass(frozen=True)
class EdgeBasis:
    labels: tuple[BasisLabel, ...]
    index: dict
    n_spokes: int

    @property
    def dim(self) -> int:
        return len(self.labels)

    def position(self, label: BasisLabel) -> int:
        try:
            return self.index[label]
        except KeyError:
            raise ConfigurationError(f"label {label} not in basis") from None

    def out_position(self, j: int) -> int:
        return self.position(BasisLabel.edge(0, j))

    def in_position(self, j: int) -> int:
        return self.position(BasisLabel.edge(j, 0))


@dataclass(frozen=True)
class WalkState:
    amplitudes: np.ndarray
    basis_dim: int


def make_basis(graph: StarGraph) -> EdgeBasis:
    n = graph.n_spokes
    labels = [BasisLabel.edge(0, j) for j in range(1, n + 1)]
    labels += [BasisLabel.edge(j, 0) for j in range(1, n + 1)]
    a = graph.anomaly
    if a.variant == "extra_edge":
        labels += [BasisLabel.edge(a.u, a.v), BasisLabel.edge(a.v, a.u)]
    elif a.variant == "loop":
        labels += [BasisLabel.loop(a.at)]
    elif a.variant == "extended_edge":
        # the extension endpoint gets the next free vertex id
        tip = n + 1
        labels += [BasisLabel.edge(a.at, tip), BasisLabel.edge(tip, a.at)]
    elif a.variant == "missing_loop":
        labels += [BasisLabel.loop(j) for j in range(1, n + 1)]
    index = {label: k for k, label in enumerate(labels)}
    return EdgeBasis(labels=tuple(labels), index=index, n_spokes=n)


def make_state(amplitudes: np.ndarray, *, require_unit: bool = True,
               policy: NumericPolicy = DEFAULT_POLICY) -> WalkState:
    amps = np.asarray(amplitudes, dtype=complex).copy()
    if amps.ndim != 1:
        raise DimensionMismatchError("amplitudes must be a one-dimensional vector")
    if require_unit and abs(np.linalg.norm(amps) - 1.0) > policy.unit_norm_tol:
        raise ConfigurationError("state is not unit-norm")
    amps.setflags(write=False)
    return WalkState(amplitudes=amps, basis_dim=amps.size)


def norm(state: WalkState) -> float:
    return float(np.linalg.norm(state.amplitudes))


def basis_vector(basis: EdgeBasis, label: BasisLabel) -> WalkState:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.position(label)] = 1.0
    return make_state(amps)


def hub_out_state(basis: EdgeBasis) -> WalkState:
    """Uniform superposition over all hub-outgoing spoke states."""
    n = basis.n_spokes
    amps = np.zeros(basis.dim, dtype=complex)
    amps[0:n] = 1.0 / np.sqrt(n)
    return make_state(amps)


def hub_in_state(basis: EdgeBasis) -> WalkState:
    n = basis.n_spokes
    amps = np.zeros(basis.dim, dtype=complex)
    amps[n:2 * n] = 1.0 / np.sqrt(n)
    return make_state(amps)


def all_loops_state(basis: EdgeBasis) -> WalkState:
    """Uniform superposition over all loop states (needs one loop per vertex)."""
    n = basis.n_spokes
    positions = [basis.index.get(BasisLabel.loop(j)) for j in range(1, n + 1)]
    if any(p is None for p in positions):
        raise ConfigurationError("graph does not carry a loop on every vertex")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[positions] = 1.0 / np.sqrt(n)
    return make_state(amps)


def symmetric_out_state(basis: EdgeBasis, vertices) -> WalkState:
    """Uniform superposition of (0,j) over the given outer vertices."""
    vertices = list(vertices)
    if not vertices:
        raise ConfigurationError("vertex set must be non-empty")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[[basis.out_position(j) for j in vertices]] = 1.0 / np.sqrt(len(vertices))
    return make_state(amps)


def symmetric_in_state(basis: EdgeBasis, vertices) -> WalkState:
    vertices = list(vertices)
    if not vertices:
        raise ConfigurationError("vertex set must be non-empty")
    amps = np.zeros(basis.dim, dtype=complex)
    amps[[basis.in_position(j) for j in vertices]] = 1.0 / np.sqrt(len(vertices))
    return make_state(amps)


def edge_probabilities(state: WalkState, basis: EdgeBasis,
                       policy: NumericPolicy = DEFAULT_POLICY) -> dict:
    """Probability per undirected edge or loop.

    Keys are ('spoke', j) for hub spokes, ('edge', u, v) with u < v for
    non-spoke edges, and ('loop', at).  Directed amplitudes of the same
    undirected edge are summed.
    """

    if state.basis_dim != basis.dim:
        raise DimensionMismatchError(
            f"state dimension {state.basis_dim} != basis dimension {basis.dim}")
    probs: dict = {}
    weights = np.abs(state.amplitudes) ** 2
    for label, w in zip(basis.labels, weights):
        if label.kind == "loop":
            key = ("loop", label.u)
        else:
            u, v = label.u, label.v
            if 0 in (u, v):
                key = ("spoke", max(u, v))
            else:
                key = ("edge", min(u, v), max(u, v))
        probs[key] = probs.get(key, 0.0) + float(w)
    total = sum(probs.values())
    if abs(total - 1.0) > policy.probability_tol:
        raise NumericalFailureError(f"probabilities sum to {total}, expected 1")
    return probs
