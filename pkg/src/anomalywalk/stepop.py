"""One-step unitary of the scattering walk.

The operator never materializes as a matrix on the hot path.  Hub columns
all share one structure (reflection -r on the matching outgoing state plus
transmission t to every other one), so a full application costs O(N): one
running sum over hub-incoming amplitudes plus a vectorized scatter for the
outer-vertex columns, each of which has exactly one nonzero.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .edgespace import BasisLabel, EdgeBasis, WalkState, make_basis, make_state
from .errors import DimensionMismatchError, NumericalFailureError, SizeError
from .numerics import DEFAULT_POLICY, NumericPolicy
from .stargraph import StarGraph


@dataclass(frozen=True)
class StepOperator:
    basis: EdgeBasis
    hub_r: float
    hub_t: float
    perm_src: np.ndarray
    perm_dst: np.ndarray
    perm_amp: np.ndarray

    @property
    def dimension(self) -> int:
        return self.basis.dim

    @property
    def n_spokes(self) -> int:
        return self.basis.n_spokes

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.perm_amp.imag == 0.0))

    def column(self, label: BasisLabel) -> list[tuple[BasisLabel, complex]]:
        """Nonzero entries of one column, as (output label, amplitude) pairs."""
        n = self.n_spokes
        pos = self.basis.position(label)
        if n <= pos < 2 * n:
            j = pos - n + 1
            out = []
            for k in range(1, n + 1):
                amp = -self.hub_r if k == j else self.hub_t
                out.append((BasisLabel.edge(0, k), complex(amp)))
            return out
        hits = np.nonzero(self.perm_src == pos)[0]
        return [(self.basis.labels[int(self.perm_dst[h])], complex(self.perm_amp[h]))
                for h in hits]


@dataclass(frozen=True)
class UnitarityReport:
    max_deviation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_deviation < self.tolerance


def build_scattering_operator(graph: StarGraph, hub_r: float, hub_t: float) -> StepOperator:
    """Assemble the walk operator with explicit hub amplitudes.

    Outer-vertex rules depend only on the anomaly: plain spokes bounce the
    particle straight back toward the hub, anomaly-adjacent vertices route
    it through the anomaly, and the marking phase multiplies exactly one
    designated hop.
    """

    basis = make_basis(graph)
    n = graph.n_spokes
    a = graph.anomaly
    src: list[int] = []
    dst: list[int] = []
    amp: list[complex] = []

    def rule(src_label: BasisLabel, dst_label: BasisLabel, amplitude: complex = 1.0) -> None:
        src.append(basis.position(src_label))
        dst.append(basis.position(dst_label))
        amp.append(amplitude)

    out_edge = BasisLabel.edge
    phase = complex(np.exp(1j * a.mark_phase.value)) if a.variant != "none" else 1.0 + 0j
    for j in range(1, n + 1):
        if a.variant == "extra_edge" and j in (a.u, a.v):
            other = a.v if j == a.u else a.u
            rule(out_edge(0, j), out_edge(j, other))
        elif a.variant == "loop" and j == a.at:
            rule(out_edge(0, j), BasisLabel.loop(j))
        elif a.variant == "extended_edge" and j == a.at:
            rule(out_edge(0, j), out_edge(j, n + 1))
        elif a.variant == "missing_loop":
            if j == a.at:
                # marked vertex: direct bounce carrying the marking phase
                rule(out_edge(0, j), out_edge(j, 0), phase)
            else:
                rule(out_edge(0, j), BasisLabel.loop(j))
        else:
            rule(out_edge(0, j), out_edge(j, 0))
    if a.variant == "extra_edge":
        rule(out_edge(a.u, a.v), out_edge(a.v, 0))
        rule(out_edge(a.v, a.u), out_edge(a.u, 0))
    elif a.variant == "loop":
        rule(BasisLabel.loop(a.at), out_edge(a.at, 0))
    elif a.variant == "extended_edge":
        rule(out_edge(a.at, n + 1), out_edge(n + 1, a.at), phase)
        rule(out_edge(n + 1, a.at), out_edge(a.at, 0))
    elif a.variant == "missing_loop":
        # dummy loop at the marked vertex is a fixed point
        rule(BasisLabel.loop(a.at), BasisLabel.loop(a.at))
        for j in range(1, n + 1):
            if j != a.at:
                rule(BasisLabel.loop(j), out_edge(j, 0))

    perm_src = np.asarray(src, dtype=np.intp)
    perm_dst = np.asarray(dst, dtype=np.intp)
    perm_amp = np.asarray(amp, dtype=complex)
    # the apply paths skip zero-filling: singleton outputs must cover every
    # position outside the hub-outgoing block exactly once, and singleton
    # inputs every position outside the hub-incoming block
    d = basis.dim
    if not np.array_equal(np.sort(perm_dst), np.arange(n, d)):
        raise NumericalFailureError("singleton outputs do not tile the non-hub block")
    expected_src = np.concatenate([np.arange(0, n), np.arange(2 * n, d)])
    if not np.array_equal(np.sort(perm_src), expected_src):
        raise NumericalFailureError("singleton inputs do not tile the non-hub columns")
    return StepOperator(basis=basis, hub_r=float(hub_r), hub_t=float(hub_t),
                        perm_src=perm_src, perm_dst=perm_dst, perm_amp=perm_amp)


def build_step_operator(graph: StarGraph) -> StepOperator:
    n = graph.n_spokes
    return build_scattering_operator(graph, (n - 2) / n, 2 / n)


def apply_into(op: StepOperator, x: np.ndarray, out: np.ndarray) -> np.ndarray:
    """One step on a raw amplitude array, writing into a preallocated buffer.

    No zero fill is needed: the hub rule writes the whole outgoing block and
    the singleton scatter tiles everything else (checked at build time).
    """
    n = op.n_spokes
    s = x[n:2 * n].sum()
    np.multiply(x[n:2 * n], -(op.hub_r + op.hub_t), out=out[0:n])
    out[0:n] += op.hub_t * s
    out[op.perm_dst] = op.perm_amp * x[op.perm_src]
    return out


def apply_adjoint_into(op: StepOperator, x: np.ndarray, out: np.ndarray) -> np.ndarray:
    n = op.n_spokes
    s = x[0:n].sum()
    np.multiply(x[0:n], -(op.hub_r + op.hub_t), out=out[n:2 * n])
    out[n:2 * n] += op.hub_t * s
    out[op.perm_src] = np.conj(op.perm_amp) * x[op.perm_dst]
    return out


def apply_step(op: StepOperator, state: WalkState) -> WalkState:
    if state.basis_dim != op.dimension:
        raise DimensionMismatchError(
            f"state dimension {state.basis_dim} != operator dimension {op.dimension}")
    out = np.empty(op.dimension, dtype=complex)
    apply_into(op, state.amplitudes, out)
    out.setflags(write=False)
    return WalkState(amplitudes=out, basis_dim=op.dimension)


def apply_adjoint(op: StepOperator, state: WalkState) -> WalkState:
    if state.basis_dim != op.dimension:
        raise DimensionMismatchError(
            f"state dimension {state.basis_dim} != operator dimension {op.dimension}")
    out = np.empty(op.dimension, dtype=complex)
    apply_adjoint_into(op, state.amplitudes, out)
    out.setflags(write=False)
    return WalkState(amplitudes=out, basis_dim=op.dimension)


def sparse_matrix(op: StepOperator) -> sp.csc_matrix:
    n = op.n_spokes
    d = op.dimension
    rows = []
    cols = []
    vals = []
    for j in range(n):
        rows.extend(range(n))
        cols.extend([n + j] * n)
        col = np.full(n, op.hub_t)
        col[j] = -op.hub_r
        vals.extend(col.tolist())
    rows.extend(op.perm_dst.tolist())
    cols.extend(op.perm_src.tolist())
    vals.extend(op.perm_amp.tolist())
    return sp.csc_matrix((vals, (rows, cols)), shape=(d, d), dtype=complex)


def dense_matrix(op: StepOperator, policy: NumericPolicy = DEFAULT_POLICY) -> np.ndarray:
    """Materialized matrix, for tests and diagnostics only."""
    if op.dimension > policy.dense_cap:
        raise SizeError(f"dimension {op.dimension} over dense cap {policy.dense_cap}")
    return sparse_matrix(op).toarray()


def check_unitarity(op: StepOperator, tolerance: float | None = None,
                    policy: NumericPolicy = DEFAULT_POLICY) -> UnitarityReport:
    """Max elementwise deviation of U†U from identity.

    Hub-column inner products take exactly two values (diagonal and
    off-diagonal), so the structural check is O(1) plus an O(columns) scan
    of the singleton amplitudes; for small dimensions the result is
    cross-checked against an explicit sparse product.
    """

    if tolerance is None:
        tolerance = policy.unitarity_tol
    n = op.n_spokes
    r, t = op.hub_r, op.hub_t
    diag = r * r + (n - 1) * t * t
    offdiag = (n - 2) * t * t - 2 * r * t
    dev = max(abs(diag - 1.0), abs(offdiag))
    if op.perm_amp.size:
        dev = max(dev, float(np.abs(np.abs(op.perm_amp) ** 2 - 1.0).max()))
    if op.dimension <= policy.dense_cap:
        u = sparse_matrix(op)
        gram = (u.conj().T @ u - sp.identity(op.dimension, dtype=complex, format="csc"))
        if gram.nnz:
            dev = max(dev, float(np.abs(gram.data).max()))
    return UnitarityReport(max_deviation=dev, tolerance=tolerance)


def dump_operator_csv(op: StepOperator, path, policy: NumericPolicy = DEFAULT_POLICY) -> None:
    if op.dimension > policy.dense_cap:
        raise SizeError(f"dimension {op.dimension} over dense cap {policy.dense_cap}")
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["row_label", "col_label", "re", "im"])
        for col_label in op.basis.labels:
            for row_label, amplitude in op.column(col_label):
                writer.writerow([str(row_label), str(col_label),
                                 f"{amplitude.real:.12g}", f"{amplitude.imag:.12g}"])


def random_unit_state(dim: int, seed: int) -> WalkState:
    """Seeded complex Gaussian state, normalized; used by tests and diagnostics."""
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    amps /= np.linalg.norm(amps)
    return make_state(amps)
