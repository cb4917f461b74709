"""Search drivers over anomalous star walks.

Builds the standard start states, evolves them while recording where the
probability sits, predicts hitting steps where a closed form exists,
simulates the accessible-edge measurement, and provides the classical
adjacency-list baseline for comparison.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .collapse import invariant_basis, reduce_operator
from .edgespace import (
    WalkState,
    all_loops_state,
    hub_in_state,
    hub_out_state,
    make_basis,
    make_state,
)
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    NoPredictionError,
    NothingToFindError,
    NumericalFailureError,
)
from .numerics import DEFAULT_POLICY, NumericPolicy
from .stargraph import StarGraph, serialize_spec
from .stepop import apply_into, build_step_operator

_LOOP_KINDS = ("loop_pi", "loop_third")


@dataclass(frozen=True)
class InitialStateKind:
    """Named family of start states; use the factory methods."""

    variant: str
    amp_out: complex = 0j
    amp_in: complex = 0j
    amplitudes: tuple = ()

    @staticmethod
    def minus() -> "InitialStateKind":
        """Uniform outgoing minus incoming superposition."""
        return InitialStateKind("minus")

    @staticmethod
    def plus() -> "InitialStateKind":
        """Sign-flipped variant that fails to localize."""
        return InitialStateKind("plus")

    @staticmethod
    def inout(amp_out, amp_in) -> "InitialStateKind":
        """Arbitrary combination of the outgoing and incoming uniforms."""
        if amp_out == 0 and amp_in == 0:
            raise ConfigurationError("inout state needs a nonzero coefficient")
        return InitialStateKind("inout", amp_out=complex(amp_out),
                                amp_in=complex(amp_in))

    @staticmethod
    def loop_pi() -> "InitialStateKind":
        return InitialStateKind("loop_pi")

    @staticmethod
    def loop_third() -> "InitialStateKind":
        return InitialStateKind("loop_third")

    @staticmethod
    def custom(amplitudes) -> "InitialStateKind":
        amps = tuple(complex(a) for a in amplitudes)
        if not any(a != 0 for a in amps):
            raise ConfigurationError("custom state must be nonzero")
        return InitialStateKind("custom", amplitudes=amps)


def _combined_state(parts, coefficients, policy: NumericPolicy) -> WalkState:
    amps = sum(c * p.amplitudes for c, p in zip(coefficients, parts))
    nrm = np.linalg.norm(amps)
    return make_state(amps / nrm, policy=policy)


def initial_state(graph: StarGraph, kind: InitialStateKind,
                  policy: NumericPolicy = DEFAULT_POLICY) -> WalkState:
    """Unit-norm start state of the requested kind on this graph."""

    basis = make_basis(graph)
    if kind.variant in _LOOP_KINDS and graph.anomaly.variant != "missing_loop":
        raise ConfigurationError(
            f"{kind.variant} state requires the missing_loop variant")
    if kind.variant == "minus":
        return _combined_state(
            [hub_out_state(basis), hub_in_state(basis)], [1.0, -1.0], policy)
    if kind.variant == "plus":
        return _combined_state(
            [hub_out_state(basis), hub_in_state(basis)], [1.0, 1.0], policy)
    if kind.variant == "inout":
        return _combined_state(
            [hub_out_state(basis), hub_in_state(basis)],
            [kind.amp_out, kind.amp_in], policy)
    if kind.variant == "loop_pi":
        return _combined_state(
            [hub_out_state(basis), hub_in_state(basis), all_loops_state(basis)],
            [1.0, 1.0, 1.0], policy)
    if kind.variant == "loop_third":
        w = np.exp(2j * np.pi / 3)
        amps = (w.conjugate() * hub_out_state(basis).amplitudes
                + hub_in_state(basis).amplitudes
                + w * all_loops_state(basis).amplitudes) / (1.0 - w)
        # for a negative marking phase the walk is the complex conjugate
        # of the positive-phase walk, so the start state conjugates too
        if graph.anomaly.mark_phase.value < 0:
            amps = np.conj(amps)
        return make_state(amps, policy=policy)
    if kind.variant == "custom":
        amps = np.asarray(kind.amplitudes, dtype=complex)
        if amps.size != basis.dim:
            raise DimensionMismatchError(
                f"custom state has {amps.size} amplitudes, basis needs {basis.dim}")
        return make_state(amps / np.linalg.norm(amps), policy=policy)
    raise ConfigurationError(f"unknown initial-state kind {kind.variant!r}")


def family_seeds(graph: StarGraph, kind: InitialStateKind) -> list[WalkState]:
    """Generators of the smallest state family containing the kind.

    Closing these under the walk gives one invariant subspace that serves
    every start state of the family, not just a single seed's orbit.
    """

    basis = make_basis(graph)
    if kind.variant in ("minus", "plus", "inout"):
        return [hub_out_state(basis), hub_in_state(basis)]
    if kind.variant in _LOOP_KINDS:
        if graph.anomaly.variant != "missing_loop":
            raise ConfigurationError(
                f"{kind.variant} state requires the missing_loop variant")
        return [hub_out_state(basis), hub_in_state(basis),
                all_loops_state(basis)]
    if kind.variant == "custom":
        return [initial_state(graph, kind)]
    raise ConfigurationError(f"unknown initial-state kind {kind.variant!r}")


def predicted_hitting_step(graph: StarGraph) -> int:
    """Closed-form peak step, available for extra_edge and loop only."""
    n = graph.n_spokes
    variant = graph.anomaly.variant
    if variant == "extra_edge":
        return int(round(np.pi * np.sqrt(3.0 * n) / 4.0))
    if variant == "loop":
        return int(round((np.pi / 2.0) * np.sqrt(1.5 * n)))
    raise NoPredictionError(f"no hitting-step formula for variant {variant!r}")


@dataclass(frozen=True)
class StepRecord:
    n: int
    p_target_spokes: float
    p_anomaly: float
    p_rest: float


@dataclass(frozen=True)
class SearchResult:
    per_step: tuple[StepRecord, ...]
    peak_step: int
    peak_detectable: float
    peak_undetected: float
    predicted_step: int | None
    warnings: tuple[str, ...] = ()


def _partition_rows(graph: StarGraph) -> tuple[np.ndarray, np.ndarray]:
    """Row indices of target-spoke states and anomaly-only states."""
    n = graph.n_spokes
    a = graph.anomaly
    if a.variant == "none":
        raise NothingToFindError("plain star has no anomaly to search for")
    targets = graph.anomaly_vertices
    target_rows = sorted([j - 1 for j in targets] + [n + j - 1 for j in targets])
    if a.variant in ("extra_edge", "extended_edge"):
        anomaly_rows = [2 * n, 2 * n + 1]
    elif a.variant == "loop":
        anomaly_rows = [2 * n]
    else:  # missing_loop: only the dummy loop is anomaly-only
        anomaly_rows = [2 * n + a.at - 1]
    return np.array(target_rows), np.array(anomaly_rows)


def _record(n: int, x: np.ndarray, target_rows: np.ndarray,
            anomaly_rows: np.ndarray) -> StepRecord:
    pt = float((np.abs(x[target_rows]) ** 2).sum())
    pa = float((np.abs(x[anomaly_rows]) ** 2).sum())
    total = float((np.abs(x) ** 2).sum())
    return StepRecord(n=n, p_target_spokes=pt, p_anomaly=pa,
                      p_rest=max(total - pt - pa, 0.0))


def _evolve_full(op, x0, max_steps, target_rows, anomaly_rows):
    x = x0.astype(complex, copy=True)
    buf = np.empty_like(x)
    records = [_record(0, x, target_rows, anomaly_rows)]
    for n in range(1, max_steps + 1):
        apply_into(op, x, buf)
        x, buf = buf, x
        records.append(_record(n, x, target_rows, anomaly_rows))
    return records


def _evolve_reduced(graph, op, kind, x0, max_steps, target_rows, anomaly_rows,
                    policy):
    seeds = family_seeds(graph, kind)
    rb = invariant_basis(op, seeds, policy)
    v = rb.matrix
    c = v.conj().T @ x0
    leakage = float(np.linalg.norm(x0 - v @ c))
    if leakage > policy.invariance_tol:
        raise NumericalFailureError(
            f"start state leaks {leakage:.3e} outside its reduced family")
    m = reduce_operator(op, rb, policy).matrix
    tmat = v[target_rows, :]
    amat = v[anomaly_rows, :]
    records = []
    for n in range(max_steps + 1):
        pt = float(np.linalg.norm(tmat @ c) ** 2)
        pa = float(np.linalg.norm(amat @ c) ** 2)
        total = float(np.linalg.norm(c) ** 2)
        records.append(StepRecord(n=n, p_target_spokes=pt, p_anomaly=pa,
                                  p_rest=max(total - pt - pa, 0.0)))
        if n < max_steps:
            c = m @ c
    _spot_check(op, x0, records, target_rows, anomaly_rows)
    return records


def _spot_check(op, x0, records, target_rows, anomaly_rows):
    """Cross-check a prefix of the reduced run against the full walk."""
    k = min(len(records) - 1, 25)
    x = x0.astype(complex, copy=True)
    buf = np.empty_like(x)
    for _ in range(k):
        apply_into(op, x, buf)
        x, buf = buf, x
    ref = _record(k, x, target_rows, anomaly_rows)
    got = records[k]
    dev = max(abs(ref.p_target_spokes - got.p_target_spokes),
              abs(ref.p_anomaly - got.p_anomaly))
    if dev > 1e-9:
        raise NumericalFailureError(
            f"reduced evolution drifts {dev:.3e} from the full walk at step {k}")


def run_search(graph: StarGraph, kind: InitialStateKind, max_steps: int, *,
               method: str = "full",
               policy: NumericPolicy = DEFAULT_POLICY) -> SearchResult:
    """Evolve the start state and record the probability split per step.

    p_target_spokes covers the spoke edges adjacent to the anomaly,
    p_anomaly the states only the anomaly provides, p_rest everything
    else.  The peak is the argmax of their sum; ties break to the
    earliest step.  method="reduced" evolves inside the invariant family
    subspace and spot-checks a prefix against the full walk.
    """

    if max_steps < 1:
        raise ConfigurationError("max_steps must be at least 1")
    if method not in ("full", "reduced"):
        raise ConfigurationError(f"unknown evolution method {method!r}")
    target_rows, anomaly_rows = _partition_rows(graph)
    op = build_step_operator(graph)
    x0 = initial_state(graph, kind, policy).amplitudes
    if method == "full":
        records = _evolve_full(op, x0, max_steps, target_rows, anomaly_rows)
    else:
        records = _evolve_reduced(graph, op, kind, x0, max_steps, target_rows,
                                  anomaly_rows, policy)
    scores = [r.p_target_spokes + r.p_anomaly for r in records]
    peak = int(np.argmax(scores))
    try:
        predicted = predicted_hitting_step(graph)
    except NoPredictionError:
        predicted = None
    warnings: tuple[str, ...] = ()
    if predicted is not None and abs(predicted - peak) > 2:
        warnings = (f"empirical peak step {peak} is more than 2 steps "
                    f"from predicted step {predicted}",)
    return SearchResult(per_step=tuple(records), peak_step=peak,
                        peak_detectable=records[peak].p_target_spokes,
                        peak_undetected=records[peak].p_anomaly,
                        predicted_step=predicted, warnings=warnings)


def write_per_step_csv(result: SearchResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("n,p_target_spokes,p_anomaly,p_rest\n")
        for r in result.per_step:
            fh.write(f"{r.n},{r.p_target_spokes:.12g},"
                     f"{r.p_anomaly:.12g},{r.p_rest:.12g}\n")


def search_summary(graph: StarGraph, kind: InitialStateKind,
                   result: SearchResult) -> dict:
    """JSON-ready summary mirroring the per-step CSV scalars."""
    summary = {
        "spec": json.loads(serialize_spec(graph)),
        "kind": kind.variant,
        "predicted_step": result.predicted_step,
        "peak_step": result.peak_step,
        "peak_detectable": result.peak_detectable,
        "peak_undetected": result.peak_undetected,
    }
    if result.warnings:
        summary["warnings"] = list(result.warnings)
    return summary


@dataclass(frozen=True)
class MeasurementResult:
    distribution: dict
    p_undetected: float
    detected_edge: int | None
    sampled: bool


def measure_accessible(state: WalkState, graph: StarGraph, *,
                       seed: int | None = None,
                       policy: NumericPolicy = DEFAULT_POLICY) -> MeasurementResult:
    """Outcome distribution of measuring the edges present in the graph.

    Amplitude on states the anomaly alone provides (extra edge, loop on
    the marked vertex, extension edge, dummy loop) is aggregated into a
    single undetected mass.  For missing_loop the real loops are part of
    the graph, so their weight counts toward their own vertex's outcome.
    Passing a seed draws one outcome; detected_edge stays None when the
    undetected outcome is drawn.
    """

    basis = make_basis(graph)
    if state.basis_dim != basis.dim:
        raise DimensionMismatchError(
            f"state dimension {state.basis_dim} != basis dimension {basis.dim}")
    n = graph.n_spokes
    w = np.abs(state.amplitudes) ** 2
    spoke = w[0:n] + w[n:2 * n]
    a = graph.anomaly
    undetected = 0.0
    if a.variant in ("extra_edge", "extended_edge"):
        undetected = float(w[2 * n] + w[2 * n + 1])
    elif a.variant == "loop":
        undetected = float(w[2 * n])
    elif a.variant == "missing_loop":
        loops = w[2 * n:3 * n].copy()
        undetected = float(loops[a.at - 1])
        loops[a.at - 1] = 0.0
        spoke = spoke + loops
    distribution = {j + 1: float(spoke[j]) for j in range(n)}
    detected = None
    sampled = False
    if seed is not None:
        rng = np.random.default_rng(seed)
        probs = np.clip(np.append(spoke, undetected), 0.0, None)
        probs /= probs.sum()
        outcome = int(rng.choice(n + 1, p=probs))
        detected = outcome + 1 if outcome < n else None
        sampled = True
    return MeasurementResult(distribution=distribution,
                             p_undetected=float(undetected),
                             detected_edge=detected, sampled=sampled)


@dataclass(frozen=True)
class BaselineResult:
    queries: int


@dataclass(frozen=True)
class BaselineStatistics:
    trials: int
    mean: float
    std: float
    expected_mean: float


def _detectable_vertices(graph: StarGraph) -> tuple[int, ...]:
    """Outer vertices whose adjacency list reveals the anomaly."""
    if graph.anomaly.variant == "none":
        raise NothingToFindError("plain star has no anomaly to find")
    return graph.anomaly_vertices


def classical_baseline(graph: StarGraph, seed: int) -> BaselineResult:
    """Scan a shuffled list of outer vertices until the anomaly shows.

    One query inspects one vertex's neighbor list, which exposes an
    anomalous degree or loop immediately.
    """
    detectable = _detectable_vertices(graph)
    rng = np.random.default_rng(seed)
    order = rng.permutation(graph.n_spokes) + 1
    hits = np.isin(order, detectable)
    return BaselineResult(queries=int(np.argmax(hits)) + 1)


def baseline_statistics(graph: StarGraph, trials: int,
                        seed: int) -> BaselineStatistics:
    """Monte Carlo query-count statistics over independent shuffles."""
    detectable = _detectable_vertices(graph)
    if trials < 1:
        raise ConfigurationError("trials must be at least 1")
    n = graph.n_spokes
    cols = np.array([j - 1 for j in detectable])
    rng = np.random.default_rng(seed)
    out = np.empty(trials, dtype=np.int64)
    pos = 0
    chunk = max(1, 8_000_000 // n)
    while pos < trials:
        m = min(chunk, trials - pos)
        # each row is a shuffle: query order is ascending random key,
        # so the first hit's rank counts the keys below the best target
        u = rng.random((m, n))
        best = u[:, cols].min(axis=1)
        out[pos:pos + m] = (u < best[:, None]).sum(axis=1) + 1
        pos += m
    expected = (n + 1) / (len(detectable) + 1)
    return BaselineStatistics(trials=trials, mean=float(out.mean()),
                              std=float(out.std()), expected_mean=expected)
