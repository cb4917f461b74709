"""Perturbation analysis of the walk around its infinite-size limit.

Setting the hub to pure reflection (r=1, t=0) gives the limit operator.
Its eigenphases are size-independent inside the reduced family space, so
matching finite-size eigenphases branch by branch isolates the shifts,
and fitting them against the graph size separates the degenerate branches
(shift of order one over square root of N) from the simple ones (order
one over N).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .collapse import ReducedBasis, ReducedOperator, invariant_basis, reduce_operator
from .edgespace import (
    all_loops_state,
    hub_in_state,
    hub_out_state,
    make_basis,
    symmetric_out_state,
)
from .errors import (
    ConfigurationError,
    DimensionMismatchError,
    InsufficientDataError,
    InvarianceError,
    MatchingError,
    NumericalFailureError,
)
from .numerics import DEFAULT_POLICY, NumericPolicy
from .spectral import Spectrum, eigendecompose
from .stargraph import Anomaly, StarGraph, build_star
from .stepop import (
    StepOperator,
    apply_into,
    build_scattering_operator,
    build_step_operator,
)

DEFAULT_SWEEP_SIZES = (64, 128, 256, 512, 1024, 2048, 4096)


def build_unperturbed(graph: StarGraph) -> StepOperator:
    """Walk operator with the hub replaced by pure reflection.

    Anomaly-vertex rules are unchanged; only the hub loses its
    transmission.  This is the size-infinity limit of the step operator.
    """
    return build_scattering_operator(graph, 1.0, 0.0)


def sweep_seeds(graph: StarGraph) -> list:
    """Closure seeds for perturbation runs.

    The uniform family generators alone can miss limit eigenvectors that
    live on the anomaly spokes, so the symmetric anomaly-local outgoing
    state is always added; it is absorbed for free when already covered.
    """
    basis = make_basis(graph)
    seeds = [hub_out_state(basis), hub_in_state(basis)]
    if graph.anomaly.variant == "missing_loop":
        seeds.append(all_loops_state(basis))
    if graph.anomaly_vertices:
        seeds.append(symmetric_out_state(basis, graph.anomaly_vertices))
    return seeds


def limit_reduced_operator(graph: StarGraph, basis: ReducedBasis,
                           policy: NumericPolicy = DEFAULT_POLICY) -> ReducedOperator:
    """Limit operator expressed in a reduced basis computed for finite size.

    The finite hub differs from pure reflection by the rank-one term
    2|out><in| over the uniform spoke states; in the limit the uniforms
    concentrate on the bulk (non-anomaly) spokes.  The result is the
    reflection part projected into the basis plus that bulk rank-one
    completion, and it must come out unitary, which requires the basis to
    contain the bulk uniforms and be closed under the reflection walk;
    both are checked.
    """

    u0 = build_unperturbed(graph)
    if basis.full_dim != u0.dimension:
        raise DimensionMismatchError(
            f"basis lives in dimension {basis.full_dim}, "
            f"operator in {u0.dimension}")
    v = basis.matrix
    m = basis.dim
    images = np.empty((u0.dimension, m), dtype=complex)
    work = np.empty(u0.dimension, dtype=complex)
    for k in range(m):
        images[:, k] = apply_into(u0, v[:, k].copy(), work)
    core = v.conj().T @ images
    leakage = float(np.linalg.norm(images - v @ core, axis=0).max()) if m else 0.0
    if leakage > policy.invariance_tol:
        raise InvarianceError(
            f"reduced basis is not closed under the reflection walk "
            f"(leakage {leakage:.3e})")

    n = graph.n_spokes
    bulk = [j for j in range(1, n + 1) if j not in graph.anomaly_vertices]
    if not bulk:
        raise ConfigurationError("no bulk spokes left to carry the hub term")
    rows = np.array(bulk) - 1
    amp = 1.0 / math.sqrt(len(bulk))
    ob = np.zeros(u0.dimension, dtype=complex)
    ob[rows] = amp
    ib = np.zeros(u0.dimension, dtype=complex)
    ib[rows + n] = amp
    cob = v.conj().T @ ob
    cib = v.conj().T @ ib
    outside = max(float(np.linalg.norm(ob - v @ cob)),
                  float(np.linalg.norm(ib - v @ cib)))
    if outside > policy.invariance_tol:
        raise NumericalFailureError(
            f"bulk uniform states fall {outside:.3e} outside the reduced "
            f"basis; enlarge the seed family")
    matrix = core + 2.0 * np.outer(cob, cib.conj())
    gram_dev = float(np.abs(matrix.conj().T @ matrix - np.eye(m)).max())
    if gram_dev > policy.reduced_unitarity_tol:
        raise NumericalFailureError(
            f"limit operator deviates from unitarity by {gram_dev:.3e}")
    matrix.setflags(write=False)
    return ReducedOperator(matrix=matrix, basis=basis)


@dataclass(frozen=True)
class EigenShift:
    """Finite-size phase shifts of one limit-operator branch."""

    theta0: float
    multiplicity0: int
    shifts: tuple[float, ...]
    overlap: float
    unmatched: bool


@dataclass(frozen=True)
class ScalingFit:
    branch_theta0: float
    slope: float
    intercept: float
    r_squared: float
    points_used: int
    excluded: int

    @property
    def below_floor(self) -> bool:
        """True when every shift of the branch sat below the noise floor."""
        return self.points_used == 0


def _wrap(angle: float) -> float:
    wrapped = math.remainder(angle, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


def eigenphase_shifts(perturbed: Spectrum, unperturbed: Spectrum,
                      match_tol: float | None = None,
                      policy: NumericPolicy = DEFAULT_POLICY) -> list[EigenShift]:
    """Match perturbed clusters to limit branches and read off the shifts.

    Matching goes by eigenvector subspace overlap, not nearest phase, so
    a branch keeps its identity even when its split crosses a neighbor.
    Every limit branch must receive exactly its multiplicity.
    """

    if perturbed.dim != unperturbed.dim:
        raise DimensionMismatchError(
            f"spectra have dimensions {perturbed.dim} and {unperturbed.dim}")
    if match_tol is None:
        match_tol = policy.match_tol
    k0 = len(unperturbed.eigenphases)
    kc = len(perturbed.eigenphases)
    overlap = np.empty((k0, kc))
    for k, w0 in enumerate(unperturbed.blocks):
        for c, wc in enumerate(perturbed.blocks):
            overlap[k, c] = (np.linalg.norm(w0.conj().T @ wc) ** 2
                             / wc.shape[1])

    assigned: list[list[int]] = [[] for _ in range(k0)]
    for c in range(kc):
        col = overlap[:, c]
        order = np.argsort(col)[::-1]
        best = col[order[0]]
        second = col[order[1]] if k0 > 1 else 0.0
        if best - second < match_tol:
            raise MatchingError(
                f"cluster at phase {perturbed.eigenphases[c]:.6f} overlaps "
                f"branches {unperturbed.eigenphases[order[0]]:.6f} and "
                f"{unperturbed.eigenphases[order[1]]:.6f} almost equally "
                f"({best:.3f} vs {second:.3f})")
        assigned[order[0]].append(c)

    shifts_out = []
    for k in range(k0):
        theta0 = unperturbed.eigenphases[k]
        mult0 = unperturbed.multiplicities[k]
        received = sum(perturbed.multiplicities[c] for c in assigned[k])
        if received != mult0:
            raise MatchingError(
                f"branch {theta0:.6f} received {received} eigenvalues, "
                f"expected {mult0}")
        shifts: list[float] = []
        quality = 0.0
        for c in assigned[k]:
            delta = _wrap(perturbed.eigenphases[c] - theta0)
            shifts.extend([delta] * perturbed.multiplicities[c])
            quality += perturbed.multiplicities[c] * overlap[k, c]
        quality /= mult0
        shifts_out.append(EigenShift(
            theta0=theta0, multiplicity0=mult0, shifts=tuple(shifts),
            overlap=quality, unmatched=quality < 1.0 - match_tol))
    return shifts_out


def fit_scaling(samples, policy: NumericPolicy = DEFAULT_POLICY) -> list[ScalingFit]:
    """Power-law fits of shift magnitude against size, one per branch.

    samples: iterable of (n_spokes, EigenShift) pairs.  Shifts at or
    below the noise floor are excluded and counted; a branch whose every
    shift is excluded is reported with points_used 0 instead of a fit,
    since an exactly preserved eigenphase is a result, not bad data.
    """

    groups: dict[float, list] = {}
    for n, shift in samples:
        key = round(_wrap(shift.theta0), 9)
        groups.setdefault(key, []).append((n, shift))
    fits = []
    for key in sorted(groups):
        entries = groups[key]
        theta0 = entries[0][1].theta0
        points = [(n, abs(delta)) for n, shift in entries
                  for delta in shift.shifts]
        usable = [(n, delta) for n, delta in points
                  if delta > policy.shift_floor]
        excluded = len(points) - len(usable)
        if not usable:
            nan = float("nan")
            fits.append(ScalingFit(branch_theta0=theta0, slope=nan,
                                   intercept=nan, r_squared=nan,
                                   points_used=0, excluded=excluded))
            continue
        if len({n for n, _ in usable}) < 4:
            raise InsufficientDataError(
                f"branch {theta0:.6f} has usable shifts at "
                f"{len({n for n, _ in usable})} sizes, need at least 4")
        logn = np.log([float(n) for n, _ in usable])
        logd = np.log([delta for _, delta in usable])
        slope, intercept = np.polyfit(logn, logd, 1)
        residual = logd - (slope * logn + intercept)
        total = logd - logd.mean()
        ss_tot = float(total @ total)
        r2 = 1.0 - float(residual @ residual) / ss_tot if ss_tot > 0 else 1.0
        fits.append(ScalingFit(branch_theta0=theta0, slope=float(slope),
                               intercept=float(intercept), r_squared=r2,
                               points_used=len(usable), excluded=excluded))
    return fits


@dataclass(frozen=True)
class SweepResult:
    samples: tuple  # (n_spokes, EigenShift) pairs
    fits: tuple[ScalingFit, ...]


def _sweep_point(anomaly: Anomaly, n: int, policy: NumericPolicy):
    graph = build_star(n, anomaly)
    op = build_step_operator(graph)
    rb = invariant_basis(op, sweep_seeds(graph), policy)
    reduced = reduce_operator(op, rb, policy)
    limit = limit_reduced_operator(graph, rb, policy)
    # keep the cluster threshold well under the smallest expected
    # splitting, which shrinks like 1/N on simple branches
    tol = min(policy.cluster_tol, 0.01 / n)
    spec_fin = eigendecompose(reduced, tol, policy)
    spec_lim = eigendecompose(limit, tol, policy)
    shifts = eigenphase_shifts(spec_fin, spec_lim, policy=policy)
    return [(n, shift) for shift in shifts]


def perturbation_sweep(anomaly: Anomaly, sizes=DEFAULT_SWEEP_SIZES,
                       policy: NumericPolicy = DEFAULT_POLICY,
                       max_workers: int = 1) -> SweepResult:
    """Shift-vs-size sweep for one anomaly across a list of graph sizes.

    Sizes are independent, so they may run on a small thread pool; the
    sample order is by size regardless of worker count.
    """
    sizes = tuple(int(n) for n in sizes)
    if not sizes:
        raise ConfigurationError("size list must be non-empty")
    if max_workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            chunks = list(pool.map(
                lambda n: _sweep_point(anomaly, n, policy), sizes))
    else:
        chunks = [_sweep_point(anomaly, n, policy) for n in sizes]
    samples = tuple(pair for chunk in chunks for pair in chunk)
    return SweepResult(samples=samples,
                       fits=tuple(fit_scaling(samples, policy)))


def write_shifts_csv(samples, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("N,branch_theta0,multiplicity0,delta_theta,overlap\n")
        for n, shift in samples:
            for delta in shift.shifts:
                fh.write(f"{n},{shift.theta0:.12g},{shift.multiplicity0},"
                         f"{delta:.12g},{shift.overlap:.12g}\n")


def write_fits_csv(fits, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("branch_theta0,slope,intercept,r_squared,points_used\n")
        for fit in fits:
            fh.write(f"{fit.branch_theta0:.12g},{fit.slope:.12g},"
                     f"{fit.intercept:.12g},{fit.r_squared:.12g},"
                     f"{fit.points_used}\n")
