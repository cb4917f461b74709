"""Star-graph family model and the on-disk graph-spec format.

A graph is a hub (vertex 0) with ``n_spokes`` outer vertices, plus at most
one structural anomaly: an extra edge between two outer vertices, a loop on
one outer vertex, an extension hanging off one spoke, or the all-loops
configuration where exactly one vertex carries a dummy (fixed-point) loop
instead of a real one.  The spec format is a small JSON object; parsing and
serialization round-trip exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

from .errors import (
    IndexRangeError,
    SelfEdgeError,
    SizeError,
    SpecSemanticError,
    SpecSyntaxError,
)

VARIANTS = ("none", "extra_edge", "loop", "extended_edge", "missing_loop")

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PhaseAngle:
    """An angle in radians, canonicalized to (-pi, pi].

    Rational multiples of pi are stored exactly as a reduced fraction
    (num/den)*pi so that angles like pi and pi/3 survive serialization
    bit-for-bit; anything else is kept as a plain float.
    """

    num: int | None = None
    den: int | None = None
    rad: float | None = None

    @staticmethod
    def from_pi_fraction(num: int, den: int) -> "PhaseAngle":
        if den == 0:
            raise SpecSemanticError("phase denominator must be nonzero")
        if den < 0:
            num, den = -num, -den
        g = math.gcd(num, den)
        if g > 1:
            num, den = num // g, den // g
        # wrap num/den into (-1, 1]
        k = num % (2 * den)
        if k > den:
            k -= 2 * den
        return PhaseAngle(num=k, den=den)

    @staticmethod
    def from_radians(value: float) -> "PhaseAngle":
        value = float(value)
        if not math.isfinite(value):
            raise SpecSemanticError("phase must be a finite real")
        wrapped = math.remainder(value, _TWO_PI)
        if wrapped <= -math.pi:
            wrapped += _TWO_PI
        return PhaseAngle(rad=wrapped + 0.0)

    @staticmethod
    def zero() -> "PhaseAngle":
        return PhaseAngle.from_pi_fraction(0, 1)

    @staticmethod
    def pi() -> "PhaseAngle":
        return PhaseAngle.from_pi_fraction(1, 1)

    @property
    def is_rational(self) -> bool:
        return self.num is not None

    @property
    def value(self) -> float:
        if self.num is not None:
            return self.num * math.pi / self.den
        return self.rad


@dataclass(frozen=True)
class Anomaly:
    """Anomaly descriptor: which variant, where, and its marking phase.

    ``mark_phase`` multiplies one designated matrix element of the walk
    (the extension back-hop for extended_edge, the direct hub bounce for
    missing_loop); extra_edge and loop carry a phase field for uniformity
    but the step operator ignores it.
    """

    variant: str
    u: int | None = None
    v: int | None = None
    at: int | None = None
    mark_phase: PhaseAngle = PhaseAngle.zero()

    @staticmethod
    def none() -> "Anomaly":
        return Anomaly(variant="none")

    @staticmethod
    def extra_edge(u: int, v: int, phase: PhaseAngle | None = None) -> "Anomaly":
        return Anomaly(variant="extra_edge", u=u, v=v,
                       mark_phase=phase if phase is not None else PhaseAngle.zero())

    @staticmethod
    def loop(at: int, phase: PhaseAngle | None = None) -> "Anomaly":
        return Anomaly(variant="loop", at=at,
                       mark_phase=phase if phase is not None else PhaseAngle.zero())

    @staticmethod
    def extended_edge(at: int, phase: PhaseAngle | None = None) -> "Anomaly":
        return Anomaly(variant="extended_edge", at=at,
                       mark_phase=phase if phase is not None else PhaseAngle.pi())

    @staticmethod
    def missing_loop(at: int, phase: PhaseAngle | None = None) -> "Anomaly":
        return Anomaly(variant="missing_loop", at=at,
                       mark_phase=phase if phase is not None else PhaseAngle.pi())


@dataclass(frozen=True)
class StarGraph:
    n_spokes: int
    anomaly: Anomaly

    @property
    def hilbert_dim(self) -> int:
        n = self.n_spokes
        variant = self.anomaly.variant
        if variant == "none":
            return 2 * n
        if variant == "extra_edge":
            return 2 * n + 2
        if variant == "loop":
            return 2 * n + 1
        if variant == "extended_edge":
            return 2 * n + 2
        if variant == "missing_loop":
            return 3 * n
        raise SpecSemanticError(f"unknown anomaly variant {variant!r}")

    @property
    def anomaly_vertices(self) -> tuple[int, ...]:
        """Outer vertices adjacent to the anomaly (empty for a plain star)."""
        a = self.anomaly
        if a.variant == "none":
            return ()
        if a.variant == "extra_edge":
            return (a.u, a.v)
        return (a.at,)


def build_star(n: int, anomaly: Anomaly) -> StarGraph:
    """Validate and assemble a star graph.

    The extra-edge endpoint pair is canonicalized to u < v; u == v is
    rejected.  N >= 3 keeps the hub reflection amplitude (N-2)/N positive.
    """

    if not isinstance(n, int) or isinstance(n, bool):
        raise SpecSemanticError("n_spokes must be an integer")
    if n < 3:
        raise SizeError(f"n_spokes must be >= 3, got {n}")
    if anomaly.variant not in VARIANTS:
        raise SpecSemanticError(f"unknown anomaly variant {anomaly.variant!r}")
    if anomaly.variant == "extra_edge":
        u, v = anomaly.u, anomaly.v
        if u == v:
            raise SelfEdgeError(f"extra edge endpoints must differ, got ({u},{v})")
        if u > v:
            u, v = v, u
            anomaly = Anomaly(variant="extra_edge", u=u, v=v, mark_phase=anomaly.mark_phase)
        for vertex in (u, v):
            if not 1 <= vertex <= n:
                raise IndexRangeError(f"vertex {vertex} outside 1..{n}")
    elif anomaly.variant != "none":
        if not 1 <= anomaly.at <= n:
            raise IndexRangeError(f"vertex {anomaly.at} outside 1..{n}")
    return StarGraph(n_spokes=n, anomaly=anomaly)


_TOP_KEYS = {"n_spokes", "anomaly"}
_PHASE_KEYS = {"phase_num", "phase_den", "phase_rad"}
_FIELD_KEYS = {
    "none": set(),
    "extra_edge": {"u", "v"} | _PHASE_KEYS,
    "loop": {"at"} | _PHASE_KEYS,
    "extended_edge": {"at"} | _PHASE_KEYS,
    "missing_loop": {"at"} | _PHASE_KEYS,
}


def _require_int(obj: dict, key: str) -> int:
    if key not in obj:
        raise SpecSemanticError(f"missing required key {key!r}")
    value = obj[key]
    if not isinstance(value, int) or isinstance(value, bool):
        raise SpecSemanticError(f"key {key!r} must be an integer")
    return value


def _parse_phase(obj: dict) -> PhaseAngle | None:
    has_frac = "phase_num" in obj or "phase_den" in obj
    has_rad = "phase_rad" in obj
    if has_frac and has_rad:
        raise SpecSemanticError("give either phase_num/phase_den or phase_rad, not both")
    if has_frac:
        num = _require_int(obj, "phase_num")
        den = _require_int(obj, "phase_den")
        return PhaseAngle.from_pi_fraction(num, den)
    if has_rad:
        value = obj["phase_rad"]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SpecSemanticError("phase_rad must be a finite real")
        return PhaseAngle.from_radians(float(value))
    return None


def parse_spec(text: str) -> StarGraph:
    """Parse the JSON graph-spec format into a validated StarGraph.

    Unknown keys at any level are rejected; syntax errors report line and
    column.
    """

    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecSyntaxError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(raw, dict):
        raise SpecSemanticError("spec must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise SpecSemanticError(f"unknown key {sorted(unknown)[0]!r}")
    n = _require_int(raw, "n_spokes")
    if "anomaly" not in raw:
        raise SpecSemanticError("missing required key 'anomaly'")
    araw = raw["anomaly"]
    if not isinstance(araw, dict):
        raise SpecSemanticError("'anomaly' must be a JSON object")
    variant = araw.get("type")
    if variant not in VARIANTS:
        raise SpecSemanticError(f"unknown anomaly name {variant!r}")
    allowed = _FIELD_KEYS[variant] | {"type"}
    unknown = set(araw) - allowed
    if unknown:
        raise SpecSemanticError(f"unknown key {sorted(unknown)[0]!r} for anomaly {variant!r}")
    phase = _parse_phase(araw)
    if variant == "none":
        anomaly = Anomaly.none()
    elif variant == "extra_edge":
        anomaly = Anomaly.extra_edge(_require_int(araw, "u"), _require_int(araw, "v"), phase)
    elif variant == "loop":
        anomaly = Anomaly.loop(_require_int(araw, "at"), phase)
    elif variant == "extended_edge":
        anomaly = Anomaly.extended_edge(_require_int(araw, "at"), phase)
    else:
        anomaly = Anomaly.missing_loop(_require_int(araw, "at"), phase)
    return build_star(n, anomaly)


def serialize_spec(graph: StarGraph) -> str:
    """Canonical spec text: sorted keys, compact separators.

    Phases are emitted as exact pi-fractions when stored that way, else as
    a decimal; extended_edge and missing_loop always carry their phase,
    extra_edge and loop only when it is nonzero (zero means unmarked).
    """

    a = graph.anomaly
    araw: dict = {"type": a.variant}
    if a.variant == "extra_edge":
        araw["u"], araw["v"] = a.u, a.v
    elif a.variant != "none":
        araw["at"] = a.at
    emit_phase = a.variant in ("extended_edge", "missing_loop") or (
        a.variant in ("extra_edge", "loop") and a.mark_phase.value != 0.0
    )
    if emit_phase:
        if a.mark_phase.is_rational:
            araw["phase_num"] = a.mark_phase.num
            araw["phase_den"] = a.mark_phase.den
        else:
            araw["phase_rad"] = a.mark_phase.rad
    return json.dumps({"n_spokes": graph.n_spokes, "anomaly": araw},
                      sort_keys=True, separators=(",", ":"))
