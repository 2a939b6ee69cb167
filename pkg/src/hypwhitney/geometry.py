"""Dyadic strips, strip-pair tilings, and admissible box pairs.

Two separate constructions live here.

1. A classical Whitney decomposition of the off-diagonal {y1 != y2}: pairs of
   equal-length dyadic intervals whose parents are adjacent but which are not
   adjacent themselves, each subdivided into C0/8 subintervals of length rho.
   Products of the resulting strip pairs, over all dyadic rho, tile
   {y1 != y2} within Q x Q exactly once.

2. For a fixed pair of strips at scale rho whose members are vertically
   separated at scale C0*rho, the type-1/type-2 box pairs at scale delta: a
   small sheared parallelogram U1 paired with a long (straight or curved) box
   U2, constrained so that both endpoint transversality values have a fixed
   dyadic size.

All membership predicates are half-open and evaluated with exact double
comparisons; every grid quantity here is a power of two, so snapping and
comparisons are exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .reports import AuditReport
from .surface import tau

__all__ = [
    "DyadicInterval",
    "Strip",
    "AdmissiblePair",
    "Rejected",
    "is_dyadic",
    "related_intervals",
    "admissible_strip_pairs",
    "separated_strip_pair",
    "make_type1_pair",
    "make_type2_pair",
    "contains",
    "sample_members",
    "audit_tau_bounds",
    "enumerate_pairs",
    "count_pairs",
    "pair_sample",
]

# Sampled offsets are scaled into [0, 1 - 2^-30) so that rounding in the
# member formulas cannot push a sample onto the excluded upper boundary.
OPEN_SCALE = 1.0 - 2.0**-30

DELTA_MIN = 2.0**-20


def is_dyadic(x) -> bool:
    """True iff x is a (positive) power of two."""
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        return False
    return math.frexp(x)[0] == 0.5


def _require_dyadic(**kwargs):
    for name, value in kwargs.items():
        if not is_dyadic(value):
            raise ValueError(f"{name} must be a positive power of two, got {value}")


@dataclass(frozen=True)
class DyadicInterval:
    """Half-open dyadic interval [j*rho, j*rho + rho)."""

    j: int
    rho: float

    def __post_init__(self):
        _require_dyadic(rho=self.rho)

    @property
    def left(self) -> float:
        return self.j * self.rho

    @property
    def right(self) -> float:
        return self.j * self.rho + self.rho

    def contains(self, y: float) -> bool:
        return self.left <= y < self.right

    def parent(self) -> "DyadicInterval":
        # floor division also handles negative indices correctly
        return DyadicInterval(self.j // 2, 2.0 * self.rho)


@dataclass(frozen=True)
class Strip:
    """Horizontal strip [-1,1] x I inside Q."""

    interval: DyadicInterval

    @property
    def rho(self) -> float:
        return self.interval.rho

    @property
    def j(self) -> int:
        return self.interval.j

    def contains(self, z) -> bool:
        x, y = z[0], z[1]
        return -1.0 <= x <= 1.0 and self.interval.contains(y)


def related_intervals(J: DyadicInterval, Jp: DyadicInterval) -> bool:
    """Parents adjacent, intervals themselves not adjacent (and not equal)."""
    if J.rho != Jp.rho:
        raise ValueError("related_intervals needs intervals of equal scale")
    parents_adjacent = abs(J.parent().j - Jp.parent().j) == 1
    not_adjacent = abs(J.j - Jp.j) >= 2
    return parents_adjacent and not_adjacent


def admissible_strip_pairs(rho, C0) -> list:
    """All admissible strip pairs at scale rho inside Q.

    Each pair of related intervals of length rho*C0/8 is subdivided into C0/8
    subintervals of length rho; every subinterval pair is emitted.  Emitted
    index offsets satisfy C0/8 < |j2 - j1| < C0/2, and the products over all
    dyadic rho tile {y1 != y2} within Q x Q exactly once.
    """
    rho, C0 = float(rho), float(C0)
    _require_dyadic(rho=rho, C0=C0)
    if C0 < 16:
        raise ValueError("C0 must be >= 16")
    if rho > 4.0 / C0:
        raise ValueError("rho must be <= 4/C0")
    sub = int(C0) // 8
    big = rho * C0 / 8.0
    # parent-level intervals of length `big` whose subintervals meet [-1, 1]
    n_big = math.ceil(1.0 / big)
    n_sub = int(round(1.0 / rho))
    out = []
    for a in range(-n_big, n_big):
        for b in range(-n_big, n_big):
            if not related_intervals(DyadicInterval(a, big), DyadicInterval(b, big)):
                continue
            for j1 in range(a * sub, (a + 1) * sub):
                if not (-n_sub <= j1 < n_sub):
                    continue
                for j2 in range(b * sub, (b + 1) * sub):
                    if not (-n_sub <= j2 < n_sub):
                        continue
                    out.append(
                        (Strip(DyadicInterval(j1, rho)), Strip(DyadicInterval(j2, rho)))
                    )
    return out


def separated_strip_pair(j1: int, j2: int, rho, C0) -> tuple:
    """Strip pair whose members all satisfy C0*rho/2 <= |y2-y1| <= C0*rho.

    Box pairs live on such strips; the first-stage tiling pairs from
    admissible_strip_pairs are closer together and never host any.
    """
    rho, C0 = float(rho), float(C0)
    _require_dyadic(rho=rho, C0=C0)
    dj = abs(j2 - j1)
    if (dj + 1) * rho > C0 * rho or (dj - 1) * rho < C0 * rho / 2.0:
        raise ValueError(
            f"|j2-j1|={dj} does not give member separation in [C0/2, C0]*rho"
        )
    return Strip(DyadicInterval(j1, rho)), Strip(DyadicInterval(j2, rho))


@dataclass(frozen=True)
class Rejected:
    """A candidate that fails one of the admissibility conditions.

    which: "admissible1" (endpoint window |t2_0 - x1_0|), "admissible2"
    (second endpoint window), or "separation" (member y-separation).
    Not a fault; the candidate is simply not an admissible pair.
    """

    which: str
    message: str


def _on_grid(value: float, step: float) -> bool:
    r = value / step
    return r == round(r)


@dataclass(frozen=True)
class AdmissiblePair:
    """One admissible box pair of type 1 or 2 at scales (rho, delta).

    Internally both types share one canonical type-1 parameter tuple
    (cx1, cy1, ct2, cy2); a type-2 pair is the type-1 pair with the roles of
    the two slots interchanged, so its public params/base points are the
    canonical ones swapped.
    """

    pair_type: int
    rho: float
    delta: float
    C0: float
    cx1: float
    cy1: float
    ct2: float
    cy2: float

    @property
    def h(self) -> float:
        """y-width of the small parallelogram."""
        return self.rho * min(1.0, self.delta)

    @property
    def g(self) -> float:
        """x-width of both boxes (and the snap grid step)."""
        return self.rho * self.rho * self.delta

    @property
    def _cbase1(self) -> tuple:
        return (self.cx1, self.cy1)

    @property
    def _cbase2(self) -> tuple:
        return (self.ct2 - self.cy2 * (self.cy2 - self.cy1), self.cy2)

    @property
    def base1(self) -> tuple:
        return self._cbase1 if self.pair_type == 1 else self._cbase2

    @property
    def base2(self) -> tuple:
        return self._cbase2 if self.pair_type == 1 else self._cbase1

    @property
    def params(self) -> dict:
        if self.pair_type == 1:
            return {"x1_0": self.cx1, "y1_0": self.cy1, "t2_0": self.ct2, "y2_0": self.cy2}
        return {"t1_0": self.ct2, "y1_0": self.cy2, "x2_0": self.cx1, "y2_0": self.cy1}

    def swapped(self) -> "AdmissiblePair":
        """The same pair viewed from the other type (slots interchanged)."""
        return AdmissiblePair(
            pair_type=3 - self.pair_type,
            rho=self.rho,
            delta=self.delta,
            C0=self.C0,
            cx1=self.cx1,
            cy1=self.cy1,
            ct2=self.ct2,
            cy2=self.cy2,
        )

    # Canonical membership predicates; vectorized over numpy inputs.
    def _in_small(self, x, y):
        dy = y - self.cy1
        u = x - self.cx1 + self.cy1 * dy
        return (0.0 <= dy) & (dy < self.h) & (0.0 <= u) & (u < self.g)

    def _in_long(self, x, y):
        dy = y - self.cy2
        u = x - self.ct2 + y * (y - self.cy1)
        return (0.0 <= dy) & (dy < self.rho) & (0.0 <= u) & (u < self.g)

    def contains_many(self, x1, y1, x2, y2):
        if self.pair_type == 1:
            return self._in_small(x1, y1) & self._in_long(x2, y2)
        return self._in_long(x1, y1) & self._in_small(x2, y2)

    def contains(self, z1, z2) -> bool:
        return bool(self.contains_many(z1[0], z1[1], z2[0], z2[1]))

    # Offset parametrizations of the two canonical boxes; offsets in [0, 1).
    def _small_member(self, u, v):
        y = self.cy1 + v * self.h
        x = self.cx1 - self.cy1 * (y - self.cy1) + u * self.g
        return x, y

    def _long_member(self, u, v):
        y = self.cy2 + v * self.rho
        x = self.ct2 - y * (y - self.cy1) + u * self.g
        return x, y

    def member_at(self, offsets) -> tuple:
        """Concrete member (z1, z2) from unit offsets (u1, v1, u2, v2)."""
        u1, v1, u2, v2 = offsets
        if self.pair_type == 1:
            m1, m2 = self._small_member(u1, v1), self._long_member(u2, v2)
        else:
            m1, m2 = self._long_member(u1, v1), self._small_member(u2, v2)
        return m1, m2

    def to_json_dict(self) -> dict:
        return {
            "type": self.pair_type,
            "rho": self.rho,
            "delta": self.delta,
            "C0": self.C0,
            "params": self.params,
            "base1": list(self.base1),
            "base2": list(self.base2),
        }


def _separation_ok(s0: float, h: float, rho: float, C0: float) -> bool:
    # Member separations range over (s0 - h, s0 + rho) resp. (|s0| - rho,
    # |s0| + h); both endpoints must stay within [C0*rho/2, C0*rho].
    if s0 > 0:
        return s0 - h >= C0 * rho / 2.0 and s0 + rho <= C0 * rho
    if s0 < 0:
        return -s0 - rho >= C0 * rho / 2.0 and -s0 + h <= C0 * rho
    return False


def _make_canonical(cx1, cy1, ct2, cy2, rho, delta, C0, pair_type):
    rho, delta, C0 = float(rho), float(delta), float(C0)
    _require_dyadic(rho=rho, delta=delta, C0=C0)
    cx1, cy1, ct2, cy2 = float(cx1), float(cy1), float(ct2), float(cy2)
    h = rho * min(1.0, delta)
    g = rho * rho * delta
    if not _on_grid(cy1, h):
        raise ValueError(f"y-parameter {cy1} is not a multiple of {h}")
    if not _on_grid(cy2, rho):
        raise ValueError(f"y-parameter {cy2} is not a multiple of {rho}")
    for v in (cx1, ct2):
        if not _on_grid(v, g):
            raise ValueError(f"x-parameter {v} is not a multiple of {g}")

    if not _separation_ok(cy2 - cy1, h, rho, C0):
        return Rejected(
            "separation",
            f"member separation around |y2-y1|={abs(cy2 - cy1)} leaves "
            f"[{C0 * rho / 2.0}, {C0 * rho}]",
        )
    d = ct2 - cx1
    lo1, hi1 = C0 * C0 * g / 4.0, 4.0 * C0 * C0 * g
    if not lo1 <= abs(d) < hi1:
        return Rejected("admissible1", f"|t2_0 - x1_0|={abs(d)} outside [{lo1}, {hi1})")
    tau2 = d - (cy2 - cy1) ** 2
    scale2 = C0 * C0 * rho * rho * max(1.0, delta)
    lo2, hi2 = scale2 / 512.0, 5.0 * scale2
    if not lo2 <= abs(tau2) < hi2:
        return Rejected("admissible2", f"second window value {abs(tau2)} outside [{lo2}, {hi2})")
    return AdmissiblePair(
        pair_type=pair_type, rho=rho, delta=delta, C0=C0, cx1=cx1, cy1=cy1, ct2=ct2, cy2=cy2
    )


def make_type1_pair(x1_0, y1_0, t2_0, y2_0, rho, delta, C0) -> Union[AdmissiblePair, Rejected]:
    """Validate and build a type-1 pair, or report why the candidate fails.

    y1_0 must lie on the fine grid of spacing rho*(1^delta), y2_0 on the
    strip grid of spacing rho, and x1_0, t2_0 on the grid of spacing
    rho^2*delta (off-grid input is an error, not a rejection).
    """
    return _make_canonical(x1_0, y1_0, t2_0, y2_0, rho, delta, C0, pair_type=1)


def make_type2_pair(t1_0, y1_0, x2_0, y2_0, rho, delta, C0) -> Union[AdmissiblePair, Rejected]:
    """Type-2 mirror: the same pair with the roles of z1 and z2 interchanged."""
    result = _make_canonical(x2_0, y2_0, t1_0, y1_0, rho, delta, C0, pair_type=2)
    return result


def contains(pair: AdmissiblePair, z1, z2) -> bool:
    return pair.contains(z1, z2)


def sample_members(pair: AdmissiblePair, n: int, seed) -> tuple:
    """n member pairs, uniform in the parametrizing offsets.

    Returns (z1, z2) as float arrays of shape (n, 2).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    rng = np.random.default_rng(seed)
    offs = rng.random((4, n)) * OPEN_SCALE
    (x1, y1), (x2, y2) = pair.member_at(offs)
    return np.column_stack([x1, y1]), np.column_stack([x2, y2])


def audit_tau_bounds(pair: AdmissiblePair, n: int, seed) -> AuditReport:
    """Check the endpoint transversality sizes over sampled members.

    The value anchored at the small-box point must be within a factor 8 of
    C0^2*rho^2*delta, the one anchored at the long-box point within a factor
    1000 of C0^2*rho^2*(1 v delta).  For type 2 the roles are interchanged.
    """
    z1, z2 = sample_members(pair, n, seed)
    t1 = tau(z1.T, z1.T, z2.T)
    t2 = tau(z2.T, z1.T, z2.T)
    small_scale = pair.C0**2 * pair.rho**2 * pair.delta
    long_scale = pair.C0**2 * pair.rho**2 * max(1.0, pair.delta)
    if pair.pair_type == 1:
        r_small = np.abs(t1) / small_scale
        r_long = np.abs(t2) / long_scale
    else:
        r_small = np.abs(t2) / small_scale
        r_long = np.abs(t1) / long_scale

    base_tau = abs(tau(pair.base1, pair.base1, pair.base2))
    if pair.pair_type == 2:
        base_tau = abs(tau(pair.base2, pair.base1, pair.base2))
    base_ok = small_scale / 4.0 <= base_tau < 4.0 * small_scale

    bad = (r_small < 1.0 / 8.0) | (r_small > 8.0) | (r_long < 1.0 / 1000.0) | (r_long > 1000.0)
    failures = []
    for k in np.flatnonzero(bad)[:5]:
        failures.append(
            {
                "z1": list(z1[k]),
                "z2": list(z2[k]),
                "small_ratio": float(r_small[k]),
                "long_ratio": float(r_long[k]),
            }
        )
    return AuditReport(
        name="tau_bounds",
        passed=bool(base_ok and not bad.any()),
        samples=n,
        stats={
            "small_ratio_min": float(r_small.min()),
            "small_ratio_max": float(r_small.max()),
            "long_ratio_min": float(r_long.min()),
            "long_ratio_max": float(r_long.max()),
            "base_window_ok": bool(base_ok),
            "violations": int(bad.sum()),
        },
        failures=failures,
    )


def _long_box_snap_range(y1_0: float, j2: int, rho: float, g: float) -> tuple:
    """Integer snap range for the long-box x-parameter over one strip.

    The parameter is the floor-snap of x + y*(y - y1_0) with x in [-1, 1] and
    y running over the strip interval; q(y) = y*(y - y1_0) is evaluated on
    the interval endpoints and at its vertex.
    """
    ylo, yhi = j2 * rho, (j2 + 1) * rho
    cand = [ylo, yhi]
    vertex = y1_0 / 2.0
    if ylo < vertex < yhi:
        cand.append(vertex)
    q = [y * (y - y1_0) for y in cand]
    lo = -1.0 + min(q)
    hi = 1.0 + max(q)
    return math.floor(lo / g), math.floor(hi / g)


def enumerate_pairs(V1: Strip, V2: Strip, delta, C0, pair_type: int = 1) -> Iterator[AdmissiblePair]:
    """Stream every admissible pair of the given type on V1 x V2 at scale delta.

    Deterministic order: the fine y-parameter ascending, then the small-box
    x-parameter ascending, then the window offset d = (t2_0 - x1_0)/g
    ascending.  Scales below 2^-20 yield an empty stream (the fine grid would
    degenerate); rho^2*delta > 4 is an error.
    """
    delta, C0 = float(delta), float(C0)
    _require_dyadic(delta=delta, C0=C0)
    if pair_type == 2:
        for pair in enumerate_pairs(V2, V1, delta, C0, pair_type=1):
            yield pair.swapped()
        return
    if pair_type != 1:
        raise ValueError("pair_type must be 1 or 2")

    rho = V1.rho
    g = rho * rho * delta
    y2_0 = V2.j * rho
    for y1_0, d_valid, i_lo, lo, starts, _ in _type1_rows(V1, V2, delta, C0):
        counts = np.diff(starts)
        for col, c in enumerate(counts):
            i = i_lo + col
            x1_0 = i * g
            for d in d_valid[lo[col]: lo[col] + c]:
                pair = make_type1_pair(x1_0, y1_0, (i + int(d)) * g, y2_0, rho, delta, C0)
                if isinstance(pair, AdmissiblePair):
                    yield pair


def _type1_rows(V1: Strip, V2: Strip, delta: float, C0: float):
    """Index the type-1 stream without materializing it.

    One record per fine-grid row y1_0 that admits pairs:
    (y1_0, d_valid, i_lo, lo, starts, total) where for the k-th small-box
    column i = i_lo + k the valid window offsets are
    d_valid[lo[k] : lo[k] + (starts[k+1] - starts[k])], and starts is the
    cumulative pair count across columns.  Row order and intra-row order
    match enumerate_pairs exactly.
    """
    if V1.rho != V2.rho:
        raise ValueError("strips must share one scale")
    rho = V1.rho
    if rho * rho * delta > 4.0:
        raise ValueError("delta out of range: rho^2*delta must be <= 4")
    rows = []
    if delta < DELTA_MIN:
        return rows
    h = rho * min(1.0, delta)
    g = rho * rho * delta
    j1, j2 = V1.j, V2.j
    y2_0 = j2 * rho
    d_lo = int(math.ceil(C0 * C0 / 4.0))
    d_hi = int(math.ceil(4.0 * C0 * C0))
    scale2 = C0 * C0 * rho * rho * max(1.0, delta)
    d_all = np.concatenate([np.arange(-d_hi + 1, -d_lo + 1), np.arange(d_lo, d_hi)])
    for m in range(int(round(rho / h))):
        y1_0 = j1 * rho + m * h
        if not _separation_ok(y2_0 - y1_0, h, rho, C0):
            continue
        tau2 = d_all * g - (y2_0 - y1_0) ** 2
        d_valid = d_all[(np.abs(tau2) >= scale2 / 512.0) & (np.abs(tau2) < 5.0 * scale2)]
        if d_valid.size == 0:
            continue
        i_lo = math.floor((-1.0 - g - abs(y1_0) * h) / g)
        i_hi = math.floor((1.0 + abs(y1_0) * h) / g)
        t_lo, t_hi = _long_box_snap_range(y1_0, j2, rho, g)
        cols = np.arange(i_lo, i_hi + 1)
        lo = np.searchsorted(d_valid, t_lo - cols, side="left")
        hi = np.searchsorted(d_valid, t_hi - cols, side="right")
        counts = np.maximum(hi - lo, 0)
        starts = np.concatenate([[0], np.cumsum(counts)])
        if starts[-1] > 0:
            rows.append((y1_0, d_valid, i_lo, lo, starts, int(starts[-1])))
    return rows


def count_pairs(V1: Strip, V2: Strip, delta, C0, pair_type: int = 1) -> int:
    """Exact size of the admissible-pair stream, without iterating it."""
    delta, C0 = float(delta), float(C0)
    _require_dyadic(delta=delta, C0=C0)
    if pair_type == 2:
        return count_pairs(V2, V1, delta, C0, pair_type=1)
    if pair_type != 1:
        raise ValueError("pair_type must be 1 or 2")
    return sum(row[-1] for row in _type1_rows(V1, V2, delta, C0))


def pair_sample(V1: Strip, V2: Strip, delta, C0, pair_type: int = 1, max_pairs: int = 4096):
    """Materialize an evenly strided subset of the pair stream.

    Returns (pairs, total, stride): every stride-th pair of the full stream
    in enumeration order, at most ~max_pairs of them.  Deterministic; skipped
    elements are never constructed, so this stays cheap even when the full
    stream has 1e8+ members.
    """
    delta, C0 = float(delta), float(C0)
    _require_dyadic(delta=delta, C0=C0)
    if max_pairs < 1:
        raise ValueError("max_pairs must be positive")
    if pair_type == 2:
        pairs, total, stride = pair_sample(V2, V1, delta, C0, 1, max_pairs)
        return [p.swapped() for p in pairs], total, stride
    if pair_type != 1:
        raise ValueError("pair_type must be 1 or 2")

    rows = _type1_rows(V1, V2, delta, C0)
    total = sum(row[-1] for row in rows)
    if total == 0:
        return [], 0, 1
    stride = max(1, -(-total // max_pairs))
    rho = V1.rho
    g = rho * rho * delta
    y2_0 = V2.j * rho

    pairs = []
    row_iter = iter(rows)
    row = next(row_iter)
    row_base = 0
    for q in range(0, total, stride):
        while q >= row_base + row[-1]:
            row_base += row[-1]
            row = next(row_iter)
        y1_0, d_valid, i_lo, lo, starts, _ = row
        local = q - row_base
        col = int(np.searchsorted(starts, local, side="right")) - 1
        d = int(d_valid[lo[col] + (local - starts[col])])
        i = i_lo + col
        pair = make_type1_pair(i * g, y1_0, (i + d) * g, y2_0, rho, delta, C0)
        if not isinstance(pair, AdmissiblePair):
            raise RuntimeError(f"indexed candidate failed validation: {pair}")
        pairs.append(pair)
    return pairs, total, stride
