"""Numerical Fourier extension over box carriers, truncated Lp norms of
bilinear products, and the sumset / almost-orthogonality audits.

The extension of f over a carrier U is int_U f(z) exp(-i(xi1*x + xi2*y +
xi3*phi(z))) dz.  Every carrier used here is a sheared box: in coordinates
(u, y) with x = u + s(y) for a quadratic shear s, the carrier is an axis
rectangle and the Jacobian is 1.  For the indicator-type test functions the
u-integral against a pure exponential has a closed form, so quadrature is
only needed along y: Gauss-Legendre panels sized so the phase varies by at
most pi/2 per panel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import (
    OPEN_SCALE,
    AdmissiblePair,
    Strip,
    _type1_rows,
    make_type1_pair,
    separated_strip_pair,
)
from .reports import AuditReport
from .surface import BASE, PhaseFamily, phase_eval

__all__ = [
    "Carrier",
    "TestFunction",
    "QuadratureSpec",
    "NormEstimate",
    "FrequencyField",
    "UnresolvedOscillation",
    "extend",
    "extend_points",
    "extend_grid",
    "lp_norm",
    "bilinear_field",
    "bilinear_ratio",
    "audit_sumset_x",
    "audit_sumset_cubes",
    "sumset_cube_stability",
]


class UnresolvedOscillation(RuntimeError):
    """The phase oscillates faster than the panel budget can resolve."""


# ---------------------------------------------------------------------------
# Carriers and test functions


@dataclass(frozen=True)
class Carrier:
    """Sheared box {(u + s(y), y) : u in [u0, u0+du), y in [y0, y0+dy)}
    with s(y) = s0 + s1*y + s2*y^2; unit Jacobian, area du*dy."""

    u0: float
    du: float
    y0: float
    dy: float
    shear: tuple = (0.0, 0.0, 0.0)

    @property
    def area(self) -> float:
        return self.du * self.dy

    @classmethod
    def rectangle(cls, x0, x1, y0, y1) -> "Carrier":
        return cls(float(x0), float(x1) - float(x0), float(y0), float(y1) - float(y0))

    @classmethod
    def from_pair(cls, pair: AdmissiblePair, slot: int) -> "Carrier":
        """Box holding z1 (slot 1) or z2 (slot 2) of an admissible pair."""
        if slot not in (1, 2):
            raise ValueError("slot must be 1 or 2")
        small = (slot == 1) == (pair.pair_type == 1)
        if small:
            # x = u - cy1*(y - cy1), u in [cx1, cx1+g)
            return cls(pair.cx1, pair.g, pair.cy1, pair.h,
                       (pair.cy1 * pair.cy1, -pair.cy1, 0.0))
        # x = u - y*(y - cy1), u in [ct2, ct2+g)
        return cls(pair.ct2, pair.g, pair.cy2, pair.rho, (0.0, pair.cy1, -1.0))

    @classmethod
    def from_prototype(cls, scene, slot: int) -> "Carrier":
        """Boxes of a prototype scene: slot 1 the small rectangle, slot 2
        the curved box {0 <= y-b < c0, 0 <= x+y^2-a < c0^2 delta}."""
        if slot == 1:
            return cls(0.0, scene.c0 * scene.c0 * scene.delta, 0.0, scene.c0 * scene.delta)
        if slot == 2:
            return cls(scene.a, scene.c0 * scene.c0 * scene.delta, scene.b, scene.c0,
                       (0.0, 0.0, -1.0))
        raise ValueError("slot must be 1 or 2")

    def x_of(self, u, y):
        s0, s1, s2 = self.shear
        return u + s0 + s1 * y + s2 * y * y

    def contains(self, x, y):
        s0, s1, s2 = self.shear
        u = x - (s0 + s1 * y + s2 * y * y)
        return (self.u0 <= u) & (u < self.u0 + self.du) & \
            (self.y0 <= y) & (y < self.y0 + self.dy)

    def covers(self, other: "Carrier") -> bool:
        if self.shear != other.shear:
            return False
        eps = 1e-12 * max(1.0, abs(self.u0), abs(self.y0))
        return (self.u0 - eps <= other.u0
                and other.u0 + other.du <= self.u0 + self.du + eps
                and self.y0 - eps <= other.y0
                and other.y0 + other.dy <= self.y0 + self.dy + eps)

    def subbox(self, u_range: tuple, y_range: tuple) -> "Carrier":
        """Sub-carrier from fractional offsets (each in [0, 1])."""
        a, b = u_range
        c, d = y_range
        if not (0.0 <= a < b <= 1.0 and 0.0 <= c < d <= 1.0):
            raise ValueError("fractional ranges must be nondegenerate within [0, 1]")
        return Carrier(self.u0 + a * self.du, (b - a) * self.du,
                       self.y0 + c * self.dy, (d - c) * self.dy, self.shear)


@dataclass(frozen=True)
class TestFunction:
    """amplitude * exp(i lam.z) * indicator(carrier); closed-form norms."""

    __test__ = False  # not a pytest item despite the name

    carrier: Carrier
    modulation: tuple = (0.0, 0.0)
    amplitude: complex = 1.0

    @property
    def kind(self) -> str:
        if self.modulation != (0.0, 0.0):
            return "ModulatedIndicator"
        return "Indicator"

    @classmethod
    def indicator(cls, carrier: Carrier) -> "TestFunction":
        return cls(carrier)

    @classmethod
    def modulated(cls, carrier: Carrier, lam) -> "TestFunction":
        return cls(carrier, (float(lam[0]), float(lam[1])))

    @classmethod
    def subbox_indicator(cls, carrier: Carrier, u_range, y_range) -> "TestFunction":
        return cls(carrier.subbox(u_range, y_range))

    def norm(self, q: float) -> float:
        if q < 1:
            raise ValueError("norm exponent must be >= 1")
        return abs(self.amplitude) * self.carrier.area ** (1.0 / q)


# ---------------------------------------------------------------------------
# Quadrature


@dataclass(frozen=True)
class QuadratureSpec:
    """Panel controls, frequency truncation box, and evaluation grid."""

    nodes_per_panel: int = 8
    max_panel_phase: float = math.pi / 2.0
    truncation: tuple = (2.0**10, 2.0**10, 2.0**10)
    freq_grid: tuple = (64, 64, 64)
    node_budget: int = 2**20
    refinement: int = 1

    def refine(self) -> "QuadratureSpec":
        return replace(self, refinement=2 * self.refinement)


@dataclass
class NormEstimate:
    p: float
    value: float
    truncation: tuple
    refinement_delta: float
    cells: int

    def to_json_dict(self) -> dict:
        return {
            "p": self.p,
            "value": self.value,
            "truncation": list(self.truncation),
            "refinement_delta": self.refinement_delta,
            "cells": self.cells,
        }


def _leggauss(n: int):
    return np.polynomial.legendre.leggauss(n)


def _y_panels(f: TestFunction, family: PhaseFamily, xi_max, quad: QuadratureSpec) -> int:
    """Panels needed so the phase varies <= max_panel_phase per panel."""
    car = f.carrier
    s0, s1, s2 = car.shear
    m = family.cubic_divisor
    ys = (car.y0, car.y0 + car.dy)
    # d/dy of the y-only phase block: xi1*s'(y) + xi2 + xi3*(q(y) + u_mid),
    # q(y) = s0 + 2 s1 y + (3 s2 + 1/m) y^2
    a2 = 3.0 * s2 + 1.0 / m
    cand = [abs(s0 + 2.0 * s1 * y + a2 * y * y) for y in ys]
    if a2 != 0.0 and ys[0] < -s1 / a2 < ys[1]:
        yv = -s1 / a2
        cand.append(abs(s0 + 2.0 * s1 * yv + a2 * yv * yv))
    u_mid = car.u0 + car.du / 2.0
    slope = (
        xi_max[0] * max(abs(s1 + 2.0 * s2 * y) for y in ys)
        + xi_max[1]
        + xi_max[2] * (max(cand) + abs(u_mid))
    )
    panels = max(1, math.ceil(slope * car.dy / quad.max_panel_phase)) * quad.refinement
    if panels * quad.nodes_per_panel > quad.node_budget:
        raise UnresolvedOscillation(
            f"{panels * quad.nodes_per_panel} nodes needed, budget {quad.node_budget}"
        )
    return panels


def extend_points(f: TestFunction, family: PhaseFamily, xis, quad: QuadratureSpec = QuadratureSpec()):
    """Extension of f at each row of xis (n, 3); complex array of length n.

    The u-integral of the indicator against exp(-i u (xi1 + xi3 y)) is exact;
    Gauss-Legendre panels discretize y only, with the panel count set by the
    largest |xi| in the batch (uniform across the batch for determinism).
    """
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    if xis.shape[1] != 3:
        raise ValueError("frequencies must be 3-vectors")
    car = f.carrier
    lam1, lam2 = f.modulation
    k1 = xis[:, 0] - lam1
    k2 = xis[:, 1] - lam2
    k3 = xis[:, 2]
    xi_max = (np.abs(k1).max(initial=0.0), np.abs(k2).max(initial=0.0),
              np.abs(k3).max(initial=0.0))
    panels = _y_panels(f, family, xi_max, quad)

    base, wts = _leggauss(quad.nodes_per_panel)
    width = car.dy / panels
    starts = car.y0 + width * np.arange(panels)
    y = (starts[:, None] + width / 2.0 * (base[None, :] + 1.0)).ravel()
    w = np.tile(wts * width / 2.0, panels)

    s0, s1, s2 = car.shear
    m = family.cubic_divisor
    sy = s0 + s1 * y + s2 * y * y
    hy = sy * y + y ** 3 / (3.0 * m)
    u_mid = car.u0 + car.du / 2.0

    out = np.empty(len(xis), dtype=complex)
    chunk = max(1, min(len(xis), 1 + 2**22 // max(1, y.size)))
    for lo in range(0, len(xis), chunk):
        a1 = k1[lo:lo + chunk, None]
        a2 = k2[lo:lo + chunk, None]
        a3 = k3[lo:lo + chunk, None]
        om = a1 + a3 * y[None, :]
        phase = a1 * sy[None, :] + a2 * y[None, :] + a3 * hy[None, :] + om * u_mid
        vals = np.exp(-1j * phase) * np.sinc(om * (car.du / (2.0 * math.pi)))
        out[lo:lo + chunk] = vals @ w
    return f.amplitude * car.du * out


def extend(f: TestFunction, family: PhaseFamily, xi, quad: QuadratureSpec = QuadratureSpec()) -> complex:
    return complex(extend_points(f, family, np.asarray(xi, float)[None, :], quad)[0])


# ---------------------------------------------------------------------------
# Frequency fields and norms


@dataclass
class FrequencyField:
    """Values on the midpoint grid of the truncation box."""

    axes: tuple  # three 1d arrays of midpoints
    values: np.ndarray  # shape (n1, n2, n3), complex
    truncation: tuple

    @property
    def cell_volume(self) -> float:
        vol = 1.0
        for r, ax in zip(self.truncation, self.axes):
            vol *= 2.0 * r / len(ax)
        return vol

    def to_csv(self, fh) -> int:
        fh.write("xi1,xi2,xi3,re,im\n")
        n = 0
        a1, a2, a3 = self.axes
        for i in range(len(a1)):
            for j in range(len(a2)):
                for k in range(len(a3)):
                    v = self.values[i, j, k]
                    fh.write(
                        f"{float(a1[i])!r},{float(a2[j])!r},{float(a3[k])!r},"
                        f"{float(v.real)!r},{float(v.imag)!r}\n"
                    )
                    n += 1
        return n


def _grid_axes(quad: QuadratureSpec) -> tuple:
    axes = []
    for r, n in zip(quad.truncation, quad.freq_grid):
        step = 2.0 * r / n
        axes.append(-r + step * (np.arange(n) + 0.5))
    return tuple(axes)


def extend_grid(f: TestFunction, family: PhaseFamily, quad: QuadratureSpec = QuadratureSpec()) -> FrequencyField:
    a1, a2, a3 = _grid_axes(quad)
    g1, g2, g3 = np.meshgrid(a1, a2, a3, indexing="ij")
    xis = np.column_stack([g1.ravel(), g2.ravel(), g3.ravel()])
    vals = extend_points(f, family, xis, quad).reshape(len(a1), len(a2), len(a3))
    return FrequencyField((a1, a2, a3), vals, quad.truncation)


def lp_norm(field: FrequencyField, p: float, quad: QuadratureSpec = QuadratureSpec()) -> NormEstimate:
    """Midpoint quadrature of |field|^p over the truncation box, p-th root.

    refinement_delta compares against the 2x-decimated subgrid (a shifted
    midpoint rule for the same integral), as a grid-convergence indicator.
    """
    if p < 1:
        raise ValueError("norm exponent must be >= 1")
    absv = np.abs(field.values)
    fine = float((absv ** p).sum() * field.cell_volume) ** (1.0 / p)
    coarse_vals = absv[::2, ::2, ::2]
    coarse = float((coarse_vals ** p).sum() * field.cell_volume * 8.0) ** (1.0 / p)
    delta = abs(fine - coarse) / fine if fine > 0 else 0.0
    return NormEstimate(p=p, value=fine, truncation=field.truncation,
                        refinement_delta=delta, cells=int(absv.size))


def _slot_carrier(pair, slot: int) -> Carrier:
    if isinstance(pair, AdmissiblePair):
        return Carrier.from_pair(pair, slot)
    return Carrier.from_prototype(pair, slot)


def bilinear_field(pair, f: TestFunction, g: TestFunction, family: PhaseFamily,
                   quad: QuadratureSpec = QuadratureSpec()) -> FrequencyField:
    """Pointwise product extend(f) * extend(g) on the frequency grid.

    pair may be an admissible pair or a prototype scene; f must be carried
    on its first box and g on its second.
    """
    if not _slot_carrier(pair, 1).covers(f.carrier):
        raise ValueError("f is not carried on the first box of the pair")
    if not _slot_carrier(pair, 2).covers(g.carrier):
        raise ValueError("g is not carried on the second box of the pair")
    ef = extend_grid(f, family, quad)
    eg = extend_grid(g, family, quad)
    return FrequencyField(ef.axes, ef.values * eg.values, ef.truncation)


def bilinear_ratio(pair, f: TestFunction, g: TestFunction, p: float, q: float,
                   family: PhaseFamily, quad: QuadratureSpec = QuadratureSpec()) -> float:
    """lp norm of the bilinear product over the truncation box, divided by
    the closed-form ||f||_q ||g||_q."""
    field = bilinear_field(pair, f, g, family, quad)
    return lp_norm(field, p, quad).value / (f.norm(q) * g.norm(q))


# ---------------------------------------------------------------------------
# Sumset audits


def _sample_pairs(rng, V1: Strip, V2: Strip, C0: float, delta: float, count: int,
                  x_band: bool = False) -> list:
    """count admissible pairs drawn from the enumeration index; with x_band,
    the small-box column is restricted to i in [0, 1/delta] (the N=0 band)."""
    rows = [r for r in _type1_rows(V1, V2, delta, C0) if r[-1] > 0]
    if not rows:
        raise ValueError("no admissible pairs at this scale")
    rho = V1.rho
    g = rho * rho * delta
    y2_0 = V2.j * rho
    out = []
    guard = 0
    while len(out) < count:
        guard += 1
        if guard > 200 * count + 1000:
            raise ValueError("sampling stalled; configuration too sparse")
        y1_0, d_valid, i_lo, lo, starts, total = rows[int(rng.integers(len(rows)))]
        ncols = len(starts) - 1
        if x_band:
            c_lo = max(0, -i_lo)
            c_hi = min(ncols - 1, int(math.floor(1.0 / delta)) - i_lo)
            if c_hi < c_lo:
                continue
            col = int(rng.integers(c_lo, c_hi + 1))
        else:
            col = int(rng.integers(ncols))
        c = int(starts[col + 1] - starts[col])
        if c == 0:
            continue
        d = int(d_valid[lo[col] + int(rng.integers(c))])
        i = i_lo + col
        pair = make_type1_pair(i * g, y1_0, (i + d) * g, y2_0, rho, delta, C0)
        if not isinstance(pair, AdmissiblePair):
            raise RuntimeError(f"indexed candidate failed validation: {pair}")
        out.append(pair)
    return out


def audit_sumset_x(V1: Strip, V2: Strip, C0, rho, delta, n: int, seed,
                   window_shrink: float = 1.0, members_per_pair: int = 8) -> AuditReport:
    """Coordinate sums of admissible-pair members stay in the stated bands.

    For members z1 of the small box (column i, so x1 is within [N rho^2,
    (N+1) rho^2] for N = floor(i*delta)) and z2 of the long box:
    x1+x2 must lie in 2N rho^2 +- 10 C0^2 rho^2 and y1+y2 in [0, 2 C0 rho].
    window_shrink divides both window widths (negative-control knob).
    """
    C0, rho, delta = float(C0), float(rho), float(delta)
    if V1.rho != rho or V2.rho != rho:
        raise ValueError("strips must live at the stated scale")
    separated_strip_pair(V1.j, V2.j, rho, C0)
    if delta > 0.125:
        raise ValueError("the x-sumset window applies to the curved regime delta <= 1/8")
    rng = np.random.default_rng(seed)
    n_pairs = max(1, n // members_per_pair)
    pairs = _sample_pairs(rng, V1, V2, C0, delta, n_pairs)
    g = rho * rho * delta
    x_half = 10.0 * C0 * C0 * rho * rho / window_shrink
    y_hi = 2.0 * C0 * rho / window_shrink
    failures = []
    violations = 0
    checked = 0
    max_x_off = 0.0
    max_y_sum = -math.inf
    min_y_sum = math.inf
    for pair in pairs:
        take = min(members_per_pair, n - checked)
        if take <= 0:
            break
        offs = rng.random((4, take)) * OPEN_SCALE
        (x1, y1), (x2, y2) = pair.member_at(offs)
        i = int(round(pair.cx1 / g))
        N = math.floor(i * delta)
        x_off = np.abs(x1 + x2 - 2.0 * N * rho * rho)
        y_sum = y1 + y2
        max_x_off = max(max_x_off, float(x_off.max()))
        max_y_sum = max(max_y_sum, float(y_sum.max()))
        min_y_sum = min(min_y_sum, float(y_sum.min()))
        bad = (x_off > x_half) | (y_sum < 0.0) | (y_sum > y_hi)
        violations += int(bad.sum())
        for t in np.nonzero(bad)[0]:
            if len(failures) < 5:
                failures.append({
                    "z1": [float(x1[t]), float(y1[t])],
                    "z2": [float(x2[t]), float(y2[t])],
                    "N": N,
                    "x_offset": float(x_off[t]),
                    "y_sum": float(y_sum[t]),
                })
        checked += take
    return AuditReport(
        name="sumset_x_window",
        passed=violations == 0,
        samples=checked,
        stats={
            "delta": delta,
            "violations": violations,
            "x_window_halfwidth": x_half,
            "y_window": [0.0, y_hi],
            "max_x_offset": max_x_off,
            "y_sum_range": [min_y_sum, max_y_sum],
        },
        failures=failures,
    )


def audit_sumset_cubes(V1: Strip, V2: Strip, C0, rho, delta, n: int, seed,
                       side_factor: float = 4.0, members_per_tuple: int = 4,
                       multiplicity_points: int = 4096) -> AuditReport:
    """Anisotropically rescaled 3d surface sums stay in small cubes.

    Tuples (i, i', j, k) index an admissible pair in the N=0 column band
    together with a y-slab of the long box of width rho*delta.  Each sampled
    surface sum (z1, phi(z1)) + (z2, phi(z2)), after the inverse dilation
    (x/rho^2, y/rho, z/rho^3), must land within the cube of side
    side_factor*delta centered at the image of the base sum of its tuple.
    The overlap multiplicity of these cubes at sampled points is recorded
    along with the smallest enclosing side actually observed.
    """
    C0, rho, delta = float(C0), float(rho), float(delta)
    if V1.rho != rho or V2.rho != rho:
        raise ValueError("strips must live at the stated scale")
    separated_strip_pair(V1.j, V2.j, rho, C0)
    if not 0.0 < delta <= 0.5:
        raise ValueError("slab decomposition needs delta <= 1/2")
    rng = np.random.default_rng(seed)
    n_tuples = max(1, n // members_per_tuple)
    pairs = _sample_pairs(rng, V1, V2, C0, delta, n_tuples, x_band=True)
    g = rho * rho * delta
    slab = rho * delta
    slabs_per_box = int(round(1.0 / delta))
    half = side_factor * delta / 2.0

    centers = []
    points = []
    failures = []
    violations = 0
    checked = 0
    max_off = 0.0
    seen = set()
    for pair in pairs:
        k0 = int(round(pair.cy2 / slab))
        k = k0 + int(rng.integers(slabs_per_box))
        y2k = k * slab
        z2k = (pair.ct2 - y2k * (y2k - pair.cy1), y2k)
        base_sum = (
            pair.cx1 + z2k[0],
            pair.cy1 + y2k,
            float(phase_eval(BASE, (pair.cx1, pair.cy1)) + phase_eval(BASE, z2k)),
        )
        center = (base_sum[0] / rho**2, base_sum[1] / rho, base_sum[2] / rho**3)
        key = (pair.cx1, pair.cy1, pair.ct2, k)
        if key not in seen:
            seen.add(key)
            centers.append(center)

        take = min(members_per_tuple, n - checked)
        if take <= 0:
            break
        offs = rng.random((4, take)) * OPEN_SCALE
        y1 = pair.cy1 + offs[1] * pair.h
        x1 = pair.cx1 - pair.cy1 * (y1 - pair.cy1) + offs[0] * pair.g
        y2 = y2k + offs[3] * slab
        x2 = pair.ct2 - y2 * (y2 - pair.cy1) + offs[2] * pair.g
        wx = (x1 + x2) / rho**2
        wy = (y1 + y2) / rho
        wz = (phase_eval(BASE, (x1, y1)) + phase_eval(BASE, (x2, y2))) / rho**3
        off = np.maximum.reduce([
            np.abs(wx - center[0]),
            np.abs(wy - center[1]),
            np.abs(wz - center[2]),
        ])
        max_off = max(max_off, float(off.max()))
        bad = off > half + 1e-12
        violations += int(bad.sum())
        for t in np.nonzero(bad)[0]:
            if len(failures) < 5:
                failures.append({
                    "z1": [float(x1[t]), float(y1[t])],
                    "z2": [float(x2[t]), float(y2[t])],
                    "offset_over_delta": float(off[t] / delta),
                })
        if len(points) * members_per_tuple < multiplicity_points:
            points.append(np.stack([wx, wy, wz], axis=1))
        checked += take

    pts = np.concatenate(points, axis=0)[:multiplicity_points]
    ctr = np.asarray(centers)
    mult = np.zeros(len(pts), dtype=np.int64)
    for lo in range(0, len(ctr), 2048):
        blk = ctr[lo:lo + 2048]
        inside = (np.abs(pts[:, None, :] - blk[None, :, :]) <= half + 1e-12).all(axis=2)
        mult += inside.sum(axis=1)
    return AuditReport(
        name="sumset_cubes",
        passed=violations == 0,
        samples=checked,
        stats={
            "delta": delta,
            "cube_side": side_factor * delta,
            "violations": violations,
            "tuples": len(seen),
            "max_offset_over_delta": max_off / delta,
            "min_enclosing_side_over_delta": 2.0 * max_off / delta,
            "max_multiplicity": int(mult.max()),
            "mean_multiplicity": float(mult.mean()),
        },
        failures=failures,
    )


def sumset_cube_stability(V1: Strip, V2: Strip, C0, rho, deltas, n: int, seed,
                          side_factor: float = 4.0) -> AuditReport:
    """Cube audit across a scale grid: containment everywhere and overlap
    multiplicity varying by at most a factor 2 across the grid."""
    reports = [
        audit_sumset_cubes(V1, V2, C0, rho, d, n, np.random.default_rng([seed, k]).integers(2**31),
                           side_factor=side_factor)
        for k, d in enumerate(deltas)
    ]
    mults = [r.stats["max_multiplicity"] for r in reports]
    contained = all(r.passed for r in reports)
    stable = max(mults) <= 2 * max(1, min(mults))
    return AuditReport(
        name="sumset_cube_stability",
        passed=contained and stable,
        samples=sum(r.samples for r in reports),
        stats={
            "deltas": [float(d) for d in deltas],
            "max_multiplicities": mults,
            "containment_all": contained,
            "multiplicity_stable": stable,
            "per_delta": [r.to_json_dict() for r in reports],
        },
        failures=[f for r in reports for f in r.failures][:5],
    )
