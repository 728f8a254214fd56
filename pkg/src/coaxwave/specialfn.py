"""Cylinder and Airy functions, their zeros, the Bessel phase function and
residuals of the classical asymptotic approximants.

Point values come from scipy.special; everything built on top of them (zeros,
phases, residual envelopes, product scans) lives here.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sp
from scipy.optimize import brentq

from .errors import BelowTurningPoint, DomainError, OverflowRegime, UnsupportedIndex

M_MAX = 2048
N_ZERO_MAX = 10_000
AIRY_T_MAX = 100.0
CBRT2 = 2.0 ** (1.0 / 3.0)


@dataclass(frozen=True)
class CylPair:
    j: float
    jp: float
    y: float
    yp: float
    m: int
    x: float

    def wronskian(self) -> float:
        return self.j * self.yp - self.jp * self.y


@dataclass(frozen=True)
class AiryPair:
    ai: float
    aip: float
    bi: float
    bip: float
    t: float

    def wronskian(self) -> float:
        return self.ai * self.bip - self.aip * self.bi


class ZeroKind(enum.Enum):
    BesselJ = "J"
    BesselJprime = "Jp"
    AiryA = "Ai"
    AiryAprime = "Aip"


@dataclass(frozen=True)
class ZeroIndex:
    kind: ZeroKind
    n: int
    m: int = 0


@dataclass(frozen=True)
class PhaseEval:
    m: int
    r: float
    value: float
    derivative: float


def _check_order(m):
    if m < 0 or m > M_MAX or int(m) != m:
        raise UnsupportedIndex(f"order m={m} outside 0..{M_MAX}")


def cyl_arrays(m: int, x, allow_overflow: bool = False):
    """Vectorised (J, J', Y, Y') of order m at x > 0."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise DomainError("cylinder functions need x > 0")
    with np.errstate(over="ignore", invalid="ignore"):
        j, y = sp.jv(m, x), sp.yv(m, x)
        # F'_m = F_{m-1} - (m/x) F_m
        jp = sp.jv(m - 1, x) - (m / x) * j
        yp = sp.yv(m - 1, x) - (m / x) * y
    if not allow_overflow and not (np.all(np.isfinite(y)) and np.all(np.isfinite(yp))):
        raise OverflowRegime(f"Y_{m} overflows on part of the requested range")
    return j, jp, y, yp


def eval_cyl(m: int, x: float, allow_overflow: bool = False) -> CylPair:
    _check_order(m)
    if not x > 0:
        raise DomainError(f"x must be positive, got {x}")
    j, jp, y, yp = cyl_arrays(m, x, allow_overflow)
    return CylPair(float(j), float(jp), float(y), float(yp), int(m), float(x))


def eval_airy(t: float) -> AiryPair:
    if not abs(t) <= AIRY_T_MAX:
        raise DomainError(f"|t| must not exceed {AIRY_T_MAX}, got {t}")
    ai, aip, bi, bip = sp.airy(t)
    return AiryPair(float(ai), float(aip), float(bi), float(bip), float(t))


# ---------------------------------------------------------------- phase

def mu_m(m) -> float:
    return abs(m * m - 0.25)


def omega_m(m) -> float:
    return (2 * m + 1) * math.pi / 4


def q_nm(n, m) -> float:
    return (n + m / 2 - 0.25) * math.pi


def _phase_value(m, r):
    mu = mu_m(m)
    s = math.sqrt(mu)
    arg = min(1.0, s / r)
    return math.sqrt(max(r * r - mu, 0.0)) + s * math.asin(arg)


def phase(m: int, r: float) -> PhaseEval:
    mu = mu_m(m)
    if r < math.sqrt(mu) * (1 - 1e-15):
        raise BelowTurningPoint(f"r={r} below sqrt(mu_m)={math.sqrt(mu)}")
    r = max(r, math.sqrt(mu))
    return PhaseEval(m, r, _phase_value(m, r), math.sqrt(max(r * r - mu, 0.0)) / r)


def phase_inverse(m: int, x: float) -> float:
    """Radius r >= sqrt(mu_m) with B_m(r) = x."""
    s = math.sqrt(mu_m(m))
    b0 = _phase_value(m, s)
    if x < b0:
        raise BelowTurningPoint(f"phase value {x} below B_m(sqrt(mu_m)) = {b0}")
    if x == b0:
        return s
    # B_m(r) >= r - sqrt(mu_m), so the root sits below x + sqrt(mu_m)
    hi = x + s + 1.0
    return brentq(lambda r: _phase_value(m, r) - x, s, hi, xtol=1e-15, rtol=1e-15,
                  maxiter=200)


# ---------------------------------------------------------------- zeros

def bessel_theta(m: int, x: float) -> float:
    """Continuous argument of J_m(x) + i Y_m(x), increasing from -pi/2 at 0+.

    atan2 fixes the angle mod 2 pi; the branch is picked nearest to the
    oscillatory-zone phase B_m(x) - omega_m, which is accurate well within pi.
    """
    j, y = sp.jv(m, x), sp.yv(m, x)
    raw = math.atan2(y, j)
    s = math.sqrt(mu_m(m))
    if x <= s:
        # J > 0 > Y below the turning point
        return raw
    ref = _phase_value(m, x) - omega_m(m)
    k = round((ref - raw) / (2 * math.pi))
    return raw + 2 * math.pi * k


def _bessel_j_zero(n, m):
    target = (n - 0.5) * math.pi
    lo = float(m) if m >= 1 else 1e-3
    guess = phase_inverse(m, target + omega_m(m))
    hi = guess + 2 * math.pi
    while bessel_theta(m, hi) <= target:
        hi += 2 * math.pi
    z = brentq(lambda x: bessel_theta(m, x) - target, lo, hi, xtol=1e-15, rtol=1e-15,
               maxiter=300)
    # one Newton polish on J itself
    j, jp = sp.jv(m, z), sp.jvp(m, z)
    if jp != 0:
        z2 = z - j / jp
        if abs(sp.jv(m, z2)) < abs(j):
            z = z2
    return float(z)


def _bessel_jp_zero(n, m):
    # exactly one zero of J'_m between consecutive zeros of J_m
    # (for m = 0 the trivial zero at the origin is excluded)
    if m == 0:
        lo, hi = _bessel_j_zero(n, 0), _bessel_j_zero(n + 1, 0)
    else:
        lo = float(m) if n == 1 else _bessel_j_zero(n - 1, m)
        hi = _bessel_j_zero(n, m)
    return float(brentq(lambda x: sp.jvp(m, x), lo, hi, xtol=1e-15, rtol=1e-15,
                        maxiter=300))


def _airy_theta(x):
    ai, _, bi, _ = sp.airy(-x)
    raw = math.atan2(bi, ai)
    ref = math.pi / 4 - (2.0 / 3.0) * x ** 1.5
    k = round((ref - raw) / (2 * math.pi))
    return raw + 2 * math.pi * k


def _airy_a_zero(n):
    target = math.pi / 2 - n * math.pi
    t = 3 * math.pi / 8 * (4 * n - 1)
    hi = t ** (2.0 / 3.0) + 1.0
    while _airy_theta(hi) >= target:
        hi += 1.0
    return float(brentq(lambda x: _airy_theta(x) - target, 0.0, hi, xtol=1e-15,
                        rtol=1e-15, maxiter=300))


def _airy_ap_zero(n):
    lo = 0.0 if n == 1 else _airy_a_zero(n - 1)
    hi = _airy_a_zero(n)
    return float(brentq(lambda x: sp.airy(-x)[1], lo, hi, xtol=1e-15, rtol=1e-15,
                        maxiter=300))


@lru_cache(maxsize=None)
def _zero(kind: ZeroKind, n: int, m: int) -> float:
    if kind is ZeroKind.BesselJ:
        return _bessel_j_zero(n, m)
    if kind is ZeroKind.BesselJprime:
        return _bessel_jp_zero(n, m)
    if kind is ZeroKind.AiryA:
        return _airy_a_zero(n)
    return _airy_ap_zero(n)


def bessel_zero(idx: ZeroIndex) -> float:
    if idx.kind not in (ZeroKind.BesselJ, ZeroKind.BesselJprime):
        raise UnsupportedIndex(f"{idx.kind} is not a Bessel zero kind")
    if not 1 <= idx.n <= N_ZERO_MAX:
        raise UnsupportedIndex(f"n={idx.n} outside 1..{N_ZERO_MAX}")
    _check_order(idx.m)
    return _zero(idx.kind, int(idx.n), int(idx.m))


def airy_zero(idx: ZeroIndex) -> float:
    """Positive zero a_n of Ai(-x) (AiryA) or a'_n of Ai'(-x) (AiryAprime)."""
    if idx.kind not in (ZeroKind.AiryA, ZeroKind.AiryAprime):
        raise UnsupportedIndex(f"{idx.kind} is not an Airy zero kind")
    if not 1 <= idx.n <= N_ZERO_MAX:
        raise UnsupportedIndex(f"n={idx.n} outside 1..{N_ZERO_MAX}")
    return _zero(idx.kind, int(idx.n), 0)


def j_zero(n, m):
    return bessel_zero(ZeroIndex(ZeroKind.BesselJ, n, m))


def jp_zero(n, m):
    return bessel_zero(ZeroIndex(ZeroKind.BesselJprime, n, m))


def merged_bessel_zeros(m: int, count: int) -> list:
    """First `count` entries of the interlaced sequence of J_m and J'_m zeros.

    Entries are (value, kind) with kind 'J' or 'Jp'.
    """
    out = []
    n = 1
    while len(out) < count:
        pair = [(j_zero(n, m), "J"), (jp_zero(n, m), "Jp")]
        out.extend(sorted(pair))
        n += 1
    return out[:count]


def merged_airy_zeros(count: int) -> list:
    """a'_1, a_1, a'_2, a_2, ..."""
    out = []
    n = 1
    while len(out) < count:
        out.append(airy_zero(ZeroIndex(ZeroKind.AiryAprime, n)))
        out.append(airy_zero(ZeroIndex(ZeroKind.AiryA, n)))
        n += 1
    return out[:count]


def gap_constant() -> float:
    """Lower bound for the first element and the spacing of merged zero sequences."""
    j10 = j_zero(1, 0)
    return min(jp_zero(1, 1), 1.0, 2 * j10 / (2 * j10 + 1))


def quwong_bracket(n: int, m: int):
    """Open interval known to contain j_{n,m} for m >= 1."""
    a = airy_zero(ZeroIndex(ZeroKind.AiryA, n))
    base = m + a * m ** (1 / 3) / CBRT2
    return base, base + 3 * CBRT2 / 20 * a * a / m ** (1 / 3)


# ---------------------------------------------------------------- asymptotic residuals

@dataclass(frozen=True)
class TransitionResidual:
    m: int
    t: float
    raw: tuple      # J, Y, J', Y', J'', Y''
    scaled: tuple   # raw times m, m, m^{4/3}, m^{4/3}, m^{5/3}, m^{5/3}


def transition_residual(m: int, t: float) -> TransitionResidual:
    if m < 1:
        raise UnsupportedIndex("transition zone needs m >= 1")
    x = m + m ** (1 / 3) * t
    if x <= 0:
        raise DomainError(f"m + m^(1/3) t = {x} is not positive")
    s = -CBRT2 * t
    ai, aip, bi, bip = sp.airy(s)
    ai2, bi2 = s * ai, s * bi
    j, jp, y, yp = (float(v) for v in cyl_arrays(m, x))
    jpp = -jp / x - (1 - m * m / (x * x)) * j
    ypp = -yp / x - (1 - m * m / (x * x)) * y
    c1, c2 = CBRT2 / m ** (1 / 3), CBRT2 ** 2 / m ** (2 / 3)
    raw = (abs(j - c1 * ai), abs(y + c1 * bi), abs(jp + c2 * aip), abs(yp - c2 * bip),
           abs(jpp - 2 / m * ai2), abs(ypp + 2 / m * bi2))
    w = (m, m, m ** (4 / 3), m ** (4 / 3), m ** (5 / 3), m ** (5 / 3))
    return TransitionResidual(m, t, raw, tuple(a * b for a, b in zip(raw, w)))


@dataclass(frozen=True)
class OscillatoryResidual:
    m: int
    r: float
    residual: tuple          # J, Y, J', Y'
    bound: tuple
    ok: tuple
    scaled_residual: tuple | None = None   # amplitude-normalised forms, t_* > 1 only
    scaled_bound: tuple | None = None
    scaled_ok: tuple | None = None


def oscillatory_residual(m: int, r: float) -> OscillatoryResidual:
    mu = mu_m(m)
    if not r > math.sqrt(mu):
        raise BelowTurningPoint(f"r={r} must exceed sqrt(mu_m)={math.sqrt(mu)}")
    d = r * r - mu
    arg = _phase_value(m, r) - omega_m(m)
    c, s = math.cos(arg), math.sin(arg)
    k = math.sqrt(2 / math.pi)
    j, jp, y, yp = (float(v) for v in cyl_arrays(m, r))
    res = (abs(j - k * d ** -0.25 * c), abs(y - k * d ** -0.25 * s),
           abs(jp + k * d ** 0.25 / r * s), abs(yp - k * d ** 0.25 / r * c))
    b0 = 13 * mu / (12 * math.sqrt(2 * math.pi) * d ** 1.75)
    b1 = 5 / math.sqrt(8 * math.pi) * r / d ** 1.25 \
        + 13 * mu * r / (24 * math.sqrt(2 * math.pi) * d ** 2.75)
    bound = (b0, b0, b1, b1)
    ok = tuple(a <= b for a, b in zip(res, bound))
    out = OscillatoryResidual(m, r, res, bound, ok)
    if m >= 1:
        ts = (r - m) / m ** (1 / 3)
        if ts > 1:
            sres = (abs(d ** 0.25 * j - k * c), abs(d ** 0.25 * y - k * s),
                    abs(r * d ** -0.25 * jp + k * s), abs(r * d ** -0.25 * yp - k * c))
            bj = 13 / (12 * math.sqrt(2 * math.pi) * ts ** 1.5)
            bp = 7 / (math.sqrt(2 * math.pi) * math.sqrt(ts))
            sb = (bj, bj, bp, bp)
            out = OscillatoryResidual(m, r, res, bound, ok, sres, sb,
                                      tuple(a <= b for a, b in zip(sres, sb)))
    return out


# ---------------------------------------------------------------- product scans

class ProductKind(enum.Enum):
    JY = "JY"
    JJ = "JJ"
    JJYY = "JJYY"


@dataclass(frozen=True)
class ScanResult:
    kind: ProductKind
    value: float
    m: int
    r: float
    q: float
    rows: tuple = ()   # per-order maxima (kind, m, r, q, value)


def default_scan_grid(m: int, points: int = 1200, q: float = 1.0) -> np.ndarray:
    """Radii on (0, m/q + 10 m^(1/3) + 10], refined around r = m and r = m/q."""
    w = max(m, 1) ** (1 / 3)
    top = m / q + 10 * w + 10
    coarse = np.linspace(top / points, top, points)
    if m == 0:
        return coarse
    parts = [coarse]
    for centre in {m, m / q}:
        fine = centre + w * np.linspace(-4, 10, points // 2)
        parts.append(fine[fine > 0])
    return np.unique(np.concatenate(parts))


def _j_pair(m, x):
    j = sp.jv(m, x)
    return j, sp.jv(m - 1, x) - (m / x) * j, None, None


def product_bound_scan(kind: ProductKind, m_max: int, grid=None, q_range=(0.5, 1.0),
                       m_min: int = 0, q_samples: int = 9) -> ScanResult:
    """Maximum of the requested Bessel product over orders m_min..m_max and a radial grid.

    JY: |r J'_m(r) Y_m(r)|, JJ: |r J'_m(r) J_m(r)|,
    JJYY: |r^2 J'_m(qr) J_m(qr) Y'_m(r) Y_m(r)| with q sampled in q_range.
    Radii where Y_m overflows in double precision are left out of the scan.
    The default grid for JJYY follows the turning point m/q of J_m(qr).
    """
    kind = ProductKind(kind)
    q1, q2 = q_range
    if kind is ProductKind.JJYY and not 0 < q1 <= q2 <= 1:
        raise DomainError("need 0 < q1 <= q2 <= 1")
    qs = np.linspace(q1, q2, q_samples) if kind is ProductKind.JJYY else np.array([1.0])
    best = (-1.0, 0, 0.0, 1.0)
    rows = []
    for m in range(m_min, m_max + 1):
        if grid is not None:
            r = np.asarray(grid, dtype=float)
        elif kind is ProductKind.JJYY:
            # one grid covering the turning point of J_m(qr) for every sampled q
            w = max(m, 1) ** (1 / 3)
            patches = [default_scan_grid(m, q=qs[0])]
            patches += [m / q + w * np.linspace(-4, 10, 600) for q in qs[1:]]
            r = np.unique(np.concatenate(patches))
        else:
            r = default_scan_grid(m)
        r = r[r > 0]
        local = (-1.0, m, 0.0, 1.0)
        if kind is ProductKind.JJ:
            j, jp = sp.jv(m, r), sp.jvp(m, r)
            vals = [(np.abs(r * jp * j), 1.0)]
        else:
            with np.errstate(all="ignore"):
                j, jp, y, yp = cyl_arrays(m, r, allow_overflow=True)
            keep = np.isfinite(y) & np.isfinite(yp) & (np.abs(y) < 1e290) & (np.abs(yp) < 1e290)
            keep &= (j != 0) | (r > m)
            r, j, jp, y, yp = r[keep], j[keep], jp[keep], y[keep], yp[keep]
            if kind is ProductKind.JY:
                vals = [(np.abs(r * jp * y), 1.0)]
            else:
                vals = []
                for q in qs:
                    with np.errstate(under="ignore"):
                        jq, jpq, _, _ = _j_pair(m, q * r)
                        vals.append((np.abs(r * r * jpq * jq * yp * y), float(q)))
        for v, q in vals:
            i = int(np.argmax(v))
            if v[i] > local[0]:
                local = (float(v[i]), m, float(r[i]), q)
        rows.append((kind.value, m, local[2], local[3], local[0]))
        if local[0] > best[0]:
            best = local
    return ScanResult(kind, best[0], best[1], best[2], best[3], tuple(rows))


def small_r_limit_jy(m: int, radii=(1e-4, 1e-6, 1e-8)) -> float:
    """Estimate of lim_{r->0+} |r J'_m(r) Y_m(r)| from the smallest sample radius."""
    vals = [abs(r * float(sp.jvp(m, r)) * float(sp.yv(m, r))) for r in radii]
    return vals[-1]
