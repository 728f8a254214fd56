"""Certified roots of the scaled dispersion determinants.

Roots of order m are enumerated by a sign-change scan starting at max(m, 1/2)
(a Rayleigh-quotient argument puts every transverse eigenvalue of order m
above m, and above j_{1,0}/2 for m = 0 given the factor-two material band),
refined by Brent's method and cross-checked with a scan at half the step.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import BcKind, main_term, scaled_det_values
from .errors import MissedRootSuspected, MultipleSignChanges, NoSignChange
from .profile import FiberProfile, is_homogeneous
from .specialfn import (CBRT2, ZeroIndex, ZeroKind, airy_zero, cyl_arrays, gap_constant,
                        j_zero, jp_zero, phase, phase_inverse, q_nm)

C_GAP = gap_constant()
SCAN_STEP = C_GAP / 8
TRANSITION_T = 1.0


@dataclass(frozen=True)
class Seed:
    n: int
    seed: float
    lo: float
    hi: float
    zone: str


@dataclass(frozen=True)
class RootCertificate:
    bc: BcKind
    m: int
    n: int
    value: float
    lo: float
    hi: float
    residual: float
    seed: float
    hethcote_bound: float | None = None

    def row(self) -> list:
        return [self.m, self.n, self.bc.value, self.value, self.lo, self.hi,
                self.residual, self.seed]


@dataclass(frozen=True)
class MergedSequence:
    m: int
    entries: tuple      # (value, bc, n), ascending
    min_gap: float
    first: float


@dataclass(frozen=True)
class GapReport:
    global_min_first: float
    global_min_gap: float
    argmin: tuple       # (m, position in merged sequence) of the smallest gap


def reference_zero(bc: BcKind, n: int, m: int) -> float:
    """n-th root of J_m (Dirichlet) or J'_m (Neumann, zero at the origin excluded)."""
    return j_zero(n, m) if BcKind(bc) is BcKind.Dirichlet else jp_zero(n, m)


def seeds(profile: FiberProfile, bc: BcKind, m: int, n_max: int) -> list:
    """Asymptotic root estimates with brackets of width c_gap/2."""
    bc = BcKind(bc)
    out = []
    for n in range(1, n_max + 1):
        if m == 0:
            s = q_nm(n, 0) + (0.0 if bc is BcKind.Dirichlet else math.pi / 2)
            zone = "oscillatory"
        else:
            kind = ZeroKind.AiryA if bc is BcKind.Dirichlet else ZeroKind.AiryAprime
            a = airy_zero(ZeroIndex(kind, n))
            if a / CBRT2 <= TRANSITION_T:
                s = m + m ** (1 / 3) * a / CBRT2
                zone = "transition"
            else:
                # J zeros sit near B_m = q_{n,m}, J' zeros half a period earlier
                shift = 0.0 if bc is BcKind.Dirichlet else math.pi / 2
                s = phase_inverse(m, q_nm(n, m) - shift)
                zone = "oscillatory"
        out.append(Seed(n, s, s - C_GAP / 4, s + C_GAP / 4, zone))
    return out


def _scan_start(m: int) -> float:
    return float(m) if m >= 1 else 0.5


def _grid(lo: float, hi: float, step: float) -> np.ndarray:
    k = max(int(math.ceil((hi - lo) / step)), 1)
    return np.linspace(lo, hi, k + 1)


def _sign_brackets(profile, bc, m, grid):
    v = scaled_det_values(profile, bc, m, grid)
    s = np.sign(v)
    if np.any(s == 0):
        # land exactly on a root: nudge the grid by a fraction of a step
        h = grid[1] - grid[0]
        return _sign_brackets(profile, bc, m, grid + h / 3)
    idx = np.nonzero(s[:-1] * s[1:] < 0)[0]
    return [(float(grid[i]), float(grid[i + 1])) for i in idx]


def _refine(profile, bc, m, lo, hi):
    f = lambda x: float(scaled_det_values(profile, bc, m, x))
    return brentq(f, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)


def _refine_many(profile, bc, m, brackets, tol=1e-14, max_iter=200):
    """Illinois false position on all brackets at once (one vectorised call per sweep)."""
    if not brackets:
        return []
    a = np.array([b[0] for b in brackets])
    b = np.array([b[1] for b in brackets])
    fa = scaled_det_values(profile, bc, m, a)
    fb = scaled_det_values(profile, bc, m, b)
    side = np.zeros(a.size, dtype=int)
    for _ in range(max_iter):
        width = np.abs(b - a)
        live = (width > tol * np.maximum(1.0, np.abs(b))) & (fb != 0)
        if not live.any():
            break
        c = b - fb * (b - a) / (fb - fa)
        # fall back to bisection when the secant step leaves the bracket
        bad = ~np.isfinite(c) | (c <= np.minimum(a, b)) | (c >= np.maximum(a, b))
        c = np.where(bad, 0.5 * (a + b), c)
        c = np.where(live, c, b)
        fc = np.where(live, scaled_det_values(profile, bc, m, c), fb)
        flip = live & (np.sign(fc) != np.sign(fb))
        keep = live & ~flip
        a = np.where(flip, b, a)
        fa = np.where(flip, fb, fa)
        # Illinois: halve the stale endpoint value after two retentions in a row
        side = np.where(keep, side + 1, 0)
        fa = np.where(keep & (side >= 2), fa / 2, fa)
        b = np.where(live, c, b)
        fb = np.where(live, fc, fb)
    x = np.where(np.abs(fa) < np.abs(fb), a, b)
    return [float(v) for v in x]


def roots_below(profile: FiberProfile, bc: BcKind, m: int, z_max: float,
                step: float = SCAN_STEP) -> list:
    lo = _scan_start(m)
    if z_max <= lo:
        return []
    return _refine_many(profile, bc, m, _sign_brackets(profile, bc, m, _grid(lo, z_max, step)))


def hethcote_bound(profile: FiberProfile, bc: BcKind, m: int, b: float,
                   s: float = C_GAP / 4, samples: int = 65) -> float | None:
    """Perturbation radius max|f| / min|psi'| on [b - s, b + s] around the reference zero b.

    psi is J_m (or J'_m) and f the remainder of the scaled determinant.  The
    radius is returned only when it fits inside the sampled window.
    """
    x = np.linspace(max(b - s, 1e-6), b + s, samples)
    v = scaled_det_values(profile, bc, m, x)
    psi = main_term(bc, m, x)
    tau = np.max(np.abs(v - psi))
    j, jp, _, _ = cyl_arrays(m, x)
    if BcKind(bc) is BcKind.Dirichlet:
        dpsi = jp
    else:
        dpsi = -jp / x - (1 - m * m / (x * x)) * j
    dmin = float(np.min(np.abs(dpsi)))
    if dmin == 0:
        return None
    bound = float(tau / dmin)
    return bound if bound <= s else None


def certify_root(profile: FiberProfile, bc: BcKind, m: int, n: int, seed: float,
                 bracket) -> RootCertificate:
    bc = BcKind(bc)
    lo, hi = bracket
    grid = _grid(lo, hi, SCAN_STEP)
    br = _sign_brackets(profile, bc, m, grid)
    if not br:
        raise NoSignChange(f"no sign change in [{lo}, {hi}] (bc={bc.value}, m={m}, n={n})")
    if len(br) > 1:
        raise MultipleSignChanges(
            f"{len(br)} sign changes in [{lo}, {hi}] (bc={bc.value}, m={m}, n={n})", br)
    a, b = br[0]
    value = _refine(profile, bc, m, a, b)
    residual = abs(float(scaled_det_values(profile, bc, m, value)))
    hb = hethcote_bound(profile, bc, m, seed)
    return RootCertificate(bc, int(m), int(n), value, a, b, residual, float(seed), hb)


def certified_roots(profile: FiberProfile, bc: BcKind, m: int, n_max: int,
                    with_hethcote: bool = True) -> list:
    """First n_max roots of one scaled determinant, each with a certificate.

    Raises MissedRootSuspected when a scan at half the step counts a
    different number of sign changes.
    """
    bc = BcKind(bc)
    lo = _scan_start(m)
    ceiling = phase_inverse(m, q_nm(n_max + 2, m))
    while True:
        grid = _grid(lo, ceiling, SCAN_STEP)
        brackets = _sign_brackets(profile, bc, m, grid)
        if len(brackets) >= n_max:
            break
        ceiling += math.pi * (n_max - len(brackets) + 1)
    fine = _sign_brackets(profile, bc, m, _grid(lo, ceiling, SCAN_STEP / 2))
    if len(fine) != len(brackets):
        raise MissedRootSuspected(
            f"sign-change count {len(brackets)} vs {len(fine)} at half step "
            f"(bc={bc.value}, m={m}, ceiling={ceiling:.6g})")
    homog = is_homogeneous(profile)
    values = _refine_many(profile, bc, m, brackets[:n_max])
    residuals = np.abs(scaled_det_values(profile, bc, m, values))
    certs = []
    for n, (a, b) in enumerate(brackets[:n_max], start=1):
        value, residual = values[n - 1], float(residuals[n - 1])
        ref = reference_zero(bc, n, m)
        if homog:
            hb = abs(value - ref)
        else:
            hb = hethcote_bound(profile, bc, m, ref) if with_hethcote else None
        certs.append(RootCertificate(bc, int(m), n, value, a, b, residual, ref, hb))
    return certs


def merged_sequence(profile: FiberProfile, m: int, n_max: int,
                    with_hethcote: bool = False) -> MergedSequence:
    entries = []
    for bc in (BcKind.Dirichlet, BcKind.Neumann):
        for c in certified_roots(profile, bc, m, n_max, with_hethcote):
            entries.append((c.value, bc, c.n))
    entries.sort(key=lambda e: e[0])
    vals = np.array([e[0] for e in entries])
    gaps = np.diff(vals)
    return MergedSequence(int(m), tuple(entries),
                          float(gaps.min()) if gaps.size else math.inf, float(vals[0]))


def gap_report(sequences) -> GapReport:
    sequences = list(sequences)
    if not sequences:
        raise ValueError("gap_report needs at least one sequence")
    first = min(s.first for s in sequences)
    best, arg = math.inf, None
    for s in sequences:
        vals = np.array([e[0] for e in s.entries])
        if vals.size < 2:
            continue
        gaps = np.diff(vals)
        i = int(np.argmin(gaps))
        if gaps[i] < best:
            best, arg = float(gaps[i]), (s.m, i)
    return GapReport(first, best, arg)


def phase_distortion(profile: FiberProfile, m: int, n_max: int,
                     t_star: float = TRANSITION_T) -> float:
    """max |q_{n,m} - B_m(root)| over Dirichlet roots beyond m + m^(1/3) t_*."""
    worst = 0.0
    for c in certified_roots(profile, BcKind.Dirichlet, m, n_max, with_hethcote=False):
        if c.value > m + max(m, 1) ** (1 / 3) * t_star:
            worst = max(worst, abs(q_nm(c.n, m) - phase(m, c.value).value))
    return worst
