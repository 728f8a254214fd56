"""Transmission matrices of the layered radial problems and their scaled determinants.

Unknowns are (a_1, a_2, b_2, ..., a_N, b_N) for the piecewise profile
a_l J_m(nu r) + b_l Y_m(nu r).  Each interface r_k contributes a continuity
row and a flux row weighted by sigma_{k-1}/sigma_k (sigma = eps for the
Dirichlet problem, mu for the Neumann problem); the last row imposes the
boundary condition at r = 1.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateGeometry, DivisionGuard, OverflowRegime
from .profile import FiberProfile, deviation
from .specialfn import cyl_arrays


class BcKind(enum.Enum):
    Dirichlet = "Dir"
    Neumann = "Neu"

    @property
    def field_kind(self) -> str:
        return "TM" if self is BcKind.Dirichlet else "TE"


def coefficient(profile: FiberProfile, bc: BcKind):
    return profile.eps if BcKind(bc) is BcKind.Dirichlet else profile.mu


def layer_ratios(profile: FiberProfile, bc: BcKind) -> tuple:
    """sigma_{k-1}/sigma_k for the interfaces k = 2..N."""
    s = coefficient(profile, bc)
    return tuple(s[k - 1] / s[k] for k in range(1, len(s)))


@dataclass(frozen=True)
class DispersionMatrix:
    bc: BcKind
    m: int
    nu: float
    entries: np.ndarray
    ratios: tuple


@dataclass(frozen=True)
class ScaledDet:
    bc: BcKind
    m: int
    z: float
    value: float
    main: float
    f: float
    aux: float = math.nan   # scaled determinant of the companion matrix with Y in the last row


def assemble(profile: FiberProfile, bc: BcKind, m: int, nu: float) -> DispersionMatrix:
    bc = BcKind(bc)
    n = profile.n_layers
    if n < 2:
        raise DegenerateGeometry("a single layer has no transmission matrix; use J_m or J'_m")
    ratios = layer_ratios(profile, bc)
    size = 2 * n - 1
    a = np.zeros((size, size))
    for k in range(2, n + 1):
        x = nu * profile.radii[k - 1]
        j, jp, y, yp = (float(v) for v in cyl_arrays(m, x))
        rho = ratios[k - 2]
        row = 2 * (k - 2)
        # columns of the inner layer k-1 and outer layer k
        ca_in = 0 if k == 2 else 2 * (k - 1) - 3
        ca_out = 2 * k - 3
        a[row, ca_in] = j
        a[row + 1, ca_in] = rho * jp
        if k > 2:
            a[row, ca_in + 1] = y
            a[row + 1, ca_in + 1] = rho * yp
        a[row, ca_out], a[row, ca_out + 1] = -j, -y
        a[row + 1, ca_out], a[row + 1, ca_out + 1] = -jp, -yp
    j, jp, y, yp = (float(v) for v in cyl_arrays(m, nu))
    if bc is BcKind.Dirichlet:
        a[size - 1, size - 2:] = (j, y)
    else:
        a[size - 1, size - 2:] = (jp, yp)
    return DispersionMatrix(bc, int(m), float(nu), a, ratios)


def det_scale(profile: FiberProfile, z: float) -> float:
    return math.prod(math.pi * z * r / 2 for r in profile.radii[1:-1])


def direct_scaled_det(profile: FiberProfile, bc: BcKind, m: int, z: float) -> float:
    """Scaled determinant through an LU factorisation of the full matrix."""
    if profile.n_layers == 1:
        return scaled_det(profile, bc, m, z).value
    return det_scale(profile, z) * float(np.linalg.det(assemble(profile, bc, m, z).entries))


def scaled_det_pair(profile: FiberProfile, bc: BcKind, m: int, z):
    """(scaled det A, scaled det B) at every z, by the outside-in two-term recursion.

    B is A with the last row built from Y instead of J; it only appears as
    the second state component.
    """
    bc = BcKind(bc)
    z = np.asarray(z, dtype=float)
    j, jp, y, yp = cyl_arrays(m, z)
    if bc is BcKind.Dirichlet:
        ej, ey = j.copy(), y.copy()
    else:
        ej, ey = jp.copy(), yp.copy()
    ratios = layer_ratios(profile, bc)
    for k in range(profile.n_layers, 1, -1):
        x = z * profile.radii[k - 1]
        j, jp, y, yp = cyl_arrays(m, x)
        s = math.pi * x / 2
        c = 1.0 - ratios[k - 2]
        alpha = 1 + c * s * jp * y
        beta = -c * s * j * jp
        gamma = c * s * y * yp
        delta = 1 - c * s * j * yp
        ej, ey = alpha * ej + beta * ey, gamma * ej + delta * ey
    if not (np.all(np.isfinite(ej)) and np.all(np.isfinite(ey))):
        raise OverflowRegime(f"scaled determinant not representable for m={m}")
    return ej, ey


def scaled_det_values(profile: FiberProfile, bc: BcKind, m: int, z) -> np.ndarray:
    return scaled_det_pair(profile, bc, m, z)[0]


def main_term(bc: BcKind, m: int, z):
    j, jp, _, _ = cyl_arrays(m, z)
    return j if BcKind(bc) is BcKind.Dirichlet else jp


def scaled_det(profile: FiberProfile, bc: BcKind, m: int, z: float) -> ScaledDet:
    bc = BcKind(bc)
    a, b = scaled_det_pair(profile, bc, m, z)
    main = float(main_term(bc, m, z))
    value = float(a)
    return ScaledDet(bc, int(m), float(z), value, main, value - main, float(b))


@dataclass(frozen=True)
class Envelope:
    ratio: float
    ok: bool


def residual_envelope(profile: FiberProfile, bc: BcKind, m: int, z: float,
                      constant: float = math.inf) -> Envelope:
    """|f| / (delta * max(|J|, |Y|)) with derivatives in place of values for Neumann."""
    bc = BcKind(bc)
    sd = scaled_det(profile, bc, m, z)
    d = deviation(profile).delta
    if d == 0:
        if sd.f != 0:
            raise DivisionGuard("nonzero remainder for a homogeneous profile")
        return Envelope(0.0, True)
    j, jp, y, yp = (float(v) for v in cyl_arrays(m, z))
    scale = max(abs(j), abs(y)) if bc is BcKind.Dirichlet else max(abs(jp), abs(yp))
    ratio = abs(sd.f) / (d * scale)
    return Envelope(ratio, ratio <= constant)


def envelope_scan(profile: FiberProfile, bc: BcKind, orders, z_grid) -> dict:
    """Largest envelope ratio and largest |f| over a grid of orders and arguments."""
    bc = BcKind(bc)
    z_grid = np.asarray(z_grid, dtype=float)
    d = deviation(profile).delta
    max_ratio, max_f = 0.0, 0.0
    for m in orders:
        zz = z_grid[z_grid >= max(m, 1e-3)] if m > 0 else z_grid
        if zz.size == 0:
            continue
        a, _ = scaled_det_pair(profile, bc, m, zz)
        j, jp, y, yp = cyl_arrays(m, zz)
        f = a - (j if bc is BcKind.Dirichlet else jp)
        scale = np.maximum(np.abs(j), np.abs(y)) if bc is BcKind.Dirichlet \
            else np.maximum(np.abs(jp), np.abs(yp))
        max_f = max(max_f, float(np.max(np.abs(f))))
        if d > 0:
            max_ratio = max(max_ratio, float(np.max(np.abs(f) / (d * scale))))
    return {"max_ratio": max_ratio, "max_f": max_f, "delta": d}
