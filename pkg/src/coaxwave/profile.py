"""Coaxial step-index geometry on the unit disc.

Layer l occupies the annulus r_l <= r < r_{l+1}; a point sitting exactly on
an interface belongs to the outer layer.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import BadEndpoints, NonMonotoneRadii, OutOfBandMaterial, RangeTooSmall

CUTOFF_TOL = 1e-9


@dataclass(frozen=True)
class Deviation:
    delta: float
    delta_tilde: float


@dataclass(frozen=True)
class FiberProfile:
    radii: tuple
    eps: tuple
    mu: tuple
    eps0: float = 1.0
    mu0: float = 1.0

    def __post_init__(self):
        # normalise list input so instances hash and compare by value
        object.__setattr__(self, "radii", tuple(float(r) for r in self.radii))
        object.__setattr__(self, "eps", tuple(float(e) for e in self.eps))
        object.__setattr__(self, "mu", tuple(float(u) for u in self.mu))
        object.__setattr__(self, "eps0", float(self.eps0))
        object.__setattr__(self, "mu0", float(self.mu0))

    @property
    def n_layers(self) -> int:
        return len(self.eps)

    @classmethod
    def homogeneous(cls, eps0: float = 1.0, mu0: float = 1.0) -> "FiberProfile":
        return cls((0.0, 1.0), (eps0,), (mu0,), eps0, mu0)

    @classmethod
    def two_layer(cls, r2: float, eps1: float, mu1: float, eps0: float = 1.0,
                  mu0: float = 1.0) -> "FiberProfile":
        """Core of radius r2 with (eps1, mu1) inside a reference cladding."""
        return cls((0.0, r2, 1.0), (eps1, eps0), (mu1, mu0), eps0, mu0)

    def layer_index(self, r: float) -> int:
        """0-based layer containing r (interfaces belong to the outer layer)."""
        k = int(np.searchsorted(self.radii, r, side="right")) - 1
        return min(max(k, 0), self.n_layers - 1)

    def eps_at(self, r):
        return np.asarray(self.eps)[self._layers(r)]

    def mu_at(self, r):
        return np.asarray(self.mu)[self._layers(r)]

    def _layers(self, r):
        k = np.searchsorted(self.radii, np.asarray(r, dtype=float), side="right") - 1
        return np.clip(k, 0, self.n_layers - 1)

    def merged(self) -> "FiberProfile":
        """Same medium with adjacent layers of identical material fused."""
        radii, eps, mu = [self.radii[0]], [], []
        for l in range(self.n_layers):
            if eps and eps[-1] == self.eps[l] and mu[-1] == self.mu[l]:
                continue
            if eps:
                radii.append(self.radii[l])
            eps.append(self.eps[l])
            mu.append(self.mu[l])
        radii.append(self.radii[-1])
        return FiberProfile(tuple(radii), tuple(eps), tuple(mu), self.eps0, self.mu0)

    def scaled_contrast(self, factor: float) -> "FiberProfile":
        """Profile whose layer deviations from the reference are multiplied by factor."""
        eps = tuple(self.eps0 + factor * (e - self.eps0) for e in self.eps)
        mu = tuple(self.mu0 + factor * (u - self.mu0) for u in self.mu)
        return FiberProfile(self.radii, eps, mu, self.eps0, self.mu0)

    def to_dict(self) -> dict:
        return {"radii": list(self.radii), "eps": list(self.eps), "mu": list(self.mu),
                "eps0": self.eps0, "mu0": self.mu0}

    @classmethod
    def from_dict(cls, d: dict) -> "FiberProfile":
        return cls(tuple(d["radii"]), tuple(d["eps"]), tuple(d["mu"]),
                   d["eps0"], d["mu0"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "FiberProfile":
        return cls.from_dict(json.loads(text))


def validate(profile: FiberProfile) -> None:
    radii, n = profile.radii, profile.n_layers
    if n < 1 or len(profile.mu) != n or len(radii) != n + 1:
        raise BadEndpoints(
            f"need len(eps) = len(mu) = len(radii) - 1 >= 1, got "
            f"{len(profile.eps)}, {len(profile.mu)}, {len(radii)}")
    if radii[0] != 0.0 or radii[-1] != 1.0:
        raise BadEndpoints(f"radii must run from 0 to 1, got {radii[0]} .. {radii[-1]}")
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise NonMonotoneRadii(f"radii not strictly increasing: {radii}")
    for name, vals, ref in (("eps", profile.eps, profile.eps0),
                            ("mu", profile.mu, profile.mu0)):
        if not ref > 0:
            raise OutOfBandMaterial(f"{name}0 must be positive, got {ref}")
        for l, v in enumerate(vals):
            if not (ref / 2 <= v <= 2 * ref):
                raise OutOfBandMaterial(
                    f"{name}[{l}] = {v} outside [{ref / 2}, {2 * ref}]")


def deviation(profile: FiberProfile) -> Deviation:
    eps, mu = np.asarray(profile.eps), np.asarray(profile.mu)
    d = np.max(np.abs(profile.eps0 - eps)) + np.max(np.abs(profile.mu0 - mu))
    dt = np.max(np.abs(profile.eps0 * profile.mu0 - eps * mu))
    return Deviation(float(d), float(dt))


def is_homogeneous(profile: FiberProfile) -> bool:
    return all(e == profile.eps0 for e in profile.eps) and \
        all(u == profile.mu0 for u in profile.mu)


def _default_window(x: float, tol: float):
    m_max = int(math.floor(x + tol)) + 1
    # j_{n,m} > (n - 1/4) pi for every m >= 0, so this n covers [0, x + tol]
    n_max = int(math.ceil((x + tol) / math.pi + 0.25)) + 1
    return range(0, m_max + 1), n_max


def is_cutoff(profile: FiberProfile, omega: float, tol: float = CUTOFF_TOL,
              m_range=None, n_max: int | None = None) -> bool:
    """True when omega*sqrt(eps0*mu0) lies within tol of a transverse eigenvalue.

    The default window covers every order and index that can produce a root
    near the target.  An explicit window that cannot decide raises RangeTooSmall.
    """
    validate(profile)
    x = omega * math.sqrt(profile.eps0 * profile.mu0)
    auto_m, auto_n = _default_window(x, tol)
    ms = list(auto_m if m_range is None else m_range)
    n_max = auto_n if n_max is None else int(n_max)
    if not ms:
        raise RangeTooSmall("empty order window")
    # every eigenvalue of order m exceeds m, so orders above x + tol are irrelevant
    if max(ms) < math.floor(x - tol) and m_range is not None:
        raise RangeTooSmall(f"orders up to {math.floor(x - tol)} may hold roots near {x}")

    from .specialfn import ZeroIndex, ZeroKind, bessel_zero

    if is_homogeneous(profile):
        best = math.inf
        for m in ms:
            if m > x + tol:
                continue
            for kind in (ZeroKind.BesselJ, ZeroKind.BesselJprime):
                last = -math.inf
                for n in range(1, n_max + 1):
                    z = bessel_zero(ZeroIndex(kind, n, m))
                    best = min(best, abs(z - x))
                    last = z
                    if z > x + tol:
                        break
                if last < x - tol:
                    raise RangeTooSmall(
                        f"n <= {n_max} stops at {last:.6g} below target {x:.6g} (m={m})")
        return best < tol

    from .dispersion import BcKind, scaled_det
    from .rootfind import roots_below

    for m in ms:
        if m > x + tol:
            continue
        for bc in (BcKind.Dirichlet, BcKind.Neumann):
            roots = roots_below(profile, bc, m, x + max(tol, 1.0))
            if len(roots) > n_max and any(r < x - tol for r in roots[n_max:]):
                raise RangeTooSmall(f"n <= {n_max} does not reach target {x:.6g} (m={m})")
            if any(abs(r - x) < tol for r in roots):
                return True
            # a root closer than the bracketing resolution still shows as a zero
            if abs(scaled_det(profile, bc, m, x).value) == 0.0:
                return True
    return False
