"""Layer coefficients, modal fields, norms and interface traces.

Fields carry an implicit angular factor e^{i m theta}.  Transverse vectors
are stored in polar components (F_r, F_theta).  Norms integrate that factor
over the full circle (the 2 pi is folded into every norm and trace).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special as sp

from .dispersion import BcKind, DispersionMatrix, assemble, coefficient, layer_ratios
from .errors import (AxisNormalizationFailed, CutoffCollision, QuadratureDisagreement,
                     RankDeficiencySurprise)
from .profile import FiberProfile, deviation
from .rootfind import RootCertificate

RANK_TOL = 1e-10
AXIS_TOL = 1e-8


@dataclass(frozen=True)
class LayerCoefficients:
    bc: BcKind
    m: int
    nu: float
    radii: tuple
    a: tuple            # a_1 .. a_N
    b: tuple            # b_2 .. b_N

    def pairs(self):
        """(a_l, b_l) per layer with b_1 = 0."""
        return [(self.a[0], 0.0)] + list(zip(self.a[1:], self.b))

    def vector(self) -> np.ndarray:
        v = [self.a[0]]
        for a, b in zip(self.a[1:], self.b):
            v += [a, b]
        return np.array(v)

    def scaled(self, c: float) -> "LayerCoefficients":
        return LayerCoefficients(self.bc, self.m, self.nu, self.radii,
                                 tuple(c * x for x in self.a), tuple(c * x for x in self.b))


def _from_vector(bc, m, nu, radii, v) -> LayerCoefficients:
    a = (v[0],) + tuple(v[1::2])
    b = tuple(v[2::2])
    return LayerCoefficients(BcKind(bc), int(m), float(nu), tuple(radii),
                             tuple(float(x) for x in a), tuple(float(x) for x in b))


def nullspace_coeffs(matrix: DispersionMatrix, radii) -> LayerCoefficients:
    """Null vector of the transmission matrix at a root, normalised to a_N = 1.

    Columns are equilibrated before the SVD so that the large Y entries near
    the axis do not swamp the small J entries.
    """
    a = matrix.entries
    scale = np.max(np.abs(a), axis=0)
    scale[scale == 0] = 1.0
    _, s, vt = np.linalg.svd(a / scale)
    if s.size > 1 and s[-2] < RANK_TOL * s[0]:
        raise RankDeficiencySurprise(
            f"two small singular values {s[-2]:.3g}, {s[-1]:.3g} (m={matrix.m})")
    v = vt[-1] / scale
    v = v / np.max(np.abs(v))
    if abs(v[-2]) < AXIS_TOL:
        raise AxisNormalizationFailed(f"a_N = {v[-2]:.3g} is negligible (m={matrix.m})")
    v = v / v[-2]
    return _from_vector(matrix.bc, matrix.m, matrix.nu, radii, v)


def transfer_coeffs(profile: FiberProfile, bc: BcKind, m: int, nu: float,
                    normalize: bool = True) -> LayerCoefficients:
    """Coefficients by propagating (a_1, b_1) = (1, 0) outward through each interface.

    Continuity of u and of sigma u' gives a 2x2 system per interface whose
    inverse follows from the cylinder Wronskian J Y' - J' Y = 2 / (pi x).
    """
    bc = BcKind(bc)
    ratios = layer_ratios(profile, bc)
    pairs = [(1.0, 0.0)]
    for k in range(2, profile.n_layers + 1):
        x = nu * profile.radii[k - 1]
        j, jp, y, yp = (float(sp.jv(m, x)), float(sp.jvp(m, x)),
                        float(sp.yv(m, x)), float(sp.yvp(m, x)))
        a0, b0 = pairs[-1]
        u = a0 * j + b0 * y
        du = ratios[k - 2] * (a0 * jp + b0 * yp)
        s = math.pi * x / 2
        pairs.append((s * (yp * u - y * du), s * (j * du - jp * u)))
    c = 1.0
    if normalize:
        aN = pairs[-1][0]
        if abs(aN) < AXIS_TOL * max(abs(p) for pr in pairs for p in pr):
            raise AxisNormalizationFailed(f"a_N = {aN:.3g} is negligible (m={m})")
        c = 1.0 / aN
    return LayerCoefficients(bc, int(m), float(nu), profile.radii,
                             tuple(c * p[0] for p in pairs), tuple(c * p[1] for p in pairs[1:]))


def coefficients(profile: FiberProfile, bc: BcKind, m: int, nu: float) -> LayerCoefficients:
    return transfer_coeffs(profile, bc, m, nu)


def transmission_residual(profile: FiberProfile, coeffs: LayerCoefficients) -> float:
    """Largest interface-row residual relative to the row's largest term."""
    if profile.n_layers == 1:
        return 0.0
    a = assemble(profile, coeffs.bc, coeffs.m, coeffs.nu).entries
    v = coeffs.vector()
    terms = np.abs(a * v)
    res = np.abs(a @ v)[:-1]
    return float(np.max(res / np.maximum(terms.max(axis=1)[:-1], 1e-300)))


def _layer_of(radii, r):
    r = np.asarray(r, dtype=float)
    k = np.searchsorted(radii, r, side="right") - 1
    return np.clip(k, 0, len(radii) - 2)


def radial_parts(coeffs: LayerCoefficients, r, derivs: int = 2):
    """u, u', u'' of the scalar potential at radii r (outer-layer convention)."""
    r = np.atleast_1d(np.asarray(r, dtype=float))
    nu, m = coeffs.nu, coeffs.m
    lay = _layer_of(coeffs.radii, r)
    pairs = np.array(coeffs.pairs())
    a, b = pairs[lay, 0], pairs[lay, 1]
    x = nu * r
    out = []
    for d in range(derivs + 1):
        jd = sp.jvp(m, x, d) if d else sp.jv(m, x)
        with np.errstate(all="ignore"):
            yd = sp.yvp(m, x, d) if d else sp.yv(m, x)
        # b = 0 on the axis layer; keep Y (singular at 0) out of that product
        yterm = np.where(b != 0, b * np.where(np.isfinite(yd), yd, 0.0), 0.0)
        out.append(nu ** d * (a * jd + yterm))
    return out


def radial_profile(coeffs: LayerCoefficients, r):
    u = radial_parts(coeffs, r, 0)[0]
    return float(u[0]) if np.ndim(r) == 0 else u


def _over_r(coeffs, u, r):
    """u / r with the axis limit (nonzero only for m = 1)."""
    with np.errstate(all="ignore"):
        q = u / np.where(r > 0, r, 1.0)
    if np.any(r == 0):
        lim = coeffs.a[0] * coeffs.nu / 2 if coeffs.m == 1 else 0.0
        q = np.where(r == 0, lim, q)
    return q


@dataclass(frozen=True)
class ModeField:
    kind: str               # "TE" or "TM"
    m: int
    n: int
    nu: float
    omega: float
    branch: int             # +1 or -1
    alpha: complex          # alpha of this branch
    coeffs: LayerCoefficients
    profile: FiberProfile
    hybrid_approx: bool
    scale: float = 1.0
    residual: float = math.nan

    @property
    def beta(self) -> complex:
        return 1j * self.alpha

    @property
    def bc(self) -> BcKind:
        return self.coeffs.bc

    def with_scale(self, c: float) -> "ModeField":
        return ModeField(self.kind, self.m, self.n, self.nu, self.omega, self.branch,
                         self.alpha, self.coeffs, self.profile, self.hybrid_approx,
                         self.scale * c, self.residual)

    def components(self, r) -> dict:
        """Radial parts of E_r, E_theta, E_z, H_r, H_theta, H_z at radii r."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        u, du, _ = radial_parts(self.coeffs, r)
        return self._fields(r, u, du)

    def _fields(self, r, u, du):
        p, m, w, nu2 = self.profile, self.m, self.omega, self.nu ** 2
        eps, mu = p.eps_at(r), p.mu_at(r)
        s, c = self.branch, self.scale
        a_plus = self.alpha * s
        im_r = 1j * m * _over_r(self.coeffs, u, r)
        zero = np.zeros_like(r, dtype=complex)
        if self.kind == "TM":
            g = -a_plus / nu2
            h = w * w * p.eps0 * p.mu0 / (nu2 * 1j * w * mu)
            f = {"E_r": g * du, "E_theta": g * im_r, "E_z": s * u + 0j,
                 "H_r": s * (h * im_r), "H_theta": s * (h * -du), "H_z": zero}
        else:
            h = 1j * a_plus / w
            f = {"E_r": mu * im_r, "E_theta": -mu * du + 0j, "E_z": zero,
                 "H_r": s * (h * du), "H_theta": s * (h * im_r), "H_z": nu2 * u / (1j * w)}
        return {k: c * v for k, v in f.items()}

    def curl_et(self, r):
        """Radial part of curl E_T."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        u, du, d2u = radial_parts(self.coeffs, r)
        p, m, nu2 = self.profile, self.m, self.nu ** 2
        if self.kind == "TM":
            return np.zeros_like(r, dtype=complex)
        mu = p.mu_at(r)
        # curl(mu Curl v) = -mu (v'' + v'/r - m^2 v / r^2) per layer
        return self.scale * (-mu * (d2u + _over_r(self.coeffs, du, r)
                                    - m * m * _over_r(self.coeffs, _over_r(self.coeffs, u, r), r))
                             + 0j)

    def sample(self, r, theta) -> dict:
        r = np.asarray(r, dtype=float)
        theta = np.asarray(theta, dtype=float)
        rr, tt = np.meshgrid(r, theta, indexing="ij")
        comp = self.components(rr.ravel())
        phase_ = np.exp(1j * self.m * tt.ravel())
        return {k: (v * phase_).reshape(rr.shape) for k, v in comp.items()}

    def maxwell_residual(self, r, theta=None) -> float:
        """Largest relative residual of the first-order system on a sample grid.

        Second radial derivatives come from scipy's derivative formulas, not
        from the Bessel equation, so the check is independent of the ODE.
        """
        r = np.atleast_1d(np.asarray(r, dtype=float))
        p, m, w = self.profile, self.m, self.omega
        eps, mu = p.eps_at(r), p.mu_at(r)
        al = self.alpha
        u, du, d2u = radial_parts(self.coeffs, r)
        F = self._fields(r, u, du)
        s, c = self.branch, self.scale
        a_plus = al * s
        ur, dur = _over_r(self.coeffs, u, r), _over_r(self.coeffs, du, r)
        # radial derivatives of the components that get differentiated
        if self.kind == "TM":
            h = w * w * p.eps0 * p.mu0 / (self.nu ** 2 * 1j * w * mu)
            dEz = c * s * du
            dHz = np.zeros_like(r, dtype=complex)
            dHth = c * s * h * -d2u
            dEth = c * (-a_plus / self.nu ** 2) * 1j * m * (dur - _over_r(self.coeffs, ur, r))
        else:
            h = 1j * a_plus / w
            dEz = np.zeros_like(r, dtype=complex)
            dHz = c * self.nu ** 2 * du / (1j * w)
            dHth = c * s * h * 1j * m * (dur - _over_r(self.coeffs, ur, r))
            dEth = c * (-mu * d2u + 0j)
        im_r = lambda v: 1j * m * _over_r(self.coeffs, v, r)
        Er, Eth, Ez, Hr, Hth, Hz = (F[k] for k in ("E_r", "E_theta", "E_z", "H_r", "H_theta", "H_z"))
        # each entry lists summands that must cancel; R(F_r, F_th) = (-F_th, F_r)
        checks = [
            # -i w eps E_T = Curl H_z - alpha R H_T
            (-1j * w * eps * Er, -im_r(Hz), al * -Hth),
            (-1j * w * eps * Eth, dHz, al * Hr),
            # -i w eps E_z = curl H_T
            (-1j * w * eps * Ez, -dHth, -_over_r(self.coeffs, Hth, r), im_r(Hr)),
            # -i w mu H_T = -Curl E_z + alpha R E_T
            (-1j * w * mu * Hr, im_r(Ez), al * Eth),
            (-1j * w * mu * Hth, -dEz, -al * Er),
            # -i w mu H_z = -curl E_T
            (-1j * w * mu * Hz, dEth, _over_r(self.coeffs, Eth, r), -im_r(Er)),
        ]
        scale = max(float(np.max(np.abs(t))) for eq in checks for t in eq)
        worst = 0.0
        for eq in checks:
            worst = max(worst, float(np.max(np.abs(sum(eq)))) / scale)
        return worst


def branch_alpha(nu: float, omega: float, eps0: float, mu0: float) -> complex:
    """alpha of the + branch: beta = i alpha = sqrt(omega^2 eps0 mu0 - nu^2) (principal root)."""
    beta = cmath.sqrt(omega * omega * eps0 * mu0 - nu * nu)
    return -1j * beta


def reconstruct_fields(profile: FiberProfile, omega: float, root: RootCertificate,
                       coeffs: LayerCoefficients | None = None, branch: int = 1,
                       check_grid: int = 64, cutoff_tol: float = 1e-12) -> ModeField:
    nu = root.value
    k2 = omega * omega * profile.eps0 * profile.mu0
    if abs(nu * nu - k2) <= cutoff_tol * max(nu * nu, 1.0):
        raise CutoffCollision(f"nu^2 = {nu * nu} equals omega^2 eps0 mu0 (m={root.m}, n={root.n})")
    if coeffs is None:
        coeffs = coefficients(profile, root.bc, root.m, nu)
    branch = 1 if branch >= 0 else -1
    alpha = branch * branch_alpha(nu, omega, profile.eps0, profile.mu0)
    kind = BcKind(root.bc).field_kind
    hybrid = deviation(profile).delta_tilde > 0
    mf = ModeField(kind, root.m, root.n, nu, omega, branch, alpha, coeffs, profile, hybrid)
    r = np.linspace(1.0 / check_grid, 1.0, check_grid)
    res = mf.maxwell_residual(r)
    return ModeField(kind, root.m, root.n, nu, omega, branch, alpha, coeffs, profile,
                     hybrid, 1.0, res)


def te_boundary_identity(mf: ModeField, r: float) -> complex:
    """n . mu^{-1} E_T minus (i m / r) psi at radius r for a TE field."""
    comp = mf.components(np.array([r]))
    mu = mf.profile.mu_at(np.array([r]))
    psi = mf.scale * radial_parts(mf.coeffs, np.array([r]), 0)[0]
    return complex((comp["E_r"] / mu - 1j * mf.m * psi / r)[0])


# ---------------------------------------------------------------- norms and traces

@dataclass(frozen=True)
class NormsTraces:
    norm_gamma: float
    trace_sigma: tuple
    ratio: float
    norm_quadrature: float = math.nan


def _cyl_combo(order, a, b, x):
    with np.errstate(all="ignore"):
        y = sp.yv(order, x)
    return a * sp.jv(order, x) + (b * y if b != 0 else 0.0)


def _layer_integral_closed(m, nu, a, b, r0, r1):
    """int_{r0}^{r1} r (a J_m(nu r) + b Y_m(nu r))^2 dr via the cylinder-function antiderivative."""
    def anti(r):
        if r == 0:
            return 0.0
        x = nu * r
        c = _cyl_combo(m, a, b, x)
        return r * r / 2 * (c * c - _cyl_combo(m - 1, a, b, x) * _cyl_combo(m + 1, a, b, x))
    return float(anti(r1) - anti(r0))


def _layer_integral_quad(m, nu, a, b, r0, r1):
    npts = 24 + int(2 * nu * (r1 - r0))
    xg, wg = np.polynomial.legendre.leggauss(npts)
    r = r0 + (r1 - r0) * (xg + 1) / 2
    c = _cyl_combo(m, a, b, nu * r)
    return float(np.sum(wg * r * c * c) * (r1 - r0) / 2)


def norms_and_traces(coeffs: LayerCoefficients, n: int, check: bool = True) -> NormsTraces:
    """L2 norm over the disc, trace norms on the interior interfaces, and the trace ratio."""
    total, total_q = 0.0, 0.0
    radii = coeffs.radii
    for l, (a, b) in enumerate(coeffs.pairs()):
        total += _layer_integral_closed(coeffs.m, coeffs.nu, a, b, radii[l], radii[l + 1])
        if check:
            total_q += _layer_integral_quad(coeffs.m, coeffs.nu, a, b, radii[l], radii[l + 1])
    norm = math.sqrt(2 * math.pi * total)
    if check:
        if abs(total - total_q) > 1e-8 * abs(total):
            raise QuadratureDisagreement(
                f"closed form {total:.15g} vs quadrature {total_q:.15g}")
        total_q = math.sqrt(2 * math.pi * total_q)
    traces = tuple(math.sqrt(2 * math.pi * rl) * abs(float(radial_profile(coeffs, np.array([rl]))[0]))
                   for rl in radii[1:-1])
    ratio = max(traces) / (n ** (1 / 6) * norm) if traces else 0.0
    return NormsTraces(norm, traces, ratio, total_q if check else math.nan)
