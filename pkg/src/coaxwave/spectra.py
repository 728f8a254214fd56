"""Wavenumbers across angular orders and the global spectral checks built on them."""
from __future__ import annotations

import cmath
import csv
import enum
import hashlib
import io
import json
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dispersion import BcKind
from .discrete_oracle import DiscreteSpectrum, RadialGrid, coupled_spectrum
from .errors import CutoffCollision, ModeTrackingLost, QuadratureUnderResolved
from .modes import ModeField, reconstruct_fields
from .profile import FiberProfile, deviation, is_cutoff, validate
from .rootfind import C_GAP, TRANSITION_T, certified_roots, roots_below
from .specialfn import CBRT2, ZeroIndex, ZeroKind, airy_zero, phase

REAL_TOL = 1e-10    # relative size of Im nu^2 still counted as rounding


class WaveClass(enum.Enum):
    propagating = "propagating"     # beta real
    evanescent = "evanescent"       # beta imaginary
    complex = "complex"


@dataclass(frozen=True)
class WaveNumber:
    m: int
    n: int
    bc: str             # "Dir", "Neu", or "hybrid" for coupled eigenvalues
    nu: float
    alpha: complex
    branch: int
    nu2: complex
    classification: WaveClass
    source: str = "root"    # "root" or "coupled"

    @property
    def beta(self) -> complex:
        return 1j * self.alpha

    def to_dict(self) -> dict:
        b = self.beta
        return {"m": self.m, "n": self.n, "bc": self.bc, "branch": self.branch,
                "nu": self.nu, "alpha": [self.alpha.real, self.alpha.imag],
                "beta": [b.real, b.imag], "class": self.classification.value,
                "source": self.source}


def make_wavenumber(m, n, bc, nu2, omega, eps0, mu0, branch=1, source="root") -> WaveNumber:
    nu2 = complex(nu2)
    k2 = omega * omega * eps0 * mu0
    real = abs(nu2.imag) <= REAL_TOL * max(abs(nu2), 1.0)
    beta = cmath.sqrt(k2 - nu2)
    if real:
        cls = WaveClass.propagating if nu2.real < k2 else WaveClass.evanescent
    else:
        cls = WaveClass.complex
    alpha = branch * (-1j * beta)
    return WaveNumber(int(m), int(n), str(bc), math.sqrt(max(nu2.real, 0.0)), alpha,
                      int(branch), nu2, cls, source)


@dataclass(frozen=True)
class GramStats:
    inner: str
    size: int
    condition: float
    min_eig: float
    max_eig: float
    surrogate: bool = False


@dataclass(frozen=True)
class StripResult:
    ok: bool
    margin: float           # smallest margin over all wavenumbers (inf when empty)
    real_bound: float
    complex_bound: float


@dataclass(frozen=True)
class SpectrumReport:
    omega: float
    profile: FiberProfile
    digest: str
    wavenumbers: tuple
    strip_ok: bool
    realness_ok: bool
    backward_free: bool
    gram_stats: GramStats | None
    strip_margin: float

    def to_dict(self) -> dict:
        gram = None if self.gram_stats is None else {
            "inner": self.gram_stats.inner, "K": self.gram_stats.size,
            "cond": self.gram_stats.condition}
        return {"omega": self.omega, "profile": self.profile.to_dict(),
                "digest": self.digest,
                "modes": [w.to_dict() for w in self.wavenumbers],
                "checks": {"strip": self.strip_ok, "strip_margin": _finite(self.strip_margin),
                           "realness": self.realness_ok, "backward": self.backward_free,
                           "gram": gram}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)


def _finite(x: float):
    return x if math.isfinite(x) else None


def profile_digest(profile: FiberProfile) -> str:
    return hashlib.sha256(json.dumps(profile.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


def root_wavenumbers(profile: FiberProfile, omega: float, m_range, n_max: int) -> list:
    out = []
    for m in m_range:
        for bc in (BcKind.Dirichlet, BcKind.Neumann):
            for c in certified_roots(profile, bc, m, n_max, with_hethcote=False):
                for br in (1, -1):
                    out.append(make_wavenumber(m, c.n, bc.value, c.value ** 2, omega,
                                               profile.eps0, profile.mu0, br))
    return out


def coupled_wavenumbers(profile: FiberProfile, omega: float, m: int, grid: RadialGrid,
                        k: int) -> tuple:
    spec = coupled_spectrum(profile, omega, m, grid, k, check_cutoff=False)
    out = []
    for n, z in enumerate(spec.eigenvalues, start=1):
        for br in (1, -1):
            out.append(make_wavenumber(m, n, "hybrid", z, omega, profile.eps0, profile.mu0,
                                       br, "coupled"))
    return out, spec


def realness(spectra, tol: float = 1e-8) -> bool:
    """|Im nu^2| <= tol |nu^2| for every eigenvalue of every spectrum."""
    for s in spectra:
        ev = s.eigenvalues
        if np.any(np.abs(ev.imag) > tol * np.abs(ev)):
            return False
    return True


def min_separation(spectrum: DiscreteSpectrum) -> float:
    """Smallest nu^2 spacing divided by c_gap * 2 nu (one is the expected floor scale)."""
    ev = np.sort(spectrum.eigenvalues.real)
    if ev.size < 2:
        return math.inf
    nu = np.sqrt(ev[:-1])
    return float(np.min(np.diff(ev) / (C_GAP * 2 * nu)))


def full_spectrum(profile: FiberProfile, omega: float, m_range, n_max: int,
                  coupled_grid: RadialGrid | None = None, gram_K: int | None = None,
                  d_omega_rel: float = 1e-4) -> SpectrumReport:
    """Wavenumbers of every certified root (both alpha branches) and the global checks.

    With coupled_grid the coupled eigenvalues of each order are added and the
    realness and backward-wave checks use them.
    """
    validate(profile)
    m_range = list(m_range)
    if m_range and is_cutoff(profile, omega):
        raise CutoffCollision(f"omega = {omega} is a cut-off frequency")
    waves = root_wavenumbers(profile, omega, m_range, n_max)
    spectra = []
    if coupled_grid is not None:
        for m in m_range:
            w, s = coupled_wavenumbers(profile, omega, m, coupled_grid, 2 * n_max)
            waves.extend(w)
            spectra.append(s)
    strip = strip_check(waves, profile, omega)
    real_ok = realness(spectra) and all(w.classification is not WaveClass.complex
                                        for w in waves)
    backward = True
    for w in waves:
        if w.branch == 1 and w.classification is WaveClass.propagating:
            res = backward_check(profile, omega, w, d_omega_rel * omega, coupled_grid)
            backward = backward and res.ratio > 0
    gram = None
    if gram_K:
        gram = gram_conditioning(lowest_modes(profile, omega, gram_K), "curl")
    return SpectrumReport(float(omega), profile, profile_digest(profile), tuple(waves),
                          strip.ok, real_ok, backward, gram, strip.margin)


def strip_bounds(profile: FiberProfile, omega: float):
    """(bound for real beta, bound on |Re beta| for non-real beta)."""
    em = np.asarray(profile.eps) * np.asarray(profile.mu)
    ref = profile.eps0 * profile.mu0
    real_b = abs(omega) * float(np.max(np.sqrt(em)))
    cplx_b = abs(omega) * float(np.max(np.abs(em - ref) / np.sqrt(em)))
    return real_b, cplx_b


def strip_check(waves, profile: FiberProfile, omega: float) -> StripResult:
    """Real beta: |beta| <= |w| max sqrt(eps mu).  Non-real beta: |Re beta| <= |w| max|eps mu - eps0 mu0|/sqrt(eps mu)."""
    if isinstance(waves, SpectrumReport):
        waves = waves.wavenumbers
    real_b, cplx_b = strip_bounds(profile, omega)
    margin = math.inf
    for w in waves:
        b = w.beta
        if w.classification is WaveClass.propagating:
            margin = min(margin, real_b - abs(b.real))
        elif w.classification is WaveClass.evanescent:
            # purely imaginary up to rounding: Re beta is zero
            margin = min(margin, cplx_b)
        else:
            margin = min(margin, cplx_b - abs(b.real))
    return StripResult(margin >= 0, margin, real_b, cplx_b)


@dataclass(frozen=True)
class BackwardResult:
    ratio: float            # (beta / omega) d beta / d omega, Richardson-extrapolated
    ratio_coarse: float     # same from the step d_omega alone
    bracket: tuple          # admissible range of ratio / (eps0 mu0)
    in_bracket: bool


def backward_bracket(beta: float, omega: float, delta_tilde: float, eps0mu0: float) -> tuple:
    d = delta_tilde
    lo = (1 - d * beta / omega) / (1 + d * omega * eps0mu0 / beta)
    hi = (1 + d * beta * eps0mu0 / omega) / (1 - d * omega * eps0mu0 / beta)
    return lo, hi


@lru_cache(maxsize=256)
def _coupled_cached(profile, omega, m, grid):
    # several modes of one order share the same shifted solves
    return coupled_spectrum(profile, omega, m, grid, None, check_cutoff=False)


def _tracked_beta(profile, omega, wave: WaveNumber, grid):
    k2 = omega * omega * profile.eps0 * profile.mu0
    if wave.source != "coupled":
        nu2 = wave.nu2.real
    else:
        spec = _coupled_cached(profile, omega, wave.m, grid)
        d = np.abs(spec.eigenvalues - wave.nu2)
        i = int(np.argmin(d))
        if d[i] > C_GAP * wave.nu:
            raise ModeTrackingLost(
                f"no eigenvalue within {C_GAP * wave.nu:.3g} of nu^2 = {wave.nu2.real:.6g}")
        nu2 = spec.eigenvalues[i].real
    if nu2 >= k2:
        raise ModeTrackingLost("mode left the propagating range")
    return math.sqrt(k2 - nu2)


def backward_check(profile: FiberProfile, omega: float, wave: WaveNumber,
                   d_omega: float | None = None, grid: RadialGrid | None = None) -> BackwardResult:
    """Central differences of beta(omega) at steps h and h/2, combined by Richardson."""
    if wave.classification is not WaveClass.propagating:
        raise ValueError("backward_check needs a real wavenumber")
    if wave.source == "coupled" and grid is None:
        raise ValueError("coupled wavenumbers need the grid they were computed on")
    h = 1e-4 * omega if d_omega is None else d_omega
    beta = abs(wave.beta.real)

    def diff(step):
        return (_tracked_beta(profile, omega + step, wave, grid)
                - _tracked_beta(profile, omega - step, wave, grid)) / (2 * step)

    d1, d2 = diff(h), diff(h / 2)
    deriv = (4 * d2 - d1) / 3
    ratio = beta / omega * deriv
    e0m0 = profile.eps0 * profile.mu0
    lo, hi = backward_bracket(beta, omega, deviation(profile).delta_tilde, e0m0)
    scaled = ratio / e0m0
    slack = 1e-6 * abs(scaled)
    return BackwardResult(ratio, beta / omega * d1, (lo, hi),
                          lo - slack <= scaled <= hi + slack)


# Gram matrices of tangential fields

def lowest_modes(profile: FiberProfile, omega: float, count: int) -> list:
    """The count transverse eigenvalues of smallest nu over m >= 0, as + branch fields."""
    cap = 8.0
    while True:
        found = []
        m = 0
        while m < cap:
            for bc in (BcKind.Dirichlet, BcKind.Neumann):
                n = len(roots_below(profile, bc, m, cap))
                if n:
                    found.extend(certified_roots(profile, bc, m, n, with_hethcote=False))
            m += 1
        if len(found) >= count:
            break
        cap *= 1.5
    found.sort(key=lambda c: (c.value, c.m, c.bc.value))
    return [reconstruct_fields(profile, omega, c, check_grid=16) for c in found[:count]]


def _quadrature(profile: FiberProfile, nodes_per_layer: int):
    x, w = np.polynomial.legendre.leggauss(nodes_per_layer)
    rs, ws = [], []
    for a, b in zip(profile.radii, profile.radii[1:]):
        rs.append(a + (b - a) * (x + 1) / 2)
        ws.append((b - a) * w / 2)
    return np.concatenate(rs), np.concatenate(ws)


def gram_matrix(modes, inner: str = "curl", quad_nodes: int = 96) -> np.ndarray:
    """Unit-diagonal Gram matrix of the tangential fields E_T.

    L2:     <mu^-1 E, E'> over the disc.
    curl:   L2 plus <mu^-1 curl E, curl E'>.
    weighted: the L2 Gram of the fields scaled by nu^(-1/2); unit normalisation
              absorbs the diagonal weight, so it is reported as a surrogate only.
    Fields of different order m are orthogonal through the angular factor.
    """
    if inner not in ("L2", "curl", "weighted"):
        raise ValueError(f"unknown inner product {inner!r}")
    modes = list(modes)
    if not modes:
        return np.zeros((0, 0))
    profile = modes[0].profile
    nu_max = max(md.nu for md in modes)
    for a, b in zip(profile.radii, profile.radii[1:]):
        oscillations = nu_max * (b - a) / (2 * math.pi)
        if quad_nodes < 8 * oscillations:
            raise QuadratureUnderResolved(
                f"{quad_nodes} nodes for {oscillations:.3g} oscillations in [{a}, {b}]")
    r, w = _quadrature(profile, quad_nodes)
    weight = 2 * math.pi * w * r / profile.mu_at(r)
    k = len(modes)
    er = np.empty((k, r.size), dtype=complex)
    et = np.empty_like(er)
    cu = np.zeros_like(er)
    for i, md in enumerate(modes):
        comp = md.components(r)
        er[i], et[i] = comp["E_r"], comp["E_theta"]
        if inner == "curl":
            cu[i] = md.curl_et(r)
    g = (er * weight) @ er.conj().T + (et * weight) @ et.conj().T
    if inner == "curl":
        g += (cu * weight) @ cu.conj().T
    ms = np.array([md.m for md in modes])
    g = np.where(ms[:, None] == ms[None, :], g, 0.0)
    if inner == "weighted":
        s = np.array([md.nu for md in modes]) ** -0.5
        g = g * s[:, None] * s[None, :]
    d = np.sqrt(np.real(np.diag(g)))
    g = g / d[:, None] / d[None, :]
    return 0.5 * (g + g.conj().T)


def gram_conditioning(modes, inner: str = "curl", quad_nodes: int = 96) -> GramStats:
    g = gram_matrix(modes, inner, quad_nodes)
    if g.size == 0:
        return GramStats(inner, 0, 1.0, 1.0, 1.0, inner == "weighted")
    lam = np.linalg.eigvalsh(g)
    lo, hi = float(lam[0]), float(lam[-1])
    cond = hi / lo if lo > 0 else math.inf
    return GramStats(inner, len(g), cond, lo, hi, inner == "weighted")


# distances to the homogeneous reference

@dataclass(frozen=True)
class PerturbationRow:
    m: int
    n: int
    bc: str
    reference: float        # homogeneous root
    value: float            # root of the layered profile
    raw: float
    phase: float            # |B_m(ref) - B_m(value)|, nan in the transition zone
    scaled: float           # raw / m^(1/3), nan for m = 0
    airy: float             # |a/2^(1/3) - (value - m)/m^(1/3)|, nan for m = 0
    zone: str


def perturbation_report(profile: FiberProfile, m_range, n_max: int,
                        t_star: float = TRANSITION_T) -> list:
    ref = FiberProfile.homogeneous(profile.eps0, profile.mu0)
    rows = []
    for m in m_range:
        for bc in (BcKind.Dirichlet, BcKind.Neumann):
            a_kind = ZeroKind.AiryA if bc is BcKind.Dirichlet else ZeroKind.AiryAprime
            hom = certified_roots(ref, bc, m, n_max, with_hethcote=False)
            lay = certified_roots(profile, bc, m, n_max, with_hethcote=False)
            for h, c in zip(hom, lay):
                edge = m + max(m, 1) ** (1 / 3) * t_star
                zone = "oscillatory" if min(h.value, c.value) > edge or m == 0 else "transition"
                ph = math.nan
                if zone == "oscillatory":
                    ph = abs(phase(m, h.value).value - phase(m, c.value).value)
                if m > 0:
                    s = m ** (1 / 3)
                    scaled = abs(h.value - c.value) / s
                    airy = abs(airy_zero(ZeroIndex(a_kind, h.n)) / CBRT2 - (c.value - m) / s)
                else:
                    scaled = airy = math.nan
                rows.append(PerturbationRow(int(m), h.n, bc.value, h.value, c.value,
                                            abs(h.value - c.value), ph, scaled, airy, zone))
    return rows


# exports

def dispersion_csv(profile: FiberProfile, omegas, m_range, n_max: int) -> str:
    """omega, m, n, bc, beta_re, beta_im for the + branch of every certified root."""
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["omega", "m", "n", "bc", "beta_re", "beta_im"])
    roots = {(m, bc): certified_roots(profile, bc, m, n_max, with_hethcote=False)
             for m in m_range for bc in (BcKind.Dirichlet, BcKind.Neumann)}
    for om in omegas:
        for (m, bc), certs in roots.items():
            for c in certs:
                w = make_wavenumber(m, c.n, bc.value, c.value ** 2, om,
                                    profile.eps0, profile.mu0)
                wr.writerow([repr(float(om)), m, c.n, bc.value,
                             repr(w.beta.real), repr(w.beta.imag)])
    return buf.getvalue()


def spectrum_csv(spectra) -> str:
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["m", "tag", "re_nu2", "im_nu2"])
    for s in spectra:
        for z in s.eigenvalues:
            wr.writerow([s.m, s.tag, repr(float(z.real)), repr(float(z.imag))])
    return buf.getvalue()
