"""Radial finite elements for the scalar problems and for the coupled quadratic problem.

Scalar problems use continuous Lagrange elements of degree p on a grid whose
nodes contain every interface.  The weak form is

    int sigma (u' v' + m^2 u v / r^2) r dr = nu^2 int sigma u v r dr

with u(0) = 0 for m >= 1 and u(1) = 0 for the Dirichlet problem.

The coupled problem is written for E_r = i e_r, E_theta = t / r and
E_3 = i e_3 (all real), which turns the tangential curl into
(t' + m e_r) / r and the gradient of E_3 into (e_3', -m e_3).  The radial
component is discontinuous of degree p - 1, t and e_3 are continuous of
degree p; this pairing keeps the discrete gradient inside the discrete
transverse space so no spurious kernel modes appear.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .dispersion import BcKind
from .errors import CutoffCollision, GridTooCoarse, LinearizationIllConditioned
from .profile import FiberProfile, deviation, is_cutoff, validate

MIN_NODES_PER_LAYER = 16
REFINE_TOL = 1e-3


@dataclass(frozen=True)
class RadialGrid:
    nodes: tuple        # element endpoints, 0 = nodes[0] < ... < nodes[-1] = 1
    degree: int = 2

    @property
    def n_elements(self) -> int:
        return len(self.nodes) - 1

    @classmethod
    def uniform(cls, profile: FiberProfile, per_unit: int, degree: int = 2) -> "RadialGrid":
        """Each layer split into equal elements of width about 1/per_unit."""
        pts = [0.0]
        for a, b in zip(profile.radii, profile.radii[1:]):
            k = max(int(math.ceil((b - a) * per_unit)), MIN_NODES_PER_LAYER - 1)
            pts.extend(np.linspace(a, b, k + 1)[1:].tolist())
        return cls(tuple(pts), degree)

    def refined(self) -> "RadialGrid":
        x = np.asarray(self.nodes)
        mid = 0.5 * (x[1:] + x[:-1])
        return RadialGrid(tuple(np.sort(np.concatenate([x, mid])).tolist()), self.degree)

    def check(self, profile: FiberProfile) -> None:
        x = np.asarray(self.nodes)
        if x[0] != 0.0 or x[-1] != 1.0 or np.any(np.diff(x) <= 0):
            raise ValueError("grid nodes must increase from 0 to 1")
        for a, b in zip(profile.radii, profile.radii[1:]):
            if not (np.any(x == a) and np.any(x == b)):
                raise ValueError(f"interface at {a} or {b} is not a grid node")
            if np.count_nonzero((x >= a) & (x <= b)) < MIN_NODES_PER_LAYER:
                raise ValueError(f"layer [{a}, {b}] has fewer than {MIN_NODES_PER_LAYER} nodes")


@dataclass(frozen=True)
class DiscreteSpectrum:
    tag: str            # "scalar-Dir", "scalar-Neu" or "coupled"
    m: int
    eigenvalues: np.ndarray     # complex nu^2, ascending real part
    vectors: np.ndarray | None = None
    mixing: np.ndarray | None = None    # coupled only: block mixing per eigenvector
    info: dict = field(default_factory=dict)

    @property
    def nu(self) -> np.ndarray:
        return np.sqrt(self.eigenvalues.astype(complex))


# reference element helpers

def _lagrange(nodes):
    nodes = np.asarray(nodes, dtype=float)
    n = nodes.size
    coef = np.linalg.inv(np.vander(nodes, n, increasing=True))

    def val(x):
        return np.vander(np.atleast_1d(x), n, increasing=True) @ coef

    def der(x):
        v = np.vander(np.atleast_1d(x), n, increasing=True)
        d = np.zeros_like(v)
        d[:, 1:] = v[:, :-1] * np.arange(1, n)
        return d @ coef

    return val, der


def _lobatto(p: int) -> np.ndarray:
    inner = np.polynomial.legendre.Legendre.basis(p).deriv().roots() if p > 1 else []
    return np.sort((np.concatenate([[-1.0], np.real(inner), [1.0]]) + 1) / 2)


def _gauss(q: int):
    x, w = np.polynomial.legendre.leggauss(q)
    return (x + 1) / 2, w / 2


@dataclass(frozen=True)
class _Elements:
    a: np.ndarray
    h: np.ndarray
    eps: np.ndarray
    mu: np.ndarray
    r: np.ndarray       # (E, Q) quadrature radii
    w: np.ndarray       # (E, Q) physical weights
    phi: np.ndarray     # (Q, p+1) continuous basis
    dphi: np.ndarray    # (E, Q, p+1) radial derivative
    psi: np.ndarray     # (Q, p) discontinuous basis
    xi_psi: np.ndarray  # reference nodes of the discontinuous basis
    val_c: object
    der_c: object


def _elements(profile: FiberProfile, grid: RadialGrid, extra: int = 4) -> _Elements:
    grid.check(profile)
    p = grid.degree
    if p < 1:
        raise ValueError("degree must be at least 1")
    x = np.asarray(grid.nodes)
    a, h = x[:-1], np.diff(x)
    mid = a + h / 2
    xi, wq = _gauss(p + extra)
    val_c, der_c = _lagrange(_lobatto(p))
    xi_psi = _gauss(p)[0]
    val_d, _ = _lagrange(xi_psi)
    return _Elements(a, h, profile.eps_at(mid), profile.mu_at(mid),
                     a[:, None] + h[:, None] * xi[None, :], h[:, None] * wq[None, :],
                     val_c(xi), der_c(xi)[None, :, :] / h[:, None, None], val_d(xi),
                     xi_psi, val_c, der_c)


def _scatter(local, rows, cols, shape):
    """Sum element matrices local[e] into a sparse matrix."""
    e, i, j = local.shape
    r = np.broadcast_to(rows[:, :, None], (e, i, j)).ravel()
    c = np.broadcast_to(cols[:, None, :], (e, i, j)).ravel()
    return sp.coo_matrix((local.ravel(), (r, c)), shape=shape).tocsr()


def _cont_index(n_el: int, p: int) -> np.ndarray:
    return np.arange(n_el)[:, None] * p + np.arange(p + 1)[None, :]


# scalar problems

def scalar_matrices(profile: FiberProfile, bc: BcKind, m: int, grid: RadialGrid):
    """Stiffness and mass matrices on the free degrees of freedom."""
    bc = BcKind(bc)
    el = _elements(profile, grid)
    sigma = el.eps if bc is BcKind.Dirichlet else el.mu
    p, n_el = grid.degree, grid.n_elements
    wr = el.w * el.r
    w_r = el.w / el.r
    k_loc = np.einsum("eq,eqi,eqj->eij", wr, el.dphi, el.dphi)
    k_loc += m * m * np.einsum("eq,qi,qj->eij", w_r, el.phi, el.phi)
    m_loc = np.einsum("eq,qi,qj->eij", wr, el.phi, el.phi)
    k_loc *= sigma[:, None, None]
    m_loc *= sigma[:, None, None]
    idx = _cont_index(n_el, p)
    n = n_el * p + 1
    kk = _scatter(k_loc, idx, idx, (n, n))
    mm = _scatter(m_loc, idx, idx, (n, n))
    free = np.ones(n, dtype=bool)
    if m >= 1:
        free[0] = False
    if bc is BcKind.Dirichlet:
        free[-1] = False
    f = np.nonzero(free)[0]
    return kk[f][:, f], mm[f][:, f]


def _scalar_solve(profile, bc, m, grid, k, vectors):
    kk, mm = scalar_matrices(profile, bc, m, grid)
    dim = kk.shape[0]
    if k > dim / 4:
        raise GridTooCoarse(f"k = {k} exceeds a quarter of the dimension {dim}")
    drop = 1 if (BcKind(bc) is BcKind.Neumann and m == 0) else 0
    # shift-invert below the spectrum: K is only semidefinite for Neumann m = 0
    lam, vec = spla.eigsh(kk.tocsc(), k=k + drop, M=mm.tocsc(), sigma=-1.0, which="LM")
    order = np.argsort(lam)
    lam, vec = lam[order], vec[:, order]
    if drop:
        lam, vec = lam[1:], vec[:, 1:]
    return lam, (vec if vectors else None)


def scalar_spectrum(profile: FiberProfile, bc: BcKind, m: int, grid: RadialGrid, k: int,
                    vectors: bool = False, check: bool = True) -> DiscreteSpectrum:
    """First k eigenvalues nu^2 of the scalar problem of order m.

    With check=True the k-th eigenvalue is recomputed on the bisected grid and
    GridTooCoarse is raised when the two differ by more than REFINE_TOL relative.
    """
    bc = BcKind(bc)
    validate(profile)
    lam, vec = _scalar_solve(profile, bc, m, grid, k, vectors)
    if check:
        fine, _ = _scalar_solve(profile, bc, m, grid.refined(), k, False)
        rel = abs(lam[-1] - fine[-1]) / abs(fine[-1])
        if rel > REFINE_TOL:
            raise GridTooCoarse(f"eigenvalue {k} moves by {rel:.2e} under refinement")
    return DiscreteSpectrum(f"scalar-{bc.value}", int(m), lam.astype(complex), vec)


def richardson_order(v_h, v_h2, v_h4, ratio: float = 2.0) -> float:
    """Observed convergence order from three grids refined by a constant ratio."""
    d1, d2 = v_h - v_h2, v_h2 - v_h4
    return math.log(abs(d1 / d2)) / math.log(ratio)


def richardson_extrapolate(v_h2, v_h4, order: float, ratio: float = 2.0) -> float:
    f = ratio ** order
    return (f * v_h4 - v_h2) / (f - 1)


# coupled problem

@dataclass(frozen=True)
class CoupledMatrices:
    """Reduced blocks of the quadratic pencil; see coupled_spectrum."""
    curl: np.ndarray        # C
    mass_eps: np.ndarray    # M_eps on transverse fields
    mass_mu: np.ndarray     # M_{1/mu} on transverse fields
    coupling: np.ndarray    # G (transverse rows, e_3 columns)
    stiff3: np.ndarray      # S_3
    mass3: np.ndarray       # M_3
    grad: np.ndarray        # discrete gradient from e_3 to transverse coordinates
    l2: np.ndarray          # unweighted transverse L2 mass
    bweight: np.ndarray     # transverse mass with weight eps - eps0 mu0 / mu
    radius: np.ndarray      # node radius of each reduced transverse coordinate
    is_radial: np.ndarray   # True for e_r coordinates, False for t


def coupled_matrices(profile: FiberProfile, m: int, grid: RadialGrid) -> CoupledMatrices:
    el = _elements(profile, grid)
    p, n_el = grid.degree, grid.n_elements
    n_r = n_el * p
    n_c = n_el * p + 1
    n_e = n_r + n_c
    idx_r = np.arange(n_el)[:, None] * p + np.arange(p)[None, :]
    idx_c = n_r + _cont_index(n_el, p)
    idx_e = np.concatenate([idx_r, idx_c], axis=1)
    idx_3 = _cont_index(n_el, p)
    wr, w_r = el.w * el.r, el.w / el.r
    inv_mu = 1.0 / el.mu
    ref = profile.eps0 * profile.mu0
    q = wr.shape[1]

    # values of the transverse unknowns at the quadrature points, (E, Q, 2p+1)
    comp_r = np.zeros((n_el, q, 2 * p + 1))
    comp_c = np.zeros((n_el, q, 2 * p + 1))
    comp_r[:, :, :p] = el.psi[None]
    comp_c[:, :, p:] = el.phi[None]
    curl = np.zeros((n_el, q, 2 * p + 1))
    curl[:, :, :p] = m * el.psi[None]
    curl[:, :, p:] = el.dphi

    def tmass(weight):
        loc = np.einsum("eq,eqi,eqj->eij", wr, comp_r, comp_r)
        loc += np.einsum("eq,eqi,eqj->eij", w_r, comp_c, comp_c)
        return _scatter(loc * weight[:, None, None], idx_e, idx_e, (n_e, n_e)).toarray()

    mass_eps = tmass(el.eps)
    mass_mu = tmass(inv_mu)
    l2 = tmass(np.ones(n_el))
    bweight = tmass(el.eps - ref * inv_mu)
    c_loc = np.einsum("eq,eqi,eqj->eij", w_r, curl, curl) * inv_mu[:, None, None]
    cc = _scatter(c_loc, idx_e, idx_e, (n_e, n_e)).toarray()
    g_loc = np.einsum("eq,eqi,eqj->eij", wr, comp_r, el.dphi)
    g_loc -= m * np.einsum("eq,eqi,qj->eij", w_r, comp_c, el.phi)
    gg = _scatter(g_loc * inv_mu[:, None, None], idx_e, idx_3, (n_e, n_c)).toarray()
    s_loc = np.einsum("eq,eqi,eqj->eij", wr, el.dphi, el.dphi)
    s_loc += m * m * np.einsum("eq,qi,qj->eij", w_r, el.phi, el.phi)
    s3 = _scatter(s_loc * inv_mu[:, None, None], idx_3, idx_3, (n_c, n_c)).toarray()
    m_loc = np.einsum("eq,qi,qj->eij", wr, el.phi, el.phi) * el.eps[:, None, None]
    m3 = _scatter(m_loc, idx_3, idx_3, (n_c, n_c)).toarray()

    # discrete gradient: e_r = e_3' sampled at the discontinuous nodes, t = -m e_3
    grad = np.zeros((n_e, n_c))
    dloc = el.der_c(el.xi_psi) / el.h[:, None, None]
    for e in range(n_el):
        grad[np.ix_(idx_r[e], idx_3[e])] = dloc[e]
    grad[n_r + np.arange(n_c), np.arange(n_c)] = -m

    # essential conditions: t(0) = t(1) = 0, e_3(1) = 0, e_3(0) = 0 for m >= 1
    free_e = np.ones(n_e, dtype=bool)
    free_e[[n_r, n_e - 1]] = False
    free_3 = np.ones(n_c, dtype=bool)
    free_3[-1] = False
    if m >= 1:
        free_3[0] = False
    fe, f3 = np.nonzero(free_e)[0], np.nonzero(free_3)[0]

    # axis condition t'(0) + m e_r(0) = 0 keeps the curl square integrable
    row = np.zeros(n_e)
    row[idx_r[0]] = m * _lagrange(el.xi_psi)[0](0.0)[0]
    row[idx_c[0]] = el.der_c(0.0)[0] / el.h[0]
    row = row[fe]
    pivot = int(np.nonzero(fe == idx_c[0][1])[0][0])
    t = np.delete(np.eye(fe.size), pivot, axis=1)
    t[pivot] = -np.delete(row, pivot) / row[pivot]

    def red(a):
        return t.T @ a[np.ix_(fe, fe)] @ t

    grad_red = np.delete(grad[np.ix_(fe, f3)], pivot, axis=0)
    radius = np.empty(n_e)
    radius[idx_r] = el.a[:, None] + el.h[:, None] * el.xi_psi[None, :]
    radius[idx_c] = el.a[:, None] + el.h[:, None] * _lobatto(p)[None, :]
    radial = np.arange(n_e) < n_r
    return CoupledMatrices(red(cc), red(mass_eps), red(mass_mu), t.T @ gg[np.ix_(fe, f3)],
                           s3[np.ix_(f3, f3)], m3[np.ix_(f3, f3)], grad_red,
                           red(l2), red(bweight), np.delete(radius[fe], pivot),
                           np.delete(radial[fe], pivot))


def _pair_branches(alpha, k0sq, vecs):
    """Collapse the +-alpha pairs into one nu^2 each."""
    nu2 = alpha ** 2 + k0sq
    order = np.lexsort((np.imag(nu2), np.real(nu2)))
    nu2, alpha = nu2[order], alpha[order]
    vecs = None if vecs is None else vecs[:, order]
    if nu2.size % 2:
        raise LinearizationIllConditioned("odd number of finite eigenvalues")
    a, b = nu2[0::2], nu2[1::2]
    scale = np.maximum(np.abs(a), 1.0)
    mismatch = float(np.max(np.abs(a - b) / scale)) if a.size else 0.0
    if mismatch > 1e-6:
        raise LinearizationIllConditioned(f"+-alpha branches disagree by {mismatch:.2e}")
    return 0.5 * (a + b), (None if vecs is None else vecs[:, 0::2]), mismatch


def _companion(mats: CoupledMatrices, omega: float):
    """Eigenvalues alpha and right eigenvectors of the scaled first companion form."""
    n_e, n_3 = mats.curl.shape[0], mats.stiff3.shape[0]
    n = n_e + n_3
    l0 = np.zeros((n, n))
    l0[:n_e, :n_e] = mats.curl - omega ** 2 * mats.mass_eps
    l0[n_e:, n_e:] = mats.stiff3 - omega ** 2 * mats.mass3
    l1 = np.zeros((n, n))
    l1[:n_e, n_e:] = -mats.coupling
    l1[n_e:, :n_e] = mats.coupling.T
    l2 = np.zeros((n, n))
    l2[:n_e, :n_e] = -mats.mass_mu
    # alpha = gamma * a balances the three coefficients
    gamma = math.sqrt(np.linalg.norm(l0, 2) / np.linalg.norm(l2, 2))
    l1, l2 = gamma * l1, gamma ** 2 * l2
    eye = np.eye(n)
    big_a = np.block([[np.zeros((n, n)), eye], [-l0, -l1]])
    big_b = np.block([[eye, np.zeros((n, n))], [np.zeros((n, n)), l2]])
    w, v = sla.eig(big_a, big_b, homogeneous_eigvals=True)
    num, den = w
    with np.errstate(divide="ignore", invalid="ignore"):
        a = np.where(np.abs(den) > 0, num / den, np.inf)
    # the e_3 block carries 2 n_3 infinite eigenvalues; keep the 2 n_e finite ones
    keep = np.argsort(np.abs(a))[:2 * n_e]
    if not np.all(np.isfinite(a[keep])):
        raise LinearizationIllConditioned("too few finite eigenvalues in the companion pencil")
    return gamma * a[keep], v[:n, keep]


def _schur(mats: CoupledMatrices, omega: float):
    """alpha^2 from (C - w^2 M_eps) x = alpha^2 (M_mu - G S^-1 G^T) x."""
    s = mats.stiff3 - omega ** 2 * mats.mass3
    lhs = mats.curl - omega ** 2 * mats.mass_eps
    rhs = mats.mass_mu - mats.coupling @ np.linalg.solve(s, mats.coupling.T)
    a2, v = sla.eig(lhs, rhs)
    # the second block row reads alpha G^T x + S e_3 = 0; either sign of alpha will do
    e3 = -np.sqrt(a2.astype(complex)) * np.linalg.solve(s, mats.coupling.T @ v)
    return a2, np.vstack([v, e3])


def block_mixing(mats: CoupledMatrices, vecs: np.ndarray) -> np.ndarray:
    """min(|v|, |(grad w, grad e_3)|) / total for E_T = v + grad w with div(mu^-1 v) = 0."""
    n_e = mats.curl.shape[0]
    xe, e3 = vecs[:n_e], vecs[n_e:]
    dm = mats.grad.T @ mats.mass_mu
    w = np.linalg.solve(dm @ mats.grad, dm @ xe)
    v = xe - mats.grad @ w

    def norm(x):
        return np.sqrt(np.abs(np.einsum("ij,ik,kj->j", np.conj(x), mats.mass_mu, x)))

    nv = norm(v)
    ng = np.sqrt(norm(mats.grad @ w) ** 2 + norm(mats.grad @ e3) ** 2)
    return np.minimum(nv, ng) / np.maximum(np.sqrt(nv ** 2 + ng ** 2), 1e-300)


def coupled_spectrum(profile: FiberProfile, omega: float, m: int, grid: RadialGrid,
                     k: int | None = None, vectors: bool = False,
                     method: str = "companion", check_cutoff: bool = True) -> DiscreteSpectrum:
    """nu^2 = alpha^2 + omega^2 eps0 mu0 for the quadratic transverse/longitudinal pencil

        [[C - w^2 M_eps - a^2 M_mu, -a G], [a G^T, S_3 - w^2 M_3]] (x, e_3) = 0.

    Returns the k eigenvalues of smallest real part (all when k is None).
    """
    validate(profile)
    if check_cutoff and is_cutoff(profile, omega):
        raise CutoffCollision(f"omega = {omega} is a cut-off frequency")
    mats = coupled_matrices(profile, m, grid)
    k0sq = omega ** 2 * profile.eps0 * profile.mu0
    if method == "companion":
        alpha, vec = _companion(mats, omega)
        nu2, vec, mismatch = _pair_branches(alpha, k0sq, vec)
    elif method == "schur":
        a2, vec = _schur(mats, omega)
        nu2 = a2 + k0sq
        order = np.lexsort((np.imag(nu2), np.real(nu2)))
        nu2, vec, mismatch = nu2[order], vec[:, order], 0.0
    else:
        raise ValueError(f"unknown method {method!r}")
    _check_conjugate_closure(nu2)
    if k is not None:
        nu2, vec = nu2[:k], vec[:, :k]
    mixing = block_mixing(mats, vec)
    info = {"branch_mismatch": mismatch, "dim": int(mats.curl.shape[0] + mats.stiff3.shape[0]),
            "method": method}
    return DiscreteSpectrum("coupled", int(m), nu2.astype(complex),
                            vec if vectors else None, mixing, info)


def _check_conjugate_closure(nu2, tol=1e-8):
    bad = np.abs(nu2.imag) > tol * np.maximum(np.abs(nu2), 1.0)
    for z in nu2[bad]:
        if np.min(np.abs(nu2 - np.conj(z))) > 1e-6 * abs(z):
            raise LinearizationIllConditioned(f"eigenvalue {z} has no conjugate partner")


def match_roots(spectrum: DiscreteSpectrum, roots, radius: float) -> list:
    """Nearest coupled nu^2 for each root nu, or None beyond radius * nu in nu^2 units."""
    out = []
    for nu in roots:
        d = np.abs(spectrum.eigenvalues - nu * nu)
        i = int(np.argmin(d))
        out.append(complex(spectrum.eigenvalues[i]) if d[i] <= radius * nu else None)
    return out


def _random_fields(mats: CoupledMatrices, rng, samples: int, degree: int = 5) -> np.ndarray:
    r = mats.radius
    q = rng.standard_normal((degree + 1, samples))
    pc = rng.standard_normal((degree + 1, samples))
    powers = r[:, None] ** np.arange(degree + 1)[None, :]
    er = r[:, None] * (powers @ q)
    t = (r * r * (1 - r))[:, None] * (powers @ pc)
    return np.where(mats.is_radial[:, None], er, t)


@dataclass(frozen=True)
class BformScaling:
    max_ratio: float        # nan when delta_tilde = 0
    max_abs_form: float
    delta_tilde: float
    samples: int
    seed: int


def bform_scaling(profile: FiberProfile, omega: float, m: int, grid: RadialGrid,
                  samples: int = 32, seed: int = 0) -> BformScaling:
    """max |b(v, v')| / (delta_tilde |v| |v'|) over random discrete transverse fields.

    b(v, v') = -omega^2 <(eps - eps0 mu0 / mu) v, v'> is the transverse block of
    the perturbation form; it vanishes identically when eps mu = eps0 mu0.
    The random fields are e_r = r Q(r), t = r^2 (1 - r) P(r) with Gaussian
    polynomial coefficients, interpolated onto the grid, so the samples do not
    depend on the grid and satisfy the axis condition.
    """
    mats = coupled_matrices(profile, m, grid)
    rng = np.random.default_rng(seed)
    x = _random_fields(mats, rng, samples)
    y = _random_fields(mats, rng, samples)
    form = -omega ** 2 * np.einsum("is,ij,js->s", x, mats.bweight, y)
    nx = np.sqrt(np.einsum("is,ij,js->s", x, mats.l2, x))
    ny = np.sqrt(np.einsum("is,ij,js->s", y, mats.l2, y))
    dt = deviation(profile).delta_tilde
    ratio = math.nan if dt == 0 else float(np.max(np.abs(form) / (dt * nx * ny)))
    return BformScaling(ratio, float(np.max(np.abs(form))), dt, samples, seed)
