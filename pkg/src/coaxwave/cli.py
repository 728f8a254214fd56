"""Batch front-end: solve, verify, fields and scan subcommands.

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 solver integrity error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import errors
from .discrete_oracle import RadialGrid, bform_scaling
from .dispersion import BcKind, direct_scaled_det, main_term, scaled_det_values
from .modes import norms_and_traces, reconstruct_fields
from .profile import FiberProfile, deviation, is_cutoff, validate
from .rootfind import certified_roots, gap_report, merged_sequence
from .spectra import dispersion_csv, full_spectrum, gram_conditioning, lowest_modes

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3
SUITES = ("bessel", "dispersion", "gaps", "maxwell", "riesz")
GAP_FLOOR = 0.827929

_INTEGRITY = (errors.MissedRootSuspected, errors.RankDeficiencySurprise,
              errors.AxisNormalizationFailed, errors.LinearizationIllConditioned,
              errors.QuadratureDisagreement, errors.NoSignChange, errors.MultipleSignChanges,
              errors.OverflowRegime)


class ConfigError(errors.CoaxError):
    pass


@dataclass(frozen=True)
class Tolerances:
    root_tol: float = 1e-10
    residual_tol: float = 1e-8
    grid_levels: int = 3

    def check(self):
        if not (self.root_tol > 0 and self.residual_tol > 0 and self.grid_levels > 0):
            raise ConfigError("tolerances and grid levels must be positive")


@dataclass(frozen=True)
class RunConfig:
    profile: FiberProfile
    omega: float = 1.0
    m_range: tuple = (0, 4)         # inclusive
    n_max: int = 10
    commands: tuple = ()
    tolerances: Tolerances = field(default_factory=Tolerances)
    out_dir: str = "out"
    profile_path: str | None = None
    seed: int = 0
    gram_K: int = 50
    omegas: tuple = ()              # frequencies for scan

    @property
    def orders(self) -> range:
        return range(self.m_range[0], self.m_range[1] + 1)

    def to_dict(self) -> dict:
        d = {"profile": self.profile_path if self.profile_path else self.profile.to_dict(),
             "omega": self.omega, "m_range": list(self.m_range), "n_max": self.n_max,
             "commands": list(self.commands), "tolerances": asdict(self.tolerances),
             "out_dir": self.out_dir, "seed": self.seed, "gram_K": self.gram_K,
             "omegas": list(self.omegas)}
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=1)

    @classmethod
    def from_dict(cls, d: dict, base: Path | None = None) -> "RunConfig":
        try:
            raw = d["profile"]
            path = None
            if isinstance(raw, str):
                path = raw
                p = Path(raw) if base is None or Path(raw).is_absolute() else base / raw
                if not p.exists():
                    raise ConfigError(f"profile file {p} does not exist")
                raw = json.loads(p.read_text())
            profile = FiberProfile.from_dict(raw)
            m_range = tuple(int(v) for v in d.get("m_range", (0, 4)))
            cfg = cls(profile, float(d.get("omega", 1.0)), m_range, int(d.get("n_max", 10)),
                      tuple(d.get("commands", ())), Tolerances(**d.get("tolerances", {})),
                      str(d.get("out_dir", "out")), path, int(d.get("seed", 0)),
                      int(d.get("gram_K", 50)), tuple(float(w) for w in d.get("omegas", ())))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        cfg.check()
        return cfg

    @classmethod
    def from_json(cls, text: str, base: Path | None = None) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not JSON: {exc}") from exc
        return cls.from_dict(d, base)

    def check(self):
        validate(self.profile)
        self.tolerances.check()
        if len(self.m_range) != 2 or self.m_range[0] < 0 or self.m_range[1] < self.m_range[0]:
            raise ConfigError(f"m_range must be [lo, hi] with 0 <= lo <= hi, got {self.m_range}")
        if self.n_max < 1:
            raise ConfigError("n_max must be positive")
        if not math.isfinite(self.omega) or self.omega <= 0:
            raise ConfigError("omega must be positive and finite")


def _parse_m(text: str) -> tuple:
    lo, _, hi = text.partition(":")
    return (int(lo), int(hi or lo))


def load_config(args) -> RunConfig:
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        cfg = RunConfig.from_json(path.read_text(), path.parent)
    else:
        cfg = RunConfig(FiberProfile.homogeneous())
    over = {}
    if args.omega is not None:
        over["omega"] = args.omega
    if args.m is not None:
        over["m_range"] = _parse_m(args.m)
    if args.n is not None:
        over["n_max"] = args.n
    if args.out is not None:
        over["out_dir"] = args.out
    if args.seed is not None:
        over["seed"] = args.seed
    cfg = replace(cfg, **over)
    cfg.check()
    return cfg


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


# solve

def _roots_for_order(args):
    profile, m, n_max = args
    rows = []
    for bc in (BcKind.Dirichlet, BcKind.Neumann):
        rows.extend(c.row() for c in certified_roots(profile, bc, m, n_max, with_hethcote=False))
    return rows


def _map_orders(cfg: RunConfig, jobs: int):
    work = [(cfg.profile, m, cfg.n_max) for m in cfg.orders]
    if jobs <= 1 or len(work) == 1:
        return [_roots_for_order(w) for w in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_roots_for_order, work))


def cmd_solve(cfg: RunConfig, jobs: int = 1) -> list:
    if is_cutoff(cfg.profile, cfg.omega):
        raise errors.CutoffCollision(f"omega = {cfg.omega} is a cut-off frequency")
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["m", "n", "bc", "value", "lo", "hi", "residual", "seed"])
    count = 0
    for rows in _map_orders(cfg, jobs):
        for row in rows:
            wr.writerow([row[0], row[1], row[2]] + [repr(float(v)) for v in row[3:]])
            count += 1
    out = Path(cfg.out_dir)
    _write(out / "roots.csv", buf.getvalue())
    report = full_spectrum(cfg.profile, cfg.omega, cfg.orders, cfg.n_max)
    _write(out / "spectrum.json", report.to_json())
    return [out / "roots.csv", out / "spectrum.json"]


# verify

def _check(name, passed, value=None, threshold=None):
    return {"name": name, "passed": bool(passed),
            "value": None if value is None else float(value),
            "threshold": None if threshold is None else float(threshold)}


def suite_bessel(cfg: RunConfig) -> list:
    from scipy.special import ai_zeros, jn_zeros, jnp_zeros

    from .specialfn import ProductKind, eval_cyl, j_zero, jp_zero, product_bound_scan

    worst = 0.0
    for m in range(0, 11):
        worst = max(worst, float(np.max(np.abs(np.array([j_zero(n, m) for n in range(1, 21)])
                                               - jn_zeros(m, 20)))))
        worst = max(worst, float(np.max(np.abs(np.array([jp_zero(n, m) for n in range(1, 21)])
                                               - jnp_zeros(m, 20)))))
    from .specialfn import ZeroIndex, ZeroKind, airy_zero
    a_ref = -ai_zeros(20)[0]
    a_err = max(abs(airy_zero(ZeroIndex(ZeroKind.AiryA, n)) - a_ref[n - 1]) for n in range(1, 21))
    wr = max(abs(eval_cyl(m, x).wronskian() - 2 / (math.pi * x)) * x
             for m in (0, 1, 5, 20) for x in (0.5, 3.0, 40.0, 300.0) if x > m / 4)
    scan = product_bound_scan(ProductKind.JY, 20)
    return [_check("bessel_zeros_vs_reference", worst <= cfg.tolerances.root_tol, worst,
                   cfg.tolerances.root_tol),
            _check("airy_zeros_vs_reference", a_err <= 1e-9, a_err, 1e-9),
            _check("wronskian_scaled", wr <= 1e-12, wr, 1e-12),
            _check("product_scan_finite", math.isfinite(scan.value), scan.value)]


def suite_dispersion(cfg: RunConfig) -> list:
    rng = np.random.default_rng(cfg.seed)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 5))
        radii = np.sort(rng.uniform(0.05, 0.95, n - 1))
        prof = FiberProfile((0.0, *radii, 1.0), rng.uniform(0.6, 1.8, n),
                            rng.uniform(0.6, 1.8, n))
        bc = BcKind.Dirichlet if rng.random() < 0.5 else BcKind.Neumann
        m, z = int(rng.integers(0, 9)), float(rng.uniform(0.5, 30))
        a = float(scaled_det_values(prof, bc, m, z))
        b = direct_scaled_det(prof, bc, m, z)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    hom = FiberProfile.homogeneous(cfg.profile.eps0, cfg.profile.mu0)
    zz = np.linspace(0.5, 50, 200)
    red = max(float(np.max(np.abs(scaled_det_values(hom, bc, m, zz) - main_term(bc, m, zz))))
              for bc in BcKind for m in range(0, 9))
    return [_check("recursion_vs_direct_determinant", worst <= 1e-10, worst, 1e-10),
            _check("homogeneous_reduction", red == 0.0, red, 0.0)]


def suite_gaps(cfg: RunConfig) -> list:
    seqs = [merged_sequence(cfg.profile, m, cfg.n_max) for m in cfg.orders]
    rep = gap_report(seqs)
    hom = all(e == cfg.profile.eps0 for e in cfg.profile.eps) and \
        all(u == cfg.profile.mu0 for u in cfg.profile.mu)
    floor = GAP_FLOOR if hom else 0.4
    return [_check("first_element", rep.global_min_first >= floor, rep.global_min_first, floor),
            _check("min_gap", rep.global_min_gap >= floor, rep.global_min_gap, floor)]


def suite_maxwell(cfg: RunConfig) -> list:
    prof, omega = cfg.profile, cfg.omega
    dt = deviation(prof).delta_tilde
    worst_res, worst_sym, worst_pec = 0.0, 0.0, 0.0
    r = np.linspace(0.02, 1.0, 50)
    for m in cfg.orders:
        for bc in BcKind:
            for c in certified_roots(prof, bc, m, cfg.n_max, with_hethcote=False):
                plus = reconstruct_fields(prof, omega, c)
                minus = reconstruct_fields(prof, omega, c, branch=-1)
                worst_res = max(worst_res, plus.residual)
                fp, fm = plus.components(r), minus.components(r)
                sym = max(float(np.max(np.abs(fp[k] - s * fm[k])))
                          for k, s in (("E_r", 1), ("E_theta", 1), ("E_z", -1),
                                       ("H_r", -1), ("H_theta", -1), ("H_z", 1)))
                worst_sym = max(worst_sym, sym)
                edge = plus.components(np.array([1.0]))
                scale = max(float(np.max(np.abs(v))) for v in fp.values())
                worst_pec = max(worst_pec, max(abs(edge["E_theta"][0]), abs(edge["E_z"][0])) / scale)
    tol = cfg.tolerances.residual_tol
    checks = [_check("branch_symmetry", worst_sym == 0.0, worst_sym, 0.0),
              _check("pec_tangential_E", worst_pec <= 1e-9, worst_pec, 1e-9)]
    if dt == 0:
        checks.insert(0, _check("maxwell_residual", worst_res <= tol, worst_res, tol))
    else:
        # scalar-built fields are only approximate modes when eps mu varies
        checks.insert(0, {"name": "maxwell_residual", "passed": None, "skipped": True,
                          "value": worst_res, "threshold": None,
                          "note": "not applicable: delta_tilde > 0"})
    return checks


def suite_riesz(cfg: RunConfig) -> list:
    prof = cfg.profile
    modes = lowest_modes(prof, cfg.omega, cfg.gram_K)
    g = gram_conditioning(modes, "curl")
    d = deviation(prof)
    limit = 1 + 1e-8 if d.delta == 0 else 2.0
    grid = RadialGrid.uniform(prof, 20, 2)
    bf = bform_scaling(prof, cfg.omega, cfg.orders[0], grid, samples=16, seed=cfg.seed)
    b_ok = bf.max_abs_form < 1e-10 if d.delta_tilde == 0 else math.isfinite(bf.max_ratio)
    return [_check("gram_condition", g.condition <= limit, g.condition, limit),
            _check("bform_scaling", b_ok,
                   bf.max_abs_form if d.delta_tilde == 0 else bf.max_ratio)]


SUITE_FUNCS = {"bessel": suite_bessel, "dispersion": suite_dispersion, "gaps": suite_gaps,
               "maxwell": suite_maxwell, "riesz": suite_riesz}


def cmd_verify(cfg: RunConfig, suite: str) -> tuple:
    if suite not in SUITE_FUNCS:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    checks = SUITE_FUNCS[suite](cfg)
    passed = all(c["passed"] for c in checks if not c.get("skipped"))
    report = {"suite": suite, "seed": cfg.seed, "config": cfg.to_dict(),
              "config_digest": hashlib.sha256(cfg.to_json().encode()).hexdigest()[:16],
              "checks": checks, "passed": passed}
    path = Path(cfg.out_dir) / f"verify_{suite}.json"
    _write(path, json.dumps(report, sort_keys=True, indent=1))
    return path, passed


# fields

def _parse_mode(text: str):
    try:
        m, n, bc = text.split(",")
        return int(m), int(n), BcKind(bc.strip())
    except ValueError as exc:
        raise ConfigError(f"mode selector must look like 'm,n,Dir|Neu', got {text!r}") from exc


def fields_csv(cfg: RunConfig, m: int, n: int, bc: BcKind, points: int = 101,
               angles: int = 1) -> tuple:
    if m < 0 or n < 1:
        raise errors.UnknownMode(f"no mode (m={m}, n={n})")
    roots = certified_roots(cfg.profile, bc, m, n, with_hethcote=False)
    if len(roots) < n:
        raise errors.UnknownMode(f"mode (m={m}, n={n}, {bc.value}) not found")
    mf = reconstruct_fields(cfg.profile, cfg.omega, roots[n - 1])
    r = np.linspace(0.0, 1.0, points)
    theta = np.linspace(0.0, 2 * math.pi, angles, endpoint=False)
    f = mf.sample(r, theta)
    names = ("E_r", "E_theta", "E_z", "H_r", "H_theta", "H_z")
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["r", "theta"] + [f"{k}_{p}" for k in names for p in ("re", "im")])
    for i, ri in enumerate(r):
        for j, tj in enumerate(theta):
            row = [repr(float(ri)), repr(float(tj))]
            for k in names:
                z = complex(f[k][i, j])
                row += [repr(z.real), repr(z.imag)]
            wr.writerow(row)
    nt = norms_and_traces(mf.coeffs, n)
    summary = {"m": m, "n": n, "bc": bc.value, "nu": mf.nu,
               "alpha": [mf.alpha.real, mf.alpha.imag], "norm": nt.norm_gamma,
               "traces": list(nt.trace_sigma), "trace_ratio": nt.ratio,
               "maxwell_residual": mf.residual, "hybrid_approx": mf.hybrid_approx}
    return buf.getvalue(), summary


def cmd_fields(cfg: RunConfig, selector: str, points: int = 101, angles: int = 1) -> list:
    m, n, bc = _parse_mode(selector)
    text, summary = fields_csv(cfg, m, n, bc, points, angles)
    out = Path(cfg.out_dir)
    stem = f"fields_m{m}_n{n}_{bc.value}"
    _write(out / f"{stem}.csv", text)
    _write(out / f"{stem}.json", json.dumps(summary, sort_keys=True, indent=1))
    return [out / f"{stem}.csv", out / f"{stem}.json"]


def cmd_scan(cfg: RunConfig) -> list:
    omegas = cfg.omegas or tuple(np.linspace(0.5, cfg.omega, 11).tolist())
    out = Path(cfg.out_dir) / "dispersion.csv"
    _write(out, dispersion_csv(cfg.profile, omegas, cfg.orders, cfg.n_max))
    return [out]


# entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="coaxwave", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("solve", "verify", "fields", "scan"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--omega", type=float)
        p.add_argument("--m", help="order or range lo:hi (inclusive)")
        p.add_argument("--n", type=int, help="roots per order and boundary condition")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
        if name == "verify":
            p.add_argument("--suite", required=True, choices=SUITES)
        if name == "fields":
            p.add_argument("--mode", required=True, help="m,n,Dir|Neu")
            p.add_argument("--points", type=int, default=101)
            p.add_argument("--angles", type=int, default=1)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args)
        if args.command == "solve":
            files = cmd_solve(cfg, args.jobs)
        elif args.command == "verify":
            path, passed = cmd_verify(cfg, args.suite)
            print(path)
            return EXIT_OK if passed else EXIT_FAIL
        elif args.command == "fields":
            files = cmd_fields(cfg, args.mode, args.points, args.angles)
        else:
            files = cmd_scan(cfg)
    except _INTEGRITY as exc:
        print(f"solver integrity error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except errors.CoaxError as exc:
        print(f"configuration error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for f in files:
        print(f)
    return EXIT_OK
