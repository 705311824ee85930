"""Command-line entry point.

Every workflow is a subcommand; run parameters come from an optional INI
config file overridden by flags.  Summaries are JSON with all floats
rendered at 17 significant digits and a sha256 content hash of the
resolved configuration and results, so identical inputs reproduce
bit-identical output (no timestamps).  Exit codes: 0 success, 2 config
error, 3 numerical failure, 4 assertion failure.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import json
import sys

import numpy as np

from . import ansatz as ans
from . import asymptotics as asym
from . import dancer as dnc
from . import domain as dom
from . import groundstate as gs
from . import reduction as red
from . import spectrum as spec
from . import weighted as wgt

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ASSERTION = 4


class ConfigError(ValueError):
    pass


class AssertionFailure(RuntimeError):
    pass


def _render(obj) -> str:
    """Deterministic JSON with floats at 17 significant digits."""
    if isinstance(obj, dict):
        items = (f'"{k}": {_render(v)}' for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in obj) + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if obj is None:
        return "null"
    return json.dumps(obj)


def emit_summary(command: str, config: dict, results: dict, out: str | None) -> str:
    body = {"command": command, "config": config, "results": results}
    digest = hashlib.sha256(_render(body).encode()).hexdigest()
    body["content_hash"] = digest
    text = _render(body) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return text


def make_grid(eps: float, R: float = 12.0, h: float = 0.25) -> dom.StripGrid:
    """Grid with mesh widths close to h; n₁ rounded to a multiple of 4."""
    period = 2 * np.pi / eps
    n1 = max(8, 4 * round(period / (4 * h)))
    n2 = max(4, round(R / h))
    return dom.StripGrid(eps, R, n1, n2)


def _parse_peaks(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise ConfigError(f"unparsable peak list {text!r}") from exc


def _load_config(path: str | None, section: str) -> dict:
    if not path:
        return {}
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ConfigError(f"config file {path} not found")
    merged = {}
    for sect in ("common", section):
        if parser.has_section(sect):
            merged.update(parser[sect])
    return merged


def _resolve(args: argparse.Namespace, section: str, casts: dict) -> dict:
    """Merge config-file values and CLI flags (flags win) with type casts."""
    base = _load_config(args.config, section)
    out = {}
    for key, cast in casts.items():
        flag_val = getattr(args, key, None)
        if flag_val is not None:
            out[key] = flag_val
        elif key in base:
            try:
                out[key] = cast(base[key])
            except ValueError as exc:
                raise ConfigError(f"bad config value for {key}: {base[key]}") from exc
    return out


def _require(cfg: dict, key: str):
    if key not in cfg or cfg[key] is None:
        raise ConfigError(f"missing required parameter: {key}")
    return cfg[key]


def _validate_exponent(cfg):
    p = cfg.get("p", 3.0)
    n = cfg.get("dim", 2)
    if p < 2:
        raise ConfigError(f"constraint violated: p >= 2 (got p = {p})")
    if n >= 3 and p >= (n + 2) / (n - 2):
        raise ConfigError(f"constraint violated: subcritical p for N = {n}")
    return n, p


_PROFILE_CACHE: dict = {}


def _profile(n, p, tol=1e-12):
    key = (n, p, tol)
    if key not in _PROFILE_CACHE:
        _PROFILE_CACHE[key] = gs.solve_ground_state(n, p, tol=tol)
    return _PROFILE_CACHE[key]


def _bundle_from(cfg):
    eps = _require(cfg, "eps")
    grid = make_grid(eps, cfg.get("transverse", 12.0), cfg.get("h", 0.25))
    if cfg.get("peaks"):
        config = ans.PeakConfiguration(eps, cfg["peaks"])
    else:
        config = ans.uniform_configuration(eps, cfg.get("k", 1))
    n, p = _validate_exponent(cfg)
    profile = _profile(n, p)
    return ans.build_ansatz(config, profile, grid)


# ---------------------------------------------------------------- commands


def cmd_groundstate(args):
    cfg = _resolve(args, "groundstate", dict(dim=int, p=float, tol=float))
    cfg.setdefault("dim", 2)
    cfg.setdefault("p", 3.0)
    cfg.setdefault("tol", 1e-12)
    _validate_exponent(cfg)
    profile = gs.solve_ground_state(cfg["dim"], cfg["p"], tol=cfg["tol"])
    if args.profile_out:
        with open(args.profile_out, "w") as fh:
            fh.write(profile.to_json())
    results = {
        "center_value": profile.center_value,
        "tail_L0": profile.tail_L0,
        "tail_L1": profile.tail_L1,
        "tail_match_radius": profile.tail_match_radius,
        "tail_spread_L0": profile.tail_spread_L0,
        "tail_spread_L1": profile.tail_spread_L1,
    }
    emit_summary("groundstate", cfg, results, args.out)


def cmd_ansatz(args):
    cfg = _resolve(
        args,
        "ansatz",
        dict(dim=int, p=float, eps=float, k=int, peaks=_parse_peaks,
             h=float, transverse=float),
    )
    bundle = _bundle_from(cfg)
    res = ans.residual(bundle)
    rate = ans.residual_rate(bundle.config.sigma_min, bundle.profile.dimension)
    results = {
        "sigma_min": bundle.config.sigma_min,
        "half_gaps": list(bundle.config.half_gaps),
        "residual_sup": res.sup_norm(),
        "residual_l2": ans.residual_l2(bundle),
        "rate_scale": rate,
        "sup_over_rate": res.sup_norm() / rate,
    }
    emit_summary("ansatz", cfg, results, args.out)


def cmd_spectrum(args):
    cfg = _resolve(
        args,
        "spectrum",
        dict(dim=int, p=float, eps=float, k=int, peaks=_parse_peaks,
             h=float, transverse=float, count=int),
    )
    bundle = _bundle_from(cfg)
    count = cfg.get("count", bundle.config.k + 4)
    result = spec.lowest_eigenpairs(bundle, count=count)
    basis = spec.near_kernel_basis(result, bundle)
    results = {
        "eigenvalues": result.eigenvalues,
        "near_kernel_count": result.near_kernel_count,
        "overlap_matrix": result.overlap_matrix,
        "alphas": basis.alphas,
        "alignment_residuals": basis.alignment_residuals,
    }
    if args.weighted_report:
        results["weighted_eigenvector_norms"] = [
            {
                "eta": eta,
                "norms": [
                    wgt.weighted_sup(phi, bundle.config, eta)
                    for phi in basis.fields
                ],
            }
            for eta in wgt.DEFAULT_ETAS
        ]
    emit_summary("spectrum", cfg, results, args.out)


def cmd_reduce(args):
    cfg = _resolve(
        args,
        "reduce",
        dict(dim=int, p=float, eps=float, k=int, peaks=_parse_peaks,
             h=float, transverse=float, tol=float),
    )
    bundle = _bundle_from(cfg)
    result = spec.lowest_eigenpairs(bundle, count=bundle.config.k + 3)
    basis = spec.near_kernel_basis(result, bundle)
    state = red.solve_correction(bundle, basis, tol=cfg.get("tol", 1e-13))
    rate = ans.residual_rate(bundle.config.sigma_min, bundle.profile.dimension)
    results = {
        "sigma_min": bundle.config.sigma_min,
        "sup_norm": state.sup_norm,
        "h1_norm": state.h1_norm,
        "iterations": state.iterations,
        "d_coeffs": state.d_coeffs,
        "sup_over_rate": state.sup_norm / rate,
    }
    if args.weighted_report:
        results["weighted_correction"] = [
            {
                "eta": eta,
                "norm": wgt.weighted_sup(state.correction, bundle.config, eta),
            }
            for eta in wgt.DEFAULT_ETAS
        ]
    emit_summary("reduce", cfg, results, args.out)


def cmd_equilibrate(args):
    cfg = _resolve(
        args,
        "equilibrate",
        dict(dim=int, p=float, eps=float, k=int, perturb=float, tol=float,
             h=float, transverse=float),
    )
    eps = _require(cfg, "eps")
    k = cfg.get("k", 2)
    if k < 2:
        raise ConfigError("constraint violated: equilibrate requires k >= 2")
    n, p = _validate_exponent(cfg)
    profile = _profile(n, p)
    base = ans.uniform_configuration(eps, k)
    perturb = cfg.get("perturb", 0.05)
    angles = list(base.angles)
    angles[1] += perturb * 2 * np.pi / k
    initial = ans.PeakConfiguration(eps, tuple(angles))

    def factory(e):
        return make_grid(e, cfg.get("transverse", 12.0), cfg.get("h", 0.25))

    rate = ans.residual_rate(initial.sigma_min, n)
    result = red.equilibrate(
        initial, profile, factory, tol=cfg.get("tol", 1e-2 * rate)
    )
    gaps = np.asarray(result.config.gaps)
    results = {
        "initial_angles": list(initial.angles),
        "final_angles": list(result.config.angles),
        "final_gaps": gaps,
        "uniform_gap": 2 * np.pi / (k * eps),
        "gap_relative_spread": float(
            (gaps.max() - gaps.min()) / (2 * np.pi / (k * eps))
        ),
        "newton_steps": result.newton_steps,
        "d_history": [list(d) for d in result.d_history],
    }
    emit_summary("equilibrate", cfg, results, args.out)


def cmd_dancer(args):
    cfg = _resolve(
        args,
        "dancer",
        dict(dim=int, p=float, eps=float, k=int, eta=float,
             h=float, transverse=float, tol=float),
    )
    n, p = _validate_exponent(cfg)
    profile = _profile(n, p)
    k = cfg.get("k", 1)
    eta = cfg.get("eta", 0.3)
    tol = cfg.get("tol", 1e-11)
    if args.eps_sweep:
        epsilons = [float(t) for t in args.eps_sweep.split(",")]
    else:
        epsilons = [_require(cfg, "eps")]

    def factory(e):
        return make_grid(e, cfg.get("transverse", 12.0), cfg.get("h", 0.25))

    rows = []
    for e in epsilons:
        grid = factory(e)
        bundle = ans.build_ansatz(
            ans.uniform_configuration(e, k), profile, grid
        )
        sol = dnc.newton_solve(bundle, tol=tol)
        evenness = dnc.verify_evenness(sol)
        if evenness > 10 * max(tol, 1e-9):
            raise AssertionFailure(
                f"evenness defect {evenness:.3e} above threshold at eps={e}"
            )
        full, half = dnc.minimal_period_gaps(sol)
        rows.append(
            {
                "eps": e,
                "iterations": sol.iterations,
                "residual_history": sol.newton_history,
                "min_value": float(sol.field.data.min()),
                "evenness_defect": evenness,
                "period_defect": full,
                "half_period_defect": half,
            }
        )
    results: dict = {"runs": rows}
    if len(epsilons) >= 3:
        report = dnc.psi_decay_fit(profile, epsilons, k, eta, factory)
        results["psi_decay"] = {
            "epsilons": report.epsilons,
            "weighted_sups": report.weighted_sups,
            "abscissa": report.abscissa,
            "slope": report.slope,
        }
    emit_summary("dancer", cfg, results, args.out)


def cmd_oracle(args):
    if args.oracle_kind == "taylor":
        cfg = _resolve(args, "oracle", dict(p=float, n=int, seed=int))
        cfg.setdefault("p", 3.0)
        cfg.setdefault("n", 100000)
        cfg.setdefault("seed", 7)
        if cfg["p"] < 2:
            raise ConfigError("constraint violated: p >= 2")
        report = asym.taylor_remainder_check(cfg["n"], cfg["p"], cfg["seed"])
        results = {
            "max_ratio": report.max_ratio,
            "argmax": list(report.argmax),
            "samples": report.samples,
        }
        emit_summary("oracle-taylor", cfg, results, args.out)
    else:
        cfg = _resolve(args, "oracle", dict(a=float, b=float, y0=float, dim=int))
        cfg.setdefault("a", 2.0)
        cfg.setdefault("b", 1.0)
        cfg.setdefault("y0", 12.0)
        cfg.setdefault("dim", 1)
        spec_ = asym.InteractionSpec(
            f=lambda r: np.exp(-r),
            g=lambda r: np.exp(-r),
            a=cfg["a"],
            b=cfg["b"],
            y0=cfg["y0"],
            dimension=cfg["dim"],
        )
        value = asym.interaction_quadrature(spec_)
        results = {
            "value": value,
            "rescaled": asym.rescale(spec_, value),
            "mass_constant": asym.mass_constant(spec_),
        }
        emit_summary("oracle-interactions", cfg, results, args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="multipeak",
        description="Multi-peak periodic solutions of -Du + u - u^p = 0 on a strip",
    )
    parser.add_argument("--config", help="INI config file", default=None)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(sp, grid=True):
        sp.add_argument("--out", default=None, help="summary JSON path (default stdout)")
        sp.add_argument("--dim", type=int, default=None)
        sp.add_argument("--p", type=float, default=None)
        if grid:
            sp.add_argument("--eps", type=float, default=None)
            sp.add_argument("--h", type=float, default=None)
            sp.add_argument("--transverse", type=float, default=None)

    p_gs = sub.add_parser("groundstate", help="radial ground-state profile")
    common(p_gs, grid=False)
    p_gs.add_argument("--tol", type=float, default=None)
    p_gs.add_argument("--profile-out", default=None)
    p_gs.set_defaults(func=cmd_groundstate)

    p_an = sub.add_parser("ansatz", help="multi-peak ansatz residual norms")
    common(p_an)
    p_an.add_argument("--k", type=int, default=None)
    p_an.add_argument("--peaks", type=_parse_peaks, default=None)
    p_an.set_defaults(func=cmd_ansatz)

    p_sp = sub.add_parser("spectrum", help="weighted eigenpairs of the linearization")
    common(p_sp)
    p_sp.add_argument("--k", type=int, default=None)
    p_sp.add_argument("--peaks", type=_parse_peaks, default=None)
    p_sp.add_argument("--count", type=int, default=None)
    p_sp.add_argument("--weighted-report", action="store_true")
    p_sp.set_defaults(func=cmd_spectrum)

    p_rd = sub.add_parser("reduce", help="Lyapunov-Schmidt correction")
    common(p_rd)
    p_rd.add_argument("--k", type=int, default=None)
    p_rd.add_argument("--peaks", type=_parse_peaks, default=None)
    p_rd.add_argument("--tol", type=float, default=None)
    p_rd.add_argument("--weighted-report", action="store_true")
    p_rd.set_defaults(func=cmd_reduce)

    p_eq = sub.add_parser("equilibrate", help="drive peak positions to d = 0")
    common(p_eq)
    p_eq.add_argument("--k", type=int, default=None)
    p_eq.add_argument("--perturb", type=float, default=None)
    p_eq.add_argument("--tol", type=float, default=None)
    p_eq.set_defaults(func=cmd_equilibrate)

    p_dn = sub.add_parser("dancer", help="Newton solve and decay probes")
    common(p_dn)
    p_dn.add_argument("--k", type=int, default=None)
    p_dn.add_argument("--eta", type=float, default=None)
    p_dn.add_argument("--tol", type=float, default=None)
    p_dn.add_argument("--eps-sweep", default=None, help="comma-separated epsilons")
    p_dn.set_defaults(func=cmd_dancer)

    p_or = sub.add_parser("oracle", help="stand-alone asymptotic oracles")
    p_or.add_argument("oracle_kind", choices=("taylor", "interactions"))
    p_or.add_argument("--out", default=None)
    p_or.add_argument("--p", type=float, default=None)
    p_or.add_argument("--n", type=int, default=None)
    p_or.add_argument("--seed", type=int, default=None)
    p_or.add_argument("--a", type=float, default=None)
    p_or.add_argument("--b", type=float, default=None)
    p_or.add_argument("--y0", type=float, default=None)
    p_or.add_argument("--dim", type=int, default=None)
    p_or.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        args.func(args)
    except (ConfigError, ValueError) as exc:
        sys.stderr.write(
            json.dumps({"error": "config", "detail": str(exc)}) + "\n"
        )
        return EXIT_CONFIG
    except AssertionFailure as exc:
        sys.stderr.write(
            json.dumps({"error": "assertion", "detail": str(exc)}) + "\n"
        )
        return EXIT_ASSERTION
    except (RuntimeError, gs.ShootingError) as exc:
        sys.stderr.write(
            json.dumps({"error": "numerical", "detail": str(exc)}) + "\n"
        )
        return EXIT_NUMERICAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
