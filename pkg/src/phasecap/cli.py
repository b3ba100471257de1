"""Command-line front end.

Exit codes: 0 success (condition holds), 1 completed but the condition is
violated or a selftest check failed, 2 operational error.
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
from pathlib import Path

import numpy as np

from . import selftest
from .dynamics import canned_hamiltonian, invariance_experiment
from .errors import PhaseCapError
from .mve import EXHAUSTIVE, EllipsoidEstimate, MveConfig, mve_estimate
from .numerics import Tolerances
from .phase_space import SymplecticFormSpec, build_form, load_cloud, standard_form
from .uncertainty import UncertaintyReport, analyze

DEFAULTS = {
    "cloud": None,
    "omega": None,
    "sigma_json": None,
    "k": None,
    "alpha": None,
    "subsets": "5000",
    "seed": 0,
    "times": None,
    "hamiltonian": "oscillator",
    "output": "json",
    "out": None,
    "psd_tol": Tolerances.psd_tol,
    "eig_tol": Tolerances.eig_tol,
    "quantile_tol": Tolerances.quantile_tol,
}
_PATH_KEYS = ("cloud", "omega", "sigma_json", "out")


class UsageError(PhaseCapError):
    pass


def _g(x: float) -> str:
    return f"{x:.6g}"


# ---------------------------------------------------------------------------
# configuration


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        doc = json.loads(p.read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read config {p}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"config {p} is not valid JSON: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise UsageError("config file must hold a JSON object")
    cfg = {}
    for key, value in doc.items():
        key = key.replace("-", "_")
        if key not in DEFAULTS:
            raise UsageError(f"unknown config key {key!r}")
        if key in _PATH_KEYS and value is not None:
            value = str((p.parent / value) if not Path(value).is_absolute() else value)
        if key == "subsets" and value is not None:
            value = str(value)
        cfg[key] = value
    return cfg


def resolve(args: argparse.Namespace) -> dict:
    """Merge settings with precedence flags > config file > defaults."""
    merged = dict(DEFAULTS)
    merged.update(_load_config(getattr(args, "config", None)))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _tolerances(cfg: dict) -> Tolerances:
    return Tolerances(
        psd_tol=float(cfg["psd_tol"]), eig_tol=float(cfg["eig_tol"]), quantile_tol=float(cfg["quantile_tol"])
    )


def _mve_config(cfg: dict) -> MveConfig:
    subsets = str(cfg["subsets"]).strip().lower()
    if subsets == EXHAUSTIVE:
        n_subsets = EXHAUSTIVE
    else:
        try:
            n_subsets = int(subsets)
        except ValueError:
            raise UsageError(f"--subsets must be an integer or 'exhaustive', got {cfg['subsets']!r}") from None
    k = None if cfg["k"] is None else int(cfg["k"])
    alpha = None if cfg["alpha"] is None else float(cfg["alpha"])
    return MveConfig(k=k, m_alpha=alpha, n_subsets=n_subsets, seed=int(cfg["seed"]))


def _read_json(path: str, what: str):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise UsageError(f"cannot read {what} file {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise UsageError(f"{what} file {path} is not valid JSON: {exc.msg} (line {exc.lineno})") from None


def load_omega(path: str | None, n: int) -> SymplecticFormSpec:
    """Omega JSON ``{"n": int, "A": [[..]], "B": [[..]], "C": [[..]]}``; J when no path."""
    if path is None:
        return standard_form(n)
    doc = _read_json(path, "omega")
    if not isinstance(doc, dict) or not {"A", "B", "C"} <= doc.keys():
        raise UsageError('omega file must be an object with keys "A", "B", "C"')
    spec = build_form(doc["A"], doc["B"], doc["C"])
    if "n" in doc and doc["n"] != spec.n:
        raise UsageError(f'omega file declares n={doc["n"]} but blocks are {spec.n}x{spec.n}')
    if spec.n != n:
        raise UsageError(f"omega has n={spec.n}, data has n={n}")
    return spec


def load_sigma(path: str) -> EllipsoidEstimate:
    """Covariance input: a bare matrix, ``{"sigma": .., "m0": ..}``, or an estimate
    document written by ``phasecap estimate``."""
    doc = _read_json(path, "sigma")
    if isinstance(doc, list):
        return EllipsoidEstimate.from_covariance(doc)
    if not isinstance(doc, dict) or "sigma" not in doc:
        raise UsageError('sigma file must be a matrix or an object with key "sigma"')
    if "raw_m2" in doc:
        return EllipsoidEstimate.from_dict(doc)
    return EllipsoidEstimate.from_covariance(doc["sigma"], float(doc.get("m0", 1.0)), doc.get("center"))


_PI_RE = re.compile(r"^(?:(?P<mul>[-+0-9.eE]+)\s*\*\s*)?(?P<sign>-)?pi(?:\s*/\s*(?P<div>[-+0-9.eE]+))?$")


def parse_times(text) -> list[float]:
    """Comma-separated times; ``pi``, ``2*pi``, ``pi/2`` are understood."""
    if isinstance(text, list):
        items = [str(t) for t in text]
    else:
        items = [t for t in str(text).split(",") if t.strip()]
    out = []
    for item in items:
        item = item.strip().lower()
        m = _PI_RE.match(item)
        try:
            if m:
                value = math.pi * float(m["mul"] or 1) / float(m["div"] or 1)
                value = -value if m["sign"] else value
            else:
                value = float(item)
        except ValueError:
            raise UsageError(f"cannot parse time {item!r}") from None
        if not math.isfinite(value):
            raise UsageError(f"time {item!r} is not finite")
        out.append(value)
    if not out:
        raise UsageError("--times must list at least one time")
    return out


# ---------------------------------------------------------------------------
# rendering


def _emit(text: str, cfg: dict) -> None:
    if cfg["out"]:
        Path(cfg["out"]).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _matrix_lines(m) -> list[str]:
    return ["  " + "  ".join(f"{_g(v):>12}" for v in row) for row in m]


def estimate_table(est: EllipsoidEstimate) -> str:
    lines = [
        f"n             {est.n}",
        f"k             {est.k}",
        "center        " + "  ".join(_g(v) for v in est.center),
        "sigma",
        *_matrix_lines(est.sigma),
        f"m0            {_g(est.m0)}",
        f"raw_m2        {_g(est.raw_m2)}",
        "subset        " + " ".join(str(i) for i in est.subset),
        f"volume_proxy  {_g(est.volume_proxy)}",
    ]
    return "\n".join(lines) + "\n"


def report_table(rep: UncertaintyReport) -> str:
    lines = [
        f"n                   {rep.n}",
        "sigma",
        *_matrix_lines(rep.sigma),
        f"min_eig             {_g(rep.min_eig)}",
        f"psd_ok              {rep.psd_ok}",
        f"capacity            {_g(rep.capacity_value)}",
        f"capacity_threshold  {_g(rep.capacity_threshold)}",
        f"capacity_ok         {rep.capacity_ok}",
        "spectrum            " + "  ".join(_g(v) for v in rep.spectrum),
        "",
        f"{'pair':<10}{'lhs':>14}{'rhs':>14}{'slack':>14}  holds",
    ]
    for p in rep.pairs:
        lines.append(f"{p.label():<10}{_g(p.lhs):>14}{_g(p.rhs):>14}{_g(p.slack):>14}  {p.holds}")
    return "\n".join(lines) + "\n"


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


# ---------------------------------------------------------------------------
# commands


def _require_cloud(cfg: dict):
    if not cfg["cloud"]:
        raise UsageError("--cloud is required")
    return load_cloud(cfg["cloud"])


def cmd_estimate(cfg: dict) -> int:
    tol = _tolerances(cfg)
    cloud = _require_cloud(cfg)
    est = mve_estimate(cloud, _mve_config(cfg), tol)
    _emit(_dumps(est.to_dict()) if cfg["output"] == "json" else estimate_table(est), cfg)
    return 0


def cmd_analyze(cfg: dict) -> int:
    tol = _tolerances(cfg)
    if cfg["sigma_json"] and cfg["cloud"]:
        raise UsageError("give either --cloud or --sigma-json, not both")
    if cfg["sigma_json"]:
        est = load_sigma(cfg["sigma_json"])
    elif cfg["cloud"]:
        est = mve_estimate(load_cloud(cfg["cloud"]), _mve_config(cfg), tol)
    else:
        raise UsageError("analyze needs --cloud or --sigma-json")
    spec = load_omega(cfg["omega"], est.n)
    report = analyze(est, spec, tol)
    _emit(_dumps(report.to_dict()) if cfg["output"] == "json" else report_table(report), cfg)
    return 0 if report.psd_ok else 1


def cmd_flow(cfg: dict) -> int:
    tol = _tolerances(cfg)
    if cfg["times"] is None:
        raise UsageError("--times is required")
    times = parse_times(cfg["times"])
    cloud = _require_cloud(cfg)
    h = canned_hamiltonian(cfg["hamiltonian"], cloud.n)
    spec = load_omega(cfg["omega"], cloud.n)
    config = _mve_config({**cfg, "subsets": EXHAUSTIVE})
    rows = invariance_experiment(cloud, h, times, spec, config, tol)
    if cfg["output"] == "json":
        text = "".join(json.dumps(r.to_dict()) + "\n" for r in rows)
    else:
        lines = [f"{'t':>12}{'capacity':>14}{'psd_ok':>8}{'capacity_ok':>13}{'max|sigma|':>14}"]
        for r in rows:
            lines.append(
                f"{_g(r.t):>12}{_g(r.capacity):>14}{str(r.psd_ok):>8}{str(r.capacity_ok):>13}"
                f"{_g(float(np.max(np.abs(r.sigma)))):>14}"
            )
        text = "\n".join(lines) + "\n"
    _emit(text, cfg)
    return 0


def cmd_selftest(cfg: dict) -> int:
    checks = selftest.run(_tolerances(cfg))
    width = max(len(c.name) for c in checks)
    lines = [f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}" for c in checks]
    _emit("\n".join(lines) + "\n", cfg)
    return 0 if all(c.passed for c in checks) else 1


COMMANDS = {"estimate": cmd_estimate, "analyze": cmd_analyze, "flow": cmd_flow, "selftest": cmd_selftest}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="phasecap",
        description="Robust covariance ellipsoids, symplectic capacities and uncertainty criteria.",
        epilog="Settings precedence: command-line flags > --config file > built-in defaults. "
        "Exit codes: 0 ok, 1 condition violated / selftest failure, 2 error.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with default settings (keys as flag names)")
    common.add_argument("--output", choices=("json", "table"), help="output format (default json)")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--psd-tol", type=float, help="relative PSD tolerance (default 1e-9)")
    common.add_argument("--eig-tol", type=float, help="eigen-residual tolerance (default 1e-10)")
    common.add_argument("--quantile-tol", type=float, help="chi-square inversion tolerance (default 1e-12)")

    est = argparse.ArgumentParser(add_help=False)
    est.add_argument("--k", type=int, help="coverage count (default (N+2n+1)//2)")
    est.add_argument("--alpha", type=float, help="calibration level of m0 (default k/N)")
    est.add_argument("--subsets", help="number of random subsets, or 'exhaustive' (default 5000)")
    est.add_argument("--seed", type=int, help="seed for subset generation (default 0)")

    p = sub.add_parser("estimate", parents=[common, est], help="MVE estimate of a point cloud")
    p.add_argument("--cloud", help="point cloud (CSV or JSON)")

    p = sub.add_parser("analyze", parents=[common, est], help="uncertainty report for a cloud or covariance")
    p.add_argument("--cloud", help="point cloud (CSV or JSON); MVE is run first")
    p.add_argument("--sigma-json", help="covariance JSON: matrix, {sigma, m0}, or an estimate document")
    p.add_argument("--omega", help='symplectic form JSON {"n", "A", "B", "C"} (default J)')

    p = sub.add_parser("flow", parents=[common, est], help="capacity along a linear Hamiltonian flow")
    p.add_argument("--cloud", help="point cloud (CSV or JSON)")
    p.add_argument("--omega", help="symplectic form JSON (default J)")
    p.add_argument("--hamiltonian", help="oscillator | free | coupled (default oscillator)")
    p.add_argument("--times", help="comma-separated times, e.g. 0,0.7,pi/2")

    sub.add_parser("selftest", parents=[common], help="run the embedded acceptance checks")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](cfg)
    except (PhaseCapError, ValueError, OSError) as exc:
        err = {"error": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(err) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
