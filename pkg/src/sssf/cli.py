"""Command-line front end.

Models are JSON files::

    {"kind": "h-triple", "alpha": 1, "beta": 0,
     "atoms": [{"pos": 0, "mass": 1}], "slabs": []}
    {"kind": "nu-atomic", "atoms": [{"pos": -1, "mass": 0.5}, {"pos": 1, "mass": 0.5}]}

Exit codes: 0 success, 1 failed verification verdict, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .averaging import SweepConfig, as_triple, default_config, default_window, sweep, theorem_check
from .herglotz import HerglotzError, HerglotzTriple, evaluate
from .measure import MeasureError, make_measure
from .rankone import RankOneModel, build_model, secular_eigen_many

log = logging.getLogger(__name__)

KINDS = ("h-triple", "nu-atomic")
_KEYS = {
    "h-triple": {"kind", "alpha", "beta", "atoms", "slabs"},
    "nu-atomic": {"kind", "atoms"},
}


class ConfigError(ValueError):
    def __init__(self, message: str, field: Optional[str] = None, line: Optional[int] = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class ModelConfig:
    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    atoms: tuple[tuple[float, float], ...] = ()
    slabs: tuple[tuple[float, float, float], ...] = ()

    def to_model(self) -> Union[HerglotzTriple, RankOneModel]:
        if self.kind == "nu-atomic":
            return build_model(make_measure(self.atoms))
        return HerglotzTriple(self.alpha, self.beta, make_measure(self.atoms, self.slabs))


def _number(value, field: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {type(value).__name__}", field)
    if not math.isfinite(value):
        raise ConfigError("must be finite", field)
    return float(value)


def _records(raw, field: str, names: Sequence[str]) -> list[tuple[float, ...]]:
    if not isinstance(raw, list):
        raise ConfigError("expected a list", field)
    out = []
    for i, item in enumerate(raw):
        where = f"{field}[{i}]"
        if not isinstance(item, dict):
            raise ConfigError("expected an object", where)
        extra = set(item) - set(names)
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)}", where)
        missing = [k for k in names if k not in item]
        if missing:
            raise ConfigError(f"missing key(s) {missing}", where)
        out.append(tuple(_number(item[k], f"{where}.{k}") for k in names))
    return out


def _line_of(text: str, key: str) -> Optional[int]:
    needle = f'"{key}"'
    for no, line in enumerate(text.splitlines(), 1):
        if needle in line:
            return no
    return None


def parse_config(text: str) -> ModelConfig:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg} (column {exc.colno})", line=exc.lineno) from None
    if not isinstance(data, dict):
        raise ConfigError("top level must be an object")
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"kind must be one of {list(KINDS)}", "kind", _line_of(text, "kind"))
    unknown = set(data) - _KEYS[kind]
    if unknown:
        key = sorted(unknown)[0]
        raise ConfigError(f"unknown key for kind {kind!r}", key, _line_of(text, key))

    def located(fn, key):
        try:
            return fn()
        except ConfigError as exc:
            raise ConfigError(str(exc).split(": ", 1)[-1], exc.field, _line_of(text, key)) from None

    if kind == "nu-atomic":
        if "atoms" not in data:
            raise ConfigError("required", "atoms")
        atoms = located(lambda: _records(data["atoms"], "atoms", ("pos", "mass")), "atoms")
        try:
            nu = make_measure(atoms)
            build_model(nu)
        except (MeasureError, ValueError) as exc:
            raise ConfigError(str(exc), "atoms", _line_of(text, "atoms")) from None
        return ModelConfig(kind, atoms=nu.atoms)

    for key in ("alpha", "beta"):
        if key not in data:
            raise ConfigError("required", key)
    alpha = located(lambda: _number(data["alpha"], "alpha"), "alpha")
    beta = located(lambda: _number(data["beta"], "beta"), "beta")
    if alpha < 0:
        raise ConfigError("alpha must be ≥ 0", "alpha", _line_of(text, "alpha"))
    atoms = located(lambda: _records(data.get("atoms", []), "atoms", ("pos", "mass")), "atoms")
    slabs = located(lambda: _records(data.get("slabs", []), "slabs", ("a", "b", "height")), "slabs")
    try:
        mu = make_measure(atoms, slabs)
        HerglotzTriple(alpha, beta, mu)
    except (MeasureError, HerglotzError) as exc:
        raise ConfigError(str(exc)) from None
    return ModelConfig(kind, alpha, beta, mu.atoms, mu.slabs)


def emit_config(cfg: ModelConfig) -> str:
    data: dict = {"kind": cfg.kind}
    if cfg.kind == "h-triple":
        data["alpha"] = cfg.alpha
        data["beta"] = cfg.beta
    data["atoms"] = [{"pos": p, "mass": m} for p, m in cfg.atoms]
    if cfg.kind == "h-triple":
        data["slabs"] = [{"a": a, "b": b, "height": c} for a, b, c in cfg.slabs]
    return json.dumps(data, indent=2) + "\n"


def load_config(path: str) -> ModelConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read model file: {exc.strerror}", path) from None
    return parse_config(text)


# --- CSV ------------------------------------------------------------------

def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".17g")


def write_csv(path: str, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(x) for x in row) + "\n")


def _pair(text: str, what: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"{what} must look like A:B")
    try:
        a, b = float(parts[0]), float(parts[1])
    except ValueError:
        raise argparse.ArgumentTypeError(f"{what} must look like A:B") from None
    if not (math.isfinite(a) and math.isfinite(b)):
        raise argparse.ArgumentTypeError(f"{what} must be finite")
    return a, b


def _range(text: str) -> tuple[float, float]:
    lo, hi = _pair(text, "range")
    if not lo < hi:
        raise argparse.ArgumentTypeError(f"empty range {text}")
    return lo, hi


def _complex(text: str) -> complex:
    re, im = _pair(text, "z")
    return complex(re, im)


def _positive(text: str) -> int:
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


# --- commands ---------------------------------------------------------------

def cmd_eval(args) -> int:
    h = as_triple(load_config(args.model).to_model())
    w = evaluate(h, args.z)
    print(f"{fmt(w.real)},{fmt(w.imag)}")
    return 0


def _oracle_column(h: HerglotzTriple, centers: np.ndarray) -> np.ndarray:
    out = np.full(centers.size, math.nan)
    off = np.array([not h.mu.in_closed_support(c) for c in centers], dtype=bool)
    vals = h.real_values(centers[off])
    out[off] = ((vals > 0) & (vals < 1)).astype(float)
    return out


def cmd_sweep(args) -> int:
    model = load_config(args.model).to_model()
    lo, hi = args.range
    cfg = SweepConfig(n_r=args.r_steps, lam_lo=lo, lam_hi=hi, n_bins=args.bins, backend=args.backend)
    grid = sweep(model, cfg)
    oracle = _oracle_column(as_triple(model), grid.centers)
    err = np.abs(grid.values - oracle)
    write_csv(args.out, ("lambda", "density", "oracle", "abs_err"),
              zip(grid.centers, grid.values, oracle, err))
    return 0


def cmd_eigenflow(args) -> int:
    cfg = load_config(args.model)
    if cfg.kind != "nu-atomic":
        raise ConfigError("eigenflow needs a nu-atomic model", "kind")
    model = cfg.to_model()
    rs = np.arange(args.r_steps + 1) / args.r_steps
    lam, mass = secular_eigen_many(model, rs)
    rows = ((r, j, lam[i, j], mass[i, j]) for i, r in enumerate(rs) for j in range(model.n))
    write_csv(args.out, ("r", "index", "lambda", "mass"), rows)
    return 0


def cmd_boundary(args) -> int:
    if args.eps_min_exp > args.eps_max_exp:
        raise ConfigError("--eps-min-exp must not exceed --eps-max-exp")
    h = as_triple(load_config(args.model).to_model())
    eps = 2.0 ** -np.arange(args.eps_min_exp, args.eps_max_exp + 1, dtype=float)
    vals = evaluate(h, args.lam + 1j * eps)
    write_csv(args.out, ("eps", "re", "im"), zip(eps, vals.real, vals.imag))
    return 0


def cmd_oracle(args) -> int:
    h = as_triple(load_config(args.model).to_model())
    lo, hi = args.range
    w = (hi - lo) / args.bins
    centers = lo + w * (np.arange(args.bins) + 0.5)
    write_csv(args.out, ("lambda", "oracle"), zip(centers, _oracle_column(h, centers)))
    return 0


def cmd_check(args) -> int:
    model = load_config(args.model).to_model()
    lo, hi = args.range if args.range else default_window(model)
    cfg = SweepConfig(n_r=args.r_steps, lam_lo=lo, lam_hi=hi, n_bins=args.bins)
    verdict = theorem_check(model, cfg, tol_sup=args.tol_sup, tol_l1=args.tol_l1, tol_mass=args.tol_mass)
    print(json.dumps(verdict.to_dict(), indent=2))
    return 0 if verdict.passed else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sssf", description=__doc__.split("\n")[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def cmd(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.add_argument("--model", required=True, help="model JSON file")
        sp.set_defaults(func=fn)
        return sp

    sp = cmd("eval", cmd_eval, "print h(z) as re,im")
    sp.add_argument("--z", type=_complex, required=True, metavar="RE:IM")

    sp = cmd("sweep", cmd_sweep, "averaged singular density on a grid")
    sp.add_argument("--r-steps", type=_positive, required=True)
    sp.add_argument("--bins", type=_positive, required=True)
    sp.add_argument("--range", type=_range, required=True, metavar="LO:HI")
    sp.add_argument("--backend", choices=("root", "secular"))
    sp.add_argument("--out", required=True)

    sp = cmd("eigenflow", cmd_eigenflow, "eigenvalue branches of H_r for r in [0, 1]")
    sp.add_argument("--r-steps", type=_positive, required=True)
    sp.add_argument("--out", required=True)

    sp = cmd("boundary", cmd_boundary, "h(lambda + i eps) for eps = 2^-k")
    sp.add_argument("--lambda", dest="lam", type=float, required=True)
    sp.add_argument("--eps-min-exp", type=int, required=True)
    sp.add_argument("--eps-max-exp", type=int, required=True)
    sp.add_argument("--out", required=True)

    sp = cmd("oracle", cmd_oracle, "0/1 limit density at bin centers")
    sp.add_argument("--bins", type=_positive, required=True)
    sp.add_argument("--range", type=_range, required=True, metavar="LO:HI")
    sp.add_argument("--out", required=True)

    sp = cmd("check", cmd_check, "verify the 0/1 density property")
    sp.add_argument("--r-steps", type=_positive, default=10_000)
    sp.add_argument("--bins", type=_positive, default=400)
    sp.add_argument("--range", type=_range, metavar="LO:HI")
    sp.add_argument("--tol-sup", type=float, default=0.05)
    sp.add_argument("--tol-l1", type=float, default=0.02)
    sp.add_argument("--tol-mass", type=float, default=0.01)
    return p


_VALUE_FLAGS = ("--range", "--z", "--lambda")


def _join_negative_values(argv: list[str]) -> list[str]:
    # argparse takes "-1.5:2" for an option; glue values onto their flag
    out, i = [], 0
    while i < len(argv):
        a = argv[i]
        if a in _VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{a}={argv[i + 1]}")
            i += 2
        else:
            out.append(a)
            i += 1
    return out


def run(argv: Optional[Sequence[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_negative_values(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except (ConfigError, MeasureError, HerglotzError, ValueError) as exc:
        print(f"sssf: error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
