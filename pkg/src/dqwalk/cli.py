"""Command-line front end.

Every command resolves one configuration from defaults, an optional JSON
file (``--config``) and flags, in that order of precedence. Outputs embed
the resolved configuration and the tool version: CSV as ``#`` comment lines
above the header, JSON under ``"config"``. Passing such an output back as
``--config`` reproduces its numeric payload exactly.

Exit codes: 0 success, 2 invalid configuration, 3 numerical-consistency
failure, 4 resource limit, 1 any other library error.
"""

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from . import __version__
from .errors import ValidationError, WalkError
from .evolution import (
    convergence_study,
    distribution_density_matrix,
    distribution_fourier,
    trajectories,
)
from .limit import (
    build_limit_model,
    critical_exponent,
    density_mass,
    limit_char_fn,
    moments_closed,
    moments_numeric,
    track_root,
    variance_closed_form,
)
from .spectral import CoinClass, classify, peripheral_gap, u2_condition
from .superop import Superoperator
from .walk import InitialCoinState, coin_from_u2, coin_o2, projective_kraus

COMMANDS = ("evolve", "spectrum", "limit", "moments", "exponent", "converge", "trajectories")

_ANGLE = re.compile(r"^\s*([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-])?\s*\*?\s*pi\s*$")


def parse_angle(s):
    """Radians from ``"0.7"``, ``"0.25pi"``, ``"pi"`` or ``"-0.5pi"``."""
    if isinstance(s, (int, float)) and not isinstance(s, bool):
        return float(s)
    text = str(s).strip()
    m = _ANGLE.match(text)
    if m:
        coef = m.group(1)
        if coef in ("+", "-"):
            coef += "1"
        return float(coef or 1.0) * math.pi
    try:
        return float(text)
    except ValueError:
        raise ValidationError(f"cannot parse angle {s!r}; use radians or '<x>pi'", "theta") from None


def _float_list(value, name):
    if isinstance(value, str):
        value = [v for v in value.split(",") if v.strip()]
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValidationError(f"expected a comma-separated list of numbers, got {value!r}", name) from None


def _int_list(value, name):
    out = _float_list(value, name)
    if any(v != int(v) for v in out):
        raise ValidationError(f"expected integers, got {value!r}", name)
    return [int(v) for v in out]


def _int(value, name):
    try:
        f = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"expected an integer, got {value!r}", name) from None
    if isinstance(value, bool) or not math.isfinite(f) or f != int(f):
        raise ValidationError(f"expected an integer, got {value!r}", name)
    return int(f)


def _opt_int(value, name):
    return None if value is None else _int(value, name)


def _float(value, name):
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"expected a number, got {value!r}", name) from None


def _opt_float(value, name):
    return None if value is None else _float(value, name)


def _coin_matrix(value, name):
    if value is None:
        return None
    if isinstance(value, str):
        try:
            value = json.loads(value)
        except json.JSONDecodeError:
            raise ValidationError("coin must be a JSON 2x2 matrix", name) from None

    def entry(v):
        if isinstance(v, (list, tuple)) and len(v) == 2:
            return [float(v[0]), float(v[1])]
        c = complex(v.replace(" ", "")) if isinstance(v, str) else complex(v)
        return [c.real, c.imag]

    try:
        rows = [[entry(v) for v in row] for row in value]
    except (TypeError, ValueError):
        raise ValidationError("coin entries must be numbers, 'a+bj' strings or [re, im] pairs", name) from None
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise ValidationError("coin must be a 2x2 matrix", name)
    return rows


def _choice(options):
    def parse(value, name):
        if value not in options:
            raise ValidationError(f"must be one of {', '.join(options)}; got {value!r}", name)
        return value
    return parse


def _angle_field(value, name):
    parse_angle(value)
    return value if isinstance(value, str) else float(value)


def _init_field(value, name):
    text = str(value).strip()
    if text in ("R", "L", "mixed"):
        return text
    _float_list(text, name)
    return text


# name -> (normalizer, default)
FIELDS = {
    "theta": (_angle_field, "0.25pi"),
    "det": (_int, -1),
    "coin": (_coin_matrix, None),
    "p": (_float, 0.5),
    "init": (_init_field, "R"),
    "t": (_int, 10),
    "t_list": (_int_list, [100, 400, 1600]),
    "k_grid": (_opt_int, None),
    "nu_list": (_float_list, [0.5, 1.0, 2.0]),
    "k": (_opt_float, None),
    "seed": (_int, 0),
    "n_samples": (_int, 10000),
    "max_order": (_int, 6),
    "order": (_int, 2),
    "p_list": (_float_list, [1e-3, 1e-4, 1e-5]),
    "method": (_choice(("fourier", "density_matrix")), "fourier"),
    "scaling": (_choice(("auto", "diffusive", "ballistic")), "auto"),
    "track": (lambda v, n: bool(v), False),
    "threads": (_int, 1),
    "format": (_choice(("csv", "json")), "csv"),
}


def normalize(raw):
    """Validate field names and types; returns a complete config dict."""
    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ValidationError(f"unknown field(s): {', '.join(unknown)}", "config")
    out = {}
    for name, (norm, default) in FIELDS.items():
        out[name] = norm(raw[name], name) if name in raw and raw[name] is not None else default
    return out


def load_config_file(path):
    """Fields from a JSON config file or from a previous CSV/JSON output."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}", "config") from None
    if text.startswith("#"):
        for line in text.splitlines():
            if line.startswith("# config: "):
                data = json.loads(line[len("# config: "):])
                break
        else:
            raise ValidationError(f"{path} has no embedded '# config:' line", "config")
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path} is not valid JSON: {exc.msg}", "config") from None
        if isinstance(data, dict) and "config" in data and "version" in data:
            data = data["config"]
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object", "config")
    data = dict(data)
    data.pop("command", None)
    return data


class Resolved:
    """Library objects built from a normalized config."""

    def __init__(self, cfg):
        self.cfg = cfg
        if cfg["coin"] is not None:
            m = np.array([[complex(*e) for e in row] for row in cfg["coin"]])
            self.coin = coin_from_u2(m)
        else:
            if cfg["det"] not in (1, -1):
                raise ValidationError(f"must be +1 or -1, got {cfg['det']}", "det")
            self.coin = coin_o2(parse_angle(cfg["theta"]), cfg["det"])
        self.kraus = projective_kraus(cfg["p"])
        self.op = Superoperator(self.coin, self.kraus)
        self.init = _build_init(cfg["init"])
        if cfg["threads"] < 0:
            raise ValidationError("must be >= 0", "threads")

    @property
    def theta(self):
        return self.coin.theta

    @property
    def det_sign(self):
        return self.coin.det_sign


def _build_init(text):
    if text == "R":
        return InitialCoinState.right()
    if text == "L":
        return InitialCoinState.left()
    if text == "mixed":
        return InitialCoinState.mixed()
    r = _float_list(text, "init")
    if len(r) != 3:
        raise ValidationError("Bloch vector needs three components x,y,z", "init")
    return InitialCoinState.from_bloch(r)


def _check_command(command, cfg):
    if command in ("evolve", "trajectories") and cfg["t"] < 1:
        raise ValidationError("must be >= 1", "t")
    if command == "trajectories" and cfg["n_samples"] < 1:
        raise ValidationError("must be >= 1", "n_samples")
    if command == "converge" and (not cfg["t_list"] or min(cfg["t_list"]) < 1):
        raise ValidationError("needs positive times", "t_list")
    if command == "moments" and cfg["max_order"] < 0:
        raise ValidationError("must be >= 0", "max_order")
    if cfg["k_grid"] is not None and cfg["k_grid"] < 8:
        raise ValidationError("must be >= 8", "k_grid")


class Output:
    """Accumulates rows for CSV or a nested result for JSON."""

    def __init__(self, command, cfg):
        self.command = command
        self.cfg = cfg
        self.columns = []
        self.rows = []
        self.result = {}
        self.warnings = []

    def render(self):
        embedded = {"command": self.command, **self.cfg}
        if self.cfg["format"] == "json":
            doc = {"tool": "dqwalk", "version": __version__, "command": self.command,
                   "config": embedded, "result": self.result}
            return json.dumps(doc, indent=2, allow_nan=True) + "\n"
        buf = io.StringIO()
        buf.write(f"# dqwalk {__version__}\n")
        buf.write("# config: " + json.dumps(embedded, separators=(",", ":")) + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for row in self.rows:
            w.writerow(["" if v is None else _fmt(v) for v in row])
        return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _num(x):
    return None if x is None else float(x)


def _k_grid(cfg, default=256):
    return cfg["k_grid"] if cfg["k_grid"] is not None else default


def _distribution_output(out, table, res, seed):
    cfg = res.cfg
    out.columns = ["x", "p", "method", "t", "theta", "det_sign", "p_dec", "seed"]
    for x, p in table.rows():
        out.rows.append([x, p, table.method, table.t, _num(res.theta), res.det_sign, cfg["p"], seed])
    out.result = {
        "t": table.t,
        "method": table.method,
        "total": table.total,
        "clipped_mass": table.clipped_mass,
        "imag_residue": table.imag_residue,
        "meta": table.meta,
        "rows": [{"x": x, "p": p} for x, p in table.rows()],
    }
    if table.clipped_mass > 1e-14:
        out.warnings.append(f"clipped {table.clipped_mass:.3e} of negative probability mass")


def cmd_evolve(res, out):
    cfg = res.cfg
    if cfg["method"] == "fourier":
        table = distribution_fourier(res.op, cfg["t"], res.init, cfg["k_grid"], cfg["threads"])
    else:
        table = distribution_density_matrix(res.op, cfg["t"], res.init)
    _distribution_output(out, table, res, None)


def cmd_trajectories(res, out):
    cfg = res.cfg
    table = trajectories(res.op, cfg["t"], res.init, cfg["n_samples"], cfg["seed"], max(1, cfg["threads"]))
    _distribution_output(out, table, res, cfg["seed"])


def cmd_spectrum(res, out):
    cfg = res.cfg
    if cfg["k"] is not None:
        ks = [cfg["k"]]
    elif cfg["k_grid"] is not None:
        ks = list(2 * np.pi * np.arange(cfg["k_grid"]) / cfg["k_grid"])
    else:
        ks = [0.0]
    reports = [classify(res.coin, cfg["p"], k) for k in ks]
    out.columns = ["k", "index", "re", "im", "modulus", "theorem_applies", "dim_one", "coin_class"]
    for rep in reports:
        for i, lam in enumerate(rep.eigenvalues):
            out.rows.append([rep.k, i, lam.real, lam.imag, abs(lam), rep.theorem_applies, rep.dim_one,
                             rep.coin_class.value])
    out.result = {
        "theorem_applies": all(r.theorem_applies for r in reports),
        "dim_one": max(r.dim_one for r in reports),
        "has_minus_one": any(r.has_minus_one for r in reports),
        "coin_class": reports[0].coin_class.value,
        "reports": [r.to_dict() for r in reports],
    }
    if cfg["k_grid"] is not None and cfg["k"] is None:
        out.result["peripheral_gap"] = peripheral_gap(res.coin, cfg["p"], cfg["k_grid"])


def cmd_limit(res, out):
    cfg = res.cfg
    model = build_limit_model(res.coin, cfg["p"], _k_grid(cfg))
    out.columns = ["k", "variance", "variance_closed_form"]
    if cfg["track"]:
        out.columns.append("variance_tracked")
        tracked = [track_root(res.op, k).z0_double_prime_0.real for k in model.k]
    for i, k in enumerate(model.k):
        row = [k, model.variance[i], _closed_value(model, k) if model.closed_form else None]
        if cfg["track"]:
            row.append(tracked[i])
        out.rows.append(row)
    nus = cfg["nu_list"]
    out.result = {
        "k_grid": model.k_grid,
        "closed_form_available": model.closed_form is not None,
        "k": [float(k) for k in model.k],
        "variance": [float(v) for v in model.variance],
        "char_fn": [{"nu": nu, "value": float(limit_char_fn(model, nu))} for nu in nus],
        "density_mass": density_mass(model),
    }
    if cfg["track"]:
        out.result["variance_tracked"] = [float(v) for v in tracked]


def _closed_value(model, k):
    theta, q, s = model.closed_form
    return float(variance_closed_form(theta, q, k, s))


def cmd_moments(res, out):
    cfg = res.cfg
    model = build_limit_model(res.coin, cfg["p"], _k_grid(cfg))
    num = moments_numeric(model, cfg["max_order"])
    closed = None
    if model.closed_form is not None:
        theta, q, _ = model.closed_form
        closed = moments_closed(theta, q, cfg["max_order"])
    out.columns = ["order", "moment", "moment_closed_form", "t_n", "normal_moment"]
    rows = []
    for m in range(cfg["max_order"] + 1):
        n, even = m // 2, m % 2 == 0
        row = {
            "order": m,
            "moment": num.moment(m),
            "moment_closed_form": None if closed is None else closed.moment(m),
            "t_n": float(closed.tn_values[n]) if (closed is not None and even) else None,
            "normal_moment": float(closed.normal_values[n]) if (closed is not None and even) else None,
        }
        rows.append(row)
        out.rows.append([row[c] for c in out.columns])
    out.result = {"rows": rows}


def cmd_exponent(res, out):
    cfg = res.cfg
    if res.theta is None:
        raise ValidationError("critical exponents need an O(2) coin given by --theta", "coin")
    p = cfg["p_list"]
    slope = critical_exponent(res.theta, cfg["order"], p)
    values = [moments_closed(res.theta, 1 - pi, cfg["order"]).moment(cfg["order"]) for pi in p]
    out.columns = ["p", "moment", "order", "slope"]
    for pi, v in zip(p, values):
        out.rows.append([pi, v, cfg["order"], slope])
    out.result = {"order": cfg["order"], "slope": slope,
                  "rows": [{"p": pi, "moment": v} for pi, v in zip(p, values)]}


def cmd_converge(res, out):
    cfg = res.cfg
    scaling = cfg["scaling"]
    if scaling == "auto":
        scaling = "ballistic" if u2_condition(res.coin) is CoinClass.DIAGONAL else "diffusive"
    model = None
    if scaling == "diffusive":
        model = build_limit_model(res.coin, cfg["p"], 256)
    rep = convergence_study(res.op, res.init, cfg["t_list"], cfg["nu_list"], model,
                            cfg["k_grid"], scaling, cfg["threads"])
    out.columns = ["t", "nu", "err", "max_err"]
    for row in rep.rows:
        for nu, e in zip(rep.nu_list, row["per_nu"]):
            out.rows.append([row["t"], nu, e, row["max_err"]])
    out.result = {"scaling": scaling, "decreasing": rep.decreasing, "nu_list": rep.nu_list, "rows": rep.rows}


_KIND = {2: "invalid configuration", 3: "numerical failure", 4: "resource limit"}

HANDLERS = {
    "evolve": cmd_evolve,
    "spectrum": cmd_spectrum,
    "limit": cmd_limit,
    "moments": cmd_moments,
    "exponent": cmd_exponent,
    "converge": cmd_converge,
    "trajectories": cmd_trajectories,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="dqwalk", description="Decoherent quantum walks on the integer line.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=S, help="JSON config, or a previous CSV/JSON output")
        p.add_argument("--output", "-o", default=S, help="output path (default stdout)")
        p.add_argument("--format", default=S, choices=["csv", "json"])
        p.add_argument("--theta", default=S, help="coin angle: radians or '<x>pi'")
        p.add_argument("--det", default=S, type=int, help="coin determinant sign, +1 or -1")
        p.add_argument("--coin", default=S, help="explicit coin as a JSON 2x2 matrix")
        p.add_argument("--p", default=S, type=float, help="decoherence rate in [0, 1]")
        p.add_argument("--init", default=S, help="R, L, mixed or a Bloch vector x,y,z")
        p.add_argument("--k-grid", dest="k_grid", default=S, type=int)
        p.add_argument("--threads", default=S, type=int, help="worker threads, 0 = auto")
        if name in ("evolve", "trajectories"):
            p.add_argument("--t", default=S, type=int)
        if name == "evolve":
            p.add_argument("--method", default=S, choices=["fourier", "density_matrix"])
        if name == "trajectories":
            p.add_argument("--seed", default=S, type=int)
            p.add_argument("--n-samples", dest="n_samples", default=S, type=int)
        if name == "spectrum":
            p.add_argument("--k", default=S, type=float)
        if name == "limit":
            p.add_argument("--track", default=S, action="store_true",
                           help="also report z0''(0) from root continuation")
        if name in ("limit", "converge"):
            p.add_argument("--nu-list", dest="nu_list", default=S)
        if name == "moments":
            p.add_argument("--max-order", dest="max_order", default=S, type=int)
        if name == "exponent":
            p.add_argument("--order", default=S, type=int)
            p.add_argument("--p-list", dest="p_list", default=S)
        if name == "converge":
            p.add_argument("--t-list", dest="t_list", default=S)
            p.add_argument("--scaling", default=S, choices=["auto", "diffusive", "ballistic"])
    return parser


def run(argv=None):
    """Parse, validate and compute; returns the filled :class:`Output` and the output path."""
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    path = args.pop("config", None)
    output = args.pop("output", None)
    raw = load_config_file(path) if path else {}
    raw.update(args)
    cfg = normalize(raw)
    _check_command(command, cfg)
    res = Resolved(cfg)
    out = Output(command, cfg)
    HANDLERS[command](res, out)
    return out, output


def main(argv=None):
    try:
        out, path = run(argv)
    except WalkError as exc:
        kind = _KIND.get(type(exc).exit_code, "error")
        print(f"dqwalk: {kind}: {exc}", file=sys.stderr)
        return exc.exit_code
    for w in out.warnings:
        print(f"dqwalk: warning: {w}", file=sys.stderr)
    text = out.render()
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
