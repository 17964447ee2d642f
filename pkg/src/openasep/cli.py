"""Command-line driver.

Every subcommand reads model parameters from flags and/or an INI-style
``key = value`` file (``--config``); flags win over the file. Reports carry
the library version and the resolved configuration, and are byte-identical
for identical inputs.

Exit codes: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from . import __version__
from .core import (
    CapacityError,
    ConfigDist,
    NumericalError,
    ValidationError,
    WasepSpec,
    bernoulli_product,
    config_to_string,
    liggett_limit_density,
    make_params,
    params_from_uv,
    project,
    tv_distance,
    wasep_params,
)

COMMANDS = ("exact", "motzkin", "polymer", "shock", "mpa", "sim", "lpp", "compare")
THREADS_ENV = "OPENASEP_THREADS"


def _interval(text: str) -> tuple[int, int]:
    try:
        a, b = (int(s) for s in str(text).split(":"))
    except ValueError:
        raise ValueError(f"expected a:b, got {text!r}") from None
    return a, b


def _int_list(text: str) -> list[int]:
    return [int(s) for s in str(text).replace(" ", "").split(",") if s]


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    s = str(text).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


def _rho(text):
    return "auto" if str(text) == "auto" else float(text)


# key -> (parser, help)
KEYS: dict[str, tuple[Callable[[Any], Any], str]] = {
    "n": (int, "segment length"),
    "q": (float, "left hop rate"),
    "alpha": (float, "entry rate"),
    "beta": (float, "exit rate"),
    "u": (float, "boundary parameter u (alternative to alpha)"),
    "v": (float, "boundary parameter v (alternative to beta)"),
    "epsilon": (float, "weak-asymmetry exponent; with c_q sets q from n"),
    "c_q": (float, "weak-asymmetry constant"),
    "k": (int, "finite representation order, u v q^k = 1"),
    "interval": (_interval, "sites a:b (1-based, inclusive)"),
    "mode": (str, "polymer mode: constraint or free"),
    "i": (int, "polymer event position"),
    "j": (int, "polymer event height"),
    "m": (int, "return level for return-time moments"),
    "seed": (int, "random seed"),
    "samples": (int, "number of samples or replicas"),
    "burn_in": (float, "simulation burn-in time"),
    "gap": (float, "time between samples"),
    "t": (float, "evolution time"),
    "init": (str, "initial configuration, site 1 leftmost"),
    "h_max": (int, "height cap for transfer contraction"),
    "signed": (_bool, "allow signed transfer weights"),
    "against": (str, "compare target: bernoulli or exact"),
    "rho": (_rho, "Bernoulli density or 'auto'"),
    "n_values": (_int_list, "comma-separated sweep of n"),
    "width": (int, "centered interval width for sweeps"),
    "format": (str, "csv or json"),
    "output": (str, "output path (default stdout)"),
}

DEFAULTS = {
    "format": "csv",
    "seed": 0,
    "mode": "constraint",
    "signed": False,
    "against": "bernoulli",
    "rho": "auto",
    "width": 4,
}


@dataclass
class ExperimentConfig:
    command: str
    values: dict[str, Any] = field(default_factory=dict)
    threads: int = 1
    dry_run: bool = False

    def get(self, key, default=None):
        return self.values.get(key, default)

    def require(self, key):
        if key not in self.values:
            raise ValidationError(f"missing required key '{key}'", key)
        return self.values[key]

    def echo(self) -> dict[str, Any]:
        out = {"command": self.command, "threads": self.threads}
        for k in sorted(self.values):
            v = self.values[k]
            out[k] = f"{v[0]}:{v[1]}" if k == "interval" else v
        return out


def _coerce(key: str, raw):
    if key not in KEYS:
        raise ValidationError(f"unknown key '{key}'", key)
    try:
        return KEYS[key][0](raw)
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"bad value for '{key}': {exc}", key) from None


def read_config_file(path: str) -> dict[str, Any]:
    parser = configparser.ConfigParser(comment_prefixes=("#",), inline_comment_prefixes=("#",))
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[run]\n" + fh.read())
    return {k: _coerce(k, v) for k, v in parser["run"].items()}


class _Parser(argparse.ArgumentParser):
    """Usage errors surface as validation errors (exit code 1)."""

    def error(self, message):
        raise ValidationError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="INI-style key = value file")
    common.add_argument("--dry-run", action="store_true", help="print the resolved config and exit")
    for key, (_, help_text) in KEYS.items():
        common.add_argument("--" + key.replace("_", "-"), dest=key, default=argparse.SUPPRESS, help=help_text)
    parser = _Parser(prog="openasep", description="Open ASEP stationary measures")
    parser.add_argument("--version", action="version", version=f"openasep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd in COMMANDS:
        sub.add_parser(cmd, parents=[common])
    return parser


def parse_config(argv: list[str] | None = None, stderr=None) -> ExperimentConfig:
    stderr = stderr or sys.stderr
    ns = build_parser().parse_args(argv)
    flags = {k: _coerce(k, v) for k, v in vars(ns).items() if k in KEYS}
    values = dict(DEFAULTS)
    if ns.config:
        file_values = read_config_file(ns.config)
        for k, v in file_values.items():
            if k in flags and flags[k] != v:
                print(f"warning: flag --{k.replace('_', '-')}={flags[k]!r} overrides config value {v!r}", file=stderr)
        values.update(file_values)
    values.update(flags)
    if values["format"] not in ("csv", "json"):
        raise ValidationError(f"format must be csv or json, got {values['format']!r}", "format")
    threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return ExperimentConfig(ns.command, values, threads, ns.dry_run)


def resolve_params(cfg: ExperimentConfig, n: int | None = None):
    n = cfg.require("n") if n is None else n
    if "epsilon" in cfg.values or "c_q" in cfg.values:
        spec = WasepSpec(cfg.require("epsilon"), cfg.require("c_q"), cfg.require("u"), cfg.require("v"))
        return wasep_params(spec, n)
    q = cfg.require("q")
    if "alpha" in cfg.values and "beta" in cfg.values:
        return make_params(n, q, cfg.values["alpha"], cfg.values["beta"])
    u, v, k = cfg.get("u"), cfg.get("v"), cfg.get("k")
    if "alpha" in cfg.values:
        u = (1 - q) / cfg.values["alpha"] - 1
    if "beta" in cfg.values:
        v = (1 - q) / cfg.values["beta"] - 1
    if k is not None and q > 0:
        if u is None and v is not None:
            u = 1.0 / (v * q**k)
        elif v is None and u is not None:
            v = 1.0 / (u * q**k)
    if u is None:
        raise ValidationError("missing required key 'alpha' (or 'u')", "alpha")
    if v is None:
        raise ValidationError("missing required key 'beta' (or 'v')", "beta")
    return params_from_uv(n, q, u, v)


# ---------------------------------------------------------------------------
# Report emission


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


@dataclass
class Report:
    columns: list[str]
    rows: list[list[Any]]
    extra: dict[str, Any] = field(default_factory=dict)


def _dist_report(d: ConfigDist, extra=None) -> Report:
    rows = [[config_to_string(c, d.length), float(p)] for c, p in enumerate(d.weights)]
    ex = {"distribution": {c: p for c, p in rows}}
    ex.update(extra or {})
    return Report(["config", "probability"], rows, ex)


def render(cfg: ExperimentConfig, rep: Report) -> str:
    echo = cfg.echo()
    if cfg.get("format") == "json":
        body = {"version": f"openasep {__version__}", "config": echo, "columns": rep.columns, "rows": rep.rows}
        body.update(rep.extra)
        return json.dumps(body, sort_keys=True, indent=2) + "\n"
    lines = [f"# openasep {__version__}"]
    lines.append("# config: " + " ".join(f"{k}={_fmt(v)}" for k, v in echo.items()))
    for k in sorted(rep.extra):
        if k != "distribution":
            lines.append(f"# {k}: {json.dumps(rep.extra[k], sort_keys=True)}")
    lines.append(",".join(rep.columns))
    lines += [",".join(_fmt(x) for x in row) for row in rep.rows]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands


def _interval_or_full(cfg, n):
    return cfg.get("interval") or (1, n)


def cmd_exact(cfg):
    from .oracle import current_exact, stationary_exact

    p = resolve_params(cfg)
    d = stationary_exact(p)
    extra = {"current": current_exact(d, p, 1) if p.n > 1 else None}
    return _dist_report(project(d, _interval_or_full(cfg, p.n)), extra)


def cmd_motzkin(cfg):
    from .motzkin import partition_function, projected_stationary_transfer

    p = resolve_params(cfg)
    d = projected_stationary_transfer(p, _interval_or_full(cfg, p.n), cfg.get("h_max"), cfg.get("signed"))
    z = partition_function(p.n, p)
    return _dist_report(d, {"partition_function": z.to_json()})


def cmd_polymer(cfg):
    from .polymer import build_transfer_tables, event_prob_a, height_marginal, return_time_moment

    p = resolve_params(cfg)
    t = build_transfer_tables(p.n, p, cfg.get("mode"), cfg.get("h_max"))
    extra = {"log_z": t.log_z, "free_energy": t.log_z / p.n if p.n else 0.0}
    if "i" in cfg.values and "j" in cfg.values:
        extra["event_prob"] = event_prob_a(t, cfg.values["i"], cfg.values["j"])
    if "m" in cfg.values:
        extra["return_time_mean"] = return_time_moment(p, cfg.values["m"], 1, p.n, cfg.get("mode"))
    rows = []
    for pos in range(p.n + 1):
        for h, pr in enumerate(height_marginal(t, pos)):
            if pr > 0:
                rows.append([pos, h, float(pr)])
    return Report(["position", "height", "probability"], rows, extra)


def cmd_shock(cfg):
    from .shock import bulk_densities, fit_mixture_coefficients, stationary_via_shock_mixture

    p = resolve_params(cfg)
    k = cfg.require("k")
    d = stationary_via_shock_mixture(p, k)
    s = bulk_densities(p, k)
    extra = {"rho": s.rho.tolist()}
    if k > 0:
        fit = fit_mixture_coefficients(p, k)
        extra["coefficients"] = [
            {"n_shocks": m, "coefficient": float(c)} for m, c in enumerate(fit.closed_form)
        ]
        extra["fitted_coefficients"] = json.loads(fit.to_json())
    return _dist_report(project(d, _interval_or_full(cfg, p.n)), extra)


def cmd_mpa(cfg):
    from .shock import mpa_matrices, stationary_via_mpa, verify_mpa_relations

    p = resolve_params(cfg)
    k = cfg.require("k")
    d = stationary_via_mpa(p, k)
    rep = verify_mpa_relations(mpa_matrices(p, k), p)
    return _dist_report(project(d, _interval_or_full(cfg, p.n)), {"relations": rep.__dict__})


def cmd_sim(cfg):
    from .simulator import empirical_projected

    p = resolve_params(cfg)
    d = empirical_projected(
        p,
        _interval_or_full(cfg, p.n),
        cfg.require("samples"),
        cfg.get("burn_in", 0.0),
        cfg.get("gap"),
        cfg.get("seed"),
        cfg.get("init"),
    )
    return _dist_report(d)


def cmd_lpp(cfg):
    from .lpp import interface_config_law

    p = resolve_params(cfg)
    if p.q != 0:
        raise ValidationError("the growth representation needs q = 0", "q")
    init = cfg.get("init") or "0" * p.n
    d = interface_config_law(p.n, p.alpha, p.beta, init, cfg.require("t"), cfg.require("samples"), cfg.get("seed"))
    return _dist_report(d)


def cmd_compare(cfg):
    from .motzkin import projected_stationary_transfer
    from .oracle import stationary_exact

    against = cfg.get("against")
    if against not in ("bernoulli", "exact"):
        raise ValidationError(f"unknown comparison target {against!r}", "against")
    n_values = cfg.get("n_values") or [cfg.get("n", 50)]
    width = cfg.get("width")
    rows = []
    for n in n_values:
        p = resolve_params(cfg, n)
        a = (n - width) // 2 + 1
        interval = cfg.get("interval") or (a, a + width - 1)
        mu = projected_stationary_transfer(p, interval, cfg.get("h_max"), cfg.get("signed"))
        if against == "bernoulli":
            rho = cfg.get("rho")
            if rho == "auto":
                rho = liggett_limit_density(p)
                if rho is None:
                    raise ValidationError("rho auto is undefined on a phase boundary", "rho")
            target = bernoulli_product(rho, mu.length)
        else:
            target = project(stationary_exact(p), interval)
        rows.append([n, tv_distance(mu, target)])
    return Report(["n", "tv_distance"], rows)


DISPATCH = {
    "exact": cmd_exact,
    "motzkin": cmd_motzkin,
    "polymer": cmd_polymer,
    "shock": cmd_shock,
    "mpa": cmd_mpa,
    "sim": cmd_sim,
    "lpp": cmd_lpp,
    "compare": cmd_compare,
}


def run(cfg: ExperimentConfig, stdout=None) -> int:
    stdout = stdout or sys.stdout
    if cfg.dry_run:
        print(json.dumps({"version": f"openasep {__version__}", "config": cfg.echo()}, sort_keys=True, indent=2), file=stdout)
        return 0
    text = render(cfg, DISPATCH[cfg.command](cfg))
    out = cfg.get("output")
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
        return run(cfg)
    except (ValidationError, CapacityError) as exc:
        field_name = getattr(exc, "field", None)
        suffix = f" [{field_name}]" if field_name else ""
        print(f"error: {exc}{suffix}", file=sys.stderr)
        return 1
    except (NumericalError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
