"""Batch front-end: plain key=value configs dispatched to simulation runs.

Usage: ``manifold-sde <config-path> [--set key=value ...]``

Config files are UTF-8 ``key=value`` lines; ``#`` starts a comment.  The
recognized keys are command, manifold, n, p, N, alpha0, alpha1, metric_seed,
integrator, T, n_div, n_path, seed, r, cost and out; anything else is
rejected with its line number.  ``--set`` overrides are applied after the
file is parsed.

Commands:

- ``validate``:    geometry self-checks (projection, Christoffel symmetry,
                   metric compatibility, Brownian second-order operator,
                   closed-form vs. generic drift) at random points.
- ``simulate``:    Monte Carlo run; per-path CSV (``path_index,value``) at
                   ``out`` plus a one-row summary CSV next to it.
- ``compare``:     the same functional across integrators and step ladders;
                   summary CSV, inconsistent grids are flagged, not fatal.
- ``uniform``:     long-run Brownian estimate vs. direct uniform sampling
                   (compact manifolds only).
- ``heat-kernel``: spectral-series expectation for the sphere reference
                   configuration (diffusion 0.4, radius 3), no simulation.

Exit codes: 0 success, 2 step/validation failure, 3 config error.  Worker
threads are capped by MANIFOLD_SDE_THREADS (0 or unset = auto).
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass, field

import numpy as np

from .costs import COST_IDS, make_cost
from .geometry import (
    ManifoldHandle,
    brownian_ito_drift,
    brownian_soo,
    check_metric_compatibility,
    check_projection,
    soo_residual,
)
from .harness import (
    CostFunctional,
    SimulationConfig,
    compare_methods,
    simulate,
    uniform_limit_run,
)
from .integrators import INTEGRATOR_IDS, DivergenceError, StepFailureError
from .linalg import frobenius_norm
from .manifolds import MANIFOLD_NAMES, make_manifold
from .oracles import heat_expectation_s2, heat_expectation_s3
from .rng import RngStream

EXIT_OK = 0
EXIT_STEP_FAILURE = 2
EXIT_CONFIG = 3

COMMANDS = ("validate", "simulate", "compare", "uniform", "heat-kernel")

_INT_KEYS = frozenset({"n", "p", "N", "metric_seed", "n_div", "n_path", "seed"})
_FLOAT_KEYS = frozenset({"alpha0", "alpha1", "T", "r"})
_STR_KEYS = frozenset({"command", "manifold", "integrator", "cost", "out"})
CONFIG_KEYS = _INT_KEYS | _FLOAT_KEYS | _STR_KEYS

# manifold families reachable from the CLI and the parameter keys they take
_FAMILY_KEYS = {
    "sphere": ({"n"}, {"n"}),
    "hyperbolic": ({"n"}, {"n"}),
    "spd": ({"N"}, {"N"}),
    "stiefel": ({"n", "p"}, {"n", "p", "alpha0", "alpha1"}),
    "grassmann": ({"n", "p"}, {"n", "p"}),
    "so": ({"N"}, {"N", "metric_seed"}),
    "sl": ({"N"}, {"N", "metric_seed"}),
    "gl+": ({"N"}, {"N", "metric_seed"}),
    "se": ({"N"}, {"N", "metric_seed"}),
    "aff": ({"N"}, {"N", "metric_seed"}),
}

_REQUIRED = {
    "validate": ("manifold",),
    "simulate": ("manifold", "integrator", "T", "n_div", "n_path", "seed", "cost", "out"),
    "compare": ("manifold", "T", "n_path", "seed", "cost", "out"),
    "uniform": ("manifold", "cost", "out"),
    "heat-kernel": ("manifold", "n", "cost"),
}

# reference configuration of the spectral heat-kernel cross-check
_HEAT_DIFFUSION = 0.4
_HEAT_RADIUS = 3.0
_HEAT_T = 2.0
_ANGLE_COSTS = {
    "phi_5_2": lambda p: p ** 2.5,
    "phi_32_52": lambda p: p ** 1.5 + p ** 2.5,
}


class ConfigError(ValueError):
    """Raised for malformed, incomplete or inconsistent run configs."""


@dataclass
class RunConfig:
    command: str
    values: dict = field(default_factory=dict)

    def get(self, key, default=None):
        return self.values.get(key, default)


def _convert(key: str, raw: str, where: str):
    raw = raw.strip()
    try:
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        kind = "integer" if key in _INT_KEYS else "number"
        raise ConfigError(f"{where}: key {key!r} expects an {kind}, got {raw!r}")
    return raw


def _parse_pairs(lines) -> dict:
    """lines is a sequence of (location, text) pairs already comment-free."""
    values = {}
    bad = []
    for where, text in lines:
        if "=" not in text:
            bad.append(f"{where}: expected key=value, got {text!r}")
            continue
        key, _, raw = text.partition("=")
        key = key.strip()
        if key not in CONFIG_KEYS:
            bad.append(f"{where}: unknown key {key!r}")
            continue
        values[key] = _convert(key, raw, where)
    if bad:
        raise ConfigError("; ".join(bad))
    return values


def parse_config(text: str, overrides=()) -> RunConfig:
    """Parse a key=value config (with # comments) into a validated RunConfig."""
    lines = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            lines.append((f"line {lineno}", body))
    values = _parse_pairs(lines)
    values.update(_parse_pairs((f"--set #{k + 1}", text) for k, text in enumerate(overrides)))

    if "command" not in values:
        raise ConfigError("missing required key 'command'")
    command = values.pop("command")
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; valid commands: {', '.join(COMMANDS)}"
        )
    for key in _REQUIRED[command]:
        if key not in values:
            raise ConfigError(f"missing required key {key!r} for command {command!r}")

    if "integrator" in values and values["integrator"] not in INTEGRATOR_IDS:
        raise ConfigError(
            f"unknown integrator {values['integrator']!r}; valid ids: "
            f"{', '.join(INTEGRATOR_IDS)}"
        )
    if "cost" in values and values["cost"] not in COST_IDS:
        raise ConfigError(
            f"unknown cost {values['cost']!r}; valid ids: {', '.join(COST_IDS)}"
        )
    if "manifold" in values:
        family = values["manifold"]
        if family not in _FAMILY_KEYS:
            raise ConfigError(
                f"unknown manifold {family!r}; valid names: "
                f"{', '.join(sorted(_FAMILY_KEYS))}"
            )
        required, allowed = _FAMILY_KEYS[family]
        given = {k for k in ("n", "p", "N", "alpha0", "alpha1", "metric_seed") if k in values}
        missing = sorted(required - given)
        extra = sorted(given - allowed)
        if missing:
            raise ConfigError(
                f"manifold {family!r} needs key(s) {', '.join(missing)}"
            )
        if extra:
            raise ConfigError(
                f"key(s) {', '.join(extra)} do not apply to manifold {family!r}"
            )
    return RunConfig(command=command, values=values)


def _build_handle(config: RunConfig) -> ManifoldHandle:
    family = config.get("manifold")
    _, allowed = _FAMILY_KEYS[family]
    params = {k: config.values[k] for k in allowed if k in config.values}
    return make_manifold(family, **params)


def _write_csv(path: str, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _summary_path(out: str) -> str:
    stem, dot, suffix = out.rpartition(".")
    if not dot:
        return out + ".summary"
    return f"{stem}.summary.{suffix}"


SUMMARY_HEADER = ("metric", "mean", "stderr", "n_path", "n_div", "T", "integrator", "manifold")


def _summary_row(metric, mean, stderr, n_path, n_div, T, integrator, manifold):
    return (metric, f"{mean:.17g}", f"{stderr:.17g}", n_path, n_div, f"{T:g}", integrator, manifold)


def _sim_config(config: RunConfig, **defaults) -> SimulationConfig:
    merged = dict(defaults)
    for key in ("T", "n_div", "n_path", "seed", "integrator", "r"):
        if key in config.values:
            merged[key] = config.values[key]
    return SimulationConfig(**merged)


# ---------------------------------------------------------------------------
# command bodies


def _cmd_validate(config: RunConfig) -> int:
    handle = _build_handle(config)
    rng = RngStream(seed=config.get("seed", 0), stream_id=0)
    checks = {
        "projection idempotency": (0.0, 1e-9),
        "projection self-adjointness": (0.0, 1e-9),
        "christoffel symmetry": (0.0, 1e-10),
        "metric compatibility (FD)": (0.0, 1e-5),
        "brownian SOO residual": (0.0, 1e-8),
        "ito drift closed-form vs generic": (0.0, 1e-9),
    }

    def bump(name, value):
        worst, tol = checks[name]
        checks[name] = (max(worst, float(value)), tol)

    for _ in range(5):
        x = handle.random_point(rng)
        report = check_projection(handle, x, trials=6, rng=rng)
        bump("projection idempotency", report.max_idempotency)
        bump("projection self-adjointness", report.max_asymmetry)
        xi = handle.random_tangent(rng, x)
        eta = handle.random_tangent(rng, x)
        bump("christoffel symmetry",
             frobenius_norm(handle.christoffel(x, xi, eta) - handle.christoffel(x, eta, xi)))
        bump("metric compatibility (FD)",
             check_metric_compatibility(handle, x, trials=4, rng=rng))
        bump("brownian SOO residual", soo_residual(handle, x, brownian_soo(handle, x)))
        bump("ito drift closed-form vs generic",
             frobenius_norm(handle.ito_drift(x) - brownian_ito_drift(handle, x)))

    print(f"validate {handle.name}")
    ok = True
    for name, (worst, tol) in checks.items():
        passed = worst < tol
        ok = ok and passed
        print(f"  {'PASS' if passed else 'FAIL'}  {name}: {worst:.3e} (< {tol:g})")
    return EXIT_OK if ok else EXIT_STEP_FAILURE


def _cmd_simulate(config: RunConfig) -> int:
    handle = _build_handle(config)
    cost = make_cost(config.get("cost"), handle)
    sim = _sim_config(config)
    out = simulate(sim, handle, cost=cost)

    path_rows = [(i, f"{v:.17g}") for i, v in enumerate(out.samples)]
    _write_csv(config.get("out"), ("path_index", "value"), path_rows)
    summary = _summary_row(cost.name, out.mean, out.stderr, out.n_path,
                           sim.n_div, sim.T, sim.integrator, handle.name)
    _write_csv(_summary_path(config.get("out")), SUMMARY_HEADER, [summary])

    print(f"{handle.name} {sim.integrator} T={sim.T:g} n_div={sim.n_div} "
          f"n_path={sim.n_path}: mean={out.mean:.6g} stderr={out.stderr:.3g}")
    if out.divergent:
        print(f"  divergent paths: {len(out.divergent)} {out.divergent[:10]}")
    return EXIT_OK


def _cmd_compare(config: RunConfig) -> int:
    handle = _build_handle(config)
    cost = make_cost(config.get("cost"), handle)
    n_divs = (config.values["n_div"],) if "n_div" in config.values else (200, 500, 700)
    sim = _sim_config(config, n_div=max(n_divs), integrator="ito-em")
    table = compare_methods(sim, handle, cost, n_divs=n_divs)

    rows = [
        _summary_row(cost.name, c.mean, c.stderr, c.n_path, c.n_div, sim.T,
                     c.integrator, handle.name)
        for c in table.cells
    ]
    _write_csv(config.get("out"), SUMMARY_HEADER, rows)
    for c in table.cells:
        print(f"  {c.integrator:>13} n_div={c.n_div:>4}: "
              f"mean={c.mean:.6g} stderr={c.stderr:.3g}")
    if table.consistent:
        print("consistent: all pairs within 3 combined stderrs")
    else:
        print(f"UNSTABLE: worst pair {table.worst_pair} gap={table.worst_gap:.4g} "
              f"exceeds allowance {table.worst_allowance:.4g}")
    return EXIT_OK


def _cmd_uniform(config: RunConfig) -> int:
    handle = _build_handle(config)
    cost = make_cost(config.get("cost"), handle)
    if cost.terminal is None:
        raise ConfigError(f"cost {cost.name!r} has no terminal part; "
                          "the uniform comparison needs a terminal cost")
    rows = uniform_limit_run(
        handle,
        [(cost.name, lambda x, c=cost: c.terminal(x, 0.0))],
        T=config.get("T", 40.0),
        n_path=config.get("n_path", 1000),
        n_div=config.get("n_div", 700),
        seed=config.get("seed", 0),
        integrator=config.get("integrator", "ito-em"),
    )
    out_rows = []
    for row in rows:
        out_rows.append(_summary_row(row.cost_name, row.brownian.mean,
                                     row.brownian.stderr, row.brownian.n_path,
                                     config.get("n_div", 700), config.get("T", 40.0),
                                     config.get("integrator", "ito-em"), handle.name))
        out_rows.append(_summary_row(row.cost_name + "_uniform", row.direct_mean,
                                     row.direct_stderr, 0, 0, config.get("T", 40.0),
                                     "direct-sampler", handle.name))
        verdict = "agrees with" if row.consistent else "DISAGREES with"
        print(f"{handle.name} {row.cost_name}: brownian {row.brownian.mean:.6g} "
              f"({row.brownian.stderr:.3g}) {verdict} uniform {row.direct_mean:.6g} "
              f"({row.direct_stderr:.3g})")
    _write_csv(config.get("out"), SUMMARY_HEADER, out_rows)
    return EXIT_OK


def _cmd_heat_kernel(config: RunConfig) -> int:
    if config.get("manifold") != "sphere" or config.get("n") not in (3, 4):
        raise ConfigError("heat-kernel needs manifold=sphere with n=3 or n=4")
    cost_id = config.get("cost")
    if cost_id not in _ANGLE_COSTS:
        raise ConfigError(
            f"heat-kernel supports costs {', '.join(sorted(_ANGLE_COSTS))}, "
            f"got {cost_id!r}"
        )
    cost = _ANGLE_COSTS[cost_id]
    T = config.get("T", _HEAT_T)
    series = heat_expectation_s2 if config.get("n") == 3 else heat_expectation_s3
    value = series(cost, T=T, diffusion=_HEAT_DIFFUSION, radius=_HEAT_RADIUS)
    tag = "S2" if config.get("n") == 3 else "S3"
    print(f"{tag} heat-kernel expectation of {cost_id} at T={T:g} "
          f"(diffusion {_HEAT_DIFFUSION}, radius {_HEAT_RADIUS}): {value:.3f}")
    print(f"  full precision: {value:.12g}")
    if config.get("out"):
        row = _summary_row(cost_id, value, 0.0, 0, 0, T, "spectral-series",
                           f"sphere({config.get('n')})")
        _write_csv(config.get("out"), SUMMARY_HEADER, [row])
    return EXIT_OK


_COMMAND_BODY = {
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "compare": _cmd_compare,
    "uniform": _cmd_uniform,
    "heat-kernel": _cmd_heat_kernel,
}


def run(config: RunConfig) -> int:
    """Execute a parsed config; returns the process exit code."""
    try:
        return _COMMAND_BODY[config.command](config)
    except (ConfigError, ValueError) as exc:
        # invalid ids, impossible parameter combinations, bad manifold sizes
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepFailureError, DivergenceError) as exc:
        print(f"step failure: {exc}", file=sys.stderr)
        return EXIT_STEP_FAILURE


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="manifold-sde",
        description="Simulate SDEs with an invariant matrix manifold.",
    )
    parser.add_argument("config", help="path to a key=value config file")
    parser.add_argument(
        "--set", action="append", default=[], metavar="key=value",
        help="override a config key (repeatable, applied after the file)",
    )
    args = parser.parse_args(argv)
    try:
        with open(args.config, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"config error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = parse_config(text, overrides=args.set)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
