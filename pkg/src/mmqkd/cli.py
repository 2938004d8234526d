"""Command-line front end.

Every command resolves its parameters from built-in defaults, then an
optional JSON config (``--config``), then explicit flags. The resolved
parameters form a RunConfig ``{"command": ..., "params": {...}}`` which
``--dump-config`` prints and ``--config`` reads back.

Exit codes: 0 success, 2 validation error, 3 I/O error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from typing import Any

import jsonschema
import numpy as np

from . import calibration, montecarlo, security
from .protocol import Scenario

EXIT_OK, EXIT_VALIDATION, EXIT_IO, EXIT_NUMERICAL = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_VALIDATION):
        super().__init__(message)
        self.code = code


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


# --- parameter tables ------------------------------------------------------

_NUM = {"type": "number"}
_NUM_OR_NULL = {"type": ["number", "null"]}
_NUM_LIST = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_NUM_LIST_OR_NULL = {"type": ["array", "null"], "items": {"type": "number"}, "minItems": 1}
_BOOL = {"type": "boolean"}
_INT = {"type": "integer"}
_STR_OR_NULL = {"type": ["string", "null"]}

_SCENARIO_PARAMS: dict[str, tuple[Any, dict]] = {
    "modes": (None, _NUM_LIST_OR_NULL),
    "weights": (None, _NUM_LIST_OR_NULL),
    "bob_weights": (None, _NUM_LIST_OR_NULL),
    "weights_squared": (False, _BOOL),
    "T": (1.0, _NUM),
    "distance": (None, _NUM_OR_NULL),
    "eps": (0.0, _NUM),
    "attack": ("collective", {"enum": ["collective", "individual"]}),
    "trust": ("untrusted", {"enum": ["trusted", "untrusted"]}),
    "beta": (1.0, _NUM),
}
_OUTPUT_PARAMS: dict[str, tuple[Any, dict]] = {
    "out": (None, _STR_OR_NULL),
    "clamp": (False, _BOOL),
}

COMMAND_PARAMS: dict[str, dict[str, tuple[Any, dict]]] = {
    "keyrate": {**_SCENARIO_PARAMS, **_OUTPUT_PARAMS, "format": ("text", {"enum": ["text", "json"]})},
    "sweep": {
        **_SCENARIO_PARAMS,
        **_OUTPUT_PARAMS,
        "axis": ("distance", {"enum": list(security.AXES)}),
        "start": (0.0, _NUM),
        "stop": (100.0, _NUM),
        "steps": (11, _INT),
        "jobs": (None, {"type": ["integer", "null"]}),
    },
    "contour": {
        "eps": ([0.0, 0.01, 0.02, 0.03, 0.04, 0.05], _NUM_LIST),
        "T": (0.03, _NUM),
        "beta": (1.0, _NUM),
        "weights": (None, _NUM_LIST_OR_NULL),
        "weights_squared": (False, _BOOL),
        "trust": (["untrusted", "trusted"], {"type": "array", "items": {"enum": ["trusted", "untrusted"]}}),
        "v2_start": (1.0, _NUM),
        "v2_stop": (3.0, _NUM),
        "v2_steps": (21, _INT),
        "v1_max": (1000.0, _NUM),
        "out": (None, _STR_OR_NULL),
    },
    "table1": {
        "T": (1.0, _NUM),
        "format": ("csv", {"enum": ["csv", "json"]}),
        "out": (None, _STR_OR_NULL),
    },
    "compare-knowledge": {
        "start": (0.0, _NUM),
        "stop": (150.0, _NUM),
        "steps": (16, _INT),
        "beta": (0.95, _NUM),
        **_OUTPUT_PARAMS,
    },
    "montecarlo": {
        "n_modes": (5, _INT),
        "runs": (1000, _INT),
        "seed": (0, _INT),
        "mean": (3.0, _NUM),
        "spread": (0.75, _NUM),
        "spread_is_std": (False, _BOOL),
        "T": (0.03, _NUM),
        "eps": (0.05, _NUM),
        "beta": (0.95, _NUM),
        "trust": ("untrusted", {"enum": ["trusted", "untrusted"]}),
        "meta": (None, _STR_OR_NULL),
        **_OUTPUT_PARAMS,
    },
}


def config_schema(command: str) -> dict:
    params = COMMAND_PARAMS[command]
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": f"mmqkd {command} run configuration",
        "type": "object",
        "properties": {
            "command": {"const": command},
            "params": {
                "type": "object",
                "properties": {k: schema for k, (_, schema) in params.items()},
                "additionalProperties": False,
            },
        },
        "required": ["command", "params"],
        "additionalProperties": False,
    }


# --- argument parsing ------------------------------------------------------


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=argparse.SUPPRESS, help="JSON RunConfig file; flags override its values")
    p.add_argument("--dump-config", action="store_true", default=argparse.SUPPRESS, help="print the resolved RunConfig and exit")


def _add_scenario(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--modes", type=_float_list, default=S, help="source variances per mode, e.g. 3,1")
    p.add_argument("--weights", type=_float_list, default=S, help="detector gains per mode (normalized); default balanced")
    p.add_argument("--bob-weights", dest="bob_weights", type=_float_list, default=S, help="Bob's gains if different from Alice's")
    p.add_argument("--weights-squared", dest="weights_squared", action="store_true", default=S,
                   help="read --weights as squared proportions, e.g. 19,1")
    p.add_argument("--T", type=float, default=S, help="channel transmittance")
    p.add_argument("--distance", type=float, default=S, help="fiber length in km at 0.2 dB/km (overrides --T)")
    p.add_argument("--eps", type=float, default=S, help="excess noise, SNU, input referred")
    p.add_argument("--attack", choices=["collective", "individual"], default=S)
    p.add_argument("--trust", choices=["trusted", "untrusted"], default=S)
    p.add_argument("--beta", type=float, default=S, help="reconciliation efficiency")


def _add_output(p: argparse.ArgumentParser) -> None:
    S = argparse.SUPPRESS
    p.add_argument("--out", default=S, help="output path (default stdout)")
    p.add_argument("--clamp", action="store_true", default=S, help="report negative key rates as 0")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = argparse.ArgumentParser(prog="mmqkd", description="Multimode CV-QKD key-rate toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("keyrate", help="key rate of one scenario")
    _add_common(p)
    _add_scenario(p)
    _add_output(p)
    p.add_argument("--format", choices=["text", "json"], default=S)

    p = sub.add_parser("sweep", help="key rate along one parameter axis (CSV)")
    _add_common(p)
    _add_scenario(p)
    _add_output(p)
    p.add_argument("--axis", choices=list(security.AXES), default=S)
    p.add_argument("--from", dest="start", type=float, default=S)
    p.add_argument("--to", dest="stop", type=float, default=S)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--jobs", type=int, default=S, help="worker processes (default $MMQKD_JOBS or 1)")

    p = sub.add_parser("contour", help="K=0 boundary in the (V1, V2) plane, balanced two-mode (CSV)")
    _add_common(p)
    p.add_argument("--eps", type=_float_list, default=S, help="excess-noise values, one contour each")
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--weights", type=_float_list, default=S)
    p.add_argument("--weights-squared", dest="weights_squared", action="store_true", default=S)
    p.add_argument("--trust", type=lambda s: s.split(","), default=S, help="comma list of trust models")
    p.add_argument("--v2-from", dest="v2_start", type=float, default=S)
    p.add_argument("--v2-to", dest="v2_stop", type=float, default=S)
    p.add_argument("--v2-steps", dest="v2_steps", type=int, default=S)
    p.add_argument("--v1-max", dest="v1_max", type=float, default=S)
    p.add_argument("--out", default=S)

    p = sub.add_parser("table1", help="effective parameters for partial knowledge of the mode structure")
    _add_common(p)
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--format", choices=["csv", "json"], default=S)
    p.add_argument("--out", default=S)

    p = sub.add_parser("compare-knowledge", help="key rate versus distance per knowledge level (CSV)")
    _add_common(p)
    _add_output(p)
    p.add_argument("--from", dest="start", type=float, default=S)
    p.add_argument("--to", dest="stop", type=float, default=S)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--beta", type=float, default=S)

    p = sub.add_parser("montecarlo", help="key-rate series for fluctuating mode variances (CSV)")
    _add_common(p)
    _add_output(p)
    p.add_argument("--n-modes", dest="n_modes", type=int, default=S)
    p.add_argument("--runs", type=int, default=S)
    p.add_argument("--seed", type=int, default=S)
    p.add_argument("--mean", type=float, default=S)
    p.add_argument("--spread", type=float, default=S, help="variance of the normal law (see --spread-is-std)")
    p.add_argument("--spread-is-std", dest="spread_is_std", action="store_true", default=S)
    p.add_argument("--T", type=float, default=S)
    p.add_argument("--eps", type=float, default=S)
    p.add_argument("--beta", type=float, default=S)
    p.add_argument("--trust", choices=["trusted", "untrusted"], default=S)
    p.add_argument("--meta", default=S, help="write run metadata JSON here")

    p = sub.add_parser("dump-config", help="print the RunConfig (or its schema) for a command")
    p.add_argument("target", choices=sorted(COMMAND_PARAMS))
    p.add_argument("--schema", action="store_true", help="print the JSON schema instead")
    p.add_argument("rest", nargs=argparse.REMAINDER, help="flags of the target command")
    return parser


def resolve_config(command: str, flags: dict) -> dict:
    """Merge defaults, the optional config file and explicit flags into a RunConfig."""
    params = {k: default for k, (default, _) in COMMAND_PARAMS[command].items()}
    path = flags.pop("config", None)
    if path is not None:
        try:
            with open(path, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except OSError as exc:
            raise CLIError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
        except json.JSONDecodeError as exc:
            raise CLIError(f"config {path} is not valid JSON: {exc}") from exc
        _validate(command, loaded)
        params.update(loaded["params"])
    params.update(flags)
    run = {"command": command, "params": params}
    _validate(command, run)
    return run


def _validate(command: str, run: dict) -> None:
    try:
        jsonschema.validate(run, config_schema(command))
    except jsonschema.ValidationError as exc:
        raise CLIError(f"invalid config: {exc.message}") from exc


# --- commands --------------------------------------------------------------


def scenario_from_params(p: dict) -> Scenario:
    if not p.get("modes"):
        raise CLIError("--modes is required")
    T = p["T"]
    if p.get("distance") is not None:
        T = float(security.distance_to_transmittance(p["distance"]))
    try:
        return Scenario.build(
            p["modes"], p.get("weights"), T, p["eps"],
            trust=p["trust"], attack=p["attack"], beta=p["beta"],
            bob_weights=p.get("bob_weights"), squared=p.get("weights_squared", False),
        )
    except ValueError as exc:
        raise CLIError(str(exc)) from exc


def _k(value: float, clamp: bool) -> float:
    return max(value, 0.0) if clamp else value


def _csv(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def cmd_keyrate(p: dict) -> str:
    s = scenario_from_params(p)
    report = security.key_rate(s)
    k = _k(report.key_rate, p["clamp"])
    if p["format"] == "json":
        d = report.to_dict()
        d["key_rate"] = k
        return json.dumps(d, indent=2) + "\n"
    lines = [
        f"modes:          {', '.join(fmt(v) for v in s.source.variances)}",
        f"alice weights:  {', '.join(fmt(v) for v in s.alice_weights.weights)}",
        f"bob weights:    {', '.join(fmt(v) for v in s.bob_weights.weights)}",
        f"channel:        T={fmt(s.channel.T)} eps={fmt(s.channel.eps)}",
        f"model:          {s.attack} attack, {s.trust} detection, beta={fmt(s.beta)}",
        f"I_AB:           {fmt(report.i_ab)}",
        f"eve bound:      {fmt(report.eve_bound)} ({report.eve_bound_kind})",
        f"key rate:       {fmt(k)}",
    ]
    return "\n".join(lines) + "\n"


def cmd_sweep(p: dict) -> str:
    s = scenario_from_params(p)
    if p["steps"] < 1:
        raise CLIError("--steps must be positive")
    values = np.linspace(p["start"], p["stop"], p["steps"])
    try:
        rows = security.scan(s, p["axis"], values, jobs=p["jobs"])
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    out = []
    for r in rows:
        rep = r.report
        out.append([
            float(r.value), float(r.T),
            None if rep is None else _k(rep.key_rate, p["clamp"]),
            None if rep is None else rep.i_ab,
            None if rep is None else rep.eve_bound,
            r.status,
        ])
    return _csv([p["axis"], "T", "K", "I_AB", "eve_bound", "status"], out)


def cmd_contour(p: dict) -> str:
    rows = []
    v2 = np.linspace(p["v2_start"], p["v2_stop"], p["v2_steps"])
    bracket = (1.0, p["v1_max"])
    for trust in p["trust"]:
        for eps in p["eps"]:
            try:
                tpl = Scenario.build((3.0, 3.0), p.get("weights"), p["T"], eps, trust=trust,
                                     beta=p["beta"], squared=p.get("weights_squared", False))
            except ValueError as exc:
                raise CLIError(str(exc)) from exc
            try:
                diag = security.diagonal_crossing(tpl, bracket)
                rows.append([trust, eps, "diagonal", diag, diag, "ok" if diag is not None else "no_bracket"])
            except (ValueError, ArithmeticError) as exc:
                rows.append([trust, eps, "diagonal", None, None, f"failed: {exc}"])
            for pt in security.contour(tpl, v2, bracket):
                rows.append([trust, eps, "contour", pt.V2, pt.V1, "ok" if pt.status == "ok" else
                             ("no_bracket" if pt.status == "no_bracket" else "failed")])
    return _csv(["trust", "eps", "kind", "V2", "V1", "status"], rows)


def cmd_table1(p: dict) -> str:
    s = calibration.table1_scenario(p["T"])
    models = {name: calibration.effective_parameters(s, k) for name, k in calibration.TABLE1_LEVELS.items()}
    if p["format"] == "json":
        d = {name: {"variances": list(m.variances), "weights_squared": list(m.weights_squared),
                    "T": m.T, "T_ratio": m.T_ratio, "eps": m.eps} for name, m in models.items()}
        return json.dumps(d, indent=2) + "\n"
    rows = [[name, ";".join(fmt(v) for v in m.variances), ";".join(fmt(v) for v in m.weights_squared),
             m.T_ratio, m.eps] for name, m in models.items()]
    return _csv(["level", "variances", "weights_squared", "T_ratio", "eps"], rows)


def cmd_compare_knowledge(p: dict) -> str:
    levels = calibration.TABLE1_LEVELS
    rows = []
    for d in np.linspace(p["start"], p["stop"], p["steps"]):
        T = float(security.distance_to_transmittance(d))
        try:
            res = calibration.knowledge_rate_comparison(calibration.table1_scenario(T, p["beta"]), levels)
            rows.append([float(d), T] + [_k(res[k].key_rate, p["clamp"]) for k in levels] + ["ok"])
        except (ValueError, ArithmeticError) as exc:
            rows.append([float(d), T] + [None] * len(levels) + [f"failed: {exc}"])
    return _csv(["distance", "T"] + [f"K_{k}" for k in levels] + ["status"], rows)


def cmd_montecarlo(p: dict) -> str:
    try:
        spec = montecarlo.FluctuationSpec(p["mean"], p["spread"], p["n_modes"], p["runs"], p["seed"], p["spread_is_std"])
        base = Scenario.build((p["mean"],), None, p["T"], p["eps"], trust=p["trust"], beta=p["beta"])
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    series = montecarlo.run_fluctuating(spec, base)
    meta = series.metadata() | {"summary": montecarlo.summarize(series)}
    if p["meta"]:
        _write(p["meta"], json.dumps(meta, indent=2) + "\n")
    else:
        print(json.dumps(meta), file=sys.stderr)
    rows = [[i, _k(r.key_rate, p["clamp"]), h] for i, (r, h) in enumerate(zip(series.reports, series.hashes))]
    return _csv(["run_index", "K", "V_draws_hash"], rows)


COMMANDS = {
    "keyrate": cmd_keyrate,
    "sweep": cmd_sweep,
    "contour": cmd_contour,
    "table1": cmd_table1,
    "compare-knowledge": cmd_compare_knowledge,
    "montecarlo": cmd_montecarlo,
}


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    flags = vars(ns)
    command = flags.pop("command")
    try:
        if command == "dump-config":
            rest = list(flags["rest"])
            if flags["schema"] or "--schema" in rest:
                sys.stdout.write(json.dumps(config_schema(flags["target"]), indent=2) + "\n")
                return EXIT_OK
            return main([flags["target"], *rest, "--dump-config"])
        dump = flags.pop("dump_config", False)
        run = resolve_config(command, flags)
        if dump:
            sys.stdout.write(json.dumps(run, indent=2, sort_keys=True) + "\n")
            return EXIT_OK
        text = COMMANDS[command](run["params"])
        _write(run["params"].get("out"), text)
        return EXIT_OK
    except CLIError as exc:
        print(f"mmqkd: error: {exc}", file=sys.stderr)
        return exc.code
    except (np.linalg.LinAlgError, ArithmeticError) as exc:
        print(f"mmqkd: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"mmqkd: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
