"""Command-line driver.

Reports are JSON with sorted keys and a ``schema_version`` field, so equal
inputs and seeds give byte-identical output. Exit status: 0 success, 1 a
check failed, 2 invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import apriori, geometry, process, scenarios, verify
from . import quantum as qm
from . import structures as st

SCHEMA_VERSION = 1
logger = logging.getLogger("manyminds")


class InputError(ValueError):
    pass


# --------------------------------------------------------------------------
# output


def _dump(obj) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **obj}, sort_keys=True, indent=2, allow_nan=True) + "\n"


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


# --------------------------------------------------------------------------
# configuration


def _parse_tols(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise InputError(f"tolerance {item!r} is not name=value")
        k, v = item.split("=", 1)
        try:
            val = float(v)
        except ValueError:
            raise InputError(f"tolerance {k} has non-numeric value {v!r}") from None
        if not val > 0:
            raise InputError(f"tolerance {k} must be positive")
        out[k.strip()] = val
    return out


def _config(args) -> dict:
    cfg = {"seed": 0, "trajectories": None, "max_steps": process.MAX_STEPS, "tol": {}, "out": None, "format": "json", "params": {}}
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as e:
            raise InputError(f"cannot read config {args.config}: {e}") from None
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        cfg.update(loaded)
        cfg["tol"] = _parse_tols(f"{k}={v}" for k, v in cfg["tol"].items())
    for k in ("seed", "trajectories", "max_steps", "out", "format"):
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    cfg["tol"].update(_parse_tols(args.tol))
    if cfg["format"] not in ("json", "csv"):
        raise InputError("format must be json or csv")
    if int(cfg["max_steps"]) < 0 or (cfg["trajectories"] is not None and int(cfg["trajectories"]) < 0):
        raise InputError("counts must be nonnegative")
    return cfg


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise InputError(f"cannot read {path}: {e}") from None


# --------------------------------------------------------------------------
# scenario


_SCENARIO_FLAGS = {
    "p": "p",
    "q": "q",
    "x": "x",
    "variant": "variant",
    "weights_a": "weights_a",
    "weights_b": "weights_b",
    "N": "N",
    "T": "T",
    "R": "R",
    "M": "M",
    "delta": "delta",
    "eta": "eta",
    "pa": "pa",
    "mode": "mode",
    "free_omega": "free_omega",
}


def cmd_scenario(args) -> int:
    cfg = _config(args)
    if args.name not in scenarios.REGISTRY:
        raise InputError(f"unknown scenario {args.name!r}; known: {', '.join(sorted(scenarios.REGISTRY))}")
    params = dict(cfg["params"])
    for flag, key in _SCENARIO_FLAGS.items():
        v = getattr(args, flag, None)
        if v is None or v is False:
            continue
        if flag == "p":
            vals = _floats(v)
            v = vals if args.name == "everett" else vals[0]
        elif flag in ("weights_a", "weights_b"):
            v = _floats(v)
        params[key] = v
    if args.name == "frequency" and "p" in params:
        params["p_values"] = [params.pop("p")]
    params["seed"] = int(cfg["seed"])
    if cfg["trajectories"] is not None:
        params["trajectories"] = int(cfg["trajectories"])
    try:
        rep = scenarios.run(args.name, params, cfg["tol"])
    except (scenarios.ScenarioError, ValueError) as e:
        raise InputError(str(e)) from None
    if cfg["format"] == "csv":
        rows = [[k, c["computed"], c["expected"], c["tol"], c["pass"]] for k, c in sorted(rep.checks.items())]
        text = _rows_csv(["check", "computed", "expected", "tol", "pass"], rows)
    else:
        text = _dump({"command": "scenario", **rep.to_json()})
    _emit(text, cfg["out"])
    for name in rep.failures():
        print(f"check failed: {name}", file=sys.stderr)
    return 0 if rep.ok else 1


# --------------------------------------------------------------------------
# verify


def cmd_verify(args) -> int:
    cfg = _config(args)
    try:
        outcomes = verify.run_all(int(cfg["seed"]), args.inject_fault)
    except KeyError:
        raise InputError(f"unknown invariant {args.inject_fault!r}") from None
    table = verify.summary_table(outcomes)
    sys.stderr.write(table)
    failed = [o.name for o in outcomes if not o.ok]
    if cfg["format"] == "csv":
        text = _rows_csv(["invariant", "residual", "tol", "pass"], [[o.name, repr(o.residual), repr(o.tol), o.ok] for o in outcomes])
    else:
        text = _dump({"command": "verify", "seed": int(cfg["seed"]), "invariants": [o.to_json() for o in outcomes],
                      "failed": failed, "ok": not failed})
    _emit(text, cfg["out"])
    for name in failed:
        print(f"invariant failed: {name}", file=sys.stderr)
    return 0 if not failed else 1


# --------------------------------------------------------------------------
# simulate


def _menu_from_json(obj: dict) -> apriori.ManifestationMenu:
    try:
        dims = tuple(int(d) for d in obj["dims"])
        alg = qm.algebra_from_json(obj["algebra"]) if "algebra" in obj else qm.full_algebra(dims)
        omega = qm.matrix_from_json(obj["omega"])[0]
        cands = tuple(
            apriori.StateSequence(omega, tuple(qm.matrix_from_json(m)[0] for m in seq), alg, f"candidate {i}")
            for i, seq in enumerate(obj["candidates"])
        )
        return apriori.ManifestationMenu(cands, label=obj.get("label", ""))
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed menu: {e}") from None


def _structure_node(obj: dict):
    try:
        s = st.SwitchingStructure.from_json(obj["structure"])
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed structure: {e}") from None
    menus = [_menu_from_json(m) for m in obj.get("menus", [])]
    if not menus:
        raise InputError("every structure needs at least one menu")
    return s, menus


def _model_menus(model: dict, tau: float):
    parent, pmenus = _structure_node(model["parent"])
    pv = apriori.structure_app(parent, {parent: pmenus}, tau)
    succ = {}
    ids = {"S0": parent.to_json()}
    for k, node in enumerate(model.get("successors", []), 1):
        s, menus = _structure_node(node)
        succ[f"S{k}"] = apriori.structure_app(s, {s: menus}, tau)
        ids[f"S{k}"] = s.to_json()
    return "S0", {"S0": apriori.jump_distribution(pv, succ)}, ids


def _model_everett(model: dict):
    p = [float(v) for v in model["p"]]
    rep = scenarios.everett({"p": p, "seed": int(model.get("seed", 0))})
    apps = {f"branch{r + 1}": a for r, a in enumerate(rep.data["apps"])}
    return "root", {"root": apriori.jump_distribution(1.0, apps)}, {}


def cmd_simulate(args) -> int:
    cfg = _config(args)
    model = _read_json(args.file)
    kind = model.get("model")
    tau = cfg["tol"].pop("tau", apriori.TAU)
    if cfg["tol"]:
        raise InputError(f"unknown tolerance(s) {sorted(cfg['tol'])} for simulate")
    try:
        if kind == "everett":
            root, tables, ids = _model_everett(model)
        elif kind == "menus":
            root, tables, ids = _model_menus(model, tau)
        else:
            raise InputError(f"unknown model {kind!r}; use 'everett' or 'menus'")
    except (KeyError, TypeError) as e:
        raise InputError(f"malformed model file: {e}") from None
    except (apriori.AprioriError, qm.QuantumError, scenarios.ScenarioError) as e:
        raise InputError(str(e)) from None
    count = int(cfg["trajectories"] or 0)
    ens = process.run_trajectories(root, tables.get, count, int(cfg["max_steps"]), int(cfg["seed"]))
    if cfg["format"] == "csv":
        text = ens.to_csv()
    else:
        rep = ens.report()
        rep["xi"] = {k: t.xi for k, t in sorted(tables.items())}
        if ids:
            rep["structures"] = ids
        text = _dump({"command": "simulate", "model": kind, **rep})
    _emit(text, cfg["out"])
    return 0


# --------------------------------------------------------------------------
# structures enum


def cmd_structures(args) -> int:
    cfg = _config(args)
    if args.structure:
        try:
            s = st.SwitchingStructure.from_json(_read_json(args.structure))
        except (KeyError, TypeError, ValueError) as e:
            raise InputError(f"malformed structure: {e}") from None
    else:
        s = st.SwitchingStructure.minimal()
    report = st.validate(s)
    if not report.ok:
        raise InputError(f"structure is not valid: {report.violations}")
    alphabet = st.DocketAlphabet.chain() if args.alphabet == "chain" else st.FULL
    same = st.same_switch_successors(s, alphabet)
    new = st.new_switch_successors(s, alphabet) if not args.no_new_switch else frozenset()
    xi = frozenset(st.canonicalize(x) for x in same | new)
    out = {
        "command": "structures enum",
        "structure": s.to_json(),
        "alphabet": args.alphabet,
        "counts": {"same_switch": len(same), "new_switch": len(new), "immediate_successors": len(xi)},
    }
    if args.list:
        out["successors"] = [c.to_json() for c in st.sorted_structures(xi)]
    if cfg["format"] == "csv":
        text = _rows_csv(["kind", "count"], sorted(out["counts"].items()))
    else:
        text = _dump(out)
    _emit(text, cfg["out"])
    return 0


# --------------------------------------------------------------------------
# geometry check


def cmd_geometry(args) -> int:
    cfg = _config(args)
    obj = _read_json(args.file)
    try:
        s = st.SwitchingStructure.from_json(obj["structure"])
        m = geometry.Manifestation.from_json(obj["manifestation"])
        rep = geometry.check_manifestation(
            m, s, int(obj.get("samples_per_unit", geometry.SAMPLES_PER_UNIT)), int(obj.get("contact_number", geometry.CONTACT_NUMBER))
        )
    except (KeyError, TypeError, ValueError) as e:
        raise InputError(f"malformed manifestation file: {e}") from None
    if cfg["format"] == "csv":
        text = _rows_csv(["clause", "pass"], [[k, v["pass"]] for k, v in sorted(rep.clauses.items(), key=lambda kv: int(kv[0][1:]))])
    else:
        text = _dump({"command": "geometry check", **scenarios._plain(rep.to_json())})
    _emit(text, cfg["out"])
    return 0 if rep.ok else 1


# --------------------------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed (64-bit)")
    p.add_argument("--trajectories", type=int, help="Monte Carlo trajectory count")
    p.add_argument("--max-steps", dest="max_steps", type=int, help="step limit per trajectory")
    p.add_argument("--tol", action="append", metavar="NAME=VALUE", help="tolerance override (repeatable)")
    p.add_argument("--out", help="write the report here instead of standard output")
    p.add_argument("--format", choices=("json", "csv"), help="report format")
    p.add_argument("--config", help="JSON config file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="manyminds", description="Many-minds switching-structure simulator.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenario", help="run a worked model and its identity checks")
    p.add_argument("name")
    p.add_argument("--p", help="probability, or comma list of branch weights")
    p.add_argument("--q", type=float)
    p.add_argument("--x", type=float)
    p.add_argument("--variant", choices=("A", "B", "C", "a", "b", "c"))
    p.add_argument("--weights-a", dest="weights_a")
    p.add_argument("--weights-b", dest="weights_b")
    p.add_argument("--N", type=int)
    p.add_argument("--T", type=int)
    p.add_argument("--R", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--delta", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--pa", type=float)
    p.add_argument("--mode", choices=("symmetric", "doubled"))
    p.add_argument("--free-omega", dest="free_omega", action="store_true")
    _common(p)
    p.set_defaults(func=cmd_scenario)

    p = sub.add_parser("verify", help="run the invariant suite")
    p.add_argument("--inject-fault", dest="inject_fault", metavar="INVARIANT")
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("simulate", help="sample the jump process from a model file")
    p.add_argument("file")
    _common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("structures", help="switching-structure tools")
    ss = p.add_subparsers(dest="action", required=True)
    e = ss.add_parser("enum", help="count immediate successors")
    e.add_argument("--structure", help="structure JSON file (default: minimal one-switch structure)")
    e.add_argument("--alphabet", choices=("chain", "full"), default="chain")
    e.add_argument("--no-new-switch", action="store_true", help="skip new-switch successors")
    e.add_argument("--list", action="store_true", help="include the canonical successors")
    _common(e)
    e.set_defaults(func=cmd_structures)

    p = sub.add_parser("geometry", help="manifestation tools")
    gs = p.add_subparsers(dest="action", required=True)
    g = gs.add_parser("check", help="clause-by-clause manifestation report")
    g.add_argument("file")
    _common(g)
    g.set_defaults(func=cmd_geometry)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, process.ProcessError) as e:
        print(f"error: {e}", file=sys.stderr)
        try:
            _emit(_dump({"command": args.command, "error": str(e), "ok": False}), getattr(args, "out", None))
        except OSError:
            pass
        return 2


if __name__ == "__main__":
    sys.exit(main())
