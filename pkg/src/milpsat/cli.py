"""Command-line entry point: ``milpsat <command> [flags]``.

Flag values are resolved as command-line flag > ``--config`` JSON > built-in
default, and the resolved values are written into every artifact under
``"config"``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import cnf, generator, milp, wl
from .graph import RniConfig, apply_rni, to_graph
from .nn.gnn import DimensionError, GnnConfig, GnnModel, forward
from .solver import SolveBudget, solve

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_MISSING = 3
EXIT_INPUT = 4
EXIT_DIMENSION = 5
EXIT_DATASET = 6
EXIT_CHECK = 7

DEFAULTS = {
    "k": 3, "n_min": 10, "n_max": 40, "size": 2000, "fp": 1.0, "fl": 0.01, "fr": 0.01,
    "exponent": str(generator.DEFAULT_EXPONENT), "seed": 0,
    "d": 32, "rounds": 2, "rni": 0.0, "loss": "bce", "epochs": 150, "batch": 64, "lr": 1e-4,
    "out": None, "workers": 1, "deterministic": True,
}

# which settings each command reads (and echoes)
KEYS = {
    "gen": ["k", "n_min", "n_max", "size", "fp", "fl", "fr", "exponent", "seed", "workers", "out"],
    "solve": ["out"],
    "encode": ["out"],
    "graph": ["rni", "seed", "out"],
    "wl": ["out"],
    "train": ["d", "rounds", "rni", "loss", "epochs", "batch", "lr", "seed", "deterministic", "out"],
    "eval": ["d", "rounds", "rni", "seed", "out"],
    "invariance": ["d", "rounds", "seed", "out"],
    "counterexample": ["out"],
}

INVARIANCE_TOL = 1e-9


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise CliError(message, EXIT_USAGE)


def _add_flags(p: argparse.ArgumentParser, keys: list[str]) -> None:
    types = {
        "k": int, "n_min": int, "n_max": int, "size": int, "fp": float, "fl": float, "fr": float,
        "exponent": str, "seed": int, "d": int, "rounds": int, "rni": float, "loss": str,
        "epochs": int, "batch": int, "lr": float, "out": str, "workers": int,
    }
    for key in keys:
        flag = "--" + key.replace("_", "-")
        if key == "deterministic":
            p.add_argument(flag, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, type=types[key], default=None)
    p.add_argument("--config", default=None, help="JSON file of default flag values")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="milpsat", description="k-SAT as MILP-graphs: generation, encoding, WL and GNN training.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="generate a labelled dataset directory")
    _add_flags(p, KEYS["gen"])

    p = sub.add_parser("solve", help="decide satisfiability of DIMACS files")
    p.add_argument("paths", nargs="+")
    p.add_argument("--model", action="store_true", help="print a model for SAT formulae")
    p.add_argument("--max-decisions", type=float, default=None)
    _add_flags(p, KEYS["solve"])

    p = sub.add_parser("encode", help="write the MILP encoding as MPS")
    p.add_argument("path")
    _add_flags(p, KEYS["encode"])

    p = sub.add_parser("graph", help="write the MILP-graph as JSON")
    p.add_argument("path")
    _add_flags(p, KEYS["graph"])

    p = sub.add_parser("wl", help="foldability of one formula or indistinguishability of two")
    p.add_argument("paths", nargs="+")
    _add_flags(p, KEYS["wl"])

    p = sub.add_parser("train", help="train a GNN on a dataset directory")
    p.add_argument("dataset")
    _add_flags(p, KEYS["train"])

    p = sub.add_parser("eval", help="evaluate a checkpoint on a dataset split")
    p.add_argument("dataset")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", default="test", choices=generator.SPLITS)
    p.add_argument("--redraws", type=int, default=1)
    _add_flags(p, KEYS["eval"])

    p = sub.add_parser("invariance", help="forward pass on a formula and a random permutation of it")
    p.add_argument("path")
    _add_flags(p, KEYS["invariance"])

    p = sub.add_parser("counterexample", help="write and check the WL-indistinguishable SAT/UNSAT pair")
    _add_flags(p, KEYS["counterexample"])
    return parser


def resolve(args: argparse.Namespace, command: str) -> dict:
    """Effective settings for ``command``: flags over config file over defaults."""
    cfg = {k: DEFAULTS[k] for k in KEYS[command]}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise CliError(f"config file not found: {path}", EXIT_MISSING)
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise CliError(f"config file {path}: {e}", EXIT_INPUT)
        for k, v in loaded.items():
            key = k.replace("-", "_")
            if key not in DEFAULTS:
                raise CliError(f"unknown config key {k!r}", EXIT_USAGE)
            if key in cfg:
                cfg[key] = v
    for k in cfg:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def _read(path) -> cnf.Formula:
    p = Path(path)
    if not p.exists():
        raise CliError(f"file not found: {p}", EXIT_MISSING)
    return cnf.read_dimacs(p)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


# -- commands ----------------------------------------------------------------

def cmd_gen(args, cfg) -> int:
    if not cfg["out"]:
        raise CliError("gen needs --out", EXIT_USAGE)
    try:
        params = generator.GenParams(
            k=cfg["k"], n_min=cfg["n_min"], n_max=cfg["n_max"], size=cfg["size"],
            hard_fraction=cfg["fp"], window_left=cfg["fl"], window_right=cfg["fr"],
            seed=cfg["seed"], exponent=cfg["exponent"],
        )
    except (ValueError, ZeroDivisionError) as e:
        raise CliError(str(e), EXIT_INPUT)
    try:
        ds = generator.build_dataset(params, workers=cfg["workers"])
    except generator.DatasetError as e:
        raise CliError(f"{e} {json.dumps(e.stats)}", EXIT_DATASET)
    # the worker count never changes the output, so it stays out of the bytes
    ds.manifest["config"] = {k: v for k, v in cfg.items() if k not in ("workers", "out")}
    ds.write(cfg["out"])
    c = ds.counts()
    print(" ".join(f"{s}: {c[s]['sat']} sat / {c[s]['unsat']} unsat" for s in generator.SPLITS))
    return EXIT_OK


def cmd_solve(args, cfg) -> int:
    budget = SolveBudget(max_decisions=args.max_decisions) if args.max_decisions else None
    lines = []
    for path in args.paths:
        f = _read(path)
        res = solve(f, budget)
        lines.append(f"{path}: {res.status.value}")
        if args.model and res.model is not None:
            inverse = {new: old for old, new in f.renaming.items()}
            lits = [(inverse.get(j, j)) * (1 if res.model[j] else -1) for j in range(1, f.n + 1)]
            lines.append("v " + " ".join(map(str, lits)) + " 0")
    _emit("\n".join(lines) + "\n", cfg["out"])
    return EXIT_OK


def cmd_encode(args, cfg) -> int:
    f = _read(args.path)
    text = milp.to_mps(milp.encode(f), Path(args.path).stem[:8].upper() or "MILPSAT")
    header = f"* milpsat encode {Path(args.path).name} config {json.dumps(cfg, sort_keys=True)}\n"
    _emit(header + text, cfg["out"])
    return EXIT_OK


def cmd_graph(args, cfg) -> int:
    f = _read(args.path)
    try:
        g = apply_rni(to_graph(milp.encode(f)), RniConfig(cfg["rni"], cfg["seed"]))
    except ValueError as e:
        raise CliError(str(e), EXIT_INPUT)
    obj = json.loads(g.to_json())
    obj["config"] = cfg
    _emit(_json(obj), cfg["out"])
    return EXIT_OK


def cmd_wl(args, cfg) -> int:
    if len(args.paths) > 2:
        raise CliError("wl takes one or two formulae", EXIT_USAGE)
    fs = [_read(p) for p in args.paths]
    rep = wl.wl_report(*fs)
    rep["config"] = cfg
    rep["inputs"] = list(args.paths)
    if len(fs) == 1:
        print(f"foldable: {str(rep['foldable']).lower()}")
    else:
        print(f"indistinguishable: {str(rep['indistinguishable']).lower()}")
    if cfg["out"]:
        _emit(_json(rep), cfg["out"])
    return EXIT_OK


def _train_config(cfg):
    from .train import TrainConfig
    tcfg = TrainConfig(
        epochs=cfg["epochs"], batch_size=cfg["batch"], learning_rate=cfg["lr"], d=cfg["d"],
        rounds=cfg["rounds"], rni_fraction=cfg["rni"], loss=cfg["loss"], seed=cfg["seed"],
        deterministic=bool(cfg["deterministic"]),
    )
    try:
        tcfg.model_config()  # validates sizes, fraction and loss
    except ValueError as e:
        raise CliError(str(e), EXIT_INPUT)
    if tcfg.epochs < 1 or tcfg.batch_size < 1 or tcfg.learning_rate <= 0:
        raise CliError("epochs, batch and lr must be positive", EXIT_INPUT)
    return tcfg


def _load_dataset(path, seed):
    p = Path(path)
    if not p.is_dir():
        raise CliError(f"dataset directory not found: {p}", EXIT_MISSING)
    try:
        return generator.load_dataset(p, seed=seed)
    except FileNotFoundError as e:
        raise CliError(str(e), EXIT_MISSING)


def cmd_train(args, cfg) -> int:
    from .train import TrainError, train, write_metrics

    if not cfg["out"]:
        raise CliError("train needs --out", EXIT_USAGE)
    tcfg = _train_config(cfg)
    ds = _load_dataset(args.dataset, cfg["seed"])

    def progress(epoch, m):
        logging.getLogger("milpsat").info("epoch %d loss %.4f train_acc %.3f valid_acc %.3f",
                                          epoch + 1, m.train_loss[-1], m.train_acc[-1], m.valid_acc[-1])

    try:
        model, metrics = train(ds, tcfg, progress)
    except TrainError as e:
        raise CliError(str(e), EXIT_DIMENSION if "dims" in str(e) else EXIT_INPUT)
    out = Path(cfg["out"])
    write_metrics(metrics, tcfg, out, {"cli_config": cfg, "dataset": str(args.dataset)})
    model.save(out / "model.json")
    print(f"best epoch {metrics.best_epoch} valid {metrics.valid.accuracy:.4f} test {metrics.test.accuracy:.4f}")
    return EXIT_OK


def cmd_eval(args, cfg) -> int:
    from .train import evaluate, graphs_of

    ckpt = Path(args.checkpoint)
    if not ckpt.exists():
        raise CliError(f"checkpoint not found: {ckpt}", EXIT_MISSING)
    try:
        model = GnnModel.load(ckpt)
    except (DimensionError, KeyError, json.JSONDecodeError) as e:
        raise CliError(f"bad checkpoint: {e}", EXIT_INPUT)
    c = model.config
    # flags given explicitly must agree with the checkpoint
    for key, have in (("d", c.d), ("rounds", c.rounds), ("rni", c.rni_fraction)):
        given = getattr(args, key, None)
        if given is not None and given != have:
            raise CliError(f"--{key} {given} does not match checkpoint {key}={have}", EXIT_DIMENSION)
    cfg.update(d=c.d, rounds=c.rounds, rni=c.rni_fraction)
    ds = _load_dataset(args.dataset, cfg["seed"])
    entries = ds.split(args.split)
    if not entries:
        raise CliError(f"empty {args.split} split", EXIT_INPUT)
    res = evaluate(model, graphs_of(entries), [e.label for e in entries], args.redraws, seed=cfg["seed"])
    report = {"split": args.split, "accuracy": res.accuracy, "tp": res.tp, "tn": res.tn, "fp": res.fp,
              "fn": res.fn, "checkpoint": str(ckpt), "dataset": str(args.dataset), "redraws": args.redraws,
              "config": cfg}
    print(f"{args.split} accuracy {res.accuracy:.4f} (tp {res.tp} tn {res.tn} fp {res.fp} fn {res.fn})")
    if cfg["out"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        (out / "eval.json").write_text(_json(report))
    return EXIT_OK


def cmd_invariance(args, cfg) -> int:
    f = _read(args.path)
    rng = np.random.default_rng(cfg["seed"])
    sigma = cnf.FormulaPermutation.random(f.m, f.n, rng)
    model = GnnModel(GnnConfig(d=cfg["d"], rounds=cfg["rounds"]), seed=int(rng.integers(2**31)))
    a = forward(model, to_graph(milp.encode(f))).data
    b = forward(model, to_graph(milp.encode(cnf.apply_permutation(f, sigma)))).data
    delta = float(np.abs(a - b).max())
    ok = delta <= INVARIANCE_TOL
    report = {"max_abs_delta": delta, "tolerance": INVARIANCE_TOL, "ok": ok,
              "clause_perm": list(sigma.clause_perm), "var_perm": list(sigma.var_perm),
              "y_hat": float(a[0]), "y_hat_permuted": float(b[0]), "config": cfg}
    print(f"max |dy| = {delta:.3e} ({'ok' if ok else 'FAIL'})")
    if cfg["out"]:
        _emit(_json(report), cfg["out"])
    return EXIT_OK if ok else EXIT_CHECK


def cmd_counterexample(args, cfg) -> int:
    phi, psi = wl.counterexample_pair()
    w = cnf.World.from_bits([1, 0, 1, 0, 1, 0])
    facts = {
        "phi_model": f"{w} satisfies phi" if cnf.evaluate(phi, w) else None,
        "phi_sat": bool(cnf.enumerate_models(phi)),
        "psi_unsat": not cnf.enumerate_models(psi),
        "indistinguishable": wl.indistinguishable(phi, psi),
    }
    ok = bool(facts["phi_model"]) and facts["phi_sat"] and facts["psi_unsat"] and facts["indistinguishable"]
    for k, v in facts.items():
        print(f"{k}: {v if isinstance(v, str) else str(v).lower()}")
    if cfg["out"]:
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        cnf.write_dimacs(phi.with_comments(["phi: XOR 6-cycle, satisfiable"]), out / "phi.cnf")
        cnf.write_dimacs(psi.with_comments(["psi: two XOR 3-cycles, unsatisfiable"]), out / "psi.cnf")
        (out / "report.json").write_text(_json({**facts, "ok": ok, "config": cfg}))
    return EXIT_OK if ok else EXIT_CHECK


COMMANDS = {
    "gen": cmd_gen, "solve": cmd_solve, "encode": cmd_encode, "graph": cmd_graph, "wl": cmd_wl,
    "train": cmd_train, "eval": cmd_eval, "invariance": cmd_invariance, "counterexample": cmd_counterexample,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve(args, args.command)
        return COMMANDS[args.command](args, cfg)
    except CliError as e:
        print(f"milpsat: error: {e}", file=sys.stderr)
        return e.code
    except cnf.CnfError as e:
        print(f"milpsat: error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except DimensionError as e:
        print(f"milpsat: error: {e}", file=sys.stderr)
        return EXIT_DIMENSION


if __name__ == "__main__":
    sys.exit(main())
