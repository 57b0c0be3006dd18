"""``aqtlab`` command line: simulate, check, sweep, render.

Exit codes: 0 ok, 1 bound violated, 2 usage or parse error, 3 invariant failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import adversaries as adv
from .boundedness import check_local, min_sigma
from .engine import InvariantViolation, PlateauMonitor, oed_proof_bound, resolve_protocol, run
from .flows import discretization_params, discretize, load_family
from .injection import BoundParams, InjectionPattern, dump_pattern, load_pattern, qstr, to_q
from .render import SWEEP_COLUMNS, parse_sweep_csv, render_svg
from .topology import PathTopology, ValidationError

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INVARIANT = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class Scenario:
    """A parsed adversary spec: what to run, for how long, under which declared bound."""

    kind: str
    n: int
    adversary: object
    horizon: int
    params: BoundParams | None
    adaptive: bool = False


def _ints(text: str, count: int, spec: str) -> list[int]:
    parts = text.split(",") if text else []
    if len(parts) != count:
        raise UsageError(f"adversary spec {spec!r} needs {count} comma-separated integers")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise UsageError(f"adversary spec {spec!r}: expected integers") from None


def parse_adversary(spec: str, rounds: int | None = None, seed: int | None = None,
                    epochs: int | None = None) -> Scenario:
    """Turn ``kind:args`` into a :class:`Scenario`.

    Kinds: ``a0:n``, ``a1:n``, ``wave:n``, ``lb:n,B,sigma``,
    ``rand:n,B,sigma[,seed]``, ``empty:n`` and ``file:path`` (pattern CSV
    or flow-family JSON).
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind in ("a0", "a1"):
            (n,) = _ints(rest, 1, spec)
            H = 4 * n if rounds is None else rounds
            if kind == "a0":
                return Scenario(kind, n, adv.example_A0(n, H), H, BoundParams.uniform(1, n - 1, 0))
            return Scenario(kind, n, adv.example_A1(n, H), H, BoundParams.uniform(1, 0, 1))
        if kind == "empty":
            (n,) = _ints(rest, 1, spec)
            H = n if rounds is None else rounds
            return Scenario(kind, n, InjectionPattern(H, (), n), H, BoundParams.uniform(0, 0, 0))
        if kind == "wave":
            (n,) = _ints(rest, 1, spec)
            F = adv.wave_flows(n)
            H = 3 * n if rounds is None else rounds
            return Scenario(kind, n, discretize(F, H), H, discretization_params(F))
        if kind == "lb":
            n, B, sigma = _ints(rest, 3, spec)
            a = adv.lower_bound_adaptive(n, B, sigma)
            H = a.final_round if rounds is None else rounds
            return Scenario(kind, n, a, H, a.params, adaptive=True)
        if kind == "rand":
            parts = rest.split(",")
            vals = _ints(rest, len(parts) if len(parts) in (3, 4) else 4, spec)
            n, B, sigma = vals[:3]
            s = vals[3] if len(vals) == 4 else (seed if seed is not None else 0)
            a = adv.oblivious_random(n, B, sigma, s)
            H = a.horizon_for(epochs or 1) if rounds is None else rounds
            return Scenario(kind, n, a, H, a.params, adaptive=True)
        if kind == "file":
            path = Path(rest)
            if not path.is_file():
                raise UsageError(f"no such file: {rest}")
            text = path.read_text()
            if path.suffix == ".json":
                F = load_family(text)
                H = rounds if rounds is not None else 4 * max(F.n, 1)
                return Scenario(kind, F.n, discretize(F, H), H, discretization_params(F))
            A = load_pattern(text)
            H = A.horizon if rounds is None else rounds
            return Scenario(kind, A.n, A.with_horizon(max(H, A.horizon)), H, None)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    raise UsageError(f"unknown adversary kind {kind!r}")


def _topology(spec: str | None, n: int, capacity: int) -> PathTopology:
    if spec is None:
        return PathTopology(n, capacity)
    kind, _, rest = spec.partition(":")
    if kind != "path":
        raise UsageError(f"only path topologies are supported, got {spec!r}")
    try:
        size = int(rest)
    except ValueError:
        raise UsageError(f"bad topology spec {spec!r}") from None
    if n and size != n:
        raise UsageError(f"topology has {size} buffers but the adversary uses {n}")
    return PathTopology(size, capacity)


def _params_from_flags(args, fallback: BoundParams | None) -> BoundParams | None:
    if getattr(args, "params_from", None):
        meta = json.loads(Path(args.params_from).read_text())
        if not meta.get("params"):
            raise UsageError(f"{args.params_from} carries no declared parameters")
        return BoundParams.from_json(meta["params"])
    given = [args.rho, args.sigma, args.B, args.beta]
    if all(v is None for v in given):
        return fallback
    beta = {}
    if args.beta:
        for part in args.beta.split(","):
            k, _, v = part.partition(":")
            beta[int(k)] = to_q(v)
    return BoundParams(to_q(args.rho or 0), to_q(args.sigma or 0), beta, to_q(args.B or 0))


# -- config merging ------------------------------------------------------------

CONFIG_KEYS = ("topology", "adversary", "protocol", "rounds", "seed", "capacity",
               "check_invariants", "out", "epochs", "events")
DEFAULTS = {"protocol": "oed", "capacity": 1, "check_invariants": False, "events": False}


def _merge_config(args) -> None:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        unknown = set(cfg) - set(CONFIG_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
    for key in CONFIG_KEYS:
        if not hasattr(args, key):
            continue
        if getattr(args, key) is None:
            setattr(args, key, cfg.get(key, DEFAULTS.get(key)))
    if getattr(args, "seed", None) is None and os.environ.get("AQT_LAB_SEED"):
        args.seed = int(os.environ["AQT_LAB_SEED"])


# -- commands --------------------------------------------------------------------

def cmd_simulate(args) -> int:
    _merge_config(args)
    if not args.adversary:
        raise UsageError("simulate needs --adversary")
    sc = parse_adversary(args.adversary, args.rounds, args.seed, args.epochs)
    topo = _topology(args.topology, sc.n, int(args.capacity))
    pattern_weighted = isinstance(sc.adversary, InjectionPattern) and not sc.adversary.is_unit
    monitor = None
    if args.check_invariants:
        if sc.params is None:
            raise UsageError("--check-invariants needs declared parameters (not available for file patterns)")
        monitor = PlateauMonitor(sc.params.max_beta(sc.n), sc.params.sigma)
    try:
        trace = run(topo, sc.adversary, args.protocol, sc.horizon, seed=args.seed, monitor=monitor,
                    record_events=bool(args.events), weighted=pattern_weighted)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "trace.csv").write_text(trace.trace_csv())
    (out / "summary.csv").write_text(trace.summary_csv())
    (out / "pattern.csv").write_text(dump_pattern(trace.meta["realized"]))
    if args.events:
        (out / "events.jsonl").write_text(trace.events_jsonl())
    meta = {
        "adversary": args.adversary,
        "n": sc.n,
        "protocol": trace.protocol,
        "rounds": sc.horizon,
        "seed": args.seed,
        "capacity": topo.capacity,
        "params": None if sc.params is None else sc.params.to_json(sc.n),
        "max_load": qstr(Fraction(trace.max_load())),
        "injected": trace.injected,
        "delivered": trace.delivered,
    }
    (out / "meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    print(f"max_load={qstr(Fraction(trace.max_load()))} rounds={sc.horizon} out={out}")
    if monitor is not None and monitor.violations:
        for msg in monitor.violations[:20]:
            print(f"invariant: {msg}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def cmd_check(args) -> int:
    if args.pattern:
        try:
            A = load_pattern(Path(args.pattern).read_text())
        except OSError as exc:
            raise UsageError(str(exc)) from None
        declared = None
    elif args.adversary:
        sc = parse_adversary(args.adversary, args.rounds, args.seed, args.epochs)
        declared = sc.params
        if sc.adaptive:
            A = run(PathTopology(sc.n), sc.adversary, args.protocol or "oed", sc.horizon,
                    seed=args.seed, record_events=False).meta["realized"]
        else:
            A = sc.adversary
    else:
        raise UsageError("check needs --pattern or --adversary")
    params = _params_from_flags(args, declared)
    if params is None:
        raise UsageError("no parameters: give --rho/--sigma/--B/--beta or --params-from")
    verdict = check_local(A, params)
    beta = ",".join(f"{k}:{qstr(v)}" for k, v in sorted(params.beta.items()))
    print(f"params rho={qstr(params.rho)} sigma={qstr(params.sigma)} B={qstr(params.beta_default)}"
          + (f" beta={beta}" if beta else ""))
    print(f"min_sigma(rho={qstr(params.rho)}) = {qstr(min_sigma(A, params.rho))}")
    if verdict.ok:
        print("ok")
        return EXIT_OK
    w = verdict.witness
    print(f"violation: {w.describe()}")
    return EXIT_VIOLATION


def sweep_row(n: int, B: int, sigma: int, protocol: str, kind: str, seed: int, epochs: int) -> dict:
    if kind == "lb":
        a = adv.lower_bound_adaptive(n, B, sigma)
        H = a.final_round
    else:
        a = adv.oblivious_random(n, B, sigma, seed)
        H = a.horizon_for(epochs)
    from .engine import simulate_loads  # kept local so worker processes import lazily

    hist = simulate_loads(n, a, protocol, H, seed=seed)
    peak = int(hist.max()) if hist.size else 0
    return {"n": n, "B": B, "sigma": sigma, "protocol": protocol, "peak_load": peak,
            "proof_bound": oed_proof_bound(max(n, 2), B, sigma)}


def _sweep_csv(rows: list[dict]) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        lines.append(",".join(qstr(Fraction(r[c])) if c != "protocol" else r[c] for c in SWEEP_COLUMNS))
    return "\n".join(lines) + "\n"


def cmd_sweep(args) -> int:
    if args.seed is None and os.environ.get("AQT_LAB_SEED"):
        args.seed = int(os.environ["AQT_LAB_SEED"])
    seed = args.seed or 0
    try:
        ns = [int(x) for x in args.n.split(",") if x.strip()] if args.n else []
    except ValueError:
        raise UsageError(f"bad --n list {args.n!r}") from None
    protocols = [p for p in args.protocol.split(",") if p]
    for p in protocols:
        try:
            resolve_protocol(p)
        except ValidationError as exc:
            raise UsageError(str(exc)) from None
    jobs = [(n, args.B, args.sigma, p, args.adversary, seed, args.epochs) for n in ns for p in protocols]
    try:
        if args.jobs > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                rows = list(pool.map(sweep_row, *zip(*jobs)))
        else:
            rows = [sweep_row(*j) for j in jobs]
    except ValidationError as exc:
        raise UsageError(str(exc)) from None
    rows.sort(key=lambda r: (r["protocol"], r["n"]))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text(_sweep_csv(rows))
    (out / "sweep.svg").write_text(render_svg(rows))
    for r in rows:
        print(f"n={r['n']} protocol={r['protocol']} peak={r['peak_load']} bound={qstr(r['proof_bound'])}")
    status = EXIT_OK
    if args.adversary == "lb":
        for p in protocols:
            peaks = [r["peak_load"] for r in rows if r["protocol"] == p]
            if any(b < a for a, b in zip(peaks, peaks[1:])):
                print(f"invariant: peak load of {p} is not monotone in n: {peaks}", file=sys.stderr)
                status = EXIT_INVARIANT
            for r in rows:
                floor = Fraction(int(math.log2(r["n"])), 2) if r["n"] > 1 else 0
                if r["protocol"] == p and r["peak_load"] < floor:
                    print(f"invariant: n={r['n']} {p} peak {r['peak_load']} below {floor}", file=sys.stderr)
                    status = EXIT_INVARIANT
    return status


def cmd_render(args) -> int:
    try:
        text = Path(args.csv).read_text()
    except OSError as exc:
        raise UsageError(str(exc)) from None
    rows = parse_sweep_csv(text)
    Path(args.svg).write_text(render_svg(rows))
    print(f"wrote {args.svg} ({len(rows)} points)")
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aqtlab", description="Adversarial queueing lab for path networks.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a protocol against an adversary and write traces")
    s.add_argument("--config", help="JSON file with any of the flags below; flags win")
    s.add_argument("--topology", help="path:N")
    s.add_argument("--adversary", help="a0:n | a1:n | wave:n | lb:n,B,s | rand:n,B,s[,seed] | empty:n | file:path")
    s.add_argument("--protocol", choices=["oed", "greedy"])
    s.add_argument("--rounds", type=int, help="last round to simulate (default depends on adversary)")
    s.add_argument("--epochs", type=int, help="epochs for rand adversaries when --rounds is absent")
    s.add_argument("--seed", type=int, help="default: $AQT_LAB_SEED")
    s.add_argument("--capacity", type=int)
    s.add_argument("--check-invariants", dest="check_invariants", action="store_const", const=True,
                   help="track plateau invariants of OED every round")
    s.add_argument("--events", action="store_const", const=True, help="also write events.jsonl")
    s.add_argument("--out", help="output directory (default: .)")
    s.set_defaults(func=cmd_simulate)

    c = sub.add_parser("check", help="decide local boundedness of a pattern")
    src = c.add_mutually_exclusive_group()
    src.add_argument("--pattern", help="pattern CSV file")
    src.add_argument("--adversary", help="adversary spec (adaptive ones are realized first)")
    c.add_argument("--rho")
    c.add_argument("--sigma")
    c.add_argument("--B", help="uniform local burst")
    c.add_argument("--beta", help="per-buffer bursts, e.g. 1:2,3:1 (overrides --B there)")
    c.add_argument("--params-from", dest="params_from", help="meta.json written by simulate")
    c.add_argument("--rounds", type=int)
    c.add_argument("--epochs", type=int)
    c.add_argument("--seed", type=int)
    c.add_argument("--protocol", choices=["oed", "greedy"], help="protocol used to realize adaptive adversaries")
    c.set_defaults(func=cmd_check)

    w = sub.add_parser("sweep", help="peak load across network sizes")
    w.add_argument("--n", default="4,8,16,32,64", help="comma-separated sizes")
    w.add_argument("--B", type=int, default=1)
    w.add_argument("--sigma", type=int, default=0)
    w.add_argument("--protocol", default="oed", help="comma-separated: oed,greedy")
    w.add_argument("--adversary", choices=["lb", "rand"], default="lb")
    w.add_argument("--epochs", type=int, default=20)
    w.add_argument("--seed", type=int)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--out", help="output directory (default: .)")
    w.set_defaults(func=cmd_sweep)

    r = sub.add_parser("render", help="SVG chart from a sweep CSV")
    r.add_argument("csv")
    r.add_argument("svg")
    r.set_defaults(func=cmd_render)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValidationError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvariantViolation as exc:
        print(f"invariant: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
