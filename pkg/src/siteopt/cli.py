"""Command-line entry point driving every pipeline.

Subcommands: citygen, train, baseline, evaluate, export-front, serve,
dump-constraints.  Global flags: --seed, --config (flat key=value overrides),
--out.  Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import citygen
from .baselines import (
    enumerate_true_front,
    greedy_cost_beam,
    moead,
    nsga2,
    random_feasible,
)
from .constraints import build_registry
from .domain import InvalidArgumentError
from .metrics import IndicatorReport, igd
from .ppo import DESK_CONFIG, ParetoArchive, PpoConfig, train_population
from .report import write_report


def read_config(path: str | Path) -> dict[str, str]:
    """Flat ``key=value`` lines; blank lines and #-comments ignored."""
    overrides: dict[str, str] = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise InvalidArgumentError(f"config line {lineno}: expected key=value")
        key, value = line.split("=", 1)
        overrides[key.strip()] = value.strip()
    return overrides


def _coerce(value: str, like):
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    if isinstance(like, int):
        return int(value)
    if isinstance(like, float):
        return float(value)
    return value


def _apply_overrides(obj, overrides: dict[str, str]):
    """Dataclass copy with matching keys replaced; unknown keys rejected."""
    names = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    updates = {}
    for key, value in overrides.items():
        if key in names:
            updates[key] = _coerce(value, names[key])
    return dataclasses.replace(obj, **updates) if updates else obj


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="siteopt",
        description="Constrained multi-objective housing site selection toolkit")
    parser.add_argument("--seed", type=int, default=0, help="global random seed")
    parser.add_argument("--config", type=str, default=None,
                        help="flat key=value file overriding defaults")
    parser.add_argument("--out", type=str, default=None, help="output path")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("citygen", help="generate a synthetic city file")
    p.add_argument("--preset", choices=sorted(citygen.PRESETS), default="desk")

    p = sub.add_parser("train", help="train the policy population")
    p.add_argument("--city", required=True)
    p.add_argument("--scale", choices=("desk", "full"), default="desk")
    p.add_argument("--no-mask", action="store_true",
                   help="disable action masking (penalty-only compliance)")

    p = sub.add_parser("baseline", help="run a reference optimizer")
    p.add_argument("--city", required=True)
    p.add_argument("--method", required=True,
                   choices=("random", "greedy", "nsga2", "moead", "exhaustive"))
    p.add_argument("--samples", type=int, default=100,
                   help="feasible samples for the random baseline")
    p.add_argument("--pop-size", type=int, default=40)
    p.add_argument("--generations", type=int, default=30)
    p.add_argument("--divisions", type=int, default=4,
                   help="simplex-lattice divisions for decomposition")

    p = sub.add_parser("evaluate", help="indicator report with figures")
    p.add_argument("--city", required=True)
    p.add_argument("--front", action="append", required=True, metavar="NAME=PATH",
                   help="labelled front/archive file; repeatable")
    p.add_argument("--reference", default=None,
                   help="front file treated as the reference for IGD")

    p = sub.add_parser("export-front", help="export an archive's front as TSV")
    p.add_argument("--city", required=True)
    p.add_argument("--archive", required=True)

    p = sub.add_parser("serve", help="run the exploration service")
    p.add_argument("--city", required=True)
    p.add_argument("--archive", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--live", action="store_true",
                   help="greedy swap search when soft toggles exclude the "
                        "whole archive")

    p = sub.add_parser("dump-constraints", help="list the 127-constraint registry")
    p.add_argument("--city", required=True)
    return parser


def _load_front(city, path: str) -> list:
    """Read objective vectors from either an archive or a baseline front file."""
    from .domain import ObjectiveVector

    lines = Path(path).read_text(encoding="utf-8").splitlines()
    out = []
    for raw in lines[1:]:
        if raw.strip():
            out.append(ObjectiveVector.from_array(json.loads(raw)["objectives"]))
    return out


def _cmd_citygen(args, overrides) -> int:
    spec = _apply_overrides(citygen.PRESETS[args.preset], overrides)
    spec = dataclasses.replace(spec, seed=args.seed)
    city = citygen.generate_city(spec)
    out = args.out or f"{spec.name}.city.txt"
    citygen.write_city(city, out)
    stats = citygen.summarize(city)
    print(f"wrote {out}: {stats.n_parcels} parcels, "
          f"QCT {100 * stats.qct_fraction:.1f}%, "
          f"minority {100 * stats.minority_fraction:.1f}%")
    return 0


def _cmd_train(args, overrides) -> int:
    city = citygen.read_city(args.city)
    cfg = DESK_CONFIG if args.scale == "desk" else PpoConfig()
    cfg = _apply_overrides(cfg, overrides)
    if args.no_mask:
        cfg = dataclasses.replace(cfg, masking=False)
    registry = build_registry(city)
    out = args.out or f"run_{city.name}_seed{args.seed}"
    result = train_population(city, registry, cfg, args.seed, out_dir=out)
    print(f"run directory: {out}")
    print(f"archive size {len(result.archive.records)}, "
          f"hypervolume {result.archive.hypervolume():.4f}, "
          f"constraint compliance {100 * result.rcr:.1f}%")
    return 0


def _cmd_baseline(args, overrides) -> int:
    city = citygen.read_city(args.city)
    registry = build_registry(city)
    if args.method == "random":
        result = random_feasible(city, registry, args.samples, args.seed)
    elif args.method == "greedy":
        result = greedy_cost_beam(city, registry)
    elif args.method == "nsga2":
        result = nsga2(city, registry, args.pop_size, args.generations, args.seed)
    elif args.method == "moead":
        result = moead(city, registry, args.divisions, args.generations, args.seed)
    else:
        result = enumerate_true_front(city, registry)
    out = args.out or f"{city.name}.{args.method}.front.txt"
    result.save(city, out)
    print(f"wrote {out}: {len(result.portfolios)} non-dominated portfolios, "
          f"hypervolume {result.hypervolume(city):.4f} "
          f"({result.evaluations} evaluations, {result.seconds:.1f}s)")
    return 0


def _cmd_evaluate(args, overrides) -> int:
    from .metrics import hypervolume_exact
    from .domain import normalize

    city = citygen.read_city(args.city)
    fronts = {}
    for item in args.front:
        if "=" not in item:
            raise InvalidArgumentError("--front expects NAME=PATH")
        name, path = item.split("=", 1)
        fronts[name] = _load_front(city, path)
    reference = _load_front(city, args.reference) if args.reference else None
    reports = {}
    for name, front in fronts.items():
        norm = [normalize(o, city.objective_bounds) for o in front]
        reports[name] = IndicatorReport(
            hypervolume=hypervolume_exact(norm),
            rcr=1.0,   # serialized fronts contain only feasible portfolios
            igd=igd(front, reference) if reference else None,
            front_size=len(front))
    out = args.out or "report"
    written = write_report(out, city, reports, fronts)
    for path in written:
        print(f"wrote {path}")
    return 0


def _cmd_export_front(args, overrides) -> int:
    city = citygen.read_city(args.city)
    archive = ParetoArchive.load(city, args.archive)
    out = args.out or f"{city.name}.front.tsv"
    lines = ["accessibility\tenvironment\tneg_cost\tequity\tpolicy_id\tportfolio"]
    for r in archive.records:
        obj = "\t".join(f"{v:.6g}" for v in r.objectives)
        lines.append(f"{obj}\t{r.policy_id}\t{','.join(map(str, r.portfolio))}")
    Path(out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {out}: {len(archive.records)} records")
    return 0


def _cmd_serve(args, overrides) -> int:
    from .server import serve

    city = citygen.read_city(args.city)
    registry = build_registry(city)
    archive = ParetoArchive.load(city, args.archive)
    serve(city, registry, archive, host=args.host, port=args.port,
          live=args.live)
    return 0


def _cmd_dump_constraints(args, overrides) -> int:
    city = citygen.read_city(args.city)
    print(build_registry(city).dump())
    return 0


COMMANDS = {
    "citygen": _cmd_citygen,
    "train": _cmd_train,
    "baseline": _cmd_baseline,
    "evaluate": _cmd_evaluate,
    "export-front": _cmd_export_front,
    "serve": _cmd_serve,
    "dump-constraints": _cmd_dump_constraints,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = read_config(args.config) if args.config else {}
        return COMMANDS[args.command](args, overrides)
    except (InvalidArgumentError, citygen.CityFileError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
