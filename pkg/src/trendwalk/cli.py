"""Campaign runner: generators x independent runs, with file outputs and validation.

Per run the output directory receives ``<gen>_<run>.dat`` (JSON run record),
``<gen>_<run>.gml`` and ``geweke_<gen>_<run>.csv``; ``summary.csv`` is
written once all runs finish.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ._validation import (
    InvalidInputError,
    NotFoundError,
    SourceError,
    check_positive_int,
    check_seed,
)
from .diagnostics import (
    GEWEKE_BAND,
    GEWEKE_BURN_IN,
    GEWEKE_DRAWS,
    GEWEKE_POINTS,
    GewekeResult,
    RunReport,
    degree_chain,
    estimate_memory_mb,
    geweke_trace,
    summarize,
)
from .generators import GENERATORS
from .graph import GMLParseError, gml_text, read_gml
from .source import (
    LiveSource,
    ReplaySource,
    SyntheticSource,
    WorldSpec,
    build_graph,
    collect_records,
    write_records,
)
from .walk import Outcome, WalkConfig, run_walk, unique_trends

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2
EXIT_SOURCE = 3

SUMMARY_HEADER = ("generator", "metric", "total", "avg", "std")
GEWEKE_HEADER = ("iteration", "z")


@dataclass(frozen=True)
class CampaignConfig:
    generators: tuple[str, ...] = GENERATORS
    runs_per_generator: int = 10
    countries: int = 15
    min_followers: int = 10
    world: str = "synthetic"  # synthetic | replay:<path> | live:<endpoint>
    world_spec: WorldSpec = field(default_factory=WorldSpec)
    seed: int = 0
    out_dir: Path = Path("campaign")
    geweke_draws: int = GEWEKE_DRAWS
    geweke_burn_in: int = GEWEKE_BURN_IN
    geweke_points: int = GEWEKE_POINTS
    timing: bool = False  # wall-clock times make output trees non-reproducible
    jobs: int = 1

    def __post_init__(self):
        if not self.generators:
            raise InvalidInputError("at least one generator is required")
        for gen in self.generators:
            if gen not in GENERATORS:
                raise InvalidInputError(f"unknown generator {gen!r}")
        if len(set(self.generators)) != len(self.generators):
            raise InvalidInputError("generators must be distinct")
        check_positive_int(self.runs_per_generator, "runs_per_generator")
        check_positive_int(self.countries, "countries")
        check_positive_int(self.min_followers, "min_followers")
        check_positive_int(self.geweke_draws, "geweke_draws")
        check_positive_int(self.geweke_points, "geweke_points")
        check_positive_int(self.jobs, "jobs")
        check_seed(self.seed)
        kind = self.world.split(":", 1)[0]
        if kind not in ("synthetic", "replay", "live") or (
                kind != "synthetic" and ":" not in self.world):
            raise InvalidInputError(f"bad world {self.world!r}; expected synthetic, "
                                    "replay:<path> or live:<endpoint>")


def derive_seed(campaign_seed: int, generator: str, run: int) -> int:
    """64-bit run seed from (campaign seed, generator, run index)."""
    seq = np.random.SeedSequence(check_seed(campaign_seed),
                                 spawn_key=(GENERATORS.index(generator), run))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def make_source(config: CampaignConfig):
    kind, _, arg = config.world.partition(":")
    if kind == "replay":
        return ReplaySource(arg)
    if kind == "live":
        return LiveSource.from_endpoint(arg)
    return SyntheticSource(config.world_spec)


@dataclass
class RunResult:
    name: str
    report: RunReport
    dat: dict
    gml: str
    geweke: list


def run_one(config: CampaignConfig, source, generator: str, run: int) -> RunResult:
    seed = derive_seed(config.seed, generator, run)
    records = collect_records(source, config.countries, seed)
    graph, trend_list, counts = build_graph(records, config.min_followers)
    if not trend_list:
        raise SourceError(f"{generator} run {run}: no eligible trends were retrieved")

    walk_config = WalkConfig(generator=generator, countries=config.countries,
                             min_followers=config.min_followers, seed=seed)
    started = time.perf_counter()
    trace = run_walk(graph, trend_list, walk_config)
    elapsed_ms = int(round((time.perf_counter() - started) * 1000)) if config.timing else 0

    # Diagnostic chain: the same walk continued to the Geweke draw count.
    long_trace = run_walk(graph, trend_list, replace(walk_config, iterations=config.geweke_draws))
    chain = degree_chain(long_trace, graph)
    geweke = geweke_trace(chain, config.geweke_burn_in, config.geweke_points)
    band = GewekeResult(geweke, True, GEWEKE_BAND)

    sampled = unique_trends(trace)
    followers = set()
    for node in sampled:
        followers |= graph.neighbors(node)
    report = RunReport(
        generator=generator,
        collected=counts.collected,
        filtered=counts.filtered,
        sampled=trace.n_fresh,
        duplicated=trace.n_duplicate,
        followers=len(followers),
        iterations=len(trace),
        elapsed_ms=elapsed_ms,
        memory_mb_estimate=estimate_memory_mb(graph, trace),
    )
    fresh = [p.node for p in trace.picks if p.outcome is Outcome.FRESH]
    dat = {
        "report": report.to_dict(),
        "seed": seed,
        "raw_counts": {"collected": counts.collected, "ineligible": counts.ineligible,
                       "duplicates_removed": counts.duplicates_removed,
                       "filtered": counts.filtered, "duplicate_users": counts.duplicate_users,
                       "duplicate_edges": counts.duplicate_edges},
        "nodes": graph.n_nodes,
        "edges": graph.n_edges,
        "trends": graph.n_trends,
        "users": graph.n_users,
        "sampled_trends": [graph.label(n) for n in fresh],
        "node_degrees": [graph.node_degree(n) for n in fresh],
        "trace": [[p.iteration, p.node, p.outcome.value] for p in trace.picks],
        "geweke": {"draws": len(chain), "burn_in": config.geweke_burn_in,
                   "points": len(geweke), "z": geweke[-1][1],
                   "fraction_in_band": band.fraction_in_band},
    }
    return RunResult(f"{generator}_{run}", report, dat, gml_text(graph), geweke)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6f}"


def summary_csv(reports_by_generator: dict[str, list[RunReport]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SUMMARY_HEADER)
    for gen in GENERATORS:
        if gen not in reports_by_generator:
            continue
        for g, metric, total, avg, std in summarize(reports_by_generator[gen]).rows():
            writer.writerow((g, metric, _fmt(total), _fmt(avg), _fmt(std)))
    return buf.getvalue()


def geweke_csv(points) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(GEWEKE_HEADER)
    for iteration, z in points:
        writer.writerow((iteration, repr(float(z))))
    return buf.getvalue()


def _write(path: Path, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def run_campaign(config: CampaignConfig, stream=None) -> int:
    """Run every generator x run, write outputs, return an exit status."""
    stream = stream or sys.stderr
    out = Path(config.out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        print(f"error: output directory {out} is not writable: {exc}", file=stream)
        return EXIT_CONFIG

    jobs = [(gen, run) for gen in config.generators
            for run in range(config.runs_per_generator)]
    try:
        source = make_source(config)
        if config.jobs > 1:
            with ThreadPoolExecutor(max_workers=config.jobs) as pool:
                results = list(pool.map(lambda job: run_one(config, source, *job), jobs))
        else:
            results = [run_one(config, source, gen, run) for gen, run in jobs]
    except (SourceError, NotFoundError, InvalidInputError) as exc:
        print(f"error: trend source failed: {exc}", file=stream)
        return EXIT_SOURCE

    reports: dict[str, list[RunReport]] = {}
    try:
        for result in results:
            _write(out / f"{result.name}.dat",
                   json.dumps(result.dat, indent=2, ensure_ascii=False) + "\n")
            _write(out / f"{result.name}.gml", result.gml)
            _write(out / f"geweke_{result.name}.csv", geweke_csv(result.geweke))
            reports.setdefault(result.report.generator, []).append(result.report)
        _write(out / "summary.csv", summary_csv(reports))
    except OSError as exc:
        print(f"error: cannot write outputs to {out}: {exc}", file=stream)
        return EXIT_CONFIG
    logger.info("wrote %d runs to %s", len(results), out)
    return EXIT_OK


# -- validation --------------------------------------------------------------


@dataclass
class ValidationReport:
    results: list[tuple[str, bool, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return bool(self.results) and all(ok for _, ok, _ in self.results)

    def add(self, name, ok, message=""):
        self.results.append((name, ok, message))

    def lines(self):
        for name, ok, message in self.results:
            yield f"{'PASS' if ok else 'FAIL'} {name}" + (f": {message}" if message else "")


def _check_dat(path: Path) -> RunReport:
    data = json.loads(path.read_text(encoding="utf-8"))
    report = RunReport(**data["report"])
    trace = data["trace"]
    if len(trace) != report.iterations:
        raise ValueError("trace length differs from iterations")
    if [t[0] for t in trace] != list(range(len(trace))):
        raise ValueError("trace iterations are not 0..T-1")
    outcomes = [t[2] for t in trace]
    fresh, dup = outcomes.count("fresh"), outcomes.count("duplicate")
    rejected = outcomes.count("rejected")
    if fresh + dup + rejected != len(trace):
        raise ValueError("unknown outcome in trace")
    if (fresh, dup) != (report.sampled, report.duplicated):
        raise ValueError("trace outcome counts differ from the report")
    seen = set()
    for _, node, outcome in trace:
        if outcome != "rejected" and (outcome == "fresh") == (node in seen):
            raise ValueError(f"node {node} is mislabelled {outcome}")
        if outcome != "rejected":
            seen.add(node)
    if abs(report.pct_sampled + report.pct_duplicated + report.pct_rejected - 100) > 0.01:
        raise ValueError("percentages do not sum to 100")
    if len(data["sampled_trends"]) != report.sampled or len(data["node_degrees"]) != report.sampled:
        raise ValueError("sampled-trend list length differs from the report")
    return report


def _check_gml(path: Path, dat_path: Path):
    raw = path.read_bytes()
    graph = read_gml(raw)
    if gml_text(graph).encode("utf-8") != raw:
        raise ValueError("GML round trip is not byte-identical")
    if dat_path.exists():
        data = json.loads(dat_path.read_text(encoding="utf-8"))
        if (graph.n_nodes, graph.n_edges) != (data["nodes"], data["edges"]):
            raise ValueError("node/edge counts differ from the .dat record")
        degrees = [graph.node_degree(graph.trend_id(label)) for label in data["sampled_trends"]]
        if degrees != data["node_degrees"]:
            raise ValueError("node degrees differ from the .dat record")


def _check_geweke(path: Path):
    rows = list(csv.reader(io.StringIO(path.read_text(encoding="utf-8"))))
    if not rows or tuple(rows[0]) != GEWEKE_HEADER or len(rows) < 2:
        raise ValueError("bad header or no rows")
    for row in rows[1:]:
        int(row[0])
        if not np.isfinite(float(row[1])):
            raise ValueError("non-finite z")


def validate_outputs(directory) -> ValidationReport:
    """Re-parse and cross-check every file of a campaign directory."""
    directory = Path(directory)
    report = ValidationReport()
    if not directory.is_dir():
        report.add(str(directory), False, "not a directory")
        return report
    dats = sorted(directory.glob("*.dat"))
    gmls = sorted(directory.glob("*.gml"))
    names = sorted({p.stem for p in dats} | {p.stem for p in gmls})
    if not names:
        report.add(str(directory), False, "no run files found")
    reports: dict[tuple[int, str], RunReport] = {}
    for name in names:
        dat, gml = directory / f"{name}.dat", directory / f"{name}.gml"
        geweke = directory / f"geweke_{name}.csv"
        for path, check in ((dat, lambda: _check_dat(dat)),
                            (gml, lambda: _check_gml(gml, dat)),
                            (geweke, lambda: _check_geweke(geweke))):
            if not path.exists():
                report.add(path.name, False, "missing")
                continue
            try:
                result = check()
            except (ValueError, KeyError, TypeError, IndexError, GMLParseError,
                    InvalidInputError, LookupError, UnicodeDecodeError) as exc:
                report.add(path.name, False, str(exc) or type(exc).__name__)
                continue
            if isinstance(result, RunReport):
                run = name.rsplit("_", 1)[-1]
                reports[(int(run) if run.isdigit() else -1, name)] = result
            report.add(path.name, True)
    summary = directory / "summary.csv"
    if not summary.exists():
        report.add(summary.name, False, "missing")
    elif not reports:
        report.add(summary.name, False, "no valid .dat files to recompute from")
    else:
        by_gen = {}
        for (run, _), rep in sorted(reports.items()):
            by_gen.setdefault(rep.generator, []).append(rep)
        ok = summary.read_text(encoding="utf-8") == summary_csv(by_gen)
        report.add(summary.name, ok, "" if ok else "differs from the .dat aggregation")
    return report


# -- command line ------------------------------------------------------------

_WORLD_KEYS = {f.name for f in fields(WorldSpec)}


def _parse_value(text: str):
    text = text.strip()
    try:
        return json.loads(text)
    except ValueError:
        return text


def load_config_file(path) -> dict:
    """Read ``key = value`` lines or a JSON object."""
    text = Path(path).read_text(encoding="utf-8")
    if text.lstrip().startswith("{"):
        return json.loads(text)
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInputError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        out[key.strip().replace("-", "_")] = _parse_value(value)
    return out


def _build_config(settings: dict) -> CampaignConfig:
    settings = dict(settings)
    world_kwargs = {k: settings.pop(k) for k in list(settings) if k in _WORLD_KEYS - {"seed"}}
    if "world_seed" in settings:
        world_kwargs["seed"] = settings.pop("world_seed")
    aliases = {"generator": "generators", "runs": "runs_per_generator", "out": "out_dir"}
    kwargs = {}
    for key, value in settings.items():
        key = aliases.get(key, key)
        if key == "generators":
            if isinstance(value, str):
                value = [v.strip() for v in value.split(",") if v.strip()]
            value = tuple(value)
        elif key == "out_dir":
            value = Path(value)
        kwargs[key] = value
    if "seed" in kwargs and "seed" not in world_kwargs:
        world_kwargs["seed"] = kwargs["seed"]
    unknown = set(kwargs) - {f.name for f in fields(CampaignConfig)}
    if unknown:
        raise InvalidInputError(f"unknown configuration keys: {sorted(unknown)}")
    return CampaignConfig(world_spec=WorldSpec(**world_kwargs), **kwargs)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trendwalk",
        description="Sample trending topics with a membership-accept MH random walk.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a sampling campaign")
    run.add_argument("--config", help="key = value or JSON configuration file")
    run.add_argument("--generator", action="append",
                     help="brownian, illusion or reservoir (repeatable or comma separated)")
    run.add_argument("--runs", type=int, help="independent runs per generator (default 10)")
    run.add_argument("--countries", type=int, help="countries per run (default 15)")
    run.add_argument("--min-followers", type=int, help="eligibility floor (default 10)")
    run.add_argument("--seed", type=int, help="campaign seed (default 0)")
    run.add_argument("--out", help="output directory (default ./campaign)")
    run.add_argument("--world", help="synthetic | replay:<path> | live:<endpoint>")
    run.add_argument("--jobs", type=int, help="worker threads (default 1)")
    run.add_argument("--timing", action="store_true", default=None,
                     help="record wall-clock walk times (breaks byte reproducibility)")

    val = sub.add_parser("validate", help="re-check a campaign output directory")
    val.add_argument("directory")

    rec = sub.add_parser("record", help="write a synthetic world as a JSON Lines replay file")
    rec.add_argument("output")
    rec.add_argument("--world-seed", type=int, default=0)
    rec.add_argument("--overlap-prob", type=float, default=WorldSpec.overlap_prob)
    rec.add_argument("--country-count", type=int, default=WorldSpec.country_count)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")

    if args.command == "validate":
        report = validate_outputs(args.directory)
        for line in report.lines():
            print(line)
        return EXIT_OK if report.ok else EXIT_FAILED

    if args.command == "record":
        try:
            source = SyntheticSource(WorldSpec(country_count=args.country_count,
                                               overlap_prob=args.overlap_prob,
                                               seed=args.world_seed))
            records = [r for c in source.countries() for r in source.fetch_trends(c)]
            write_records(records, args.output)
        except InvalidInputError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        except OSError as exc:
            print(f"error: cannot write {args.output}: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        print(f"wrote {len(records)} records to {args.output}")
        return EXIT_OK

    try:
        settings = load_config_file(args.config) if args.config else {}
        overrides = {
            "generators": ([g for item in args.generator for g in item.split(",")]
                           if args.generator else None),
            "runs_per_generator": args.runs,
            "countries": args.countries,
            "min_followers": args.min_followers,
            "seed": args.seed,
            "out_dir": args.out,
            "world": args.world,
            "jobs": args.jobs,
            "timing": args.timing,
        }
        settings.update({k: v for k, v in overrides.items() if v is not None})
        config = _build_config(settings)
    except (InvalidInputError, OSError, ValueError, TypeError) as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return run_campaign(config)


if __name__ == "__main__":
    sys.exit(main())
