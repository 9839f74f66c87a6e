"""Command-line front end.

Each subcommand reads files, writes fixed-name outputs into ``--out`` and
drops a ``manifest.json`` next to them. Exit codes: 0 success, 1 internal
error, 2 invalid input or empty result.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import os
import sys
from datetime import timedelta
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .config import AnalysisConfig
from .errors import InputError
from .graph import build_series, export_series
from .ingest import Corpus, dedup_for_topics, describe, dump_jsonl, format_timestamp, parse_events, parse_timestamp
from .speed import compute_speeds, read_speeds_csv, speeds_to_csv, speeds_to_json
from .stats import PairedSample, histogram, ols_regression, spearman, summarize, tail_overlap
from .synth import GeneratorConfig, generate, spread
from .topics import build_profiles, count_unlabeled, read_topics_csv, topic_stats, topics_to_csv

logger = logging.getLogger("nodespeed")


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _read_bytes(path: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc


def _load_corpus(args: argparse.Namespace) -> tuple[Corpus, bytes]:
    data = _read_bytes(args.input)
    fmt = args.input_format or ("csv" if args.input.lower().endswith(".csv") else "jsonl")
    window = None
    if args.window_start or args.window_end:
        if not (args.window_start and args.window_end):
            raise InputError("--window-start and --window-end must be given together")
        try:
            window = (parse_timestamp(args.window_start), parse_timestamp(args.window_end))
        except Exception as exc:
            raise InputError(f"invalid window: {exc}") from exc
    corpus = parse_events(data, fmt, window=window, max_error_rate=args.max_error_rate)
    if corpus.diagnostics:
        logger.warning("%d malformed records excluded", len(corpus.diagnostics))
    return corpus, data


def _window_dict(corpus: Corpus) -> Optional[dict]:
    if corpus.window is None:
        return None
    return {"start": format_timestamp(corpus.window[0]), "end": format_timestamp(corpus.window[1])}


class _Output:
    """Collects output files and writes them with a manifest."""

    def __init__(self, out_dir: str):
        self.dir = Path(out_dir)
        self.files: dict[str, bytes] = {}

    def add(self, name: str, text: str) -> None:
        self.files[name] = text.encode("utf-8")

    def write(self, command: str, config: dict, inputs: dict[str, bytes], extra: Optional[dict] = None) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        for name, data in self.files.items():
            (self.dir / name).write_bytes(data)
        input_digests = {name: _sha256(data) for name, data in sorted(inputs.items())}
        run_key = json.dumps({"command": command, "config": config, "inputs": input_digests}, sort_keys=True)
        manifest = {
            "tool": "nodespeed",
            "version": __version__,
            "command": command,
            "config": config,
            "inputs": input_digests,
            "run_digest": _sha256(run_key.encode("utf-8")),
            **(extra or {}),
            "outputs": {name: _sha256(data) for name, data in sorted(self.files.items())},
        }
        (self.dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")


def _wants(fmt: str, kind: str) -> bool:
    return fmt in (kind, "both")


def parse_value_spec(spec: str) -> list[float]:
    """``"0.1"``, ``"0,0.5,1"`` or an inclusive range ``"start:stop:step"``."""
    try:
        if ":" in spec:
            start, stop, step = (float(p) for p in spec.split(":"))
            if step <= 0:
                raise ValueError
            count = int(round((stop - start) / step)) + 1
            return [round(start + k * step, 12) for k in range(count)]
        return [float(p) for p in spec.split(",") if p.strip()]
    except ValueError:
        raise InputError(f"invalid value spec {spec!r}") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_describe(args: argparse.Namespace) -> None:
    corpus, data = _load_corpus(args)
    report = describe(corpus)
    out = _Output(args.out)
    if _wants(args.format, "csv"):
        out.add("describe.csv", report.to_csv())
    if _wants(args.format, "json"):
        out.add("describe.json", report.to_json())
    out.write(
        "describe",
        {"max_error_rate": args.max_error_rate},
        {Path(args.input).name: data},
        {"window": _window_dict(corpus), "n_records": corpus.n_records, "n_malformed": len(corpus.diagnostics)},
    )


def _analysis_config(args: argparse.Namespace) -> AnalysisConfig:
    return AnalysisConfig(
        bin_width=timedelta(days=args.bin_days),
        min_retweets=args.min_retweets,
        fallback_distance=args.fallback,
        summation_mode=args.mode,
        include_first_bin=args.include_first_bin,
    )


def cmd_speed(args: argparse.Namespace) -> None:
    if args.bin_days <= 0:
        raise InputError("--bin-days must be positive")
    config = _analysis_config(args)
    corpus, data = _load_corpus(args)
    series = build_series(corpus, config.bin_width)
    records = compute_speeds(corpus, series, config, threads=args.threads)
    out = _Output(args.out)
    if _wants(args.format, "csv"):
        out.add("speeds.csv", speeds_to_csv(records, len(series)))
    if _wants(args.format, "json"):
        out.add("speeds.json", speeds_to_json(records, len(series)))
    if args.snapshots_dir:
        export_series(series, Path(args.snapshots_dir))
    out.write(
        "speed",
        config.to_dict(),
        {Path(args.input).name: data},
        {"window": _window_dict(corpus), "n_snapshots": len(series), "n_users": len(records)},
    )
    if not records:
        raise InputError(f"no user has at least {config.min_retweets} retweets")


def cmd_topics(args: argparse.Namespace) -> None:
    corpus, data = _load_corpus(args)
    if args.dedup:
        corpus = dedup_for_topics(corpus)
    stats = topic_stats(build_profiles(corpus))
    out = _Output(args.out)
    if _wants(args.format, "csv"):
        out.add("topics.csv", topics_to_csv(stats))
    if _wants(args.format, "json"):
        doc = {
            "smoothing": args.smoothing,
            "users": [
                {
                    "user_id": s.user,
                    "n_labeled": s.n_labeled,
                    "variation": s.variation_raw if args.smoothing == "none" else s.variation_smoothed,
                    "variation_raw": s.variation_raw,
                    "variation_smoothed": s.variation_smoothed,
                    "monotonicity": s.monotonicity,
                }
                for s in stats
            ],
        }
        out.add("topics.json", json.dumps(doc, indent=2) + "\n")
    out.write(
        "topics",
        {"smoothing": args.smoothing, "dedup": args.dedup},
        {Path(args.input).name: data},
        {"window": _window_dict(corpus), "n_users": len(stats), "n_unlabeled": count_unlabeled(corpus)},
    )


def _guarded(fn, *a):
    try:
        return fn(*a).to_dict()
    except InputError as exc:
        return {"error": str(exc)}


def _hist_csv(values: Sequence[float], bins: int) -> str:
    lines = ["bin_left,bin_right,count"]
    lines += [f"{lo!r},{hi!r},{c}" for lo, hi, c in histogram(values, bins)]
    return "\n".join(lines) + "\n"


def correlate(
    speeds: dict[str, float],
    topics: list,
    config: AnalysisConfig,
    smoothing: str = "none",
    bins: int = 20,
) -> tuple[dict, dict[str, str]]:
    """Library-level body of the ``correlate`` command: JSON document and histogram CSVs."""
    mono = {t.user: t.monotonicity for t in topics}
    variation = {t.user: (t.variation_raw if smoothing == "none" else t.variation_smoothed) for t in topics}
    users = sorted(speeds.keys() & mono.keys())
    if not users:
        raise InputError("no users shared between speed and topic files")

    speed_var = PairedSample.from_maps(speeds, variation)
    speed_mono = PairedSample.from_maps(speeds, mono)
    try:
        rho = spearman(speed_var.x, speed_var.y) if len(speed_var) >= 2 else None
    except InputError:
        rho = None
    doc = {
        "n_users": len(users),
        "n_users_with_variation": len(speed_var),
        "smoothing": smoothing,
        "regression_speed_variation": _guarded(ols_regression, speed_var),
        "regression_speed_monotonicity": _guarded(ols_regression, speed_mono),
        "spearman_speed_variation": rho,
        "summaries": {
            "speed": _guarded(summarize, [speeds[u] for u in users]),
            "monotonicity": _guarded(summarize, [mono[u] for u in users]),
            "variation": _guarded(summarize, list(speed_var.y)),
        },
        "tail_overlap": tail_overlap(speeds, mono, config).to_dict(),
    }
    hists = {
        "speed_hist.csv": _hist_csv([speeds[u] for u in users], bins),
        "monotonicity_hist.csv": _hist_csv([mono[u] for u in users], bins),
    }
    if len(speed_var):
        hists["variation_hist.csv"] = _hist_csv(list(speed_var.y), bins)
    return doc, hists


def cmd_correlate(args: argparse.Namespace) -> None:
    speed_bytes = _read_bytes(args.speeds)
    topic_bytes = _read_bytes(args.topics)
    try:
        speeds = read_speeds_csv(speed_bytes.decode("utf-8"))
        topics = read_topics_csv(topic_bytes.decode("utf-8"))
    except (UnicodeDecodeError, ValueError, KeyError) as exc:
        raise InputError(f"cannot parse input tables: {exc}") from exc
    config = AnalysisConfig(
        monotonicity_threshold=args.mono_threshold, slow_speed_threshold=args.slow_threshold
    )
    doc, hists = correlate(speeds, topics, config, args.smoothing, args.bins)
    out = _Output(args.out)
    out.add("correlate.json", json.dumps(doc, indent=2) + "\n")
    for name, text in hists.items():
        out.add(name, text)
    out.write(
        "correlate",
        {
            "monotonicity_threshold": args.mono_threshold,
            "slow_speed_threshold": args.slow_threshold,
            "smoothing": args.smoothing,
            "bins": args.bins,
        },
        {Path(args.speeds).name: speed_bytes, Path(args.topics).name: topic_bytes},
    )


def cmd_synth(args: argparse.Namespace) -> None:
    thetas = parse_value_spec(args.theta_spec)
    phis = parse_value_spec(args.phi_spec)
    if args.users < 2:
        raise InputError("--users must be >= 2")
    config = GeneratorConfig(
        n_users=args.users,
        n_bins=args.bins,
        events_per_user_per_bin=args.events,
        exploration=spread(thetas, args.users),
        topic_flip_prob=spread(phis, args.users),
        seed=args.seed,
        n_topics=args.topics,
        bin_width=timedelta(days=args.bin_days),
    )
    corpus = generate(config)
    buf = io.StringIO()
    dump_jsonl(corpus.events, buf)
    out = _Output(args.out)
    out.add("corpus.jsonl", buf.getvalue())
    out.write(
        "synth",
        {
            "users": args.users,
            "bins": args.bins,
            "events": args.events,
            "theta_spec": thetas,
            "phi_spec": phis,
            "seed": args.seed,
            "topics": args.topics,
            "bin_days": args.bin_days,
        },
        {},
        {"window": _window_dict(corpus), "n_events": len(corpus)},
    )


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nodespeed", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", required=True, help="output directory")
    common.add_argument("--format", choices=["csv", "json", "both"], default="both")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)

    events = argparse.ArgumentParser(add_help=False)
    events.add_argument("input", help="event file (JSONL or CSV)")
    events.add_argument("--input-format", choices=["jsonl", "csv"], help="default: from file suffix")
    events.add_argument("--window-start", help="RFC 3339 study window start")
    events.add_argument("--window-end", help="RFC 3339 study window end")
    events.add_argument("--max-error-rate", type=float, default=0.01)

    p = sub.add_parser("describe", parents=[common, events], help="dataset descriptive tables")
    p.set_defaults(func=cmd_describe)

    p = sub.add_parser("speed", parents=[common, events], help="per-user node speed")
    p.add_argument("--bin-days", type=float, default=14.0)
    p.add_argument("--min-retweets", type=int, default=50)
    p.add_argument("--fallback", type=float, default=1.0)
    p.add_argument("--mode", choices=["multiset", "support"], default="multiset")
    p.add_argument("--include-first-bin", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--snapshots-dir", help="also export per-snapshot edge lists here")
    p.set_defaults(func=cmd_speed)

    p = sub.add_parser("topics", parents=[common, events], help="per-user topic variation and monotonicity")
    p.add_argument("--smoothing", choices=["none", "add_one"], default="none")
    p.add_argument("--dedup", action="store_true", help="drop retweets and text duplicates first")
    p.set_defaults(func=cmd_topics)

    p = sub.add_parser("correlate", parents=[common], help="relate speeds to topic statistics")
    p.add_argument("speeds", help="speeds.csv from the speed command")
    p.add_argument("topics", help="topics.csv from the topics command")
    p.add_argument("--mono-threshold", type=float, default=0.3)
    p.add_argument("--slow-threshold", type=float, default=1.5)
    p.add_argument("--smoothing", choices=["none", "add_one"], default="none")
    p.add_argument("--bins", type=int, default=20, help="histogram bin count")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic corpus")
    p.add_argument("--users", type=int, default=200)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--events", type=int, default=10, help="events per user per bin")
    p.add_argument("--theta-spec", default="0:0.9:0.1", help="exploration values, spread over users")
    p.add_argument("--phi-spec", default="0.2", help="topic switch probabilities, spread over users")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--topics", type=int, default=10)
    p.add_argument("--bin-days", type=float, default=14.0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.ERROR,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if getattr(args, "threads", 1) < 1:
        parser.error("--threads must be >= 1")
    try:
        args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception:
        logger.exception("internal error")
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
