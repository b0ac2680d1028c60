"""
Command-line entry point.

    python main.py run CONFIG [--out DIR] [--seed N] [--load-teacher FILE]
                              [--jobs N] [--log-level LEVEL]

Exit codes: 0 success, 1 configuration error, 2 runtime or numerical
error, 3 artifact I/O error.  A run is complete only once the ``DONE``
marker exists in the output directory.
"""

from __future__ import annotations

__all__ = ["ExperimentResult", "run_experiment", "build_parser", "main"]

import argparse
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import yaml

import algorithms.regimes  # noqa: F401  registers the bundled regimes
from altm.errors import AltmError, ArtifactIOError, ConfigError, UsageError
from altm.linalg import Rng
from altm.network import Network, TeacherSnapshot, build_network
from altm.regime import RegimeConfig, RunRecord, get_regime
from altm.serialization import load_teacher, save_network
from algorithms.regimes.training import evaluate
from algorithms.regimes.active_memory import develop_teacher
from cli.config import ExperimentConfig, parse_config, resolved_config
from datagen.transition import TransitionSpec, make_transition
from report.csv_writer import emit_csv
from report.curves import curve_points, zoom_window
from report.retention import retention_table
from utils.logs import configure_logging
from utils.timers import Stopwatch

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_IO = 3

DONE_MARKER = "DONE"


@dataclass(slots=True)
class ExperimentResult:
    records: dict[str, RunRecord]
    teacher: TeacherSnapshot | None
    output: Path


def build_model(cfg: ExperimentConfig, regime: RegimeConfig, input_dim: int, transition: TransitionSpec) -> Network:
    """Fresh network with the regime's old-task heads, seeded from ``network``."""
    heads = {t.head: transition.env1.num_classes(t.labels) for t in regime.old_tasks}
    return build_network(
        input_dim,
        cfg.network.widths,
        cfg.network.activation,
        heads,
        cfg.network.sigma,
        Rng(regime.seed).child("network"),
        use_bias=cfg.network.use_bias,
    )


def _teacher(
    cfg: ExperimentConfig, transition: TransitionSpec, load_from: Path | None
) -> TeacherSnapshot | None:
    altm_regimes = [r for r in cfg.regimes if r.kind.is_altm]
    if not altm_regimes:
        return None
    first = altm_regimes[0]
    if load_from is not None:
        teacher = load_teacher(load_from)
        if teacher.network.input_dim != transition.input_dim:
            raise UsageError(
                f"loaded teacher expects {teacher.network.input_dim} inputs, environments have {transition.input_dim}"
            )
        logger.info("loaded teacher %s from %s", teacher.digest()[:12], load_from)
    else:
        logger.info("developing teacher with %s settings", first.label)
        teacher = develop_teacher(build_model(cfg, first, transition.input_dim, transition), transition, first)
    save_network(teacher, cfg.output / "teacher.npz")
    return teacher


def run_experiment(
    cfg: ExperimentConfig, *, load_teacher_from: str | Path | None = None, jobs: int = 1
) -> ExperimentResult:
    """
    Run every configured regime and write the artifacts.

    Any stale ``DONE`` marker is removed first and written again only after
    the last artifact, so partial output is recognisable.

    Raises:
        AltmError: whatever the modules raise; artifacts written so far stay.
    """
    out = cfg.output
    watch = Stopwatch()
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / DONE_MARKER).unlink(missing_ok=True)
        with (out / "config.resolved.yaml").open("w", encoding="utf-8", newline="\n") as fh:
            yaml.safe_dump(resolved_config(cfg), fh, sort_keys=True)
    except OSError as exc:
        raise ArtifactIOError("cannot prepare output directory", out) from exc

    transition = make_transition(
        cfg.dev, cfg.novel, cfg.hierarchy, shared_graphics=cfg.shared_graphics, seed=cfg.seed
    )
    teacher = _teacher(cfg, transition, Path(load_teacher_from) if load_teacher_from else None)

    def run_one(regime: RegimeConfig) -> RunRecord:
        if regime.kind.is_altm:
            net = teacher.network.copy()
        else:
            net = build_model(cfg, regime, transition.input_dim, transition)
        logger.info("running %s (seed %d)", regime.label, regime.seed)
        return get_regime(regime.kind)(net, transition, regime, teacher=teacher)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_one, cfg.regimes))
    else:
        results = [run_one(regime) for regime in cfg.regimes]
    records = {regime.label: record for regime, record in zip(cfg.regimes, results)}

    points = {}
    for regime, record in zip(cfg.regimes, results):
        points[regime.label] = curve_points(record, f"{regime.label}-{regime.seed}")
        emit_csv(points[regime.label], out / f"{regime.label}.csv")

    _write_retention(cfg, transition, teacher, results, out)
    zoom = cfg.report.zoom
    if zoom is not None:
        emit_csv(zoom_window(points[zoom.regime], zoom.start, zoom.stop), out / "zoom.csv")

    try:
        (out / DONE_MARKER).write_text("ok\n", encoding="utf-8")
    except OSError as exc:
        raise ArtifactIOError("cannot write completion marker", out / DONE_MARKER) from exc
    logger.info("experiment finished in %.2fs, artifacts in %s", watch.elapsed(), out)
    return ExperimentResult(records=records, teacher=teacher, output=out)


def _write_retention(
    cfg: ExperimentConfig,
    transition: TransitionSpec,
    teacher: TeacherSnapshot | None,
    results: Sequence[RunRecord],
    out: Path,
) -> None:
    old_head, new_head = cfg.report.old_head, cfg.report.new_head
    if new_head is None:
        return
    eligible = [
        r for r in results if r.rows and old_head in r.final.accuracies and new_head in r.final.accuracies
    ]
    if not eligible:
        return
    reference = None
    if teacher is not None and old_head in teacher.head_ids:
        task = eligible[0].tasks[old_head]
        _, reference = evaluate(teacher.network, transition.env1, task)
        reference = reference if reference > 0.0 else None
    emit_csv(retention_table(eligible, old_head, new_head, reference), out / "retention.csv")


# ------------------------------------------------------------------
# Command line
# ------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="altm", description="Continual-learning interference experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config", type=Path, help="YAML experiment config")
    run.add_argument("--out", type=Path, default=None, help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, default=None, help="global seed (overrides the config)")
    run.add_argument("--load-teacher", type=Path, default=None, help="saved teacher; skips development")
    run.add_argument("--jobs", type=int, default=1, help="regimes run concurrently")
    run.add_argument(
        "--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"], help="console and run.log level"
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        if args.jobs < 1:
            raise ConfigError(f"must be >= 1, got {args.jobs}", key="--jobs")
        cfg = parse_config(args.config, seed=args.seed, output=args.out)
        configure_logging(args.log_level, cfg.output / "run.log")
        run_experiment(cfg, load_teacher_from=args.load_teacher, jobs=args.jobs)
    except ConfigError as exc:
        logger.error("configuration error: %s", exc)
        return EXIT_CONFIG
    except ArtifactIOError as exc:
        logger.error("i/o error: %s", exc)
        return EXIT_IO
    except AltmError as exc:
        logger.error("run failed: %s", exc)
        return EXIT_RUNTIME
    except OSError as exc:
        logger.error("i/o error: %s", exc)
        return EXIT_IO
    return EXIT_OK
