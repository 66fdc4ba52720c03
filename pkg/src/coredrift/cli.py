"""Command-line pipeline: emulate -> train -> calibrate -> run -> compare.

Every stage reads its inputs from, and writes its artifacts to, ``--out``.
Each artifact is accompanied by a ``*.provenance.json`` record carrying the
hashes of the inputs it was derived from.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import logging
import sys
from pathlib import Path

import click

from . import experiment as ex
from .adaptor import (AdaptationConfig, Mode, RunReport, events_from_csv, stream_hash, write_events,
                      write_report)
from .detector import DetectorState
from .emulator import Dataset, concept_statistics, load_dataset
from .errors import ComparabilityError, ConfigError, CoreDriftError, DatasetIOError, MissingArtifactError
from .metrics import summarize, timeline_csv
from .predictor import kernels
from .predictor.regressors import load_checkpoint, save_checkpoint

log = logging.getLogger("coredrift")

DATASET = "dataset.csv"
MODEL = "model.json"
DETECTOR = "detector.json"
SUMMARY = "summary.json"
RUNS = "runs"


def sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _require(out: Path, name: str, stage: str) -> Path:
    p = out / name
    if not p.exists():
        raise MissingArtifactError(f"{p} not found; run `coredrift {stage}` first")
    return p


def _write_json(path: Path, obj) -> None:
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    except OSError as e:
        raise DatasetIOError(f"cannot write {path}: {e}") from e


def _provenance(out: Path, stage: str, cfg: ex.ExperimentConfig, inputs: dict[str, Path], name: str | None = None):
    record = {
        "stage": stage,
        "inputs": {k: sha256_file(p) for k, p in sorted(inputs.items())},
        "seed": cfg.seed,
        "profile": cfg.profile,
        "backend": kernels.BACKEND,
        "config_digest": cfg.digest(),
        "config": cfg.to_dict(),
    }
    _write_json(out / (name or f"{stage}.provenance.json"), record)
    return record


def _load_dataset(out: Path) -> Dataset:
    return load_dataset(_require(out, DATASET, "emulate"))


def _load_config(ctx) -> ex.ExperimentConfig:
    o = ctx.obj
    cfg = ex.ExperimentConfig.load(o["config"]) if o["config"] else ex.ExperimentConfig()
    if o["seed"] is not None:
        cfg = cfg.with_seed(o["seed"])
    if o["profile"] is not None:
        cfg = dataclasses.replace(cfg, profile=o["profile"])
    if o["pool_seed_initial"]:
        cfg = dataclasses.replace(cfg, pool_seed_initial=True)
    return cfg


def _outdir(ctx) -> Path:
    out = Path(ctx.obj["out"])
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise DatasetIOError(f"cannot create output directory {out}: {e}") from e
    return out


def cmd_emulate(cfg: ex.ExperimentConfig, out: Path) -> Path:
    dataset = ex.build_dataset(cfg)
    path = out / DATASET
    dataset.write_csv(path)
    _write_json(out / "concept_stats.json", {str(k): v for k, v in concept_statistics(dataset).items()})
    inputs = {"dataset_source": Path(cfg.dataset_path)} if cfg.dataset_path else {}
    _provenance(out, "emulate", cfg, inputs)
    log.info("wrote %d records to %s", len(dataset), path)
    return path


def cmd_train(cfg: ex.ExperimentConfig, out: Path) -> Path:
    dataset = _load_dataset(out)
    model = ex.train_model(dataset, cfg)
    path = out / MODEL
    save_checkpoint(model, path)
    _provenance(out, "train", cfg, {"dataset": out / DATASET})
    if model.history:
        log.info("trained %d epochs: loss %.6g -> %.6g", len(model.history), model.history[0], model.history[-1])
    return path


def cmd_calibrate(cfg: ex.ExperimentConfig, out: Path) -> Path:
    dataset = _load_dataset(out)
    model = load_checkpoint(_require(out, MODEL, "train"))
    state = ex.calibrate_detector(model, dataset, cfg, MODEL)
    path = out / DETECTOR
    state.save(path)
    _provenance(out, "calibrate", cfg, {"dataset": out / DATASET, "model": out / MODEL})
    log.info("threshold %.6g (mu=%.6g sigma=%.6g n=%s, %d samples)", state.threshold, state.mu, state.sigma,
             state.n_factor, state.calibration_sample_count)
    return path


def cmd_run(cfg: ex.ExperimentConfig, out: Path, modes) -> dict[str, RunReport]:
    dataset = _load_dataset(out)
    model = load_checkpoint(_require(out, MODEL, "train"))
    detector = DetectorState.load(_require(out, DETECTOR, "calibrate"))
    reports = ex.run_modes(model, detector, dataset, cfg, modes)
    for label, report in reports.items():
        run_dir = out / RUNS / label
        run_dir.mkdir(parents=True, exist_ok=True)
        write_events(report.events, run_dir / "events.csv")
        (run_dir / "timeline.csv").write_text(timeline_csv(report))
        save_checkpoint(report.model, run_dir / "final_model.json")
        write_report(report, run_dir / "report.json", detector_state_ref=f"../../{DETECTOR}",
                     final_model_ref="final_model.json", event_log_ref="events.csv")
        _provenance(run_dir, "run", cfg,
                    {"dataset": out / DATASET, "model": out / MODEL, "detector": out / DETECTOR},
                    name="provenance.json")
        log.info("%s: %d alarms over %d batches", label, report.alarms, report.total_batches)
    return reports


def _load_run(run_dir: Path, detector: DetectorState) -> tuple[RunReport, dict]:
    report = json.loads((run_dir / "report.json").read_text())
    prov = json.loads((run_dir / "provenance.json").read_text())
    events = events_from_csv((run_dir / report["event_log_ref"]).read_text())
    cfg = AdaptationConfig(**{**report["config"], "theta": report["config"]["theta"] or None})
    run = RunReport(cfg, detector, events, None, report["stream_hash"])
    return run, prov


def cmd_compare(cfg: ex.ExperimentConfig, out: Path) -> Path:
    runs_dir = out / RUNS
    if not runs_dir.is_dir() or not any(runs_dir.iterdir()):
        raise MissingArtifactError(f"no runs under {runs_dir}; run `coredrift run` first")
    detector = DetectorState.load(_require(out, DETECTOR, "calibrate"))
    runs, provs = {}, {}
    for run_dir in sorted(p for p in runs_dir.iterdir() if p.is_dir()):
        runs[run_dir.name], provs[run_dir.name] = _load_run(run_dir, detector)
    input_sets = {json.dumps(p["inputs"], sort_keys=True) for p in provs.values()}
    if len(input_sets) != 1:
        raise ComparabilityError("runs were produced from different dataset/model/detector artifacts")
    summary = summarize(runs)
    summary["provenance"] = {"inputs": json.loads(input_sets.pop()), "profile": cfg.profile, "seed": cfg.seed}
    path = out / SUMMARY
    _write_json(path, summary)
    _provenance(out, "compare", cfg, {f"run_{k}": runs_dir / k / "events.csv" for k in runs})
    for label, r in summary["alarm_reduction"].items():
        if r["percent"] is not None:
            log.info("alarm reduction baseline -> %s: %.2f%%", label, r["percent"])
    if summary["mode_improvement"] and summary["mode_improvement"]["percent"] is not None:
        log.info("persistent over non-persistent: %.2f%%", summary["mode_improvement"]["percent"])
    return path


MODE_CHOICES = [m.value for m in Mode]


@click.group()
@click.option("--config", "config", type=click.Path(dir_okay=False), default=None,
              help="Experiment config JSON (defaults are used when omitted).")
@click.option("--out", "out", type=click.Path(file_okay=False), default="coredrift-out", show_default=True,
              help="Directory all stage artifacts are read from and written to.")
@click.option("--seed", type=int, default=None, help="Override every seed in the config.")
@click.option("--profile", type=click.Choice(sorted(ex.PROFILES)), default=None, help="Model size profile.")
@click.option("--pool-seed-initial", is_flag=True, help="Start the adaptation pool with the training data.")
@click.option("-v", "--verbose", count=True)
@click.pass_context
def main(ctx, config, out, seed, profile, pool_seed_initial, verbose):
    """Drift detection and adaptation pipeline for next-packet-length prediction."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")
    ctx.obj = {"config": config, "out": out, "seed": seed, "profile": profile,
               "pool_seed_initial": pool_seed_initial}


def _stage(fn):
    """Run a stage, mapping library errors onto distinct exit codes."""
    def wrapper(ctx, *args):
        try:
            cfg = _load_config(ctx)
            result = fn(cfg, _outdir(ctx), *args)
        except CoreDriftError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(e.exit_code)
        except OSError as e:
            click.echo(f"error: {e}", err=True)
            sys.exit(DatasetIOError.exit_code)
        return result
    return wrapper


@main.command()
@click.pass_context
def emulate(ctx):
    """Emulate (or ingest) the packet dataset."""
    click.echo(_stage(cmd_emulate)(ctx))


@main.command()
@click.pass_context
def train(ctx):
    """Train the predictor on one pre-drift interaction."""
    click.echo(_stage(cmd_train)(ctx))


@main.command()
@click.pass_context
def calibrate(ctx):
    """Build the drift threshold from pre-drift interactions."""
    click.echo(_stage(cmd_calibrate)(ctx))


@main.command()
@click.option("--mode", "modes", type=click.Choice(MODE_CHOICES), multiple=True,
              help="Mode(s) to run; all three when omitted.")
@click.pass_context
def run(ctx, modes):
    """Replay the drifted stream in baseline / non-persistent / persistent mode."""
    reports = _stage(cmd_run)(ctx, tuple(Mode(m) for m in modes) or tuple(Mode))
    for label, r in reports.items():
        click.echo(f"{label}: {r.alarms}/{r.total_batches} batches alarmed")


@main.command()
@click.pass_context
def compare(ctx):
    """Summarize alarm reductions across runs."""
    click.echo(_stage(cmd_compare)(ctx))


@main.command()
@click.option("--mode", "modes", type=click.Choice(MODE_CHOICES), multiple=True)
@click.pass_context
def pipeline(ctx, modes):
    """Run every stage in order."""
    modes = tuple(Mode(m) for m in modes) or tuple(Mode)

    def all_stages(cfg, out):
        cmd_emulate(cfg, out)
        cmd_train(cfg, out)
        cmd_calibrate(cfg, out)
        cmd_run(cfg, out, modes)
        return cmd_compare(cfg, out)

    click.echo(_stage(all_stages)(ctx))


if __name__ == "__main__":
    main()
