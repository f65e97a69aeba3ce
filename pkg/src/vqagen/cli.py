"""Command-line entry point: vqagen <subcommand> --run-dir DIR [...]"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import pipeline
from .config import PipelineConfig, RunPaths, load_config
from .errors import VqagenError


def _load(run_dir: str, config_path: str | None, seed: int | None,
          mock: bool | None) -> PipelineConfig:
    paths = RunPaths(run_dir)
    source = config_path or (paths.config if paths.config.exists() else None)
    overrides = {"seed": seed}
    if mock is not None:
        overrides["mock"] = mock
    config = load_config(source, overrides)
    paths.root.mkdir(parents=True, exist_ok=True)
    if config_path and Path(config_path) != paths.config:
        paths.config.write_text(Path(config_path).read_text(encoding="utf-8"), encoding="utf-8")
    return config


def _fail(exc: Exception) -> None:
    click.echo(json.dumps({"code": type(exc).__name__, "message": str(exc)}), err=True)
    sys.exit(1)


def _emit(obj: dict) -> None:
    click.echo(json.dumps(obj, ensure_ascii=False, indent=2, sort_keys=True))


run_dir_opt = click.option("--run-dir", required=True, type=click.Path())
config_opt = click.option("--config", "config_path", type=click.Path(exists=True), default=None)
seed_opt = click.option("--seed", type=int, default=None)
mock_opt = click.option("--mock/--no-mock", "mock", default=None)


@click.group()
def main():
    """Reasoning-controlled VQA dataset pipeline."""


@main.command()
@run_dir_opt
@config_opt
@seed_opt
@click.option("--manifest", "manifest_file", required=True, type=click.Path(exists=True))
@click.option("--texts", "texts_file", type=click.Path(exists=True), default=None)
@click.option("--canon-dict", "canon_file", type=click.Path(exists=True), default=None)
def ingest(run_dir, config_path, seed, manifest_file, texts_file, canon_file):
    """Build the corpus store from manifest/text JSONL files."""
    try:
        config = _load(run_dir, config_path, seed, None)
        _emit(pipeline.run_ingest(run_dir, config, manifest_file, texts_file, canon_file))
    except VqagenError as exc:
        _fail(exc)


@main.command()
@run_dir_opt
@config_opt
@seed_opt
@mock_opt
@click.option("--count", type=int, default=None)
@click.option("--dry-run", is_flag=True, help="Force the mock provider.")
@click.option("--parallelism", type=int, default=1, show_default=True)
def generate(run_dir, config_path, seed, mock, count, dry_run, parallelism):
    """Generate samples; resumable, honors scheduler state."""
    try:
        config = _load(run_dir, config_path, seed, True if dry_run else mock)
        _emit(pipeline.run_generate(run_dir, config, count))
    except VqagenError as exc:
        _fail(exc)


@main.command()
@run_dir_opt
@config_opt
@seed_opt
@mock_opt
def qc(run_dir, config_path, seed, mock):
    """Ensemble scoring, median thresholds, majority voting, retention."""
    try:
        config = _load(run_dir, config_path, seed, mock)
        _emit(pipeline.run_qc_stage(run_dir, config))
    except VqagenError as exc:
        _fail(exc)


@main.command()
@run_dir_opt
@config_opt
@seed_opt
def balance(run_dir, config_path, seed):
    """Low-support merging, under-sampling, image-grouped splitting."""
    try:
        config = _load(run_dir, config_path, seed, None)
        _emit(pipeline.run_balance(run_dir, config))
    except VqagenError as exc:
        _fail(exc)


@main.command()
@run_dir_opt
@config_opt
@seed_opt
def export(run_dir, config_path, seed):
    """Write per-split JSONL files plus the export manifest."""
    try:
        config = _load(run_dir, config_path, seed, None)
        _emit(pipeline.run_export(run_dir, config))
    except VqagenError as exc:
        _fail(exc)


@main.command()
@run_dir_opt
@click.option("--predictions", required=True, type=click.Path(exists=True))
def evaluate(run_dir, predictions):
    """Score a predictions JSONL file against the exported dataset."""
    try:
        _emit(pipeline.run_evaluate(run_dir, predictions))
    except VqagenError as exc:
        _fail(exc)


@main.command()
@run_dir_opt
@config_opt
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(run_dir, config_path, host, port):
    """Serve the review API over an exported run."""
    import uvicorn

    from .api import create_app
    try:
        config = _load(run_dir, config_path, None, None)
        uvicorn.run(create_app(run_dir, config), host=host, port=port)
    except (VqagenError, RuntimeError) as exc:
        _fail(exc)


@main.command()
@run_dir_opt
def stats(run_dir):
    """Print sample/stage distributions for a run."""
    try:
        _emit(pipeline.run_stats(run_dir))
    except VqagenError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
