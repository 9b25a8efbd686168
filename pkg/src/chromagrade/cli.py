"""Command-line interface: retouch videos, serve the tuning UI backend,
pretrain the predictor, bake LUTs, and benchmark the kernels."""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .color_ops import PARAM_NAMES, PARAM_RANGES, GradingParams
from .training import TrainConfig


def _load_config(path: str | None) -> TrainConfig:
    return TrainConfig.from_file(path) if path else TrainConfig()


def _param_options(fn):
    """Attach one --<name>=<float> override option per grading parameter."""
    for name in reversed(PARAM_NAMES):
        lo, hi, _ = PARAM_RANGES[name]
        fn = click.option(f"--{name}", type=float, default=None,
                          help=f"Override {name} (range [{lo:g}, {hi:g}]).")(fn)
    return fn


@click.group()
@click.version_option(package_name="chromagrade")
def main() -> None:
    """Parametric color style transfer for images and videos."""


@main.command()
@click.argument("content", type=click.Path(exists=True))
@click.argument("style", type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path(), help="Output directory.")
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="Predictor checkpoint; a fresh identity model is used when omitted.")
@click.option("--config", type=click.Path(exists=True), default=None,
              help="Training config JSON.")
@click.option("--no-finetune", is_flag=True, help="Skip test-on-time training.")
@click.option("--iters", type=int, default=None, help="Fine-tune iteration count override.")
@click.option("--lut-size", type=int, default=33, show_default=True,
              help="Grid size of the exported .cube.")
@click.option("--seed", type=int, default=None, help="Seed override.")
@_param_options
def retouch(content, style, out, checkpoint, config, no_finetune, iters, lut_size, seed, **param_overrides):
    """Grade CONTENT (video dir/file or image) to match STYLE.

    Writes graded frames, params.json, grade.cube, and report.json to --out.
    """
    from .pipeline import RetouchOptions, StageError, run_retouch

    cfg = _load_config(config)
    if seed is not None:
        cfg = cfg.replace(seed=seed)
    overrides = {k: v for k, v in param_overrides.items() if v is not None}
    opts = RetouchOptions(
        content=content, style=style, out_dir=out, checkpoint=checkpoint,
        config=cfg, no_finetune=no_finetune, lut_size=lut_size,
        overrides=overrides, finetune_iters=iters,
    )
    try:
        result = run_retouch(opts)
    except StageError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {result.report['frames']} frames to {result.out_dir}")
    click.echo(f"effective params: {result.effective.to_json()}")
    click.echo(f"grade: {result.report['ms_per_frame']['grade']} ms/frame")


@main.command()
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--checkpoint", type=click.Path(exists=True), default=None)
@click.option("--config", type=click.Path(exists=True), default=None)
@click.option("--ui-dir", type=click.Path(exists=True), default=None,
              help="Static tuning-UI build to serve at /ui.")
def serve(port, host, checkpoint, config, ui_dir):
    """Run the HTTP preview/tuning service."""
    from .service import serve as run_service

    run_service(port=port, host=host, checkpoint=checkpoint,
                config=_load_config(config), ui_dir=ui_dir)


@main.command()
@click.option("--config", type=click.Path(exists=True), required=True,
              help="Training config JSON (must set corpus_dir).")
@click.option("--out", "-o", required=True, type=click.Path(),
              help="Directory for checkpoints.")
@click.option("--log", type=click.Path(), default=None, help="CSV loss log path.")
def pretrain(config, out, log):
    """Pre-train the predictor on an image corpus."""
    from .training import pretrain as run_pretrain

    cfg = TrainConfig.from_file(config)
    run_pretrain(cfg, out_dir=out, log_path=log)
    click.echo(f"checkpoints written to {out}")


@main.command()
@click.option("--params", "params_path", required=True, type=click.Path(exists=True),
              help="params.json produced by retouch or the service.")
@click.option("--out", "-o", required=True, type=click.Path(), help="Output .cube path.")
@click.option("--size", type=int, default=33, show_default=True)
@click.option("--title", default="chromagrade", show_default=True)
def bake(params_path, out, size, title):
    """Bake a params.json into a .cube 3D LUT."""
    from .lut import bake_lut, write_cube

    params = GradingParams.from_json(Path(params_path).read_text())
    write_cube(bake_lut(params, size), out, title=title)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--height", type=int, default=1080, show_default=True)
@click.option("--width", type=int, default=1920, show_default=True)
@click.option("--repeats", type=int, default=5, show_default=True)
@click.option("--out", "-o", type=click.Path(), default=None, help="Also write JSON results.")
def bench(height, width, repeats, out):
    """Benchmark numba vs pure-numpy kernels and parametric vs LUT grading."""
    from .bench import format_report, run_bench, write_results

    results = run_bench(height=height, width=width, repeats=repeats)
    click.echo(format_report(results))
    if out:
        write_results(results, out)
        click.echo(f"wrote {out}")


if __name__ == "__main__":
    main()
