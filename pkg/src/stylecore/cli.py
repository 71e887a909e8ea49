"""Command-line interface.

Each stylization command reads content and style images, runs the requested
pipeline, and writes a PNG.  ``emd-check`` runs the approximation-quality
experiment and writes a CSV report with a histogram figure next to it; the
``--trace`` option on the stylize commands does the same for loss traces.
"""

from __future__ import annotations

import sys

import click
import numpy as np

from . import dst as dst_mod
from . import nnst as nnst_mod
from . import strotss as strotss_mod
from .features import FilterBankSpec
from .guidance import GuidanceError, load_guidance_file
from .image import load_image, save_image
from .report import run_emd_experiment, write_report, write_trace_figure


def _fail(msg: str) -> None:
    click.echo(f"error: {msg}", err=True)
    sys.exit(1)


@click.group()
def main():
    """Optimization-based style transfer toolkit."""


@main.command()
@click.option("--content", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--style", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--alpha", default=16.0, show_default=True, help="Content weight.")
@click.option("--scales", default=4, show_default=True)
@click.option("--steps", default=200, show_default=True, help="Optimizer steps per scale.")
@click.option("--guidance", type=click.Path(exists=True, dir_okay=False), help="Guidance JSON document.")
@click.option("--seed", default=0, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False), help="Write per-scale loss traces (CSV + figure).")
def strotss(content, style, out, alpha, scales, steps, guidance, seed, trace):
    """Transport-based stylization."""
    try:
        c_img = load_image(content)
        s_img = load_image(style)
        cfg = strotss_mod.StrotssConfig(alpha=alpha, scales=scales, steps_per_scale=steps, seed=seed)
        g = None
        if guidance:
            g = load_guidance_file(guidance, (c_img.height, c_img.width), (s_img.height, s_img.width))
        result = strotss_mod.stylize(c_img, s_img, cfg, guidance=g)
    except (GuidanceError, ValueError) as e:
        _fail(str(e))
    save_image(result.image, out)
    if trace:
        fig = write_trace_figure(result.scale_traces, trace, "stylization objective per scale")
        click.echo(f"trace: {trace} ({fig})")
    click.echo(f"wrote {out}")


@main.command()
@click.option("--content", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--style", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--alpha-blend", default=0.25, show_default=True, help="Stylization level in [0,1].")
@click.option("--scales", default=4, show_default=True)
@click.option("--updates", default=200, show_default=True)
@click.option("--no-color-post", is_flag=True, help="Skip color post-processing.")
@click.option("--no-split-phase", is_flag=True, help="Skip the per-layer matching phase.")
@click.option("--seed", default=0, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False))
def nnst(content, style, out, alpha_blend, scales, updates, no_color_post, no_split_phase, seed, trace):
    """Nearest-neighbor feature stylization."""
    try:
        c_img = load_image(content)
        s_img = load_image(style)
        cfg = nnst_mod.NnstConfig(
            alpha_blend=alpha_blend,
            scales=scales,
            updates=updates,
            split_updates=updates,
            split_phase=not no_split_phase,
            color_post=not no_color_post,
            seed=seed,
        )
        result = nnst_mod.stylize(c_img, s_img, cfg)
    except ValueError as e:
        _fail(str(e))
    save_image(result.image, out)
    if trace:
        fig = write_trace_figure(result.scale_traces, trace, "matching objective per phase")
        click.echo(f"trace: {trace} ({fig})")
    click.echo(f"wrote {out}")


@main.command()
@click.option("--content", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--style", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--points", required=True, type=click.Path(exists=True, dir_okay=False),
              help="Correspondence file: 'sy sx ty tx activation' per line.")
@click.option("--base", type=click.Choice(["strotss", "gram"]), default="strotss", show_default=True)
@click.option("--alpha", default=8.0, show_default=True)
@click.option("--beta", type=float, default=None, help="Deformation weight.")
@click.option("--gamma", type=float, default=None, help="Warp-field smoothness weight.")
@click.option("--regime", type=click.Choice(["low", "med", "high"]), default=None,
              help="Preset (beta, gamma) pair for the chosen base.")
@click.option("--scales", default=3, show_default=True)
@click.option("--steps", default=150, show_default=True)
@click.option("--no-align", is_flag=True, help="Skip similarity alignment of target points.")
@click.option("--seed", default=0, show_default=True)
@click.option("--trace", type=click.Path(dir_okay=False))
def dst(content, style, out, points, base, alpha, beta, gamma, regime, scales, steps, no_align, seed, trace):
    """Deformable stylization from keypoint correspondences."""
    try:
        c_img = load_image(content)
        s_img = load_image(style)
        raw = dst_mod.load_correspondences(points)
        corr = dst_mod.prepare_correspondences(raw, align=not no_align)
        if regime is not None:
            cfg = dst_mod.DstConfig.from_regime(base, regime, alpha=alpha)
        else:
            cfg = dst_mod.DstConfig(base=base, alpha=alpha)
        if beta is not None:
            cfg.beta = beta
        if gamma is not None:
            cfg.gamma = gamma
        cfg.base_config = strotss_mod.StrotssConfig(scales=scales, steps_per_scale=steps, seed=seed)
        result = dst_mod.dst_stylize(c_img, s_img, corr, cfg)
    except ValueError as e:
        _fail(str(e))
    save_image(result.image, out)
    if trace:
        fig = write_trace_figure(result.traces, trace, "joint objective per scale")
        click.echo(f"trace: {trace} ({fig})")
    click.echo(f"wrote {out} (beta={cfg.beta}, gamma={cfg.gamma})")


@main.command(name="emd-check")
@click.option("--n", default=1024, show_default=True,
              help="Feature count per side (capped by the image's feature-grid size).")
@click.option("--trials", default=100, show_default=True)
@click.option("--report", "report_path", required=True, type=click.Path(dir_okay=False),
              help="Output CSV; a histogram figure lands beside it.")
@click.option("--seed", default=0, show_default=True)
@click.option("--image-size", default=128, show_default=True,
              help="Side length of the synthetic images features are drawn from. "
                   "The exact solver is cubic-ish in n: the full 1024x100 run takes tens of minutes.")
def emd_check(n, trials, report_path, seed, image_size):
    """Relaxed-vs-exact transport cost experiment."""
    try:
        rep = run_emd_experiment(n=n, trials=trials, seed=seed, image_size=image_size)
    except ValueError as e:
        _fail(str(e))
    fig = write_report(rep, report_path)
    bad = int(np.sum(rep.ratios > 1.0 + 1e-12))
    click.echo(f"trials: {len(rep.trials)}  ratio mean: {rep.mean:.4f}  std: {rep.std:.4f}")
    click.echo(f"violations of the lower bound: {bad}")
    click.echo(f"report: {report_path} ({fig})")
    if bad:
        sys.exit(1)


@main.command()
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--assets", type=click.Path(exists=True, file_okay=False), default=None,
              help="Static UI directory (defaults to the bundled frontend build).")
@click.option("--workers", default=None, type=int, help="Job worker slots (default: cores/2).")
def serve(port, host, assets, workers):
    """Run the job service and static annotation UI."""
    import uvicorn

    from .service import create_app

    app = create_app(assets_dir=assets, workers=workers)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
