"""
srmkit command-line interface.

Subcommands: simulate, fit, transform, evaluate, rsm.
Exit codes: 0 success, 1 validation error, 2 runtime/numerical error.
"""

import logging
import sys
from typing import List, Optional

import click

import config
from config import validate_config
from core.errors import SrmKitError, ValidationError
from core.metrics import MetricsCollector
from core.models import SimulationSpec, TRANSFORM_FAMILIES
from handlers import CommandHandlers
from logging_config import setup_all_loggers
from repositories import SpecRepository
from repositories.spec_repository import spec_from_values
from validators import InputValidator

logger = logging.getLogger("srmkit")

FORMAT_CHOICE = click.Choice(config.SUPPORTED_MATRIX_FORMATS, case_sensitive=False)


class SrmKitGroup(click.Group):
    """Click group that maps toolkit errors onto the documented exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except click.UsageError as e:
            e.exit_code = ValidationError.exit_code
            raise
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except SrmKitError as e:
            logger.error(f"{type(e).__name__}: {e}")
            click.echo(f"error: {e}", err=True)
            raise click.exceptions.Exit(e.exit_code)
        except Exception as e:
            logger.error(f"Unexpected failure: {e}", exc_info=True)
            click.echo(f"error: {e}", err=True)
            raise click.exceptions.Exit(2)


def _handlers(ctx: click.Context) -> CommandHandlers:
    return ctx.obj["handlers"]


def _parse_sigmas(ctx, param, value: Optional[str]) -> Optional[List[float]]:
    if value is None:
        return None
    try:
        sigmas = [float(part) for part in value.split(',') if part.strip()]
    except ValueError:
        raise click.BadParameter(f"expected comma-separated numbers, got '{value}'")
    if not sigmas:
        raise click.BadParameter("at least one noise level is required")
    return sigmas


def threads_option(f):
    return click.option(
        "--threads", type=click.IntRange(min=1), default=config.THREADS, show_default=True,
        help="Parallel workers (1 keeps results bitwise reproducible).",
    )(f)


def format_option(f):
    return click.option(
        "--format", "fmt", type=FORMAT_CHOICE, default=config.MATRIX_FORMAT, show_default=True,
        help="Format of written matrix files.",
    )(f)


@click.group(cls=SrmKitGroup)
@click.option("--log-level", default=config.LOG_LEVEL, show_default=True, help="Logging level.")
@click.option("--log-dir", default=config.LOG_DIR, show_default=True, help="Directory for log files.")
@click.version_option(config.TOOLKIT_VERSION, prog_name="srmkit")
@click.pass_context
def cli(ctx, log_level, log_dir):
    """Shared Response Model toolkit: fit, transform, evaluate and simulate."""
    setup_all_loggers(log_dir, log_level)
    validate_config()

    metrics = MetricsCollector()
    ctx.obj = {"handlers": CommandHandlers(metrics), "metrics": metrics}
    ctx.call_on_close(metrics.log_summary)


@cli.command()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="key = value simulation spec document.")
@click.option("--units", type=int, default=None, help=f"Units n per network [default: {config.SIM_UNITS}].")
@click.option("--examples", type=int, default=None, help=f"Examples m [default: {config.SIM_EXAMPLES}].")
@click.option("--networks", type=int, default=None, help=f"Networks N [default: {config.SIM_NETWORKS}].")
@click.option("--family", type=click.Choice(TRANSFORM_FAMILIES), default=None,
              help="Transform family [default: orthogonal].")
@click.option("--source-path", type=click.Path(), default=None,
              help="Matrix file used as the source H (sets source = supplied-matrix).")
@click.option("--noise", type=float, default=None, help="Additive Gaussian noise sigma [default: 0].")
@click.option("--split", type=float, default=None,
              help=f"Fraction of examples in the alignment set [default: {config.SIM_SPLIT_FRACTION}].")
@click.option("--runs", type=int, default=None, help=f"Independent runs [default: {config.SIM_RUNS}].")
@click.option("--seed", type=int, default=None, help=f"Base seed [default: {config.DEFAULT_SEED}].")
@click.option("--k", type=int, default=None, help="Shared dimension [default: n].")
@click.option("--max-iters", type=int, default=None, help=f"Solver iteration cap [default: {config.MAX_ITERS}].")
@click.option("--tol", type=float, default=None, help=f"Relative objective tolerance [default: {config.TOL}].")
@click.option("--resamples", type=int, default=None,
              help=f"Bootstrap resamples [default: {config.BOOTSTRAP_RESAMPLES}].")
@click.option("--level", type=float, default=None, help=f"CI level [default: {config.CI_LEVEL}].")
@click.option("--noise-sweep", callback=_parse_sigmas, default=None,
              help="Comma-separated noise levels; one simulation per level.")
@click.option("--emit-rsms", is_flag=True, help="Write the first run's averaged wRSM and iRSMs.")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@threads_option
@format_option
@click.pass_context
def simulate(ctx, config_path, units, examples, networks, family, source_path, noise, split, runs,
             seed, k, max_iters, tol, resamples, level, noise_sweep, emit_rsms, out, threads, fmt):
    """Run the synthetic orthogonal-recovery simulation."""
    spec = SimulationSpec()
    if config_path:
        spec = SpecRepository().load_spec(config_path, spec)

    flags = {
        "units": units, "examples": examples, "networks": networks, "transform_family": family,
        "noise_sigma": noise, "split_fraction": split, "runs": runs, "seed": seed,
        "max_iters": max_iters, "tol": tol, "resamples": resamples, "level": level,
    }
    if source_path:
        flags.update(source="supplied-matrix", source_path=source_path)
    spec = spec_from_values({key: v for key, v in flags.items() if v is not None}, spec)
    if k is not None:
        spec = spec_from_values({"k": k}, spec)

    click.echo(_handlers(ctx).handle_simulate(spec, out, threads, noise_sweep, emit_rsms, fmt))


@cli.command()
@click.option("--manifest", required=True, type=click.Path(), help="Activation manifest.")
@click.option("--layer", default=None, help="Layer to fit (required if the manifest has several).")
@click.option("--k", type=int, default=None, help="Shared dimension [default: min n_i].")
@click.option("--max-iters", type=int, default=config.MAX_ITERS, show_default=True, help="Iteration cap.")
@click.option("--tol", type=float, default=config.TOL, show_default=True, help="Relative objective tolerance.")
@click.option("--init", type=click.Choice(["svd", "random"]), default="svd", show_default=True,
              help="Initialization of S.")
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True, help="Seed for --init random.")
@click.option("--out", required=True, type=click.Path(), help="Model directory.")
@threads_option
@format_option
@click.pass_context
def fit(ctx, manifest, layer, k, max_iters, tol, init, seed, out, threads, fmt):
    """Fit SRM to one layer of an activation set."""
    click.echo(_handlers(ctx).handle_fit(manifest, out, layer, k, max_iters, tol, seed, init, fmt, threads))


@cli.command(name="transform")
@click.option("--model", "model_dir", required=True, type=click.Path(), help="Model directory.")
@click.option("--manifest", required=True, type=click.Path(), help="Activation manifest.")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@format_option
@click.pass_context
def transform_cmd(ctx, model_dir, manifest, out, fmt):
    """Project activations into the shared space."""
    click.echo(_handlers(ctx).handle_transform(model_dir, manifest, out, fmt))


@cli.command()
@click.option("--model", "model_dir", type=click.Path(), default=None,
              help="Model directory (not used with --all-layers).")
@click.option("--manifest", required=True, type=click.Path(), help="Held-out activation manifest.")
@click.option("--reference-manifest", type=click.Path(), default=None,
              help="Activations whose averaged wRSM is the comparison target (e.g. the final checkpoint).")
@click.option("--all-layers", is_flag=True,
              help="Split, fit and evaluate every layer of the manifest instead of loading a model.")
@click.option("--split", type=float, default=None,
              help=f"Alignment fraction for --all-layers [default: {config.SIM_SPLIT_FRACTION}].")
@click.option("--k", type=int, default=None, help="Shared dimension cap for --all-layers [default: min n_i].")
@click.option("--report", "report_path", required=True, type=click.Path(), help="Report file.")
@click.option("--resamples", type=int, default=config.BOOTSTRAP_RESAMPLES, show_default=True,
              help="Bootstrap resamples.")
@click.option("--level", type=float, default=config.CI_LEVEL, show_default=True, help="CI level.")
@click.option("--seed", type=int, default=config.DEFAULT_SEED, show_default=True,
              help="Bootstrap and split seed.")
@click.pass_context
def evaluate(ctx, model_dir, manifest, reference_manifest, all_layers, split, k, report_path,
             resamples, level, seed):
    """Evaluate a fitted model (or every layer, with --all-layers) on held-out activations."""
    if all_layers and model_dir:
        raise click.UsageError("--model cannot be combined with --all-layers")
    if not all_layers:
        if not model_dir:
            raise click.UsageError("--model is required unless --all-layers is given")
        if split is not None or k is not None:
            raise click.UsageError("--split and --k apply to --all-layers only")
    split_fraction = config.SIM_SPLIT_FRACTION if split is None else split
    if not InputValidator.validate_fraction(split_fraction):
        raise click.BadParameter(f"must be in (0, 1), got {split_fraction}", param_hint="--split")
    click.echo(_handlers(ctx).handle_evaluate(
        model_dir, manifest, report_path, resamples, level, seed,
        reference_manifest=reference_manifest, all_layers=all_layers, split_fraction=split_fraction, k=k,
    ))


@cli.command()
@click.option("--manifest", required=True, type=click.Path(), help="Activation manifest.")
@click.option("--kind", type=click.Choice(["within", "inter", "both"]), default="within", show_default=True,
              help="RSMs to export.")
@click.option("--layer", default=None, help="Only this layer.")
@click.option("--out", required=True, type=click.Path(), help="Output directory.")
@format_option
@click.pass_context
def rsm(ctx, manifest, kind, layer, out, fmt):
    """Export within-network RSMs and/or the averaged inter-network RSM."""
    click.echo(_handlers(ctx).handle_rsm(manifest, kind, out, layer, fmt))


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point."""
    try:
        result = cli.main(args=argv, prog_name="srmkit", standalone_mode=False)
        return result if isinstance(result, int) else 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        click.echo("Aborted!", err=True)
        return 1
    except click.ClickException as e:
        e.show()
        return ValidationError.exit_code
    except KeyboardInterrupt:
        logger.info("Interrupted by user")
        return 1


if __name__ == "__main__":
    sys.exit(main())
