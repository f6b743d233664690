"""Main CLI interface for sigma2-lab."""

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from .config import LabConfig, dump_config, get_config_path, load_config
from .exceptions import (
    ConfigurationError,
    ConfigurationNotFoundError,
    ModelError,
    Sigma2LabError,
    ValidationError,
)
from .geometry import curvature_frame
from .logger import configure_logging, logger
from .models import MODEL_NAMES, ModelKind, get_model
from .operators import (
    EINSTEIN_TOLERANCE,
    ricci_eigenvalues,
    sigma2,
    sigma2_from_schouten,
    traceless_ricci_norm,
)
from .schema import get_schema_path, validate_config_file
from .suite import (
    ADJOINT_IDENTITIES,
    IDENTITY_IDS,
    KERNEL_IDENTITIES,
    IdentityChecker,
    IdentityReport,
    SuiteOrchestrator,
    bundle_json,
    exit_code,
    format_reports,
)

# Exit codes: identity failures vs. usage or configuration problems
EXIT_FAILURE = 1
EXIT_USAGE = 2


def version_callback(ctx, param, value):
    """Callback to handle --version option."""
    if value:
        click.echo(__version__)
        ctx.exit()


def parse_point(ctx, param, value):
    if value is None:
        return None
    try:
        return tuple(float(part) for part in value.split(","))
    except ValueError as e:
        raise click.BadParameter(f"expected comma-separated numbers, got '{value}'") from e


def parse_tolerances(ctx, param, values):
    """``--tol ID=VALUE`` pairs as a dict, checked against the identity registry."""
    tolerances = {}
    for item in values:
        identity, _, text = item.partition("=")
        if identity not in IDENTITY_IDS:
            raise click.BadParameter(f"unknown identity '{identity}'")
        try:
            tolerances[identity] = float(text)
        except ValueError as e:
            raise click.BadParameter(f"'{item}' is not ID=VALUE") from e
        if not tolerances[identity] > 0.0:
            raise click.BadParameter(f"tolerance for '{identity}' must be positive")
    return tolerances


def parse_params(ctx, param, values):
    params = {}
    for item in values:
        key, _, text = item.partition("=")
        try:
            params[key] = float(text)
        except ValueError as e:
            raise click.BadParameter(f"'{item}' is not KEY=VALUE") from e
    return params


def _grid_counts(text):
    try:
        counts = [int(part) for part in text.replace(",", "x").split("x")]
    except ValueError as e:
        raise click.BadParameter(f"expected node counts like 16x32, got '{text}'") from e
    return counts


def parse_grid(ctx, param, value):
    return None if value is None else _grid_counts(value)


def parse_model_grids(ctx, param, values):
    """``--grid MODEL=16x32`` pairs for the suite."""
    grids = {}
    for item in values:
        name, _, text = item.partition("=")
        if name not in MODEL_NAMES:
            raise click.BadParameter(f"unknown model '{name}'")
        grids[name] = _grid_counts(text)
    return grids


SAMPLE_CONFIG = """# sigma2-lab suite configuration
seed: 42
workers: 1          # models checked in parallel (and grid chunks per model)
chunk_size: 512     # grid nodes per integration chunk
functions: 5        # random functions per pointwise identity
pairs: 10           # random (f, h) pairs per adjointness identity
# points: 20        # overrides the per-identity number of random points

models:
  - flat_torus3
  - perturbed_torus
  - s2_r1
  - s3_r1
  - s4_r1
  - s2xs2_r1_r1
  - s2xs2_r1_r2

# identities:       # restrict the run to these identity ids
#   - lambda-star-one-trace

tolerances:
  lambda-star-one-divergence: 1.0e-7

resolutions:
  s2_r1: [32, 64]

params:
  perturbed_torus:
    epsilon: 0.05

timings: false      # include wall_time_ms in the JSON bundle
"""


def _emit_reports(reports: list[IdentityReport], seed: int, as_json: bool, verbose: bool, timings: bool = False):
    if as_json:
        click.echo(bundle_json(reports, seed, timings))
    else:
        click.echo(format_reports(reports, verbose=verbose))
    sys.exit(exit_code(reports))


def _load_model(name, params=None):
    try:
        return get_model(name, params or None)
    except ModelError as e:
        logger.error("Model error: %s", e)
        sys.exit(EXIT_USAGE)


def _settings_for(config_path, seed, tolerances, points=None, resolutions=None):
    """Suite settings from an optional config file plus command-line overrides."""
    try:
        config = load_config(config_path) if config_path else LabConfig()
    except ConfigurationNotFoundError as e:
        logger.error("Configuration not found: %s", e.config_path)
        sys.exit(EXIT_USAGE)
    except (ConfigurationError, ValidationError) as e:
        logger.error("Configuration error: %s", e)
        sys.exit(EXIT_USAGE)
    config = config.with_overrides(seed=seed, tolerances=tolerances, resolutions=resolutions)
    if points is not None:
        config.points = points
    return config


model_option = click.option(
    "--model", "-m", "model_name", required=True, type=click.Choice(MODEL_NAMES), help="Catalog model name"
)
param_option = click.option(
    "--param", "params", multiple=True, callback=parse_params, help="Model parameter override KEY=VALUE"
)
seed_option = click.option("--seed", type=click.IntRange(min=0), help="Random seed (default 42)")
tol_option = click.option(
    "--tol", "tolerances", multiple=True, callback=parse_tolerances, help="Tolerance override ID=VALUE"
)
json_option = click.option("--json", "as_json", is_flag=True, help="Print a JSON bundle instead of text")


@click.group()
@click.option("--verbose", "-v", is_flag=True, help="Enable verbose output")
@click.option(
    "--version",
    is_flag=True,
    help="Show version and exit",
    is_eager=True,
    expose_value=False,
    callback=version_callback,
)
@click.help_option("-h")
@click.pass_context
def cli(ctx, verbose):
    """Numerical verification of sigma2-curvature identities on model manifolds."""
    ctx.ensure_object(dict)
    ctx.obj["verbose"] = verbose

    configure_logging(verbose=verbose)


@cli.command()
@model_option
@click.option("--point", "-p", required=True, callback=parse_point, help="Chart coordinates, e.g. 1.0,0.5,0.3")
@click.option("--order", type=click.IntRange(2, 5), default=2, show_default=True, help="Jet order of the frame")
@param_option
@json_option
@click.pass_context
def curvature(ctx, model_name, point, order, params, as_json):
    """Print curvature invariants of a model at one point."""
    model = _load_model(model_name, params)
    if len(point) != model.dim:
        raise click.BadParameter(f"'{model_name}' needs {model.dim} coordinates, got {len(point)}", param_hint="--point")

    try:
        frame = curvature_frame(model.chart, np.array([point]), order)
    except Sigma2LabError as e:
        logger.error("Invalid point: %s", e)
        sys.exit(EXIT_USAGE)

    traceless = float(traceless_ricci_norm(frame)[0])
    summary = {
        "model": model.name,
        "point": list(point),
        "order": order,
        "scalar_curvature": float(frame.scalar.value[0]),
        "ricci_eigenvalues": [float(value) for value in ricci_eigenvalues(frame)[0]],
        "sigma2": float(sigma2(frame)[0]),
        "sigma2_schouten": float(sigma2_from_schouten(frame)[0]),
        "traceless_ricci_norm": traceless,
        "einstein": traceless <= EINSTEIN_TOLERANCE,
    }
    if as_json:
        click.echo(json.dumps(summary, indent=2, sort_keys=True))
        return

    click.echo(f"{model.name} at ({', '.join(f'{x:g}' for x in point)}), order {order}:")
    click.echo(f"  R                 = {summary['scalar_curvature']:.12g}")
    click.echo(f"  Ricci eigenvalues = {', '.join(f'{x:.12g}' for x in summary['ricci_eigenvalues'])}")
    click.echo(f"  sigma2            = {summary['sigma2']:.12g}")
    click.echo(f"  sigma2 (Schouten) = {summary['sigma2_schouten']:.12g}")
    click.echo(f"  |traceless Ric|   = {traceless:.12g}")
    click.echo(f"  Einstein          = {'yes' if summary['einstein'] else 'no'}")


@cli.command()
@model_option
@click.option("--identity", "-i", "identities", multiple=True, type=click.Choice(IDENTITY_IDS), help="Identity id")
@click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False), help="Configuration file")
@click.option("--points", type=click.IntRange(min=1), help="Random points per pointwise identity")
@param_option
@seed_option
@tol_option
@json_option
@click.pass_context
def identities(ctx, model_name, identities, config_path, points, params, seed, tolerances, as_json):
    """Run every applicable identity (or the selected ones) on one model."""
    config = _settings_for(config_path, seed, tolerances, points)
    model = _load_model(model_name, params or config.params.get(model_name))
    checker = IdentityChecker(model, config.to_settings())
    selected = list(identities) or None
    reports = checker.run(selected, report_inapplicable=selected is not None)
    _emit_reports(reports, config.seed, as_json, ctx.obj.get("verbose", False), config.timings)


def _run_subset(ctx, model, subset, config, as_json):
    reports = IdentityChecker(model, config.to_settings()).run(subset)
    _emit_reports(reports, config.seed, as_json, ctx.obj.get("verbose", False), config.timings)


@cli.command()
@model_option
@click.option("--grid", "-g", callback=parse_grid, help="Nodes per axis, e.g. 16x32")
@click.option("--pairs", type=click.IntRange(min=1), default=10, show_default=True, help="Random (f, h) pairs")
@param_option
@seed_option
@tol_option
@json_option
@click.pass_context
def adjoint(ctx, model_name, grid, pairs, params, seed, tolerances, as_json):
    """Check L2 adjointness of gamma, Lambda and delta on a closed model."""
    model = _load_model(model_name, params)
    if not model.is_closed:
        logger.error("Model '%s' is not closed; adjointness needs a quadrature grid", model.name)
        sys.exit(EXIT_USAGE)
    config = _settings_for(None, seed, tolerances, resolutions={model.name: grid} if grid else None)
    config.pairs = pairs
    _run_subset(ctx, model, ADJOINT_IDENTITIES, config, as_json)


@cli.command()
@model_option
@click.option("--grid", "-g", callback=parse_grid, help="Nodes per axis, e.g. 16x32")
@param_option
@seed_option
@tol_option
@json_option
@click.pass_context
def kernel(ctx, model_name, grid, params, seed, tolerances, as_json):
    """Check that sphere coordinate functions span the kernels of gamma* and Lambda*."""
    model = _load_model(model_name, params)
    if model.kind is not ModelKind.SPHERE:
        logger.error("Model '%s' is not a round sphere", model.name)
        sys.exit(EXIT_USAGE)
    config = _settings_for(None, seed, tolerances, resolutions={model.name: grid} if grid else None)
    _run_subset(ctx, model, KERNEL_IDENTITIES, config, as_json)


@cli.command()
@click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False), help="Configuration file")
@seed_option
@tol_option
@click.option("--grid", "-g", "grids", multiple=True, callback=parse_model_grids, help="Grid override MODEL=16x32")
@click.option("--workers", "-w", type=click.IntRange(min=1), help="Parallel workers")
@click.option("--timings", is_flag=True, help="Include wall times in the JSON bundle")
@click.option("--output", "-o", type=click.Path(dir_okay=False, writable=True), help="Write the JSON bundle here")
@json_option
@click.pass_context
def suite(ctx, config_path, seed, tolerances, grids, workers, timings, output, as_json):
    """Run the full identity suite over the configured models.

    Without --config, sigma2lab.yaml in the working directory is used when it
    exists, otherwise the built-in defaults (every catalog model).
    """
    verbose = ctx.obj.get("verbose", False)
    default_path = get_config_path()
    if config_path is None and default_path.exists():
        config_path = str(default_path)

    try:
        config = load_config(config_path) if config_path else LabConfig()
    except ConfigurationNotFoundError as e:
        logger.error("Configuration not found: %s", e.config_path)
        click.echo("Run 'sigma2-lab init' to create a configuration file.")
        sys.exit(EXIT_USAGE)
    except (ConfigurationError, ValidationError) as e:
        logger.error("Configuration error: %s", e)
        sys.exit(EXIT_USAGE)

    config = config.with_overrides(
        seed=seed, workers=workers, tolerances=tolerances, resolutions=grids, timings=timings or None
    )
    logger.info("Running %d model(s) with seed %d", len(config.models), config.seed)
    orchestrator = SuiteOrchestrator(config.models, config.to_settings(), config.params)
    reports = orchestrator.run_all()

    if output:
        Path(output).write_text(bundle_json(reports, config.seed, config.timings) + "\n", encoding="utf-8")
        logger.info("Wrote report bundle: %s", output)
    if as_json:
        click.echo(bundle_json(reports, config.seed, config.timings))
    else:
        click.echo(format_reports(reports, verbose=verbose))
    sys.exit(exit_code(reports))


@cli.command()
@click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False), help="Where to write the file")
@click.pass_context
def init(ctx, config_path):
    """Initialize a new sigma2lab.yaml configuration file."""
    path = get_config_path(config_path)

    if path.exists():
        logger.warning("Configuration file already exists: %s", path)
        return
    try:
        path.write_text(SAMPLE_CONFIG, encoding="utf-8")
    except OSError as e:
        logger.error("Failed to create configuration file: %s", e)
        sys.exit(EXIT_FAILURE)
    logger.info("Created configuration file: %s", path)
    click.echo("Edit this file to choose models, tolerances and grids.")


@cli.command()
@click.option("--config", "-c", "config_path", type=click.Path(dir_okay=False), help="Configuration file")
@click.pass_context
def validate(ctx, config_path):
    """Validate the configuration file with detailed schema checking."""
    path = get_config_path(config_path)
    try:
        if not path.exists():
            raise ConfigurationNotFoundError(str(path))
        validate_config_file(str(path))
        config = load_config(str(path))
    except ConfigurationNotFoundError as e:
        logger.error("Configuration file not found: %s", e.config_path)
        click.echo("Run 'sigma2-lab init' to create a configuration file.")
        sys.exit(EXIT_USAGE)
    except ValidationError as e:
        logger.error("Schema validation failed: %s", e)
        sys.exit(EXIT_USAGE)
    except ConfigurationError as e:
        logger.error("Configuration error: %s", e)
        sys.exit(EXIT_USAGE)

    logger.info("Configuration file is valid")
    schema_path = get_schema_path()
    if schema_path:
        logger.info("Using schema: %s", schema_path)
    else:
        logger.info("Using embedded schema")

    if ctx.obj.get("verbose", False):
        click.echo("\n[SCHEMA] Configuration Summary:")
        click.echo(f"  Configuration file: {path}")
        click.echo(f"  Models: {len(config.models)}")
        click.echo(f"  Identities: {len(config.identities) if config.identities else len(IDENTITY_IDS)}")
        click.echo("\n[CONFIG] Effective settings:")
        for line in dump_config(config).splitlines():
            click.echo(f"  {line}")


if __name__ == "__main__":
    cli()
