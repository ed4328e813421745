#!/usr/bin/env python3
# SPDX-License-Identifier: GPL-3.0-or-later

import logging
from collections.abc import Callable, Iterable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, TypeVar

import click
import numpy as np

try:
    import rich.logging

    handler = rich.logging.RichHandler(rich_tracebacks=True)
except ModuleNotFoundError:
    handler = logging.StreamHandler()


from . import report
from .affine import compute_affine_data, identity_terms
from .body import (
    ConvexBody,
    is_symmetric,
    load_body,
    make_ball,
    make_ellipsoid,
    make_random_body,
    recentre,
    require_interior_origin,
    resolution_tail,
    save,
    steiner_point,
    symmetry_defect,
    volume,
)
from .config import (
    ConfigError,
    ExperimentConfig,
    list_experiments,
    load_experiment,
)
from .corpus import (
    body_corpus,
    equality_functions,
    minkowski_witnesses,
    random_functions,
    scalar_shift_functions,
)
from .flow import (
    FlowKind,
    FlowParams,
    FlowState,
    FlowTrace,
    Normalization,
    fixed_weight,
    integrate,
    named_field,
)
from .mixed import (
    EQUALITY_TOL,
    ellipticity_eigenvalues,
    is_equality,
    minkowski_terms,
    mixed_volume,
    steiner_mixed_volume,
)
from .sphere import ScalarField, SphereGrid
from .wirtinger import proof_chain_check, wirtinger_report

logging.basicConfig(
    level="INFO",
    format="%(message)s",
    datefmt="[%X]",
    handlers=[handler],
)
logger = logging.getLogger("ovaloid")

T = TypeVar("T")
R = TypeVar("R")

# identity residuals at or below this relative size have hit roundoff
ROUNDOFF_FLOOR = 1e-9

# spectral tail of K above which a body counts as under-resolved
RESOLUTION_TAIL = 1e-10

CONVERGENCE_RATIO = 10.0

# relative disagreement allowed between the two routes to V[f,f,s,...]
CHAIN_TOL = 1e-6

MINKOWSKI_TOL = 1e-9

SCALAR_SHIFTS = (0.5, 1.0)


@dataclass
class Context:
    quiet: bool = False
    notify: bool = False

    def echo(self, message: str, **kwargs: Any) -> None:
        """Echo a message unless quiet mode is enabled."""
        if self.quiet:
            return
        click.echo(message, **kwargs)

    def secho(self, message: str, **kwargs: Any) -> None:
        """Echo a styled message unless quiet mode is enabled."""
        # Always show errors (err=True), suppress others in quiet mode
        if kwargs.get("err", False):
            click.secho(message, **kwargs)
        elif self.quiet:
            return
        else:
            click.secho(message, **kwargs)


def send_notification(command: str, outcome: str) -> None:
    """Send a desktop notification when a command completes."""
    try:
        import asyncio

        async def _send_notification_async(command: str, outcome: str) -> None:
            from desktop_notifier import DesktopNotifier, Notification

            notifier = DesktopNotifier(app_name="ovaloid")
            notification = Notification(
                title=f"ovaloid {command}", message=f"Finished {command}: {outcome}"
            )
            await notifier.send_notification(notification)

        asyncio.run(_send_notification_async(command, outcome))

    except ModuleNotFoundError:
        pass


def input_error(e: Exception) -> int:
    click.secho(f"Error: {e}", err=True, fg="red")
    return 2


def map_items(func: Callable[[T], R], items: Sequence[T], threads: int) -> list[R]:
    """``map`` over corpus items, in order; ``threads == 1`` runs inline."""
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))


def emit_table(
    out: Path | None,
    schema: str,
    header: Sequence[str],
    rows: Iterable[Sequence[report.Cell]],
    summary: dict[str, Any],
) -> None:
    """Write the CSV and its summary to ``out``, or the CSV to stdout."""
    text = report.render_csv(schema, header, rows)
    if out is None:
        click.echo(text, nl=False)
        return
    out.write_text(text)
    report.write_summary(report.summary_path(out), summary)
    logger.info(f"Wrote {out}")


def list_all_experiments(ctx: Context, command: str) -> int:
    """
    List the experiments available for ``command``.

    Returns:
        Exit code (0 for success, 1 if there are none)
    """
    entries = list_experiments(command)
    if not entries:
        click.secho(f"No {command} experiments with descriptions found.", err=True, fg="red")
        return 1

    max_name_len = max(len(entry.name) for entry in entries)
    for entry in entries:
        ctx.echo(f"{entry.name:<{max_name_len}} ... {entry.description}")
    return 0


def resolve_config(
    command: str, experiment: str | None, overrides: dict[str, Any]
) -> ExperimentConfig:
    return load_experiment(command, experiment).with_overrides(**overrides)


def make_grid(config: ExperimentConfig, factor: int = 1) -> SphereGrid:
    grid = SphereGrid.create(config["dim"], config["resolution"])
    if factor == 1:
        return grid
    return SphereGrid(grid.dim, grid.resolution * factor)


def load_bodies(
    config: ExperimentConfig, grid: SphereGrid, body_files: Sequence[Path]
) -> list[ConvexBody]:
    """
    The body files given on the command line, or the configured corpus.

    Bodies whose curvature the grid does not resolve are reported.
    """
    if body_files:
        bodies = [load_body(path, grid) for path in body_files]
    else:
        bodies = body_corpus(
            config["corpus"],
            grid,
            config["bodies"],
            config["seed"],
            bandlimit=config["bandlimit"],
            amplitude=config["amplitude"],
            symmetric=config["symmetric"],
        )
    for body in bodies:
        tail = resolution_tail(body)
        if tail > RESOLUTION_TAIL:
            logger.warning(
                f"{body.name}: curvature not resolved at resolution {grid.resolution} "
                f"(spectral tail {tail:.1e}), raise --resolution"
            )
    return bodies


def roundoff_floor(grid: SphereGrid) -> float:
    """Relative residual reachable on ``grid``; the identity carries four derivatives of s."""
    top = grid.resolution // 2 if grid.dim == 2 else 2 * grid.resolution
    return max(ROUNDOFF_FLOOR, float(np.finfo(float).eps) * top**4)


def experiment_options(func: Callable[..., Any]) -> Callable[..., Any]:
    """Options shared by the experiment commands."""
    options = [
        click.argument("experiment", required=False),
        click.option(
            "--list",
            "list_only",
            is_flag=True,
            help="List all available experiments",
        ),
        click.option("--dim", type=click.IntRange(2, 3), default=None, help="Ambient dimension"),
        click.option(
            "--resolution",
            type=click.IntRange(min=0),
            default=None,
            help="Circle nodes (dim 2) or bandlimit (dim 3); 0 for the default",
        ),
        click.option("--seed", type=click.IntRange(min=0), default=None, help="Corpus seed"),
        click.option("--bodies", type=click.IntRange(min=1), default=None, help="Number of generated bodies"),
        click.option("--tol", type=float, default=None, help="Tolerance for the pass/fail decision"),
        click.option(
            "--threads",
            type=click.IntRange(min=1),
            default=None,
            help="Worker threads for the corpus (1 is the reference mode)",
        ),
        click.option(
            "--out",
            type=click.Path(dir_okay=False, path_type=Path),
            default=None,
            help="CSV output file; a .summary.json is written next to it",
        ),
        click.option(
            "--body",
            "body_files",
            multiple=True,
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            help="Body file to use instead of the generated corpus (repeatable)",
        ),
    ]
    for option in reversed(options):
        func = option(func)
    return func


@click.group(invoke_without_command=False)
@click.option("-v", "--verbose", count=True, help="increase verbosity")
@click.option(
    "--quiet",
    "-q",
    is_flag=True,
    help="Suppress informational messages (keeps errors and table output)",
)
@click.option(
    "--notify",
    is_flag=True,
    help="Send desktop notification when command completes",
)
@click.pass_context
def ovaloid(
    ctx: click.Context,
    verbose: int,
    quiet: bool,
    notify: bool,
) -> None:
    """Ovaloid: numerical checks of affine-geometric inequalities on convex bodies."""

    if quiet:
        # In quiet mode, only show warnings and errors
        logger.setLevel(logging.WARNING)
    else:
        verbose_levels = {0: logging.ERROR, 1: logging.INFO, 2: logging.DEBUG}
        logger.setLevel(verbose_levels.get(verbose, logging.DEBUG))

    logger.debug(f"Verbose level set {logger.getEffectiveLevel()}")
    ctx.obj = Context(quiet=quiet, notify=notify)


@ovaloid.result_callback()
@click.pass_context
def process_result(ctx: click.Context, result: int, **_kwargs: Any) -> None:
    """Process the result from subcommands to set the exit code."""
    if ctx.obj and ctx.obj.notify and ctx.invoked_subcommand:
        command = ctx.invoked_subcommand
        outcome = "passed" if not result else f"exit code {result}"
        logger.debug(f"Attempting to send notification for command: {command}")
        try:
            send_notification(command, outcome)
        except OSError as e:
            # Handle notification system unavailability (e.g., no D-Bus on Linux)
            logger.warning(f"Failed to send notification: {e}")
        except RuntimeError as e:
            # Handle asyncio-related errors
            logger.warning(f"Failed to send notification: {e}")

    if result is not None:
        ctx.exit(result)


def _identity_rows(
    body: ConvexBody, functions: list[tuple[str, ScalarField]]
) -> list[tuple[str, float, float]]:
    data = compute_affine_data(body)
    rows = []
    for name, f in functions:
        lhs, laplacian, curvature = identity_terms(data, f)
        residual = (lhs - laplacian - curvature).sup_norm()
        scale = lhs.sup_norm() + laplacian.sup_norm() + curvature.sup_norm()
        rows.append((name, residual, scale))
    return rows


def _identity_functions(
    config: ExperimentConfig, grid: SphereGrid, index: int
) -> list[tuple[str, ScalarField]]:
    functions = random_functions(
        grid, config["functions"], config["seed"] + index, config["bandlimit"]
    )
    e1 = np.zeros(grid.dim)
    e1[0] = 1.0
    return [*functions, ("linear", ScalarField.linear(grid, e1))]


def run_verify_identity(
    ctx: Context,
    config: ExperimentConfig,
    bodies: list[ConvexBody],
    fine_bodies: list[ConvexBody],
    out: Path | None,
) -> int:
    """
    Args:
        bodies: the corpus at the configured resolution
        fine_bodies: the same corpus at twice the resolution, for the
            convergence column (empty to skip it)
    """
    grid = bodies[0].grid
    convergence = bool(fine_bodies)
    tol = float(config["tol"])
    floor = roundoff_floor(fine_bodies[0].grid) if convergence else ROUNDOFF_FLOOR

    def measure(item: tuple[int, ConvexBody]) -> list[tuple[str, float, float]]:
        index, body = item
        return _identity_rows(body, _identity_functions(config, body.grid, index))

    coarse = map_items(measure, list(enumerate(bodies)), config["threads"])
    fine: list[list[tuple[str, float, float]]] = []
    if convergence:
        fine = map_items(measure, list(enumerate(fine_bodies)), config["threads"])

    header = list(report.IDENTITY_COLUMNS) + (["ratio"] if convergence else [])
    rows: list[list[report.Cell]] = []
    failures = 0
    max_relative = 0.0
    min_ratio = float("inf")
    for index, (body, cases) in enumerate(zip(bodies, coarse, strict=True)):
        for case_index, (name, residual, scale) in enumerate(cases):
            relative = residual / scale if scale > 0 else 0.0
            max_relative = max(max_relative, relative)
            ok = relative <= tol
            row: list[report.Cell] = [body.name, name, grid.resolution, residual, scale, relative]
            if convergence:
                _, fine_residual, fine_scale = fine[index][case_index]
                fine_relative = fine_residual / fine_scale if fine_scale > 0 else 0.0
                ratio = relative / fine_relative if fine_relative > 0 else float("inf")
                min_ratio = min(min_ratio, ratio)
                ok = ok and (ratio >= CONVERGENCE_RATIO or fine_relative <= floor)
                row.append(ratio)
            if not ok:
                failures += 1
                logger.warning(f"Identity check failed for {body.name}/{name}: relative {relative:.3e}")
            rows.append(row)

    summary = {
        "cases": len(rows),
        "failures": failures,
        "max_relative": max_relative,
        "min_ratio": min_ratio if convergence else None,
        "roundoff_floor": floor if convergence else None,
        "dim": grid.dim,
        "resolution": grid.resolution,
        "passed": failures == 0,
    }
    emit_table(out, "identity", header, rows, summary)
    if failures:
        click.secho(f"Error: {failures} of {len(rows)} identity cases out of tolerance", err=True, fg="red")
        return 1
    ctx.secho(f"All {len(rows)} identity cases within tolerance", fg="green")
    return 0


@ovaloid.command("verify-identity")
@experiment_options
@click.option(
    "--convergence/--no-convergence",
    default=None,
    help="Also evaluate at doubled resolution and report the ratio",
)
@click.pass_context
def cmd_verify_identity(
    ctx: click.Context,
    experiment: str | None,
    list_only: bool,
    body_files: tuple[Path, ...],
    out: Path | None,
    **overrides: Any,
) -> int:
    """
    Check the curvature identity h^{ij}A[f]_ij = Δ̄(fK^{-1/(n+1)}) + fK^{-1/(n+1)}H
    on a corpus of bodies and random test functions.
    """
    if list_only:
        return list_all_experiments(ctx.obj, "verify-identity")

    try:
        config = resolve_config("verify-identity", experiment, overrides)
        # validate everything before any output is produced
        corpus = load_bodies(config, make_grid(config), body_files)
        fine_corpus: list[ConvexBody] = []
        if config["convergence"]:
            fine_corpus = load_bodies(config, make_grid(config, factor=2), body_files)
        for body in corpus + fine_corpus:
            require_interior_origin(body)
    except (ValueError, OSError) as e:
        return input_error(e)

    return run_verify_identity(ctx.obj, config, corpus, fine_corpus, out)


def run_wirtinger(
    ctx: Context, config: ExperimentConfig, bodies: list[ConvexBody], out: Path | None
) -> int:
    family = config["family"]
    tol = float(config["tol"])

    def evaluate(item: tuple[int, ConvexBody]) -> list[tuple[str, Any, float]]:
        index, body = item
        data = compute_affine_data(body)
        seed = config["seed"] + index
        if family == "equality":
            functions = equality_functions(body, data, config["functions"], seed)
        elif family == "scalar-d":
            functions = scalar_shift_functions(body, data, SCALAR_SHIFTS)
        else:
            functions = random_functions(body.grid, config["functions"], seed, config["bandlimit"])
            functions.append(("one", ScalarField.constant(body.grid, 1.0)))
        results = []
        for name, F in functions:
            result = wirtinger_report(body, F, data)
            chain = proof_chain_check(body, F, data) / result.scale
            results.append((name, result, chain))
        return results

    evaluated = map_items(evaluate, list(enumerate(bodies)), config["threads"])

    rows: list[list[report.Cell]] = []
    failures = 0
    min_relative = float("inf")
    max_chain = 0.0
    for body, results in zip(bodies, evaluated, strict=True):
        rows += report.wirtinger_rows(body.name, [(name, r) for name, r, _ in results])
        for name, result, chain in results:
            min_relative = min(min_relative, result.relative_slack)
            max_chain = max(max_chain, chain)
            failed = chain > CHAIN_TOL
            if family == "random":
                failed = failed or result.slack < -tol * result.scale
            elif family == "equality":
                failed = failed or not result.equality_flag
            elif result.equality_flag:
                logger.warning(f"Scalar shift {name} on {body.name} is an equality case")
            else:
                logger.warning(
                    f"Scalar shift {name} on {body.name} has relative slack {result.relative_slack:.3e}"
                )
            if failed:
                failures += 1
                logger.warning(f"Wirtinger check failed for {body.name}/{name}")

    summary = {
        "family": family,
        "pairs": len(rows),
        "failures": failures,
        "min_relative_slack": min_relative,
        "max_chain_discrepancy": max_chain,
        "passed": failures == 0,
    }
    emit_table(out, "wirtinger", report.WIRTINGER_COLUMNS, rows, summary)
    if failures:
        click.secho(f"Error: {failures} of {len(rows)} Wirtinger cases failed", err=True, fg="red")
        return 1
    ctx.secho(f"All {len(rows)} Wirtinger cases passed ({family})", fg="green")
    return 0


@ovaloid.command("wirtinger")
@experiment_options
@click.option(
    "--family",
    type=click.Choice(["random", "equality", "scalar-d"]),
    default=None,
    help="Test functions: random, the equality family, or scalar shifts",
)
@click.pass_context
def cmd_wirtinger(
    ctx: click.Context,
    experiment: str | None,
    list_only: bool,
    body_files: tuple[Path, ...],
    out: Path | None,
    **overrides: Any,
) -> int:
    """Evaluate both sides of the affine Wirtinger inequality on a corpus."""
    if list_only:
        return list_all_experiments(ctx.obj, "wirtinger")

    try:
        config = resolve_config("wirtinger", experiment, overrides)
        bodies = load_bodies(config, make_grid(config), body_files)
        for body in bodies:
            require_interior_origin(body)
    except (ValueError, OSError) as e:
        return input_error(e)

    return run_wirtinger(ctx.obj, config, bodies, out)


def parse_radii(text: str) -> list[float]:
    try:
        radii = [float(r) for r in text.split(",") if r.strip()]
    except ValueError as e:
        raise ConfigError(f"radii: {text!r} is not a comma-separated list of numbers") from e
    if not radii or any(r <= 0 for r in radii):
        raise ConfigError(f"radii: need positive radii, got {text!r}")
    return radii


def run_mixed(
    ctx: Context, config: ExperimentConfig, bodies: list[ConvexBody], out: Path | None
) -> int:
    grid = make_grid(config)
    n = grid.dim
    tol = float(config["tol"])
    rows: list[list[report.Cell]] = []

    def add(case: str, value: float, expected: float | None, check: str, passed: bool) -> None:
        if expected is not None:
            rel_error: float | None = abs(value - expected) / max(abs(expected), 1e-300)
        else:
            rel_error = None
        rows.append([case, value, expected, rel_error, check, passed])

    for r1 in parse_radii(config["radii"]):
        for r2 in parse_radii(config["radii"]):
            first, second = make_ball(r1, grid), make_ball(r2, grid)
            value = mixed_volume(first, *([second] * (n - 1))).value
            expected = steiner_mixed_volume(r1, r2, n)
            add(f"balls:{r1:g},{r2:g}", value, expected, "equal", abs(value - expected) <= tol * expected)

    def tabulate(item: tuple[int, ConvexBody]) -> list[list[report.Cell]]:
        index, body = item
        local: list[list[report.Cell]] = []
        full = mixed_volume(body, *([body] * (n - 1))).value
        expected = n * volume(body)
        rel = abs(full - expected) / expected
        local.append([f"volume:{body.name}", full, expected, rel, "equal", rel <= tol])

        for name, h in random_functions(grid, config["functions"], config["seed"] + index, config["bandlimit"]):
            v_hh, v_sh, v_ss = minkowski_terms(h, body)
            slack = v_sh**2 / v_ss - v_hh
            scale = v_sh**2 / v_ss + abs(v_hh)
            local.append(
                [f"minkowski:{body.name}:{name}", slack, None, slack / v_ss, "nonneg", slack >= -MINKOWSKI_TOL * scale]
            )
        for name, h in minkowski_witnesses(body, config["functions"], config["seed"] + index):
            v_hh, v_sh, v_ss = minkowski_terms(h, body)
            slack = v_sh**2 / v_ss - v_hh
            local.append(
                [f"witness:{body.name}:{name}", slack, 0.0, abs(slack) / v_ss, "equal", is_equality(slack, v_ss, EQUALITY_TOL)]
            )
        for d in SCALAR_SHIFTS:
            v_hh, v_sh, v_ss = minkowski_terms(body.support + d, body)
            slack = v_sh**2 / v_ss - v_hh
            local.append([f"shift:{body.name}:{d:g}", slack, None, slack / v_ss, "report", True])
        if n == 3:
            smallest = float(ellipticity_eigenvalues(grid, body).min())
            local.append([f"ellipticity:{body.name}", smallest, None, None, "positive", smallest > 0])
        return local

    for chunk in map_items(tabulate, list(enumerate(bodies)), config["threads"]):
        rows += chunk

    failures = [row for row in rows if row[-1] is False]
    for row in failures:
        logger.warning(f"Mixed volume check failed: {row[0]}")
    summary = {
        "cases": len(rows),
        "failures": len(failures),
        "passed": not failures,
    }
    emit_table(out, "mixed", report.MIXED_COLUMNS, rows, summary)
    if failures:
        click.secho(f"Error: {len(failures)} of {len(rows)} mixed-volume checks failed", err=True, fg="red")
        return 1
    ctx.secho(f"All {len(rows)} mixed-volume checks passed", fg="green")
    return 0


@ovaloid.command("mixed")
@experiment_options
@click.option("--radii", default=None, help="Comma-separated ball radii for the two-ball table")
@click.pass_context
def cmd_mixed(
    ctx: click.Context,
    experiment: str | None,
    list_only: bool,
    body_files: tuple[Path, ...],
    out: Path | None,
    **overrides: Any,
) -> int:
    """Tabulate mixed volumes against closed forms and Minkowski's inequality."""
    if list_only:
        return list_all_experiments(ctx.obj, "mixed")

    try:
        config = resolve_config("mixed", experiment, overrides)
        parse_radii(config["radii"])
        bodies = load_bodies(config, make_grid(config), body_files)
    except (ValueError, OSError) as e:
        return input_error(e)

    return run_mixed(ctx.obj, config, bodies, out)


def flow_params(config: ExperimentConfig, grid: SphereGrid) -> FlowParams:
    """
    Raises:
        ValueError: if a weight cannot be built or is not positive and even
    """
    kind = FlowKind(config["kind"])
    phi = None
    weight = None
    if kind == FlowKind.WEIGHTED_P_CENTRO_AFFINE:
        phi = named_field(config["phi"], grid)
    elif kind == FlowKind.WEIGHTED_AFFINE:
        F = named_field(config["weight"], grid)
        weight = fixed_weight(F)
    return FlowParams(
        kind=kind,
        p=config["p"],
        phi=phi,
        weight=weight,
        normalization=Normalization(config["normalize"]),
    )


def trace_path(out: Path, body: ConvexBody, count: int) -> Path:
    if count == 1:
        return out
    return out.with_name(f"{out.stem}-{body.name}{out.suffix}")


def run_flow(
    ctx: Context,
    config: ExperimentConfig,
    bodies: list[ConvexBody],
    params: FlowParams,
    psi: ScalarField | None,
    out: Path | None,
    plot_data: bool,
) -> int:
    def run(body: ConvexBody) -> tuple[FlowState, FlowTrace]:
        state = FlowState.start(body, params)
        return integrate(
            state,
            t_end=config["t_end"],
            dt0=config["dt0"],
            record_every=config["record_every"],
            psi=psi,
        )

    results = map_items(run, bodies, config["threads"])
    check_monotone = params.kind != FlowKind.WEIGHTED_AFFINE

    per_body: dict[str, Any] = {}
    failures = 0
    for body, (_, trace) in zip(bodies, results, strict=True):
        checked = check_monotone and is_symmetric(body)
        summary = report.flow_summary(trace, config["tol"], checked)
        per_body[body.name] = summary
        problems = []
        if trace.extinct:
            problems.append("step size underflow")
        if checked and not summary["monotone"]:
            problems.append("ratio decreased")
        if trace.steps < config["steps_min"]:
            problems.append(f"only {trace.steps} accepted steps")
        if problems:
            failures += 1
            logger.warning(f"Flow on {body.name}: {', '.join(problems)}")

        header, rows = report.trace_table(trace)
        if out is None:
            click.echo(report.render_csv("flow", header, rows), nl=False)
            continue
        path = trace_path(out, body, len(bodies))
        report.write_trace(path, trace)
        if plot_data:
            report.write_plot_data(path, trace)

    traces = [trace for _, trace in results]
    verdicts = [s["monotone"] for s in per_body.values() if s["monotone"] is not None]
    overall = {
        "monotone": all(verdicts) if verdicts else None,
        "min_ratio_delta": min(t.min_ratio_delta for t in traces),
        "steps": sum(t.steps for t in traces),
        "t_final": min(t.rows[-1].t for t in traces),
        "extinct": any(t.extinct for t in traces),
        "normalization": str(params.normalization),
        "kind": str(params.kind),
        "bodies": per_body,
    }
    if out is not None:
        report.write_summary(report.summary_path(out), overall)
        logger.info(f"Wrote {out}")
    elif plot_data:
        logger.warning("--plot-data needs --out, no data files written")

    if failures:
        click.secho(f"Error: {failures} of {len(bodies)} flows failed their checks", err=True, fg="red")
        return 1
    ctx.secho(f"All {len(bodies)} flows completed", fg="green")
    return 0


@ovaloid.command("flow")
@experiment_options
@click.option(
    "--kind",
    type=click.Choice([k.value for k in FlowKind]),
    default=None,
    help="Which flow to run",
)
@click.option("--p", "p", type=float, default=None, help="Exponent of the p-centro-affine flows")
@click.option("--t-end", "t_end", type=float, default=None, help="Final flow time")
@click.option("--dt0", type=float, default=None, help="Requested step (0 for an estimate)")
@click.option(
    "--normalize",
    type=click.Choice([n.value for n in Normalization]),
    default=None,
    help="Rescaling applied after every step",
)
@click.option(
    "--plot-data",
    is_flag=True,
    help="Also write two-column t/value files for each trace column",
)
@click.pass_context
def cmd_flow(
    ctx: click.Context,
    experiment: str | None,
    list_only: bool,
    body_files: tuple[Path, ...],
    out: Path | None,
    plot_data: bool,
    **overrides: Any,
) -> int:
    """Run a p-centro-affine or weighted affine flow and trace the p-affine ratio."""
    if list_only:
        return list_all_experiments(ctx.obj, "flow")

    try:
        config = resolve_config("flow", experiment, overrides)
        grid = make_grid(config)
        bodies = load_bodies(config, grid, body_files)
        params = flow_params(config, grid)
        psi = named_field(config["psi"], grid) if config["psi"] else None
        for body in bodies:
            FlowState.start(body, params)
    except (ValueError, OSError) as e:
        return input_error(e)

    return run_flow(ctx.obj, config, bodies, params, psi, out, plot_data)


@ovaloid.group("body")
def cmd_body() -> None:
    """Create, check and recentre body files."""


def parse_axes(text: str, dim: int) -> list[float]:
    try:
        axes = [float(a) for a in text.split(",")]
    except ValueError as e:
        raise click.BadParameter(f"{text!r} is not a comma-separated list of numbers") from e
    if len(axes) != dim:
        raise click.BadParameter(f"need {dim} semiaxes, got {len(axes)}")
    return axes


@cmd_body.command("make")
@click.option(
    "--kind",
    type=click.Choice(["ball", "ellipsoid", "random"]),
    default="random",
    help="Which body to generate",
)
@click.option("--dim", type=click.IntRange(2, 3), default=2, help="Ambient dimension")
@click.option("--resolution", type=click.IntRange(min=0), default=0, help="Grid resolution (0 for the default)")
@click.option("--radius", type=float, default=1.0, help="Ball radius")
@click.option("--axes", default=None, help="Comma-separated ellipsoid semiaxes")
@click.option("--seed", type=click.IntRange(min=0), default=0, help="Seed of a random body")
@click.option("--bandlimit", type=click.IntRange(min=1), default=4, help="Degree of a random body")
@click.option("--amplitude", type=float, default=0.1, help="Perturbation size of a random body")
@click.option("--symmetric", is_flag=True, help="Make a random body origin-symmetric")
@click.option(
    "--format",
    "file_kind",
    type=click.Choice(["grid", "fourier", "sh"]),
    default="grid",
    help="Store node values or harmonic coefficients",
)
@click.argument("output", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def cmd_body_make(
    ctx: click.Context,
    kind: str,
    dim: int,
    resolution: int,
    radius: float,
    axes: str | None,
    seed: int,
    bandlimit: int,
    amplitude: float,
    symmetric: bool,
    file_kind: str,
    output: Path,
) -> int:
    """Generate a body and write its support function to OUTPUT."""
    try:
        grid = SphereGrid.create(dim, resolution)
        if kind == "ball":
            body = make_ball(radius, grid)
        elif kind == "ellipsoid":
            body = make_ellipsoid(parse_axes(axes or ",".join(["1"] * dim), dim), grid)
        else:
            body = make_random_body(seed, bandlimit, amplitude, grid, symmetric)
        save(body.support, output, file_kind)
    except ValueError as e:
        return input_error(e)

    ctx.obj.echo(f"Wrote {body.name} to {output}")
    return 0


@cmd_body.command("validate")
@click.option("--resolution", type=click.IntRange(min=0), default=None, help="Resample onto this resolution")
@click.argument("body_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def cmd_body_validate(ctx: click.Context, resolution: int | None, body_file: Path) -> int:
    """Check that BODY_FILE describes a smooth strictly convex body."""
    try:
        body = _load_for_inspection(body_file, resolution)
        compute_affine_data(body)
    except ValueError as e:
        return input_error(e)

    ctx.obj.secho(f"{body_file}: ok (margin {body.margin:.6g})", fg="green")
    return 0


@cmd_body.command("info")
@click.option("--resolution", type=click.IntRange(min=0), default=None, help="Resample onto this resolution")
@click.argument("body_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.pass_context
def cmd_body_info(ctx: click.Context, resolution: int | None, body_file: Path) -> int:
    """Print the basic quantities of the body in BODY_FILE."""
    try:
        body = _load_for_inspection(body_file, resolution)
    except ValueError as e:
        return input_error(e)

    point = ", ".join(f"{x:.6g}" for x in steiner_point(body))
    click.echo(f"name: {body.name}")
    click.echo(f"dim: {body.dim}")
    click.echo(f"resolution: {body.grid.resolution}")
    click.echo(f"volume: {volume(body)!r}")
    click.echo(f"margin: {body.margin!r}")
    click.echo(f"min_s: {body.support.min()!r}")
    click.echo(f"symmetry_defect: {symmetry_defect(body.support)!r}")
    click.echo(f"steiner_point: {point}")
    return 0


@cmd_body.command("recentre")
@click.option(
    "--format",
    "file_kind",
    type=click.Choice(["grid", "fourier", "sh"]),
    default="grid",
    help="Store node values or harmonic coefficients",
)
@click.argument("body_file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.argument("output", type=click.Path(dir_okay=False, path_type=Path))
@click.pass_context
def cmd_body_recentre(ctx: click.Context, file_kind: str, body_file: Path, output: Path) -> int:
    """Translate the body so its Steiner point is the origin."""
    try:
        body = recentre(_load_for_inspection(body_file, None))
        save(body.support, output, file_kind)
    except ValueError as e:
        return input_error(e)

    ctx.obj.echo(f"Wrote recentred {body_file.stem} to {output}")
    return 0


def _load_for_inspection(path: Path, resolution: int | None) -> ConvexBody:
    if resolution is None:
        return load_body(path)
    doc_grid = load_body(path).grid
    return load_body(path, SphereGrid.create(doc_grid.dim, resolution))
