#!/usr/bin/env python3

import os.path
import sys
import json
import click
from functools import wraps
from typing import Any, Callable, Optional
from .checks import run_checks, FAILED, PASSED
from .machine import load_machine, machine_to_dict, MachineException, MachineParams
from .timedomain import SimulationException
from .utils import (
    load_config,
    rpm_to_omega_e,
    thread_count,
    ArgumentException,
    ConfigurationException,
    DegenerateOperatingPointException,
    DeltaLoopException,
    VERSION,
)
from .workbench import (
    bemf_table,
    compare_table,
    default_sweep,
    sweep_summary,
    sweep_table,
    waveform_table,
    write_csv,
    SimSettings,
    SweepSpec,
    SCALE_LINEAR,
    SCALE_LOG,
)

__all__ = ["cli"]

EXIT_VERIFICATION = 1
EXIT_VALIDATION = 2
EXIT_DEGENERATE = 3

EXIT_CODES = [
    (DegenerateOperatingPointException, EXIT_DEGENERATE),
    (MachineException, EXIT_VALIDATION),
    (ArgumentException, EXIT_VALIDATION),
    (ConfigurationException, EXIT_VALIDATION),
    (SimulationException, EXIT_VALIDATION),
]

config = load_config()


def fail(kind: str, message: str, code: int) -> None:
    "Print a single-line reason and exit"
    click.secho("Error: {}: {}".format(kind, " ".join(str(message).split())), fg="red", err=True)
    sys.exit(code)


def handle_errors(f: Callable[..., Any]) -> Callable[..., Any]:
    "Turn package errors into exit codes"

    @wraps(f)
    def wrapper(*args: Any, **kargs: Any) -> Any:
        try:
            return f(*args, **kargs)
        except DeltaLoopException as ex:
            code = next((c for cls, c in EXIT_CODES if isinstance(ex, cls)), EXIT_VALIDATION)
            fail(ex.kind, str(ex), code)

    return wrapper


def debug(ctx: click.Context, message: str) -> None:
    if ctx.obj["debug"]:
        click.secho(message, fg="cyan", err=True)


def warn(message: str) -> None:
    click.secho("Warning: " + message, fg="yellow", err=True)


def speed(value: float, params: MachineParams, rpm: bool) -> float:
    return rpm_to_omega_e(value, params.p) if rpm else value


def machine_option(f: Callable[..., Any]) -> Callable[..., Any]:
    return click.option(
        "--machine",
        default=config["MACHINE"],
        show_default=True,
        help="Machine JSON file or bundled machine name",
    )(f)


def sweep_options(f: Callable[..., Any]) -> Callable[..., Any]:
    "Add speed axis options to click commands"
    for option in reversed(
        [
            click.option("--omega-start", type=float, help="First speed (rad/s electrical, rpm with --rpm)"),
            click.option("--omega-end", type=float, help="Last speed (rad/s electrical, rpm with --rpm)"),
            click.option("--points", type=int, default=config["SWEEP__POINTS"], show_default=True),
            click.option("--log/--linear", "log_scale", default=True, help="Speed axis scale"),
            click.option("--rpm", is_flag=True, default=False, help="Speeds are mechanical rpm"),
        ]
    ):
        f = option(f)
    return f


def prepare_sweep(
    params: MachineParams,
    omega_start: Optional[float],
    omega_end: Optional[float],
    points: int,
    log_scale: bool,
    rpm: bool,
) -> SweepSpec:
    if omega_start is None and omega_end is None:
        sweep = default_sweep(params, config)
        return SweepSpec(sweep.omega_start, sweep.omega_end, points, SCALE_LOG if log_scale else SCALE_LINEAR)
    if omega_start is None or omega_end is None:
        raise ArgumentException("give both --omega-start and --omega-end")
    return SweepSpec(
        omega_start=speed(omega_start, params, rpm),
        omega_end=speed(omega_end, params, rpm),
        points=points,
        scale=SCALE_LOG if log_scale else SCALE_LINEAR,
    )


@click.group()
@click.option("--debug/--no-debug", default=False)
@click.version_option(version=VERSION)
@click.pass_context
def cli(
    ctx: click.Context,
    debug: bool,
) -> None:
    ctx.obj = {
        "debug": debug,
    }


# -----------------------------------------------------------------------------
# Waveform


@cli.command()
@machine_option
@click.option("--omega", type=float, required=True, help="Speed (rad/s electrical, rpm with --rpm)")
@click.option("--rpm", is_flag=True, default=False, help="Speed is mechanical rpm")
@click.option("--samples", type=int, default=config["SAMPLES"], show_default=True, help="Samples per cycle")
@click.option("--out", type=click.Path(), default="-", show_default=True)
@click.pass_context
@handle_errors
def waveform(ctx: click.Context, machine: str, omega: float, rpm: bool, samples: int, out: str) -> None:
    "Circulating current and torque over one electrical cycle"
    params = load_machine(machine)
    omega_e = speed(omega, params, rpm)
    debug(ctx, "waveform {} at omega_e={} rad/s, {} samples".format(machine, omega_e, samples))
    table = waveform_table(params, omega_e, samples, SimSettings.from_config(config), warn)
    with click.open_file(out, "w") as f:
        write_csv(table, f)


# -----------------------------------------------------------------------------
# Sweep


@cli.command()
@machine_option
@sweep_options
@click.option("--samples", type=int, default=config["SAMPLES"], show_default=True, help="Samples per cycle")
@click.option("--verify", is_flag=True, default=False, help="Add the time-domain mismatch column")
@click.option("--out", type=click.Path(), default="-", show_default=True)
@click.option("--summary", type=click.Path(), help="JSON summary, default <out>.json")
@click.pass_context
@handle_errors
def sweep(
    ctx: click.Context,
    machine: str,
    omega_start: Optional[float],
    omega_end: Optional[float],
    points: int,
    log_scale: bool,
    rpm: bool,
    samples: int,
    verify: bool,
    out: str,
    summary: Optional[str],
) -> None:
    "Current and torque harmonics over a speed range"
    params = load_machine(machine)
    spec = prepare_sweep(params, omega_start, omega_end, points, log_scale, rpm)
    threads = thread_count(config)
    debug(
        ctx,
        "sweep {} {}..{} rad/s".format(machine, spec.omega_start, spec.omega_end)
        + ", {} points, {} threads".format(points, threads),
    )
    table = sweep_table(params, spec, samples, verify, SimSettings.from_config(config), threads, warn)
    with click.open_file(out, "w") as f:
        write_csv(table, f)
    if summary is None and out != "-":
        summary = os.path.splitext(out)[0] + ".json"
    if summary is not None:
        with click.open_file(summary, "w") as f:
            json.dump(sweep_summary(params, spec, table), f, indent=2, sort_keys=True)
            f.write("\n")


# -----------------------------------------------------------------------------
# Back-EMF


@cli.command()
@machine_option
@click.option("--omega", type=float, required=True, help="Speed (rad/s electrical, rpm with --rpm)")
@click.option("--rpm", is_flag=True, default=False, help="Speed is mechanical rpm")
@click.option("--samples", type=int, default=config["SAMPLES"], show_default=True, help="Samples per cycle")
@click.option("--out", type=click.Path(), default="-", show_default=True)
@click.pass_context
@handle_errors
def bemf(ctx: click.Context, machine: str, omega: float, rpm: bool, samples: int, out: str) -> None:
    "Back-EMF orders of one winding, star and delta terminals"
    params = load_machine(machine)
    omega_e = speed(omega, params, rpm)
    if omega_e <= 0:
        raise DegenerateOperatingPointException("omega_e must be > 0, got {!r}".format(omega_e))
    debug(ctx, "bemf {} at omega_e={} rad/s".format(machine, omega_e))
    with click.open_file(out, "w") as f:
        write_csv(bemf_table(params, omega_e, samples), f)


# -----------------------------------------------------------------------------
# Star / delta comparison


@cli.command()
@machine_option
@sweep_options
@click.option("--samples", type=int, default=config["SAMPLES"], show_default=True, help="Samples per cycle")
@click.option("--out", type=click.Path(), default="-", show_default=True)
@click.pass_context
@handle_errors
def compare(
    ctx: click.Context,
    machine: str,
    omega_start: Optional[float],
    omega_end: Optional[float],
    points: int,
    log_scale: bool,
    rpm: bool,
    samples: int,
    out: str,
) -> None:
    "Circulating current torque of the machine in star and in delta"
    params = load_machine(machine)
    spec = prepare_sweep(params, omega_start, omega_end, points, log_scale, rpm)
    debug(ctx, "compare {} {}..{} rad/s".format(machine, spec.omega_start, spec.omega_end))
    with click.open_file(out, "w") as f:
        write_csv(compare_table(params, [float(x) for x in spec.omegas()], samples), f)


# -----------------------------------------------------------------------------
# Verify


@cli.command()
@machine_option
@sweep_options
@click.option("--samples", type=int, default=config["SAMPLES"], show_default=True, help="Samples per cycle")
@click.option("--out", type=click.Path(), default="-", show_default=True, help="JSON report")
@click.pass_context
@handle_errors
def verify(
    ctx: click.Context,
    machine: str,
    omega_start: Optional[float],
    omega_end: Optional[float],
    points: int,
    log_scale: bool,
    rpm: bool,
    samples: int,
    out: str,
) -> None:
    "Run the invariant suite, exit 1 when any check fails"
    params = load_machine(machine)
    spec = prepare_sweep(params, omega_start, omega_end, points, log_scale, rpm)
    checks = run_checks(
        params, spec, samples, SimSettings.from_config(config), progress=lambda name: debug(ctx, "check " + name)
    )
    for check in checks:
        color = {PASSED: "green", FAILED: "red"}.get(check.status, "yellow")
        click.secho("{:<20} {:<8} {}".format(check.name, check.status, check.detail), fg=color, err=True)
    report = {
        "machine": machine_to_dict(params),
        "sweep": {
            "omega_start": spec.omega_start,
            "omega_end": spec.omega_end,
            "points": spec.points,
            "scale": spec.scale,
        },
        "passed": all(x.status != FAILED for x in checks),
        "checks": [x.to_dict() for x in checks],
    }
    with click.open_file(out, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")
    failed = [x.name for x in checks if x.status == FAILED]
    if failed:
        fail("verification", "check {} failed".format(", ".join(failed)), EXIT_VERIFICATION)


if __name__ == "__main__":
    cli()
