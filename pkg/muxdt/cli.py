# cli.py - Command-line front end: sweeps, rate solving, figure datasets, self-checks

import json
import math
import os
import sys

import click
import numpy as np
import pandas as pd
import toml
from rich.console import Console
from rich.table import Table
from scipy import integrate

from . import dist
from .config import CSV_SETTINGS, ENGINES, EXIT_CODES, FAMILIES, MODES, SIMULATION_SETTINGS, default_seed, get_logger
from .core import DetectorPool
from .errors import BracketError, InvalidArgumentError, ModelError, SelfCheckError
from .figures import FIGURES, build_figure
from .sweep import SweepSpec, parse_grid, run_dtf_curve, run_rate_at_dtf

logger = get_logger(__name__)

IDENTITY_TOLERANCE = 1e-12
INTEGRAL_TOLERANCE = 1e-10

# flag names whose parameter is named differently
_CONFIG_ALIASES = {'n': 'n_detectors', 'json': 'as_json'}


# ============================================
# EXIT CODES
# ============================================

class MuxdtGroup(click.Group):
    """Maps library errors onto the documented exit statuses."""

    def main(self, args=None, prog_name=None, complete_var=None, standalone_mode=True, **extra):
        try:
            rv = super().main(args=args, prog_name=prog_name, complete_var=complete_var,
                              standalone_mode=False, **extra)
        except click.ClickException as e:
            e.show()
            sys.exit(EXIT_CODES['usage'])
        except click.Abort:
            click.echo("Aborted!", err=True)
            sys.exit(EXIT_CODES['usage'])
        except InvalidArgumentError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_CODES['usage'])
        except BracketError as e:
            click.echo(f"Error: {e}", err=True)
            if e.dtf_range is not None:
                lo, hi = e.bracket
                click.echo(f"probed DTF range: [{e.dtf_range[0]:.6g}, {e.dtf_range[1]:.6g}] "
                           f"over [{lo:.6g}, {hi:.6g}]", err=True)
            sys.exit(EXIT_CODES['numerical'])
        except ModelError as e:
            click.echo(f"Error: {e}", err=True)
            sys.exit(EXIT_CODES['numerical'])
        except SelfCheckError as e:
            click.echo(f"Error: {e}", err=True)
            for failure in e.failures:
                click.echo(f"  failed: {failure}", err=True)
            sys.exit(EXIT_CODES['self_check'])

        code = rv if isinstance(rv, int) else EXIT_CODES['ok']
        if standalone_mode:
            sys.exit(code)
        return code


# ============================================
# SHARED OPTIONS
# ============================================

def _load_config(ctx, param, value):
    """Flat TOML file whose keys mirror the flag names; flags still win."""
    if not value:
        return
    try:
        data = toml.load(value)
    except (OSError, toml.TomlDecodeError) as e:
        raise click.BadParameter(f"cannot read {value}: {e}", ctx=ctx, param=param) from e
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise click.BadParameter(f"config keys must be flat, found tables {nested}", ctx=ctx, param=param)
    defaults = {}
    for key, val in data.items():
        name = key.replace('-', '_')
        defaults[_CONFIG_ALIASES.get(name, name)] = val
    ctx.default_map = {**(ctx.default_map or {}), **defaults}
    logger.debug("loaded %d settings from %s", len(defaults), value)


def config_option(f):
    return click.option('--config', type=click.Path(exists=True, dir_okay=False), callback=_load_config,
                        is_eager=True, expose_value=False, help="TOML file of flag defaults.")(f)


def run_options(f):
    """Monte Carlo run length, seed and workers."""
    options = [
        click.option('--n-events', type=int, default=SIMULATION_SETTINGS['n_events'], show_default=True,
                     help="Photons (cw) or pulses (pulsed) per Monte Carlo point."),
        click.option('--batches', type=int, default=SIMULATION_SETTINGS['batches'], show_default=True),
        click.option('--seed', type=int, default=default_seed, help="Base seed [default: $MUXDT_SEED or 0]."),
        click.option('--workers', type=int, default=SIMULATION_SETTINGS['workers'], show_default=True),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def model_options(f):
    options = [
        click.option('--mode', type=click.Choice(MODES), required=True),
        click.option('--family', type=click.Choice(FAMILIES), default='multiplexed', show_default=True),
        click.option('--n', 'n_detectors', type=int, default=1, show_default=True,
                     help="Detectors in the pool (or tree fan-out / deadtime reduction factor)."),
        click.option('--deadtime', type=float, default=50e-9, show_default=True, help="Deadtime in seconds."),
        click.option('--deadtimes', default=None,
                     help="Comma-separated per-detector deadtimes (s); overrides --n and --deadtime."),
        click.option('--nu', type=float, default=None, help="Pulse repetition rate in Hz (pulsed mode)."),
    ]
    for option in reversed(options):
        f = option(f)
    return f


def output_options(f):
    f = click.option('--json', 'as_json', is_flag=True, help="Emit a JSON records array instead of CSV.")(f)
    f = click.option('--output', type=click.Path(dir_okay=False), default=None, help="Write to a file.")(f)
    return f


def _build_pool(n_detectors, deadtime, deadtimes):
    if deadtimes:
        try:
            values = [float(t) for t in deadtimes.split(',') if t.strip()]
        except ValueError as e:
            raise click.BadParameter(f"cannot parse deadtimes {deadtimes!r}", param_hint='--deadtimes') from e
        return DetectorPool(tuple(values))
    return DetectorPool.homogeneous(n_detectors, deadtime)


def _records(df):
    clean = df.astype(object).where(pd.notna(df), None)
    return clean.to_dict(orient='records')


def _json_default(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"not JSON serializable: {type(value).__name__}")


def render(df, as_json=False):
    if as_json:
        return json.dumps(_records(df), indent=2, default=_json_default) + "\n"
    return df.to_csv(index=False, float_format=CSV_SETTINGS['float_format'], lineterminator="\n")


def emit(df, output=None, as_json=False):
    text = render(df, as_json)
    if output:
        with open(output, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        logger.info("wrote %d rows to %s", len(df), output)
    else:
        click.echo(text, nl=False)


# ============================================
# COMMANDS
# ============================================

@click.group(cls=MuxdtGroup)
def cli():
    """Deadtime fraction of multiplexed photon-counting detector arrays."""


@cli.command('dtf-curve')
@config_option
@model_options
@click.option('--engine', type=click.Choice(ENGINES), default='analytic', show_default=True)
@click.option('--grid', default=None, help="kind:start:stop:points, kind = log or lin.")
@run_options
@output_options
def cmd_dtf_curve(mode, family, n_detectors, deadtime, deadtimes, nu, engine, grid,
                  n_events, batches, seed, workers, output, as_json):
    """DTF over a grid of rates (cw) or per-pulse probabilities (pulsed)."""
    spec = SweepSpec(
        mode=mode,
        engine=engine,
        family=family,
        grid=parse_grid(grid),
        pool=_build_pool(n_detectors, deadtime, deadtimes),
        nu=nu,
        n_events=n_events,
        batches=batches,
        seed=seed,
    )
    emit(run_dtf_curve(spec, workers=workers), output, as_json)


@cli.command('rate-at-dtf')
@config_option
@model_options
@click.option('--engine', type=click.Choice(('analytic', 'montecarlo')), default='analytic', show_default=True)
@click.option('--target', type=float, default=0.10, show_default=True, help="Target DTF in (0, 1).")
@click.option('--allow-saturation', is_flag=True,
              help="Report rate nu when a pulsed pool never reaches the target.")
@run_options
@output_options
def cmd_rate_at_dtf(mode, family, n_detectors, deadtime, deadtimes, nu, engine, target, allow_saturation,
                    n_events, batches, seed, workers, output, as_json):
    """Incident rate at which the DTF reaches --target, with the speedup over one detector."""
    spec = SweepSpec(
        mode=mode,
        engine=engine,
        family=family,
        grid=None,
        pool=_build_pool(n_detectors, deadtime, deadtimes),
        nu=nu,
        n_events=n_events,
        batches=batches,
        seed=seed,
    )
    emit(run_rate_at_dtf(spec, target, allow_saturation=allow_saturation), output, as_json)


@cli.command('figure')
@click.argument('name', type=click.Choice(list(FIGURES)))
@config_option
@click.option('--engine', type=click.Choice(ENGINES), default='analytic', show_default=True)
@click.option('--grid', default=None, help="Override the figure's default grid.")
@run_options
@click.option('--output-dir', type=click.Path(file_okay=False), default=None,
              help="Write <dir>/<table>.csv instead of printing.")
@click.option('--json', 'as_json', is_flag=True)
def cmd_figure(name, engine, grid, n_events, batches, seed, workers, output_dir, as_json):
    """Reproduce the dataset(s) behind a published figure."""
    tables = build_figure(name, engine=engine, grid=grid, n_events=n_events, batches=batches,
                          seed=seed, workers=workers)
    suffix = 'json' if as_json else 'csv'
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
    for table, df in tables.items():
        if output_dir:
            emit(df, os.path.join(output_dir, f"{table}.{suffix}"), as_json)
        else:
            click.echo(f"# {table}")
            emit(df, None, as_json)


# ============================================
# SELF-CHECK
# ============================================

def _identity_rows(fault=0.0):
    """(check, k, N, p, residual) over 1 <= k <= N <= 10 and p = 0.1..0.9, 1."""
    rows = []
    probabilities = [round(0.1 * i, 1) for i in range(1, 10)] + [1.0]
    for n_pulses in range(1, 11):
        for p in probabilities:
            enumerated = dist.enumerate_count_distribution(n_pulses, p)
            for k in range(1, n_pulses + 1):
                residual = dist.geometric_binomial_identity_residual(k, n_pulses, p) + fault
                rows.append(('identity', k, n_pulses, p, residual))
                rows.append(('enumeration', k, n_pulses, p, enumerated[k] - dist.binomial_pmf(k, n_pulses, p) + fault))
    return rows


def _normalization_rows(fault=0.0):
    rows = []
    for p in (0.05, 0.5, 1.0):
        for n_d in (1, 4, 20):
            pmfs = dist.pulsed_interarrival_pmfs(p, n_d)
            handoff = math.fsum(pmfs.handoff(n) for n in range(1, n_d + 1))
            head = math.fsum(pmfs.refire(n) for n in range(n_d + 1, n_d + 51))
            refire = head + pmfs.refire_tail(n_d + 51)
            rows.append(('pulsed_handoff_sum', n_d, None, p, handoff - 1.0 + fault))
            rows.append(('pulsed_refire_sum', n_d, None, p, refire - 1.0 + fault))

    for lam, t_d in ((1.0, 0.1), (1.0, 1.0), (1.0, 5.0)):
        dens = dist.cw_interarrival_densities(lam, t_d)
        refire, _ = integrate.quad(dens.refire, t_d, np.inf, epsabs=INTEGRAL_TOLERANCE)
        handoff, _ = integrate.quad(dens.handoff, 0.0, t_d, epsabs=INTEGRAL_TOLERANCE)
        rows.append(('cw_refire_integral', None, None, lam * t_d, refire - 1.0 + fault))
        rows.append(('cw_handoff_integral', None, None, lam * t_d, handoff - 1.0 + fault))
    return rows


@cli.command('dist-check')
@click.option('--inject-fault', is_flag=True, hidden=True)
def cmd_dist_check(inject_fault):
    """Check the geometric-binomial identity and the inter-arrival normalizations."""
    fault = 1e-9 if inject_fault else 0.0
    identity = _identity_rows(fault)
    normalization = _normalization_rows(fault)

    failures = [r for r in identity if not abs(r[4]) < IDENTITY_TOLERANCE]
    failures += [r for r in normalization
                 if not abs(r[4]) < (INTEGRAL_TOLERANCE if r[0].startswith('cw_') else IDENTITY_TOLERANCE)]

    table = Table(title="distribution self-check")
    table.add_column("check")
    table.add_column("cases", justify="right")
    table.add_column("max |residual|", justify="right")
    table.add_column("status")
    checks = {}
    for row in identity + normalization:
        checks.setdefault(row[0], []).append(abs(row[4]))
    failed_checks = {r[0] for r in failures}
    for check, residuals in checks.items():
        status = "[red]FAIL[/red]" if check in failed_checks else "[green]ok[/green]"
        table.add_row(check, str(len(residuals)), f"{max(residuals):.3e}", status)
    Console().print(table)

    if failures:
        described = [
            f"{check} k={k} N={n} p={p} residual={res:.3e}" if n is not None
            else f"{check} arg={k if k is not None else p} residual={res:.3e}"
            for check, k, n, p, res in failures
        ]
        raise SelfCheckError(f"{len(failures)} distribution checks failed", failures=described)
    click.echo(f"all {len(identity) + len(normalization)} checks passed")


def main():
    cli()
