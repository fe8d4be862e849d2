# figures.py - Baked-in recipes for the published figure datasets
#
# Each recipe returns an ordered {table name: DataFrame}. Parameters come
# from FIGURE_SETTINGS; engine and run length can be overridden.

import pandas as pd

from .config import CSV_SETTINGS, FIGURE_SETTINGS, SIMULATION_SETTINGS, get_logger
from .core import DetectorPool
from .errors import InvalidArgumentError
from .solve import DtfModel, fit_poly2, speedup_curve
from .sweep import SweepSpec, parse_grid, run_dtf_curve

logger = get_logger(__name__)


def _curves(mode, family, detector_counts, deadtime, grid, nu, options):
    frames = []
    for n in detector_counts:
        spec = SweepSpec(
            mode=mode,
            engine=options['engine'],
            family=family,
            grid=grid,
            pool=DetectorPool.homogeneous(n, deadtime),
            nu=nu,
            n_events=options['n_events'],
            batches=options['batches'],
            seed=options['seed'],
        )
        frames.append(run_dtf_curve(spec, workers=options['workers']))
    return pd.concat(frames, ignore_index=True)


def _rate_rows(model, n_max, target, allow_saturation=False):
    rows = []
    for point in speedup_curve(model, target, n_max, allow_saturation=allow_saturation):
        rows.append({
            'mode': model.mode,
            'family': model.family,
            'n_detectors': point.n,
            'target_dtf': target,
            'rate': point.rate,
            'speedup': point.speedup,
            'iterations': point.iterations,
            'saturated': point.saturated,
        })
    return rows


def _solver_engine(options):
    return 'analytic' if options['engine'] == 'analytic' else 'montecarlo'


# ============================================
# CW FIGURES
# ============================================

def fig3a(options):
    """DTF vs photon rate for 1..12 multiplexed detectors, plus a 5 ns single detector."""
    grid = parse_grid(options['grid'] or FIGURE_SETTINGS['cw_grid'])
    deadtime = FIGURE_SETTINGS['deadtime']
    return {
        'multiplexed': _curves('cw', 'multiplexed', FIGURE_SETTINGS['cw_detectors'], deadtime, grid, None, options),
        'single_5ns': _curves('cw', 'single', (1,), FIGURE_SETTINGS['cw_reduced_deadtime'], grid, None, options),
    }


def fig3b(options):
    """R(DTF=10%) vs N for the multiplexed array and the tree, with quadratic fits."""
    target = FIGURE_SETTINGS['target_dtf']
    n_max = max(FIGURE_SETTINGS['cw_detectors'])

    rows = []
    fits = []
    for family in ('multiplexed', 'tree'):
        model = DtfModel(mode='cw', family=family, deadtime=FIGURE_SETTINGS['deadtime'],
                         engine=_solver_engine(options), n_events=options['n_events'],
                         batches=options['batches'], seed=options['seed'])
        family_rows = _rate_rows(model, n_max, target)
        rows.extend(family_rows)

        fit = fit_poly2((r['n_detectors'], r['rate']) for r in family_rows)
        fits.append({'family': family, 'c0': fit.c0, 'c1': fit.c1, 'c2': fit.c2,
                     'r_squared': fit.r_squared, 'degenerate': fit.degenerate})
        logger.info("fig3b %s: R^2 = %.6f", family, fit.r_squared)

    return {
        'rates': pd.DataFrame(rows, columns=CSV_SETTINGS['rate_at_dtf_columns'] + ['saturated']),
        'fit': pd.DataFrame(fits, columns=CSV_SETTINGS['fit_columns']),
    }


# ============================================
# PULSED FIGURES
# ============================================

def _pulsed_curves(nu, options):
    grid = parse_grid(options['grid'] or FIGURE_SETTINGS['pulsed_grid'])
    deadtime = FIGURE_SETTINGS['deadtime']
    reduction = FIGURE_SETTINGS['pulsed_reduction']
    return {
        'multiplexed': _curves('pulsed', 'multiplexed', FIGURE_SETTINGS['pulsed_detectors'], deadtime, grid, nu, options),
        'reduced': _curves('pulsed', 'reduced', (reduction,), deadtime, grid, nu, options),
    }


def _pulsed_rates(nu, options):
    target = FIGURE_SETTINGS['target_dtf']
    n_max = max(FIGURE_SETTINGS['pulsed_detectors'])
    rows = []
    for family in ('multiplexed', 'tree', 'reduced'):
        model = DtfModel(mode='pulsed', family=family, deadtime=FIGURE_SETTINGS['deadtime'], nu=nu,
                         engine=_solver_engine(options), n_events=options['n_events'],
                         batches=options['batches'], seed=options['seed'])
        rows.extend(_rate_rows(model, n_max, target, allow_saturation=True))
    return {'rates': pd.DataFrame(rows, columns=CSV_SETTINGS['rate_at_dtf_columns'] + ['saturated'])}


def fig5a(options):
    """DTF vs p for 1..5 detectors at 82 MHz (N_d = 4), plus the 12.5 ns detector."""
    return _pulsed_curves(FIGURE_SETTINGS['rep_rates']['a'], options)


def fig5b(options):
    """Same at 410 MHz (N_d = 20)."""
    return _pulsed_curves(FIGURE_SETTINGS['rep_rates']['b'], options)


def fig6a(options):
    """R(DTF=10%) of multiplexed, tree and reduced-deadtime setups at 82 MHz."""
    return _pulsed_rates(FIGURE_SETTINGS['rep_rates']['a'], options)


def fig6b(options):
    return _pulsed_rates(FIGURE_SETTINGS['rep_rates']['b'], options)


FIGURES = {
    'fig3a': fig3a,
    'fig3b': fig3b,
    'fig5a': fig5a,
    'fig5b': fig5b,
    'fig6a': fig6a,
    'fig6b': fig6b,
}


def build_figure(name, engine='analytic', grid=None, n_events=None, batches=None, seed=0, workers=1):
    """Tables behind figure `name`; unknown names list the valid ones."""
    if name not in FIGURES:
        raise InvalidArgumentError(f"unknown figure {name!r}; choose from {', '.join(FIGURES)}")
    options = {
        'engine': engine,
        'grid': grid,
        'n_events': SIMULATION_SETTINGS['n_events'] if n_events is None else n_events,
        'batches': SIMULATION_SETTINGS['batches'] if batches is None else batches,
        'seed': seed,
        'workers': workers,
    }
    logger.info("building %s (%s engine)", name, engine)
    return FIGURES[name](options)
