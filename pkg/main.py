# main.py
"""Command-line front end: `python main.py <subcommand> [--flag value ...]`."""
import logging
import os

import click
import numpy as np
import pandas as pd

import charts
import simulator
import ttp_analysis
from config import RunConfig, build_run_config, run_options
from exceptions import IoFailure, LiModelError
from pattern_analyzer import classify_pattern
from run_manager import RunLogManager
from writers import write_contours_csv, write_csv, write_params_sidecar, write_pgm16, write_ppm

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
HANDLERS = {}


def _sidecar_settings(config: RunConfig) -> dict:
    settings = config.model_dump(exclude={'subcommand'})
    settings['modes'] = ' '.join(f"{kx},{ky}" for kx, ky in config.modes)
    settings['k_cap'] = f"{config.k_cap[0]},{config.k_cap[1]}" if config.k_cap else None
    for key in ('t_frames', 'lx_list', 'tau_list'):
        settings[key] = ' '.join(repr(v) for v in settings[key])
    return settings


class _Outputs:
    """Collects output paths of one run; every data file gets a params sidecar."""

    def __init__(self, config: RunConfig, run_id: str):
        self.config = config
        self.run_id = run_id
        self.files = []

    def path(self, suffix: str) -> str:
        return os.path.join(self.config.out_dir, f"{self.config.subcommand}_{self.run_id[:8]}_{suffix}")

    def add(self, path: str, sidecar: bool = True):
        self.files.append(path)
        if sidecar:
            self.files.append(write_params_sidecar(path, _sidecar_settings(self.config),
                                                   comments=[f"generated by {self.config.subcommand}"]))
        return path

    def frame(self, frame: pd.DataFrame, suffix: str):
        path = self.path(suffix)
        try:
            os.makedirs(os.path.dirname(path) or '.', exist_ok=True)
            frame.to_csv(path, index=False, float_format='%.17g')
        except OSError as e:
            raise IoFailure(f"Could not write {path}: {e}") from e
        return self.add(path)


def _options(config: RunConfig) -> dict:
    return {'jobs': config.jobs, 'show_progress': config.show_progress}


def _count(config: RunConfig, default: int) -> int:
    return config.count or default


# --- Handlers ---

def handler(name):
    def register(func):
        HANDLERS[name] = func
        return func
    return register


@handler('turing-space')
def _turing_space(config: RunConfig, out: _Outputs):
    count = _count(config, charts.DEFAULTS['HEATMAP_POINTS'])
    chart = charts.turing_space(config.model_params(), charts.make_axis('a', config.a_min, config.a_max, count),
                                charts.make_axis('b', config.b_min, config.b_max, count),
                                audit=config.audit, **_options(config))
    out.add(write_csv(chart, out.path('alpha.csv')))
    out.add(write_ppm(chart, out.path('alpha.ppm')))
    for name, layer in chart.layers.items():
        out.add(write_csv(charts.ScalarChart(x_axis=chart.x_axis, y_axis=chart.y_axis, values=layer),
                          out.path(f'{name}.csv')))
    for name, polylines in chart.contours.items():
        out.add(write_contours_csv(polylines, out.path(f'contour_{name}.csv')))
    if chart.meta['dominant_mode_changes']:
        out.frame(pd.DataFrame(chart.meta['dominant_mode_changes']), 'mode_changes.csv')
    click.echo(f"alpha = 0 contour: {len(chart.contours['alpha'])} polylines; "
               f"alpha_00 = 0 contour: {len(chart.contours['alpha_00'])} polylines")


@handler('alpha-tau')
def _alpha_tau(config: RunConfig, out: _Outputs):
    axis = charts.make_axis('tau', config.tau_min, config.tau_max, _count(config, charts.DEFAULTS['CURVE_POINTS']))
    chart = charts.alpha_vs_tau(config.model_params(), axis, audit=config.audit, **_options(config))
    out.add(write_csv(chart, out.path('alpha.csv')))


@handler('alpha-lx')
def _alpha_lx(config: RunConfig, out: _Outputs):
    axis = charts.make_axis('L_x', config.lx_min, config.lx_max, _count(config, charts.DEFAULTS['CURVE_POINTS']))
    curves = charts.alpha_vs_Lx(config.model_params(), config.modes, axis, audit=config.audit, **_options(config))
    out.add(write_csv(curves, out.path('modes.csv')))
    rows = [{'mode': f"{m.k_x},{m.k_y}", 'Lx': x} for m, xs in curves.collisions.items() for x in xs]
    out.frame(pd.DataFrame(rows, columns=['mode', 'Lx']), 'collisions.csv')


@handler('heatmap-lx-tau')
def _heatmap(config: RunConfig, out: _Outputs):
    count = _count(config, charts.DEFAULTS['HEATMAP_POINTS'])
    chart = charts.heatmap_Lx_tau(config.model_params(), charts.make_axis('L_x', config.lx_min, config.lx_max, count),
                                  charts.make_axis('tau', config.tau_min, config.tau_max, count),
                                  audit=config.audit, **_options(config))
    out.add(write_csv(chart, out.path('alpha.csv')))
    out.add(write_ppm(chart, out.path('alpha.ppm')))


@handler('critical-tau')
def _critical_tau(config: RunConfig, out: _Outputs):
    tau_star = charts.critical_tau(config.model_params(), config.tau_hi, **_options(config))
    out.frame(pd.DataFrame([{'tau_critical': tau_star}]), 'critical.csv')
    click.echo(f"critical tau = {tau_star:.5f}")


def _write_switches(switches: list, out: _Outputs, column: str):
    rows = [{column: s.at, 'mode_before': f"{s.mode_before.k_x},{s.mode_before.k_y}",
             'mode_after': f"{s.mode_after.k_x},{s.mode_after.k_y}"} for s in switches]
    out.frame(pd.DataFrame(rows, columns=[column, 'mode_before', 'mode_after']), 'switches.csv')
    for row in rows:
        click.echo(f"{column} = {row[column]:.5f}: {row['mode_before']} -> {row['mode_after']}")


@handler('mode-switch')
def _mode_switch(config: RunConfig, out: _Outputs):
    axis = charts.make_axis('L_x', config.lx_min, config.lx_max, _count(config, charts.DEFAULTS['CURVE_POINTS']))
    switches = charts.mode_switch_Lx(config.model_params(), axis, k_cap=config.k_cap, **_options(config))
    _write_switches(switches, out, 'Lx')


@handler('mode-switch-tau')
def _mode_switch_tau(config: RunConfig, out: _Outputs):
    axis = charts.make_axis('tau', config.tau_min, config.tau_max, _count(config, charts.DEFAULTS['CURVE_POINTS']))
    switches = charts.mode_switch_tau(config.model_params(), axis, k_cap=config.k_cap, **_options(config))
    _write_switches(switches, out, 'tau')


@handler('simulate')
def _simulate(config: RunConfig, out: _Outputs):
    sim = config.sim_config()
    result = simulator.run(sim, show_progress=config.show_progress)
    for snap in result.snapshots:
        out.add(write_pgm16(snap.state.u, config.out_dir, out.run_id, 'u', snap.step), sidecar=False)
        out.add(write_pgm16(snap.state.v, config.out_dir, out.run_id, 'v', snap.step), sidecar=False)
    out.add(os.path.join(config.out_dir, f"{out.run_id}_pgm_mapping.csv"))
    out.files.append(RunLogManager(config.out_dir).append_ttp(result.record))
    t_pattern = result.record.t_pattern
    click.echo(f"t_pattern = {'none' if t_pattern is None else f'{t_pattern:.4f}'}; "
               f"final pattern: {classify_pattern(result.final, sim.grid)}")


@handler('ttp-sweep')
def _ttp_sweep(config: RunConfig, out: _Outputs):
    common = dict(replicates=config.replicates, master_seed=config.seed, simulate=not config.predicted_only,
                  beta=config.beta, w=config.w, grid=config.grid(), t_end=config.t_end, **_options(config))
    params = config.model_params()

    taus = np.linspace(config.tau_min, config.tau_max, _count(config, 21))
    trend = ttp_analysis.ttp_vs_tau(params, taus, config.lx_list, **common)
    for lx, sweep in trend.sweeps.items():
        out.add(write_csv(sweep, out.path(f'tau_lx{lx:g}.csv')))
    out.frame(trend.slopes, 'slopes.csv')

    lxs = np.linspace(config.lx_min, config.lx_max, _count(config, 121))
    for tau, sweep in ttp_analysis.ttp_vs_Lx(params, lxs, config.tau_list, **common).items():
        out.add(write_csv(sweep, out.path(f'lx_tau{tau:g}.csv')))


@handler('gallery')
def _gallery(config: RunConfig, out: _Outputs):
    table = simulator.pattern_gallery(config.model_params(), config.tau_list, config.lx_list,
                                      t_frames=config.t_frames, seed=config.seed, grid=config.grid(),
                                      out_dir=config.out_dir, **_options(config))
    out.files.extend(p for p in table['snapshot'] if p)
    out.frame(table, 'gallery.csv')


# --- Commands ---

@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Debug logging.')
def cli(verbose):
    """Delayed LI Schnakenberg model: stability charts, simulations and time to pattern."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.INFO, format=LOG_FORMAT)


def _make_command(name: str, func):
    @cli.command(name, help=(func.__doc__ or name.replace('-', ' ')))
    @run_options
    def command(config_file, **flags):
        try:
            config = build_run_config(name, flags, config_file)
            manager = RunLogManager(config.out_dir)
            out = _Outputs(config, manager.new_run_id())
            logger.info(f"Starting {name} (run {out.run_id})")
            func(config, out)
            manager.save_run(name, config.model_dump(mode='json'), out.files, run_id=out.run_id)
            logger.info(f"Finished {name}: {len(out.files)} files in {config.out_dir}")
        except LiModelError as e:
            logger.error(f"{name} failed: {e}")
            raise click.ClickException(str(e)) from e
    return command


for _name, _func in HANDLERS.items():
    _make_command(_name, _func)


if __name__ == '__main__':
    cli()
