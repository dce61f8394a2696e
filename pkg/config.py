# config.py
"""Run configuration: defaults < key = value file < command-line flags."""
import logging
import re
from typing import Literal, Optional

import click
from configobj import ConfigObj, ConfigObjError
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from exceptions import InvalidValue, IoFailure, MissingRequired, UnknownKey, invalid_value_from
from kinetics import ModelParams, make_params
from simulator import Grid, SimConfig, make_sim_config

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('turing-space', 'alpha-tau', 'alpha-lx', 'heatmap-lx-tau', 'critical-tau', 'mode-switch',
               'mode-switch-tau', 'simulate', 'ttp-sweep', 'gallery')


def _split_items(text: str) -> list:
    return [item for item in re.split(r'[\s;]+', text.strip()) if item]


class RunConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra='forbid', allow_inf_nan=False)

    subcommand: Literal[SUBCOMMANDS]

    # model parameters (validated again through ModelParams)
    a: float = 0.1
    b: float = 0.9
    du: float = 0.01
    dv: float = 0.2
    lx: float = 1.0
    ly: float = 0.2
    tau: float = 0.0

    # simulation
    n: int = 101
    m: int = 101
    t_end: float = 500.0
    snapshot_stride: int = 0
    ic: Literal['random', 'eigenmode'] = 'random'
    seed: int = Field(default=0, ge=0, lt=2**64, description="Master seed")
    beta: float = 0.005
    w: float = 0.01
    t_frames: list[float] = Field(default=[130.0, 220.0])

    # sweeps and charts
    a_min: float = 0.02
    a_max: float = 1.0
    b_min: float = 0.02
    b_max: float = 1.0
    lx_min: float = 0.05
    lx_max: float = 3.0
    tau_min: float = 0.0
    tau_max: float = 2.0
    count: Optional[int] = Field(default=None, ge=2, description="Points per axis; chart default when unset")
    tau_hi: float = Field(default=1.0, gt=0)
    modes: list[tuple[int, int]] = Field(default=[(0, 0), (1, 0), (2, 0), (3, 0), (4, 0)])
    lx_list: list[float] = Field(default=[0.5, 1.0, 1.2, 1.5])
    tau_list: list[float] = Field(default=[0.0, 0.5, 1.0])
    replicates: int = Field(default=10, ge=0)
    k_cap: Optional[tuple[int, int]] = None
    audit: bool = False
    predicted_only: bool = False

    # output
    out_dir: str = 'output'
    jobs: int = 1
    show_progress: bool = True

    @field_validator('t_frames', 'lx_list', 'tau_list', mode='before')
    @classmethod
    def _parse_number_list(cls, value):
        if isinstance(value, str):
            return [float(item) for item in _split_items(value.replace(',', ' '))]
        return value

    @field_validator('modes', mode='before')
    @classmethod
    def _parse_modes(cls, value):
        if isinstance(value, str):
            return [tuple(int(k) for k in item.split(',')) for item in _split_items(value)]
        return value

    @field_validator('k_cap', mode='before')
    @classmethod
    def _parse_cap(cls, value):
        if isinstance(value, str):
            parts = [int(k) for k in value.split(',')]
            return (parts[0], parts[0]) if len(parts) == 1 else tuple(parts)
        if isinstance(value, int):
            return (value, value)
        return value

    def model_params(self) -> ModelParams:
        return make_params(a=self.a, b=self.b, d_u=self.du, d_v=self.dv, L_x=self.lx, L_y=self.ly, tau=self.tau)

    def grid(self) -> Grid:
        try:
            return Grid(n=self.n, m=self.m)
        except ValidationError as e:
            raise invalid_value_from(e, "grid") from e

    def sim_config(self) -> SimConfig:
        return make_sim_config(params=self.model_params(), grid=self.grid(), t_end=self.t_end,
                               snapshot_stride=self.snapshot_stride, snapshot_times=tuple(self.t_frames),
                               ic_kind=self.ic, seed=self.seed, beta=self.beta, w=self.w, k_cap=self.k_cap)


FIELD_NAMES = set(RunConfig.model_fields) - {'subcommand'}


# --- Flags shared by every subcommand ---

RUN_OPTIONS = [
    click.option('--config', 'config_file', type=click.Path(dir_okay=False), default=None,
                 help='key = value file; flags override it.'),
    click.option('--a', type=float, default=None),
    click.option('--b', type=float, default=None),
    click.option('--du', type=float, default=None),
    click.option('--dv', type=float, default=None),
    click.option('--lx', type=float, default=None),
    click.option('--ly', type=float, default=None),
    click.option('--tau', type=float, default=None),
    click.option('--n', type=int, default=None, help='Grid points along x.'),
    click.option('--m', type=int, default=None, help='Grid points along y.'),
    click.option('--t-end', type=float, default=None),
    click.option('--snapshot-stride', type=int, default=None),
    click.option('--ic', type=click.Choice(['random', 'eigenmode']), default=None),
    click.option('--seed', type=int, default=None),
    click.option('--beta', type=float, default=None),
    click.option('--w', type=float, default=None),
    click.option('--t-frames', type=str, default=None, help='Frame times, e.g. "130 220".'),
    click.option('--a-min', type=float, default=None),
    click.option('--a-max', type=float, default=None),
    click.option('--b-min', type=float, default=None),
    click.option('--b-max', type=float, default=None),
    click.option('--lx-min', type=float, default=None),
    click.option('--lx-max', type=float, default=None),
    click.option('--tau-min', type=float, default=None),
    click.option('--tau-max', type=float, default=None),
    click.option('--count', type=int, default=None, help='Points per axis.'),
    click.option('--tau-hi', type=float, default=None),
    click.option('--modes', type=str, default=None, help='Modes as "kx,ky kx,ky ...".'),
    click.option('--lx-list', type=str, default=None),
    click.option('--tau-list', type=str, default=None),
    click.option('--replicates', type=int, default=None),
    click.option('--k-cap', type=str, default=None, help='Inclusive caps "kx,ky".'),
    click.option('--audit', is_flag=True, default=False, help='Check every root with the argument principle.'),
    click.option('--predicted-only', is_flag=True, default=False, help='Skip simulations in ttp-sweep.'),
    click.option('--out-dir', type=click.Path(file_okay=False), default=None),
    click.option('--jobs', type=int, default=None, help='Parallel workers.'),
    click.option('--no-progress', is_flag=True, default=False, help='Hide progress bars.'),
]


def run_options(func):
    for option in reversed(RUN_OPTIONS):
        func = option(func)
    return func


# --- Files and merging ---

def load_config_file(path: str) -> dict:
    try:
        parsed = ConfigObj(path, file_error=True, list_values=False, encoding='utf-8')
    except (IOError, OSError) as e:
        raise IoFailure(f"Could not read config file {path}: {e}") from e
    except ConfigObjError as e:
        raise InvalidValue(f"Malformed config file {path}: {e}") from e

    values = {}
    for key, value in parsed.items():
        name = key.strip().replace('-', '_')
        if name not in FIELD_NAMES or isinstance(value, dict):
            raise UnknownKey(f"Unknown key '{key}' in {path}")
        values[name] = value
    return values


def build_run_config(subcommand: Optional[str], flags: dict, config_file: Optional[str] = None) -> RunConfig:
    """Merge defaults, file entries and flags (None means not given), then validate."""
    if not subcommand:
        raise MissingRequired("A subcommand is required")
    if subcommand not in SUBCOMMANDS:
        raise UnknownKey(f"Unknown subcommand '{subcommand}'")

    values = load_config_file(config_file) if config_file else {}
    flags = dict(flags)
    if flags.pop('no_progress', False):
        flags['show_progress'] = False
    for key, value in flags.items():
        # unset options arrive as None, unset on/off flags as False
        if value is None or value is False:
            continue
        if key not in FIELD_NAMES:
            raise UnknownKey(f"Unknown option '{key}'")
        values[key] = value
    try:
        config = RunConfig(subcommand=subcommand, **values)
    except ValidationError as e:
        raise invalid_value_from(e, "run configuration") from e

    config.model_params()
    config.sim_config()
    logger.debug(f"Run configuration: {config.model_dump()}")
    return config


@click.command(context_settings={'ignore_unknown_options': False})
@run_options
def _flag_parser(**flags):
    return flags


def parse_config(argv: list, config_file: Optional[str] = None) -> RunConfig:
    """Parse `<subcommand> [--flag value ...]` into a validated RunConfig."""
    argv = list(argv)
    if not argv or argv[0].startswith('-'):
        raise MissingRequired("A subcommand is required")
    subcommand, rest = argv[0], argv[1:]
    if subcommand not in SUBCOMMANDS:
        raise UnknownKey(f"Unknown subcommand '{subcommand}'")
    try:
        flags = _flag_parser.main(args=rest, prog_name=subcommand, standalone_mode=False)
    except click.NoSuchOption as e:
        raise UnknownKey(str(e)) from e
    except click.ClickException as e:
        raise InvalidValue(e.format_message()) from e
    config_file = flags.pop('config_file') or config_file
    return build_run_config(subcommand, flags, config_file)
