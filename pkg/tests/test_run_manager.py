import json

from kinetics import make_params
from run_manager import RUN_LOG_COLUMNS, RunLogManager
from simulator import Grid, TTPRecord, make_sim_config


def _record(t_pattern):
    config = make_sim_config(params=make_params(L_x=1.5, tau=0.5), grid=Grid(n=11, m=7), seed=4)
    return TTPRecord(t_pattern=t_pattern, crossing_norm=None, dt=0.001, config=config.model_dump(mode='json'))


def test_index_is_created(tmp_path):
    RunLogManager(str(tmp_path / 'out'))
    assert json.loads((tmp_path / 'out' / 'runs_index.json').read_text()) == []


def test_runs_are_listed_newest_first(tmp_path):
    manager = RunLogManager(str(tmp_path))
    first = manager.save_run('alpha-tau', {'tau_max': 2.0}, ['a.csv'])
    second = manager.save_run('simulate', {'seed': 1}, ['b.pgm', 'c.pgm'], run_id='fixed-id')
    assert second['id'] == 'fixed-id'
    assert [r['id'] for r in manager.get_runs()] == ['fixed-id', first['id']]
    assert manager.get_run('fixed-id')['files'] == ['b.pgm', 'c.pgm']
    assert manager.get_run('missing') is None


def test_corrupt_index_reads_as_empty(tmp_path):
    manager = RunLogManager(str(tmp_path))
    (tmp_path / 'runs_index.json').write_text('{not json')
    assert manager.get_runs() == []


def test_ttp_rows_are_appended(tmp_path):
    manager = RunLogManager(str(tmp_path))
    manager.append_ttp(_record(12.5))
    manager.append_ttp(_record(None))
    log = manager.read_run_log()
    assert list(log.columns) == RUN_LOG_COLUMNS
    assert len(log) == 2
    assert log.loc[0, 'ic_kind'] == 'random'
    assert (log.loc[0, 'Lx'], log.loc[0, 'tau'], log.loc[0, 'n'], log.loc[0, 'm']) == (1.5, 0.5, 11, 7)
    assert str(log.loc[0, 't_pattern']) == '12.5'
    assert str(log.loc[1, 't_pattern']) == 'none'


def test_empty_run_log(tmp_path):
    assert list(RunLogManager(str(tmp_path)).read_run_log().columns) == RUN_LOG_COLUMNS
