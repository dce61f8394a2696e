import json
import os
import uuid
from datetime import datetime
import logging

import pandas as pd

from exceptions import IoFailure

logger = logging.getLogger(__name__)

RUN_LOG_COLUMNS = ['seed', 'ic_kind', 'a', 'b', 'du', 'dv', 'Lx', 'Ly', 'tau', 'n', 'm', 'dt', 't_pattern']


class RunLogManager:
    def __init__(self, out_dir='output', index_file='runs_index.json', log_file='run_log.csv'):
        self.out_dir = out_dir
        self.index_file = os.path.join(out_dir, index_file)
        self.log_file = os.path.join(out_dir, log_file)
        self._ensure_file_exists()

    def _ensure_file_exists(self):
        try:
            os.makedirs(self.out_dir, exist_ok=True)
            if not os.path.exists(self.index_file):
                with open(self.index_file, 'w', encoding='utf-8') as f:
                    json.dump([], f)
        except OSError as e:
            raise IoFailure(f"Could not create run index in {self.out_dir}: {e}") from e

    def _load_index(self):
        try:
            with open(self.index_file, 'r', encoding='utf-8') as f:
                data = json.load(f)
                if isinstance(data, list):
                    return data
                return []
        except (json.JSONDecodeError, FileNotFoundError):
            logger.warning(f"Run index {self.index_file} unreadable, starting a new one")
            return []

    def _save_index(self, runs):
        try:
            with open(self.index_file, 'w', encoding='utf-8') as f:
                json.dump(runs, f, indent=2)
        except OSError as e:
            raise IoFailure(f"Could not write {self.index_file}: {e}") from e

    def new_run_id(self) -> str:
        return str(uuid.uuid4())

    def get_runs(self):
        # newest first
        runs = self._load_index()
        runs.sort(key=lambda x: x.get('timestamp', ''), reverse=True)
        return runs

    def save_run(self, subcommand, config, files, run_id=None):
        runs = self._load_index()
        date_str = datetime.now().strftime("%b %d, %Y %H:%M")

        new_run = {
            'id': run_id or self.new_run_id(),
            'title': f"{subcommand} - {date_str}",
            'timestamp': datetime.now().isoformat(),
            'config': config,
            'files': list(files),
        }
        runs.append(new_run)
        self._save_index(runs)
        logger.info(f"Recorded run {new_run['id']} ({len(new_run['files'])} files)")
        return new_run

    def get_run(self, run_id):
        for run in self._load_index():
            if run['id'] == run_id:
                return run
        return None

    def append_ttp(self, record):
        """Append one simulation's TTPRecord to the run-log CSV."""
        sim = record.config
        params = sim['params']
        row = {
            'seed': sim['seed'], 'ic_kind': sim['ic_kind'],
            'a': params['a'], 'b': params['b'], 'du': params['d_u'], 'dv': params['d_v'],
            'Lx': params['L_x'], 'Ly': params['L_y'], 'tau': params['tau'],
            'n': sim['grid']['n'], 'm': sim['grid']['m'], 'dt': record.dt,
            't_pattern': 'none' if record.t_pattern is None else record.t_pattern,
        }
        frame = pd.DataFrame([row], columns=RUN_LOG_COLUMNS)
        try:
            frame.to_csv(self.log_file, mode='a', index=False, header=not os.path.exists(self.log_file),
                         float_format='%.17g')
        except OSError as e:
            raise IoFailure(f"Could not append to {self.log_file}: {e}") from e
        return self.log_file

    def read_run_log(self) -> pd.DataFrame:
        if not os.path.exists(self.log_file):
            return pd.DataFrame(columns=RUN_LOG_COLUMNS)
        return pd.read_csv(self.log_file)
