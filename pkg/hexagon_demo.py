# hexagon_demo.py
# Long-horizon self-organisation at (a, b) = (0.1, 1.5): final frames and their
# morphology for several domain widths. Outcomes depend on the seed.

import json
import os
import logging

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger('hexagon_demo')

from exceptions import LiModelError
from kinetics import make_params
from pattern_analyzer import classify_pattern
from seeded_rng import derive_seed
from simulator import Grid, make_sim_config, run
from writers import write_pgm16

# --- Configuration ---
DEMO_PARAMS = {"a": 0.1, "b": 1.5, "d_u": 0.01, "d_v": 0.2, "L_y": 3.0, "tau": 0.0}
LX_VALUES = [0.5, 1.0, 2.0, 3.0]
SEEDS_PER_WIDTH = 3
MASTER_SEED = 2024
T_END = 1000.0
GRID = Grid(n=101, m=101)

OUTPUT_DIR = 'hexagon_demo_output'
SUMMARY_FILE = 'hexagon_demo_summary.json'


def run_demo():
    os.makedirs(OUTPUT_DIR, exist_ok=True)
    summary = []

    for i, lx in enumerate(LX_VALUES):
        params = make_params(L_x=lx, **DEMO_PARAMS)
        for r in range(SEEDS_PER_WIDTH):
            seed = derive_seed(MASTER_SEED, i * SEEDS_PER_WIDTH + r)
            logger.info(f"--- L_x={lx}, seed {r + 1}/{SEEDS_PER_WIDTH} ---")
            try:
                config = make_sim_config(params=params, grid=GRID, t_end=T_END, seed=seed)
                result = run(config)
                pattern = classify_pattern(result.final, GRID)
                frame = write_pgm16(result.final.u, OUTPUT_DIR, f"hex_lx{lx:g}_r{r}", 'u',
                                    result.snapshots[-1].step)
                summary.append({"Lx": lx, "seed": seed, "t_pattern": result.record.t_pattern,
                                "pattern": pattern, "frame": frame})
                logger.info(f"    > {pattern} (t_pattern={result.record.t_pattern})")
            except LiModelError as e:
                summary.append({"Lx": lx, "seed": seed, "error": str(e)})
                logger.error(f"    > Run FAILED: {e}")

    path = os.path.join(OUTPUT_DIR, SUMMARY_FILE)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(summary, f, indent=4)
    logger.info(f"Summary saved to '{path}' ({len(summary)} runs).")


if __name__ == "__main__":
    run_demo()
