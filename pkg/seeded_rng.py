# seeded_rng.py
"""splitmix64 stream: identical seed, identical doubles, on every platform.

    state += 0x9E3779B97F4A7C15
    z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * 0x94D049BB133111EB
    z = z ^ (z >> 31)

Doubles come from the top 53 bits, u = (z >> 11) * 2^-53, then 2u - 1.
"""
import logging

import numpy as np

logger = logging.getLogger(__name__)

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
MIX_1 = 0xBF58476D1CE4E5B9
MIX_2 = 0x94D049BB133111EB


def _mix(z: int) -> int:
    z = ((z ^ (z >> 30)) * MIX_1) & MASK64
    z = ((z ^ (z >> 27)) * MIX_2) & MASK64
    return z ^ (z >> 31)


def _mix_array(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * np.uint64(MIX_1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(MIX_2)
    return z ^ (z >> np.uint64(31))


class SeededRng:
    def __init__(self, seed: int):
        self.state = int(seed) & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GOLDEN_GAMMA) & MASK64
        return _mix(self.state)

    def next_uniform(self) -> float:
        """One double in [-1, 1)."""
        return 2.0 * ((self.next_u64() >> 11) * 2.0**-53) - 1.0

    def uniform_array(self, count: int) -> np.ndarray:
        """The next `count` doubles of the stream, computed in one vectorised pass."""
        counters = np.arange(1, count + 1, dtype=np.uint64)
        with np.errstate(over='ignore'):
            states = np.uint64(self.state) + counters * np.uint64(GOLDEN_GAMMA)
            z = _mix_array(states)
        self.state = (self.state + count * GOLDEN_GAMMA) & MASK64
        return 2.0 * ((z >> np.uint64(11)).astype(np.float64) * 2.0**-53) - 1.0


def derive_seed(master_seed: int, index: int) -> int:
    """Seed of replicate `index`: element index+1 of the master stream."""
    state = (int(master_seed) + (index + 1) * GOLDEN_GAMMA) & MASK64
    return _mix(state)
