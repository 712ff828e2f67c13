import numpy as np

from util.errors import ConfigError

SEED_LIMIT = 1 << 64


def substream(seed: int, stream: int) -> np.random.Generator:
    """
    Philox generator keyed by (stream, seed)

    Philox is counter-based with a fixed bit-exact definition, so replicate `stream` draws the same
    numbers whatever order or thread it runs in
    """
    if not 0 <= seed < SEED_LIMIT:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {seed}")
    if not 0 <= stream < SEED_LIMIT:
        raise ConfigError(f"stream index out of range: {stream}")
    return np.random.Generator(np.random.Philox(key=(stream << 64) | seed))


def rademacher(generator: np.random.Generator, n: int) -> np.ndarray:
    return np.where(generator.random(n) < 0.5, -1.0, 1.0)
