"""Seeded random streams.

All randomness flows through Philox (a counter-based generator, so streams
are reproducible across platforms); normals come from the Marsaglia polar
method on top of its uniform doubles rather than numpy's ziggurat.
"""
import numpy as np


def make_rng(seed, *stream):
    """Independent generator for ``seed`` and an optional integer stream path."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, stream)])))


def polar_normal(rng, size):
    """``size`` standard normal draws by the polar method, in draw order."""
    count = int(np.prod(size))
    out = np.empty(count)
    filled = 0
    while filled < count:
        need = count - filled
        pairs = max(8, int(need * 0.65) + 8)
        u = rng.random((pairs, 2)) * 2.0 - 1.0
        s = np.einsum("ij,ij->i", u, u)
        keep = (s > 0.0) & (s < 1.0)
        u, s = u[keep], s[keep]
        factor = np.sqrt(-2.0 * np.log(s) / s)
        z = (u * factor[:, None]).ravel()
        take = min(need, z.size)
        out[filled:filled + take] = z[:take]
        filled += take
    return out.reshape(size)
