"""Excitation signals for identification runs.

Heater schedules combine a slow staircase (covers the operating range) with
per-channel PRBS toggling (provides the high-frequency content the
least-squares fit needs to separate the 20 input channels).
"""

from __future__ import annotations

import numpy as np

# Maximal-length LFSR feedback taps, indexed by register order.
_TAPS = {5: (5, 3), 7: (7, 6), 9: (9, 5), 10: (10, 7), 11: (11, 9), 15: (15, 14)}


def prbs(order: int, length: int, init_state: int = 1) -> np.ndarray:
    """Binary (0/1) pseudo-random sequence from a maximal-length LFSR.

    The sequence repeats with period 2**order - 1.
    """
    if order not in _TAPS:
        raise ValueError(f"unsupported PRBS order {order}; choose from {sorted(_TAPS)}")
    if not 0 < init_state < 2 ** order:
        raise ValueError("init_state must be a nonzero register value")
    t1, t2 = _TAPS[order]
    state = init_state
    out = np.empty(length, dtype=int)
    for k in range(length):
        bit = ((state >> (t1 - 1)) ^ (state >> (t2 - 1))) & 1
        state = ((state << 1) | bit) & ((1 << order) - 1)
        out[k] = state & 1
    return out


def staircase_prbs_schedule(n_steps: int, n_channels: int, u_max: np.ndarray,
                            rng: np.random.Generator, hold: int = 3,
                            levels=(0.10, 0.35, 0.60, 0.85),
                            amplitude: float = 0.15) -> np.ndarray:
    """Power schedule: staircase mean levels plus PRBS toggling, clipped to [0, u_max].

    Each channel gets its own LFSR seed so the channels stay mutually
    informative for the multivariable fit. `hold` keeps each PRBS bit for
    that many samples.
    """
    u_max = np.asarray(u_max, dtype=float)
    frac = np.zeros((n_steps, n_channels))
    seg = max(1, n_steps // len(levels))
    for i, lev in enumerate(levels):
        frac[i * seg:(i + 1) * seg if i + 1 < len(levels) else n_steps] = lev
    n_bits = int(np.ceil(n_steps / hold))
    for ch in range(n_channels):
        seed = int(rng.integers(1, 2 ** 11 - 1))
        bits = prbs(11, n_bits, init_state=seed)
        toggles = np.repeat(2.0 * bits - 1.0, hold)[:n_steps]
        frac[:, ch] += amplitude * toggles
    np.clip(frac, 0.0, 1.0, out=frac)
    return frac * u_max[None, :]
