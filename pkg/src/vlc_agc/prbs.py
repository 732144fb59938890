"""
Maximal-length PRBS from a Fibonacci LFSR, vectorised.

For x^n + x^k + 1 the output obeys s[j] = s[j-n] ^ s[j-k]. Squaring the
polynomial over GF(2) gives s[j] = s[j-n*2^r] ^ s[j-k*2^r], which lets numpy
fill k*2^r bits per step once the first n*2^r bits exist.
"""

import numpy as np

# ITU-T O.150 style trinomials
TAPS = {
    7: 6,
    9: 5,
    11: 9,
    15: 14,
    20: 3,
    23: 18,
    31: 28,
}

_MIN_BLOCK = 4096


def _initial_state(order: int, seed: int) -> np.ndarray:
    state = int(seed) % (2 ** order - 1) + 1          # never the all-zero lock-up state
    return np.array([(state >> i) & 1 for i in range(order)], dtype=np.uint8)


def _fill(out: np.ndarray, start: int, stop: int, long_lag: int, short_lag: int):
    j = start
    while j < stop:
        m = min(short_lag, stop - j)
        out[j:j + m] = out[j - long_lag:j - long_lag + m] ^ out[j - short_lag:j - short_lag + m]
        j += m


def prbs(order: int, n_bits: int, seed: int = 1) -> np.ndarray:
    """First `n_bits` of the PRBS of the given order, started from a seed-derived state."""
    if order not in TAPS:
        raise ValueError(f"unsupported PRBS order {order}; choose from {sorted(TAPS)}")
    if n_bits < 0:
        raise ValueError("n_bits must be >= 0")
    k = TAPS[order]
    r = 0
    while k * 2 ** r < _MIN_BLOCK:
        r += 1
    warm = order * 2 ** r
    out = np.empty(max(n_bits, warm) + order, dtype=np.uint8)
    out[:order] = _initial_state(order, seed)
    _fill(out, order, warm, order, k)
    _fill(out, warm, out.size, order * 2 ** r, k * 2 ** r)
    return out[:n_bits].copy()


def prbs_reference(order: int, n_bits: int, seed: int = 1) -> np.ndarray:
    """Shift-register LFSR one bit at a time; slow, kept as a check of `prbs`."""
    k = TAPS[order]
    init = _initial_state(order, seed)
    mask = (1 << order) - 1
    reg = 0
    for b in init:                      # bit i of reg holds the output i+1 steps back
        reg = ((reg << 1) | int(b)) & mask
    out = list(init[:n_bits])
    for _ in range(n_bits - len(out)):
        new = ((reg >> (order - 1)) ^ (reg >> (k - 1))) & 1
        reg = ((reg << 1) | new) & mask
        out.append(new)
    return np.array(out, dtype=np.uint8)
