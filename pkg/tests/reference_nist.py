"""Independent reference for the eight statistical tests.

Implemented directly from SP 800-22 using scipy's special functions and
numpy's FFT, with no imports from the package under test.  Each function
returns the reported (minimum) p-value, or None when the test does not
apply to the sequence.
"""

import math

import numpy as np
from scipy.special import erfc, gammaincc, ndtr

MIN_BITS = 100
MIN_CYCLES = 500


def _to_pm1(bits):
    return 2.0 * np.asarray(bits, dtype=np.float64) - 1.0


def ref_monobit(bits):
    n = len(bits)
    if n < MIN_BITS:
        return None
    s = float(np.sum(_to_pm1(bits)))
    return float(erfc(abs(s) / math.sqrt(n) / math.sqrt(2.0)))


def ref_runs(bits):
    n = len(bits)
    if n < MIN_BITS:
        return None
    ones = int(np.sum(bits))
    pi = ones / n
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return None
    v = 1
    for i in range(1, n):
        if bits[i] != bits[i - 1]:
            v += 1
    arg = abs(v - 2.0 * n * pi * (1.0 - pi)) / (
        2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    )
    return float(erfc(arg))


def ref_dft(bits):
    n = len(bits)
    if n < MIN_BITS:
        return None
    n -= n % 2
    spectrum = np.fft.fft(_to_pm1(bits[:n]))
    mags = np.abs(spectrum[: n // 2])
    t = math.sqrt(n * math.log(1.0 / 0.05))
    n0 = 0.95 * n / 2.0
    n1 = float(np.sum(mags < t))
    d = (n1 - n0) / math.sqrt(n * 0.95 * 0.05 / 4.0)
    return float(erfc(abs(d) / math.sqrt(2.0)))


def ref_template(bits, template="000000001", blocks=8):
    n = len(bits)
    m = len(template)
    block_len = n // blocks
    if n < MIN_BITS or block_len < m:
        return None
    text = "".join(str(int(b)) for b in bits)
    counts = []
    for j in range(blocks):
        segment = text[j * block_len : (j + 1) * block_len]
        w = 0
        pos = segment.find(template)
        while pos != -1:
            w += 1
            pos = segment.find(template, pos + m)
        counts.append(w)
    mu = (block_len - m + 1) / 2.0**m
    var = block_len * (2.0**-m - (2.0 * m - 1.0) * 2.0 ** (-2 * m))
    chi2 = sum((w - mu) ** 2 for w in counts) / var
    return float(gammaincc(blocks / 2.0, chi2 / 2.0))


def _phi(bits, m):
    n = len(bits)
    text = "".join(str(int(b)) for b in bits)
    text += text[: m - 1]
    counts = {}
    for i in range(n):
        pattern = text[i : i + m]
        counts[pattern] = counts.get(pattern, 0) + 1
    return sum((c / n) * math.log(c / n) for c in counts.values())


def ref_approximate_entropy(bits, m=2):
    n = len(bits)
    if n < MIN_BITS:
        return None
    apen = _phi(bits, m) - _phi(bits, m + 1)
    chi2 = max(2.0 * n * (math.log(2.0) - apen), 0.0)
    return float(gammaincc(2.0 ** (m - 1), chi2 / 2.0))


def _cusum_direction(x, n):
    z = int(np.max(np.abs(np.cumsum(x))))
    root = math.sqrt(n)
    p = 1.0
    for k in range(int(math.floor((-n / z + 1) / 4.0)), int(math.floor((n / z - 1) / 4.0)) + 1):
        p -= float(ndtr((4 * k + 1) * z / root)) - float(ndtr((4 * k - 1) * z / root))
    for k in range(int(math.floor((-n / z - 3) / 4.0)), int(math.floor((n / z - 1) / 4.0)) + 1):
        p += float(ndtr((4 * k + 3) * z / root)) - float(ndtr((4 * k + 1) * z / root))
    return min(max(p, 0.0), 1.0)


def ref_cusum(bits):
    n = len(bits)
    if n < MIN_BITS:
        return None
    x = _to_pm1(bits).astype(np.int64)
    return min(_cusum_direction(x, n), _cusum_direction(x[::-1], n))


def _walk_and_cycles(bits):
    walk = np.cumsum(2 * np.asarray(bits, dtype=np.int64) - 1)
    zero_positions = list(np.flatnonzero(walk == 0))
    cycles = []
    start = 0
    for z in zero_positions:
        cycles.append(walk[start : z + 1])
        start = z + 1
    if start < len(walk):
        cycles.append(walk[start:])
    return walk, cycles


def ref_random_excursions(bits):
    if len(bits) < MIN_BITS:
        return None
    _, cycles = _walk_and_cycles(bits)
    j = len(cycles)
    if j < MIN_CYCLES:
        return None

    def pi_k(x, k):
        ax = abs(x)
        stay = 1.0 - 1.0 / (2.0 * ax)
        if k == 0:
            return stay
        if k == 5:
            return stay**4 / (2.0 * ax)
        return stay ** (k - 1) / (4.0 * ax * ax)

    p_values = []
    for x in [-4, -3, -2, -1, 1, 2, 3, 4]:
        observed = [0] * 6
        for cycle in cycles:
            visits = min(int(np.sum(cycle == x)), 5)
            observed[visits] += 1
        chi2 = sum(
            (observed[k] - j * pi_k(x, k)) ** 2 / (j * pi_k(x, k)) for k in range(6)
        )
        p_values.append(float(gammaincc(2.5, chi2 / 2.0)))
    return min(p_values)


def ref_random_excursions_variant(bits):
    if len(bits) < MIN_BITS:
        return None
    walk, cycles = _walk_and_cycles(bits)
    j = len(cycles)
    if j < MIN_CYCLES:
        return None
    p_values = []
    for x in list(range(-9, 0)) + list(range(1, 10)):
        xi = int(np.sum(walk == x))
        p_values.append(float(erfc(abs(xi - j) / math.sqrt(2.0 * j * (4.0 * abs(x) - 2.0)))))
    return min(p_values)


REFERENCES = {
    "monobit_frequency": ref_monobit,
    "runs": ref_runs,
    "dft_spectral": ref_dft,
    "non_overlapping_template": ref_template,
    "approximate_entropy": ref_approximate_entropy,
    "cumulative_sums": ref_cusum,
    "random_excursions": ref_random_excursions,
    "random_excursions_variant": ref_random_excursions_variant,
}


def ref_all(bits):
    """Reported p per test name; None marks an inapplicable test."""
    return {name: fn(bits) for name, fn in REFERENCES.items()}
