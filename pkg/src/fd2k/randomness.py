"""Eight SP 800-22 statistical tests applied to generated keystreams.

Covered tests, in reporting order: monobit frequency, runs, discrete
Fourier transform (spectral), non-overlapping template matching,
approximate entropy, cumulative sums, random excursions, and random
excursions variant.  Each test yields a :class:`TestReport`; tests whose
minimum-length or structural prerequisites are unmet report
``applicable=False`` instead of a p-value.

A sequence is accepted as any iterable of 0/1 values (list, array, or the
ASCII format read by :func:`read_bitstream`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .special import erfc, igamc, normal_cdf

SIGNIFICANCE = 0.01
_MIN_BITS = 100  # shortest sequence any test here accepts


@dataclass(frozen=True)
class TestReport:
    """Outcome of one statistical test."""

    test_name: str
    p_values: tuple[float, ...]
    reported_p: float
    passed: bool
    applicable: bool
    note: str = ""

    def __post_init__(self):
        if self.passed and not self.applicable:
            raise ValueError("a test cannot pass while inapplicable")

    def csv_row(self) -> str:
        p = "" if math.isnan(self.reported_p) else f"{self.reported_p:.10g}"
        return f"{self.test_name},{p},{self.passed},{self.applicable}"


CSV_HEADER = "test,p_value,pass,applicable"


def as_bits(seq) -> np.ndarray:
    """Validate and convert to a flat int8 0/1 array."""
    bits = np.asarray(seq)
    if bits.dtype.kind in "US":
        raise TypeError("pass bit values, not strings; see read_bitstream")
    bits = bits.astype(np.int8, copy=False).ravel()
    if bits.size and not np.isin(bits, (0, 1)).all():
        raise ValueError("sequence must contain only 0/1 values")
    return bits


def read_bitstream(path) -> np.ndarray:
    """Read ASCII '0'/'1' characters (whitespace ignored) as a bit array."""
    with open(path) as fh:
        text = fh.read()
    chars = [c for c in text if not c.isspace()]
    bad = next((c for c in chars if c not in "01"), None)
    if bad is not None:
        raise ValueError(f"bitstream file contains non-bit character {bad!r}")
    return np.array([int(c) for c in chars], dtype=np.int8)


def write_bitstream(path, bits) -> None:
    with open(path, "w") as fh:
        fh.write("".join(str(int(b)) for b in as_bits(bits)))


def _report(name: str, p_values) -> TestReport:
    ps = tuple(float(p) for p in p_values)
    if not ps or not all(0.0 <= p <= 1.0 for p in ps):
        raise ValueError(f"{name} produced p-values outside [0, 1]: {ps}")
    reported = min(ps)
    return TestReport(
        test_name=name,
        p_values=ps,
        reported_p=reported,
        passed=reported >= SIGNIFICANCE,
        applicable=True,
    )


def _inapplicable(name: str, reason: str) -> TestReport:
    return TestReport(
        test_name=name,
        p_values=(),
        reported_p=float("nan"),
        passed=False,
        applicable=False,
        note=reason,
    )


def _too_short(name: str, n: int, minimum: int = _MIN_BITS) -> TestReport:
    return _inapplicable(name, f"needs at least {minimum} bits, got {n}")


def monobit_frequency(seq) -> TestReport:
    """Proportion of ones vs zeros across the whole sequence."""
    bits = as_bits(seq)
    n = bits.size
    if n < _MIN_BITS:
        return _too_short("monobit_frequency", n)
    s_obs = abs(int(2 * bits.sum() - n)) / math.sqrt(n)
    return _report("monobit_frequency", [erfc(s_obs / math.sqrt(2.0))])


def runs(seq) -> TestReport:
    """Total number of uninterrupted runs of identical bits."""
    bits = as_bits(seq)
    n = bits.size
    if n < _MIN_BITS:
        return _too_short("runs", n)
    pi = bits.mean()
    if abs(pi - 0.5) >= 2.0 / math.sqrt(n):
        return _inapplicable("runs", "frequency prerequisite failed")
    v_obs = int(np.count_nonzero(bits[1:] != bits[:-1])) + 1
    num = abs(v_obs - 2.0 * n * pi * (1.0 - pi))
    den = 2.0 * math.sqrt(2.0 * n) * pi * (1.0 - pi)
    return _report("runs", [erfc(num / den)])


def dft_spectral(seq) -> TestReport:
    """Peak heights of the discrete Fourier transform vs the 95% threshold."""
    bits = as_bits(seq)
    n = bits.size
    if n < _MIN_BITS:
        return _too_short("dft_spectral", n)
    n_even = n - (n % 2)
    x = 2.0 * bits[:n_even].astype(np.float64) - 1.0
    mags = np.abs(np.fft.rfft(x))[: n_even // 2]
    threshold = math.sqrt(n_even * math.log(1.0 / 0.05))
    n0 = 0.95 * n_even / 2.0
    n1 = int(np.count_nonzero(mags < threshold))
    d = (n1 - n0) / math.sqrt(n_even * 0.95 * 0.05 / 4.0)
    return _report("dft_spectral", [erfc(abs(d) / math.sqrt(2.0))])


_DEFAULT_TEMPLATE = "000000001"
_TEMPLATE_BLOCKS = 8


def non_overlapping_template(seq, template: str = _DEFAULT_TEMPLATE) -> TestReport:
    """Occurrences of an aperiodic template in fixed blocks, non-overlapping scan."""
    bits = as_bits(seq)
    tmpl = as_bits([int(c) for c in template] if isinstance(template, str) else template)
    m = tmpl.size
    if m < 2:
        raise ValueError("template must have at least 2 bits")
    n = bits.size
    block_len = n // _TEMPLATE_BLOCKS
    if n < _MIN_BITS or block_len < m:
        return _inapplicable(
            "non_overlapping_template",
            f"needs {_TEMPLATE_BLOCKS} blocks of >= {m} bits, got n={n}",
        )
    counts = []
    for j in range(_TEMPLATE_BLOCKS):
        block = bits[j * block_len : (j + 1) * block_len]
        w = 0
        i = 0
        while i <= block_len - m:
            if np.array_equal(block[i : i + m], tmpl):
                w += 1
                i += m
            else:
                i += 1
        counts.append(w)
    mu = (block_len - m + 1) / 2.0**m
    var = block_len * (1.0 / 2.0**m - (2.0 * m - 1.0) / 2.0 ** (2 * m))
    chi2 = float(sum((w - mu) ** 2 for w in counts) / var)
    return _report(
        "non_overlapping_template", [igamc(_TEMPLATE_BLOCKS / 2.0, chi2 / 2.0)]
    )


def _pattern_phi(bits: np.ndarray, mm: int) -> float:
    """phi statistic over all overlapping mm-bit patterns, cyclic extension."""
    n = bits.size
    aug = np.concatenate([bits, bits[: mm - 1]]).astype(np.int64)
    values = np.zeros(n, dtype=np.int64)
    for j in range(mm):
        values = (values << 1) | aug[j : j + n]
    counts = np.bincount(values, minlength=2**mm)
    probs = counts[counts > 0] / n
    return float(np.sum(probs * np.log(probs)))


def approximate_entropy(seq, m: int = 2) -> TestReport:
    """Frequency regularity of overlapping m-bit vs (m+1)-bit patterns."""
    bits = as_bits(seq)
    n = bits.size
    if m < 1:
        raise ValueError(f"block length must be >= 1, got {m}")
    if n < _MIN_BITS:
        return _too_short("approximate_entropy", n)
    apen = _pattern_phi(bits, m) - _pattern_phi(bits, m + 1)
    chi2 = 2.0 * n * (math.log(2.0) - apen)
    chi2 = max(chi2, 0.0)  # guard tiny negative rounding
    return _report("approximate_entropy", [igamc(2.0 ** (m - 1), chi2 / 2.0)])


def _cusum_p(walk: np.ndarray, n: int) -> float:
    z = int(np.max(np.abs(walk)))
    sqrt_n = math.sqrt(n)
    total = 1.0
    for k in range(math.floor((-n / z + 1) / 4.0), math.floor((n / z - 1) / 4.0) + 1):
        total -= normal_cdf((4 * k + 1) * z / sqrt_n) - normal_cdf((4 * k - 1) * z / sqrt_n)
    for k in range(math.floor((-n / z - 3) / 4.0), math.floor((n / z - 1) / 4.0) + 1):
        total += normal_cdf((4 * k + 3) * z / sqrt_n) - normal_cdf((4 * k + 1) * z / sqrt_n)
    return min(max(total, 0.0), 1.0)


def cumulative_sums(seq) -> TestReport:
    """Maximal partial-sum excursion, scanned forward and backward."""
    bits = as_bits(seq)
    n = bits.size
    if n < _MIN_BITS:
        return _too_short("cumulative_sums", n)
    x = 2 * bits.astype(np.int64) - 1
    forward = _cusum_p(np.cumsum(x), n)
    backward = _cusum_p(np.cumsum(x[::-1]), n)
    return _report("cumulative_sums", [forward, backward])


_MIN_CYCLES = 500


def _excursion_cycles(bits: np.ndarray):
    """Random walk, its zero-delimited cycles, and the cycle count J."""
    x = 2 * bits.astype(np.int64) - 1
    walk = np.cumsum(x)
    zeros = np.flatnonzero(walk == 0)
    bounds = [0, *(zeros + 1)]
    if walk.size and walk[-1] != 0:
        bounds.append(walk.size)
    j = len(bounds) - 1
    return walk, bounds, j


def _excursion_pi(x: int, k: int) -> float:
    """Probability that state x is visited exactly k times in one cycle (k=5 means >=5)."""
    ax = abs(x)
    base = 1.0 - 1.0 / (2.0 * ax)
    if k == 0:
        return base
    if k == 5:
        return (1.0 / (2.0 * ax)) * base**4
    return (1.0 / (4.0 * ax * ax)) * base ** (k - 1)


def random_excursions(seq) -> TestReport:
    """Visit-count distribution of walk states -4..4 across zero-return cycles."""
    bits = as_bits(seq)
    if bits.size < _MIN_BITS:
        return _too_short("random_excursions", bits.size)
    walk, bounds, j = _excursion_cycles(bits)
    if j < _MIN_CYCLES:
        return _inapplicable(
            "random_excursions", f"only {j} zero-return cycles, need {_MIN_CYCLES}"
        )
    states = [x for x in range(-4, 5) if x != 0]
    # nu[k][idx]: number of cycles visiting the state exactly k times (5 = five or more)
    nu = np.zeros((6, len(states)), dtype=np.int64)
    for c in range(j):
        segment = walk[bounds[c] : bounds[c + 1]]
        for idx, x in enumerate(states):
            visits = min(int(np.count_nonzero(segment == x)), 5)
            nu[visits, idx] += 1
    p_values = []
    for idx, x in enumerate(states):
        chi2 = 0.0
        for k in range(6):
            expected = j * _excursion_pi(x, k)
            chi2 += (nu[k, idx] - expected) ** 2 / expected
        p_values.append(igamc(5.0 / 2.0, chi2 / 2.0))
    return _report("random_excursions", p_values)


def random_excursions_variant(seq) -> TestReport:
    """Total visit counts of walk states -9..9 against their expectation J."""
    bits = as_bits(seq)
    if bits.size < _MIN_BITS:
        return _too_short("random_excursions_variant", bits.size)
    walk, _, j = _excursion_cycles(bits)
    if j < _MIN_CYCLES:
        return _inapplicable(
            "random_excursions_variant", f"only {j} zero-return cycles, need {_MIN_CYCLES}"
        )
    p_values = []
    for x in (x for x in range(-9, 10) if x != 0):
        xi = int(np.count_nonzero(walk == x))
        denom = math.sqrt(2.0 * j * (4.0 * abs(x) - 2.0))
        p_values.append(erfc(abs(xi - j) / denom))
    return _report("random_excursions_variant", p_values)


def run_suite(seq) -> list[TestReport]:
    """All eight tests in reporting order on one bit sequence."""
    bits = as_bits(seq)
    return [
        monobit_frequency(bits),
        runs(bits),
        dft_spectral(bits),
        non_overlapping_template(bits),
        approximate_entropy(bits),
        cumulative_sums(bits),
        random_excursions(bits),
        random_excursions_variant(bits),
    ]


def suite_csv(reports) -> str:
    """Render reports as the `test,p_value,pass,applicable` CSV document."""
    return "\n".join([CSV_HEADER, *(r.csv_row() for r in reports)]) + "\n"
