"""Feature masks, differential key bits, agreement rate, and reward.

An agent's continuous action vector is thresholded into a binary feature
mask; key bits are then derived per position from the *direction* of the
signal (did it rise or fall since the previous sample), gated by the mask.
Both parties can run this independently on their own signal, so matching
masks plus correlated signals yield matching keys.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def _as_bits(values, what: str) -> np.ndarray:
    arr = np.ascontiguousarray(values, dtype=np.int8)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{what} must be a non-empty bit vector")
    if not np.isin(arr, (0, 1)).all():
        raise ValueError(f"{what} must contain only 0/1 bits")
    return arr


@dataclass(frozen=True)
class FeatureMask:
    """Which of the M positions participate in key material this step."""

    bits: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "bits", _as_bits(self.bits, "mask"))

    def __len__(self) -> int:
        return self.bits.size

    @property
    def utilization(self) -> float:
        """Fraction of positions switched on."""
        return float(self.bits.mean())


@dataclass(frozen=True)
class Key:
    """One time step's key bits for one party."""

    bits: np.ndarray
    owner: str
    ts_index: int

    def __post_init__(self):
        object.__setattr__(self, "bits", _as_bits(self.bits, "key"))
        if self.owner not in ("A", "B", "E"):
            raise ValueError(f"owner must be one of A/B/E, got {self.owner!r}")
        if self.ts_index < 1:
            raise ValueError(f"ts_index must be >= 1, got {self.ts_index}")

    def __len__(self) -> int:
        return self.bits.size

    def as_line(self) -> str:
        """``owner,ts_index,<bits>`` export line."""
        return f"{self.owner},{self.ts_index}," + "".join(str(b) for b in self.bits)


def binarize(action, lam: float) -> FeatureMask:
    """Mask bit m = 1 iff action(m) >= lam (threshold inclusive)."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"threshold must lie in (0, 1), got {lam}")
    action = np.asarray(action, dtype=np.float64)
    return FeatureMask(bits=(action >= lam).astype(np.int8))


def generate_key(frame_values, mask: FeatureMask, prev_sample, *, owner: str, ts_index: int) -> Key:
    """Differential key bits: K(m) = 1 iff mask(m)=1 and P(m) >= P(m-1).

    ``prev_sample`` is the last sample of the previous time step; pass None
    at t=1, where P(0) is defined as P(1) so position 1 compares equal.
    Masked-out positions emit 0, keeping key length fixed at M.
    """
    values = np.ascontiguousarray(frame_values, dtype=np.float64)
    if values.ndim != 1 or values.size != len(mask):
        raise ValueError(f"frame has {values.size} values, mask has {len(mask)} bits")
    previous = np.empty_like(values)
    previous[0] = values[0] if prev_sample is None else float(prev_sample)
    previous[1:] = values[:-1]
    rising = (values >= previous).astype(np.int8)
    return Key(bits=mask.bits & rising, owner=owner, ts_index=ts_index)


def kar(key_x: Key, key_y: Key) -> float:
    """Key agreement rate: fraction of positions where both keys match."""
    if len(key_x) != len(key_y):
        raise ValueError(f"key lengths differ: {len(key_x)} vs {len(key_y)}")
    matches = int((key_x.bits == key_y.bits).sum())
    return matches / len(key_x)


def reward(key_a: Key, key_b: Key, mask_a: FeatureMask, mask_b: FeatureMask) -> float:
    """Agreement rate plus a mask-utilization bonus paid only on full agreement.

    r = KAR + phi * (sum(A_A) + sum(A_B)) / (2M) with phi = 1 iff KAR == 1.
    """
    m = len(key_a)
    if not (len(key_b) == len(mask_a) == len(mask_b) == m):
        raise ValueError("keys and masks must all have length M")
    rate = kar(key_a, key_b)
    phi = 1.0 if rate == 1.0 else 0.0
    bonus = (int(mask_a.bits.sum()) + int(mask_b.bits.sum())) / (2.0 * m)
    return rate + phi * bonus


def write_keys(path, keys) -> None:
    """Export keys one per line as ``owner,ts_index,<bits>``."""
    with open(path, "w") as fh:
        for key in keys:
            fh.write(key.as_line() + "\n")
