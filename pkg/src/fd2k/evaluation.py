"""Post-training evaluation: decentralized key derivation and KAR gaps.

After training, each party runs only its own actor on only its own signal.
The evaluator derives Alice's, Bob's, and the adversary's keys through the
same per-party pipeline and compares them afterwards; no observation,
action, or key crosses between parties during derivation.  The adversary
holds a copy of Bob's trained actor but observes her own (imperfectly
correlated) signal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from . import keygen, nn, signals


@dataclass(frozen=True)
class AdversaryModel:
    """Eavesdropper: stolen actor plus her own view of the physical signal."""

    eve_actor: nn.Mlp
    eve_trace: signals.PressureTrace


@dataclass(frozen=True)
class EvalReport:
    """Per-time-step agreement rates for one evaluation episode."""

    kar_ab: tuple[float, ...]
    kar_ae: tuple[float, ...]
    keys_a: tuple[keygen.Key, ...]
    keys_b: tuple[keygen.Key, ...]
    keys_e: tuple[keygen.Key, ...]
    mask_utilization: float

    def __post_init__(self):
        lengths = {len(self.kar_ab), len(self.kar_ae), len(self.keys_a), len(self.keys_b), len(self.keys_e)}
        if len(lengths) != 1 or 0 in lengths:
            raise ValueError("per-TS series must share one non-zero length")
        for series in (self.kar_ab, self.kar_ae):
            if not all(0.0 <= v <= 1.0 for v in series):
                raise ValueError("agreement rates must lie in [0, 1]")

    @property
    def T(self) -> int:
        return len(self.kar_ab)

    @property
    def mean_kar_ab(self) -> float:
        return float(np.mean(self.kar_ab))

    @property
    def mean_kar_ae(self) -> float:
        return float(np.mean(self.kar_ae))

    @property
    def uniqueness(self) -> float:
        """Mean fractional Hamming distance between Alice's and Eve's keys."""
        return 1.0 - self.mean_kar_ae

    def to_json(self) -> str:
        gaps = kar_gap(self)
        doc = {
            "T": self.T,
            "kar_ab": list(self.kar_ab),
            "kar_ae": list(self.kar_ae),
            "per_ts_gap": gaps["per_ts_gaps"],
            "mean_kar_ab": self.mean_kar_ab,
            "mean_kar_ae": self.mean_kar_ae,
            "mean_gap": gaps["mean_gap"],
            "min_gap": gaps["min_gap"],
            "mask_utilization": self.mask_utilization,
            "uniqueness": self.uniqueness,
        }
        return json.dumps(doc, indent=2)

    def to_csv(self) -> str:
        lines = ["ts,kar_ab,kar_ae,gap"]
        for t, (ab, ae) in enumerate(zip(self.kar_ab, self.kar_ae), start=1):
            lines.append(f"{t},{ab:.10g},{ae:.10g},{ab - ae:.10g}")
        return "\n".join(lines) + "\n"


def decentral_keys(
    actor: nn.Mlp,
    trace: signals.PressureTrace,
    stats: signals.Normalization,
    m: int,
    t_max: int,
    lam: float,
    owner: str,
) -> tuple[tuple[keygen.Key, ...], tuple[keygen.FeatureMask, ...]]:
    """One party's full key pipeline in isolation.

    Everything here depends only on the party's own actor parameters and
    own trace: observe, act without exploration, threshold, derive bits.
    """
    if actor.in_dim != m or actor.out_dim != m:
        raise ValueError(f"actor maps {actor.in_dim}->{actor.out_dim}, scenario needs {m}->{m}")
    if len(trace) < t_max * m:
        raise ValueError(
            f"trace {trace.node_id!r} has {len(trace)} samples, need {t_max * m}"
        )
    keys = []
    masks = []
    for t in range(1, t_max + 1):
        fr = signals.frame(trace, t, m)
        obs = signals.normalize(fr, stats)
        action, _ = actor.forward(obs)
        mask = keygen.binarize(action, lam)
        prev = None if t == 1 else float(trace.samples[(t - 1) * m - 1])
        keys.append(keygen.generate_key(fr.values, mask, prev, owner=owner, ts_index=t))
        masks.append(mask)
    return tuple(keys), tuple(masks)


def evaluate_episode(
    actor_a: nn.Mlp,
    actor_b: nn.Mlp,
    adversary: AdversaryModel,
    traces: dict[str, signals.PressureTrace],
    scenario: signals.ScenarioConfig,
    lam: float,
) -> EvalReport:
    """Run all three parties decentrally and compare their keys."""
    m, t_max = scenario.M, scenario.T
    keys_a, masks_a = decentral_keys(
        actor_a, traces[scenario.alice_node], scenario.stats_for(scenario.alice_node),
        m, t_max, lam, "A",
    )
    keys_b, masks_b = decentral_keys(
        actor_b, traces[scenario.bob_node], scenario.stats_for(scenario.bob_node),
        m, t_max, lam, "B",
    )
    keys_e, _ = decentral_keys(
        adversary.eve_actor, adversary.eve_trace, scenario.stats_for(scenario.eve_node),
        m, t_max, lam, "E",
    )
    kar_ab = tuple(keygen.kar(ka, kb) for ka, kb in zip(keys_a, keys_b))
    kar_ae = tuple(keygen.kar(ka, ke) for ka, ke in zip(keys_a, keys_e))
    utilization = float(
        np.mean([msk.utilization for msk in (*masks_a, *masks_b)])
    )
    return EvalReport(
        kar_ab=kar_ab,
        kar_ae=kar_ae,
        keys_a=keys_a,
        keys_b=keys_b,
        keys_e=keys_e,
        mask_utilization=utilization,
    )


def kar_gap(report: EvalReport) -> dict:
    """Per-TS and aggregate difference KAR(A,B) - KAR(A,E)."""
    gaps = [ab - ae for ab, ae in zip(report.kar_ab, report.kar_ae)]
    return {
        "per_ts_gaps": gaps,
        "mean_gap": float(np.mean(gaps)),
        "min_gap": float(np.min(gaps)),
    }


def export_keystream(reports, owner: str) -> np.ndarray:
    """Concatenate one party's key bits across episodes, TS order within each.

    Episode order follows the ``reports`` argument; within an episode, bits
    run t=1..T with each key's M bits in position order.
    """
    by_owner = {"A": "keys_a", "B": "keys_b", "E": "keys_e"}
    if owner not in by_owner:
        raise ValueError(f"owner must be one of {sorted(by_owner)}, got {owner!r}")
    chunks = [key.bits for report in reports for key in getattr(report, by_owner[owner])]
    if not chunks:
        return np.zeros(0, dtype=np.int8)
    return np.concatenate(chunks)
