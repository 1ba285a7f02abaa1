"""Network condition injection for synthetic clients.

Models an ordered, reliable transport with variable one-way delay:
frames are delivered in send order but each waits its sampled latency.
Loss applies only to pose-plane frames; control frames are delayed but
never dropped.
"""

from __future__ import annotations

import random
from dataclasses import dataclass


@dataclass
class NetworkShaper:
    latency_ms: float = 0.0
    jitter_ms: float = 0.0
    pose_drop: float = 0.0
    rng: random.Random = None

    def __post_init__(self):
        if self.rng is None:
            self.rng = random.Random()
        if not (0.0 <= self.pose_drop < 1.0):
            raise ValueError("pose_drop must be in [0, 1)")

    def delay_s(self) -> float:
        if self.latency_ms <= 0 and self.jitter_ms <= 0:
            return 0.0
        jitter = self.rng.uniform(-self.jitter_ms, self.jitter_ms)
        return max(0.0, (self.latency_ms + jitter) / 1000.0)

    def drop_pose(self) -> bool:
        return self.pose_drop > 0 and self.rng.random() < self.pose_drop


def shaper_from_json(obj: dict, rng: random.Random) -> NetworkShaper:
    return NetworkShaper(
        latency_ms=obj.get("latency_ms", 0.0),
        jitter_ms=obj.get("jitter_ms", 0.0),
        pose_drop=obj.get("pose_drop", 0.0),
        rng=rng,
    )
