"""Small test doubles shared across test modules."""

import random


class FakeClock:
    """Injectable clock; advances only when told to."""

    def __init__(self, start=1000.0):
        self.now = start

    def __call__(self):
        return self.now

    def advance(self, seconds):
        self.now += seconds
        return self.now


def seeded_registry(seed=0, clock=None, **kwargs):
    from molxr.session import RoomRegistry
    return RoomRegistry(clock=clock or FakeClock(), rng=random.Random(seed), **kwargs)
