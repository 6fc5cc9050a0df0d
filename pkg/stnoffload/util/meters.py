"""
Running aggregates for training losses and task-volume curves.
"""
from collections import deque

import numpy as np


class AverageMeter(object):
    """Running mean of one quantity."""

    def __init__(self, name):
        self.name = name
        self.reset()

    def reset(self):
        self.sum = 0.0
        self.count = 0

    def update(self, val, n=1):
        self.sum += val * n
        self.count += n

    @property
    def avg(self):
        return self.sum / self.count if self.count else float("nan")


class MeterDict(object):
    """AverageMeters created on first update, one per logged quantity."""

    def __init__(self):
        self.meters = {}

    def update(self, **kwargs):
        for k, v in kwargs.items():
            if v is None:
                continue
            self.meters.setdefault(k, AverageMeter(k)).update(float(v))

    def avg(self, name, default=float("nan")):
        meter = self.meters.get(name)
        return meter.avg if meter is not None and meter.count else default

    def reset(self):
        for meter in self.meters.values():
            meter.reset()

    def __str__(self):
        return "  ".join(f"{k}: {m.avg:.4f}" for k, m in self.meters.items() if m.count)


class SmoothedValue(object):
    """Mean over the last ``window_size`` values, plus the mean of the whole series."""

    def __init__(self, window_size=20):
        self.deque = deque(maxlen=window_size)
        self.total = 0.0
        self.count = 0

    def update(self, value, n=1):
        self.deque.append(value)
        self.count += n
        self.total += value * n

    @property
    def avg(self):
        return float(np.mean(self.deque)) if self.deque else 0.0

    @property
    def global_avg(self):
        return self.total / self.count if self.count else 0.0
