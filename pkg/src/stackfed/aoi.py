"""Cycle-based freshness model for cached training data.

A node refreshes its local cache on a fixed period ``theta = (c + a) * t``:
``c`` collection slots followed by ``a`` idle/service slots, each of length
``t``.  Two models of the resulting data age and service latency coexist:

* the period model (:func:`average_aoi`, :func:`average_service_latency`),
  smooth closed forms in ``theta`` valid for any real ``theta > a*t``.  All
  pricing-game computations are built on these forms.
* the slot model (:func:`discrete_cycle_oracle`), a brute-force average over
  the ``c + a`` arrival slots with integer ``c``.

The two models do NOT agree numerically (e.g. at c=3, a=2, t=1 the slot
model gives age 1.2 and latency 2.2 while the period model gives 2.0 and
5.8).  The divergence is intentional and reported via
:func:`cycle_model_divergence`; it must never be reconciled by adjusting
either side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Periods closer than this to the degenerate boundary theta = a*t are
# rejected instead of producing astronomically large ages.
DEGENERACY_MARGIN = 1e-9


@dataclass(frozen=True)
class CycleParams:
    """One node's refresh-cycle geometry and collection rate.

    theta: refresh period (time units), must exceed ``a * t``
    a:     idle/service slot count per cycle, integer >= 1
    t:     slot length (time units)
    T:     task duration (time units)
    d:     samples collected per slot
    """

    theta: float
    a: int
    t: float = 1.0
    T: float = 10.0
    d: float = 10.0

    def __post_init__(self) -> None:
        if not (isinstance(self.a, int) or float(self.a).is_integer()):
            raise ValueError(f"a must be an integer, got {self.a}")
        if self.a < 1:
            raise ValueError(f"a must be >= 1, got {self.a}")
        for name in ("theta", "t", "T", "d"):
            v = getattr(self, name)
            if not math.isfinite(v) or v <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {v}")
        if self.theta - self.a * self.t < DEGENERACY_MARGIN:
            raise ValueError(
                f"degenerate cycle: theta={self.theta} must exceed "
                f"a*t={self.a * self.t} by at least {DEGENERACY_MARGIN}"
            )

    @property
    def collection_slots(self) -> float:
        """Real-valued c = theta/t - a (> 0 by construction)."""
        return self.theta / self.t - self.a


@dataclass(frozen=True)
class SatisfactionParams:
    """Conversion coefficients of the satisfaction score.

    tau: weight of model quality
    lam: weight of service latency
    rho: quality adjustment factor (> 0)
    """

    tau: float
    lam: float
    rho: float

    def __post_init__(self) -> None:
        for name in ("tau", "lam", "rho"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.rho <= 0:
            raise ValueError(f"rho must be > 0, got {self.rho}")


def average_aoi(p: CycleParams) -> float:
    """Cycle-averaged age of the cached data under the period model.

    t*theta/(theta - a*t) + t^2/(theta - a*t) * (a^2 - a)/2

    Strictly positive, decreasing and convex in theta on theta > a*t.
    """
    gap = p.theta - p.a * p.t
    return (p.t * p.theta) / gap + (p.t**2 / gap) * (p.a**2 - p.a) / 2.0


def average_service_latency(p: CycleParams) -> float:
    """Cycle-averaged delay from request arrival to model upload.

    (theta - a*t)^3/(2*t*theta) + 3*(theta - a*t)^2/(2*theta) + a*t^2/theta
    """
    gap = p.theta - p.a * p.t
    return gap**3 / (2.0 * p.t * p.theta) + 3.0 * gap**2 / (2.0 * p.theta) + p.a * p.t**2 / p.theta


def discrete_cycle_oracle(c: int, a: int, t: float) -> tuple[float, float]:
    """Slot-enumeration averages of age and service delay.

    Arrivals are uniform over the ``c + a`` slots of one cycle.  A request
    landing in a collection slot or in the first post-collection slot sees
    age ``t``; one landing in the l-th slot with l >= c+2 sees age
    ``(l - c) * t``.  A request landing in the n-th collection slot waits
    ``c*t + t - (n-1)*t``; in any other slot it waits ``t``.

    This function enumerates the slots; it must not evaluate the equivalent
    closed forms (tests do that independently).
    """
    if not (isinstance(c, int) and isinstance(a, int)):
        raise ValueError("c and a must be integers")
    if c < 1 or a < 1:
        raise ValueError(f"c and a must be >= 1, got c={c}, a={a}")
    if not math.isfinite(t) or t <= 0:
        raise ValueError(f"t must be finite and > 0, got {t}")

    ages = []
    for slot in range(1, c + a + 1):
        if slot <= c + 1:
            ages.append(t)
        else:
            ages.append((slot - c) * t)

    delays = []
    for n in range(1, c + 1):
        delays.append(c * t + t - (n - 1) * t)
    for _ in range(a):
        delays.append(t)

    n_slots = c + a
    return sum(ages) / n_slots, sum(delays) / n_slots


def cycle_model_divergence(c: int, a: int, t: float) -> dict[str, float]:
    """Report how far the slot model sits from the period model.

    Returns both models' age and latency at theta = (c + a) * t together
    with the slot/period ratios.  Kept as an explicit reporting surface so
    the mismatch is documented rather than hidden.
    """
    aoi_slot, lat_slot = discrete_cycle_oracle(c, a, t)
    p = CycleParams(theta=(c + a) * t, a=a, t=t, T=1.0, d=1.0)
    aoi_period = average_aoi(p)
    lat_period = average_service_latency(p)
    return {
        "aoi_slot": aoi_slot,
        "aoi_period": aoi_period,
        "aoi_ratio": aoi_slot / aoi_period,
        "latency_slot": lat_slot,
        "latency_period": lat_period,
        "latency_ratio": lat_slot / lat_period,
    }


def data_size(p: CycleParams) -> float:
    """Samples collected over the task: (T / theta) * d."""
    return (p.T / p.theta) * p.d


def model_quality(p: CycleParams, s: SatisfactionParams) -> float:
    """Freshness-weighted contribution rho * D / A, in closed form.

    rho * T * d * (theta - a*t) / (theta * (t*theta + t^2*(a^2 - a)/2))
    """
    gap = p.theta - p.a * p.t
    denom = p.theta * (p.t * p.theta + p.t**2 * (p.a**2 - p.a) / 2.0)
    return s.rho * p.T * p.d * gap / denom


def satisfaction(p: CycleParams, s: SatisfactionParams) -> float:
    """Scalarized per-node score: tau * quality - lam * latency."""
    return s.tau * model_quality(p, s) - s.lam * average_service_latency(p)
