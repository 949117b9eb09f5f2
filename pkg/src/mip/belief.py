"""Beta-particle belief over user compliance.

The robot summarizes a user's tendency to accept interventions as a Bernoulli
parameter and tracks its uncertainty with beta pseudo-counts: each particle is
a beta(a, b) where ``a`` counts complies and ``b`` counts opposes. Updates are
conjugate, so a particle after any outcome sequence is exactly
beta(1 + #comply, 1 + #oppose). A search-tree node owns an unweighted set of
such particles.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from random import Random
from typing import Iterable, Optional, Sequence

from .domain import (
    HumanAction,
    INTERRUPT_KINDS,
    OPPOSITE,
    RobotKind,
    TAKE_CONTROL_KINDS,
)

log = logging.getLogger(__name__)

JITTER = 0.5  # reinvigoration noise on each pseudo-count, uniform in [-JITTER, JITTER]
COUNT_FLOOR = 0.1


class Outcome(Enum):
    COMPLY = "comply"
    OPPOSE = "oppose"


@dataclass(frozen=True)
class BetaParticle:
    a: float = 1.0  # comply pseudo-count
    b: float = 1.0  # oppose pseudo-count

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError("beta pseudo-counts must be positive")

    @property
    def mean(self) -> float:
        return self.a / (self.a + self.b)


def update_particle(p: BetaParticle, outcome: Outcome) -> BetaParticle:
    if outcome is Outcome.COMPLY:
        return BetaParticle(p.a + 1.0, p.b)
    return BetaParticle(p.a, p.b + 1.0)


def sample_compliance(p: BetaParticle, rng: Random) -> Outcome:
    """Mean-parameterized Bernoulli draw: comply with probability a/(a+b)."""
    return Outcome.COMPLY if rng.random() < p.mean else Outcome.OPPOSE


@dataclass
class BeliefSet:
    particles: list[BetaParticle]
    capacity: int

    def __len__(self) -> int:
        return len(self.particles)

    def add(self, p: BetaParticle) -> None:
        if len(self.particles) < self.capacity:
            self.particles.append(p)

    def sample(self, rng: Random) -> BetaParticle:
        return self.particles[rng.randrange(len(self.particles))]

    def mean_compliance(self) -> float:
        return sum(p.mean for p in self.particles) / len(self.particles)

    def to_pairs(self) -> list[tuple[float, float]]:
        return [(p.a, p.b) for p in self.particles]


def init_belief(capacity: int) -> BeliefSet:
    """Uniform prior: ``capacity`` beta(1, 1) particles."""
    if capacity < 1:
        raise ValueError("belief capacity must be >= 1")
    return BeliefSet([BetaParticle()] * capacity, capacity)


def _jittered(p: BetaParticle, rng: Random) -> BetaParticle:
    a = max(COUNT_FLOOR, p.a + rng.uniform(-JITTER, JITTER))
    b = max(COUNT_FLOOR, p.b + rng.uniform(-JITTER, JITTER))
    return BetaParticle(a, b)


def root_belief_update(prev: BeliefSet, child_particles: Sequence[BetaParticle],
                       outcome: Optional[Outcome], rng: Random) -> BeliefSet:
    """Posterior root belief after a real transition.

    Takes the particles that accumulated in the matching child node during the
    search, applies the really-observed comply/oppose outcome to each (only
    interventions produce an outcome), and refills to capacity by resampling
    existing particles with a little count jitter. An empty child falls back
    to a fresh uniform belief.
    """
    capacity = prev.capacity
    if child_particles:
        pts = list(child_particles[:capacity])
        if outcome is not None:
            pts = [update_particle(p, outcome) for p in pts]
    else:
        log.debug("degenerate belief update: no particles in observed child")
        pts = [BetaParticle()] * capacity
    n = len(pts)
    while len(pts) < capacity:
        pts.append(_jittered(pts[rng.randrange(n)], rng))
    return BeliefSet(pts, capacity)


def classify_response(blocked_move: HumanAction, robot: "RobotKind | int",
                      robot_move: Optional[HumanAction],
                      next_action: HumanAction) -> Optional[Outcome]:
    """Label the human's follow-up action after an intervention.

    After an interrupt, anything other than repeating the blocked move counts
    as compliance. After a take-control, compliance means neither repeating
    the overridden move nor immediately undoing the robot's move. No-assist
    turns carry no compliance evidence and return None.
    """
    kind = RobotKind(int(robot))
    if kind == RobotKind.NO_ASSIST:
        return None
    if kind in INTERRUPT_KINDS:
        return Outcome.OPPOSE if next_action == blocked_move else Outcome.COMPLY
    assert kind in TAKE_CONTROL_KINDS and robot_move is not None
    undo = OPPOSITE[robot_move]
    if next_action == blocked_move or next_action == undo:
        return Outcome.OPPOSE
    return Outcome.COMPLY
