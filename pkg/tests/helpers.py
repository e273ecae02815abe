"""Seeded generators shared by the unit and acceptance suites.

Random joints follow the acceptance recipe: 3 variables, alphabet sizes
2-4, Dirichlet-like positive masses (normalized exponential draws). Masses
are converted to exact rationals before normalization so generated tables
sum to exactly one.
"""

from __future__ import annotations

import random
from fractions import Fraction

from softtilt import (
    Assignment,
    DistVector,
    EventValueFunction,
    GaugeShift,
    JointTable,
    SoftUpdateProblem,
    SolverConfig,
    VariableSpec,
    iter_group_assignments,
)

VAR_NAMES = ("X", "Y", "Z")
BITS = ("0", "1")


def sparse_joint() -> JointTable:
    """Binary joint where context (Y=1, Z=0) has zero mass and the cell
    (X=1, Y=0, Z=0) is empty while its prior conditional is positive."""
    specs = tuple(VariableSpec(name, BITS) for name in VAR_NAMES)
    mass = {
        Assignment({"X": "0", "Y": "0", "Z": "0"}): Fraction(2, 5),
        Assignment({"X": "0", "Y": "0", "Z": "1"}): Fraction(1, 10),
        Assignment({"X": "0", "Y": "1", "Z": "1"}): Fraction(3, 10),
        Assignment({"X": "1", "Y": "1", "Z": "1"}): Fraction(1, 10),
        Assignment({"X": "1", "Y": "0", "Z": "1"}): Fraction(1, 10),
    }
    return JointTable(specs, mass)


def random_specs(rng: random.Random, min_k: int = 2, max_k: int = 4) -> tuple[VariableSpec, ...]:
    return tuple(
        VariableSpec(name, tuple(str(i) for i in range(rng.randint(min_k, max_k))))
        for name in VAR_NAMES
    )


def random_joint(rng: random.Random, min_k: int = 2, max_k: int = 4) -> JointTable:
    """Strictly positive random joint over 3 variables."""
    specs = random_specs(rng, min_k, max_k)
    cells = list(iter_group_assignments(specs))
    raw = [Fraction(rng.expovariate(1.0) + 1e-3).limit_denominator(10**9) for _ in cells]
    total = sum(raw)
    return JointTable(specs, [(c, w / total) for c, w in zip(cells, raw)])


def dirichlet_probs(rng: random.Random, k: int, allow_zero: bool = False) -> tuple[float, ...]:
    raw = [rng.expovariate(1.0) for _ in range(k)]
    if allow_zero and k > 1 and rng.random() < 0.3:
        raw[rng.randrange(k)] = 0.0
    total = sum(raw)
    if total == 0:
        raw[0] = 1.0
        total = 1.0
    probs = [w / total for w in raw]
    probs[-1] = 1.0 - sum(probs[:-1])
    return tuple(probs)


def outcome_specs(k: int) -> tuple[VariableSpec, ...]:
    return (VariableSpec("X", tuple(str(i) for i in range(k))),)


def random_problem(
    rng: random.Random,
    max_k: int = 6,
    allow_zero_prior: bool = True,
) -> SoftUpdateProblem:
    """Random single-context problem: |r|, |V| <= 5, alpha log-uniform in [0.1, 10]."""
    k = rng.randint(2, max_k)
    prior = DistVector(outcome_specs(k), dirichlet_probs(rng, k, allow_zero=allow_zero_prior))
    reward = tuple(rng.uniform(-5.0, 5.0) for _ in range(k))
    terminal = tuple(rng.uniform(-5.0, 5.0) for _ in range(k))
    alpha = 10.0 ** rng.uniform(-1.0, 1.0)
    return SoftUpdateProblem(
        prior=prior, reward=reward, terminal=terminal, config=SolverConfig(alpha=alpha)
    )


def grid_problem(rng: random.Random) -> SoftUpdateProblem:
    """Two-outcome problems whose optimizer stays well inside the simplex.

    With prior in [0.2, 0.8], |r|, |V| <= 0.25 and alpha in [0.5, 2], the
    optimizer's first coordinate stays in (0.1, 0.9), so a pitch-1e-3 grid
    sits within 5e-4 of it and the objective gap (about KL/alpha, locally
    quadratic with curvature 1/(2 q (1-q) alpha)) stays below 1e-5.
    """
    u = rng.uniform(0.2, 0.8)
    prior = DistVector(outcome_specs(2), (u, 1.0 - u))
    reward = tuple(rng.uniform(-0.25, 0.25) for _ in range(2))
    terminal = tuple(rng.uniform(-0.25, 0.25) for _ in range(2))
    alpha = rng.uniform(0.5, 2.0)
    return SoftUpdateProblem(
        prior=prior, reward=reward, terminal=terminal, config=SolverConfig(alpha=alpha)
    )


def random_candidate(rng: random.Random, problem: SoftUpdateProblem) -> DistVector:
    """Random distribution supported inside the prior's support."""
    k = len(problem.prior.probs)
    raw = [rng.expovariate(1.0) if p > 0 else 0.0 for p in problem.prior.probs]
    total = sum(raw)
    probs = [w / total for w in raw]
    live = [i for i in range(k) if probs[i] > 0]
    probs[live[-1]] += 1.0 - sum(probs)
    return DistVector(problem.prior.over, tuple(probs))


def random_terminals(rng: random.Random, joint: JointTable, scale: float = 2.0) -> EventValueFunction:
    """Terminal values on every full cell, keyed by unordered event."""
    return EventValueFunction(
        {cell: rng.uniform(-scale, scale) for cell in iter_group_assignments(joint.variables)}
    )


def random_baseline(rng: random.Random, joint: JointTable, conditioning, scale: float = 2.0) -> GaugeShift:
    ctxs = iter_group_assignments(joint.group(conditioning))
    return GaugeShift(entries={ctx: rng.uniform(-scale, scale) for ctx in ctxs})


def contexts_of(joint: JointTable, names) -> list[Assignment]:
    return sorted(iter_group_assignments(joint.group(names)), key=lambda a: a.sort_key)
