"""Command-line front end.

Subcommands load JSON inputs, run the library, and emit deterministic
reports: sorted keys, canonical (lexicographic assignment) ordering, 17
significant digits. Identical inputs and flags give byte-identical output.

Exit codes:
  0  success; for `check`, all requested checks passed
  1  a requested check failed, or a runtime contract was violated
  2  schema violation (malformed JSON, bad field, bad flag combination)
  3  zero-mass conditioning context without --skip-zero-mass
  4  coverage mismatch (a table misses required contexts or cells)
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .coherence import DirectionPair, EventValueFunction, build_problem, order_independence_check
from .countable import DEFAULT_MAX_DOUBLINGS, DEFAULT_START, log_normalizer_truncated
from .dist import Assignment, DistVector, JointTable, conditional, iter_group_assignments
from .errors import (
    CoverageMismatch,
    SchemaError,
    SoftTiltError,
    ZeroMassContext,
)
from .identify import (
    Direction,
    RewardTable,
    calibrate_rewards,
    check_admissibility,
    construct_posterior,
    default_direction,
    gauge_equivalent,
    identify_interaction,
)
from .io import (
    LoadedRewards,
    baseline_from_doc,
    direction_fields,
    direction_from_tag,
    dumps_report,
    family_from_doc,
    interaction_from_doc,
    interaction_to_doc,
    joint_from_doc,
    load_json,
    reward_from_doc,
    reward_to_doc,
    values_from_doc,
)
from .tilt import SolverConfig, kl_decomposition_residual, logsumexp, solve_tilt

IDENTITY_TOL = 1e-10
EXTERNAL_ADMIT_TOL = 1e-8
CHECK_NAMES = ("gauge", "admissibility", "commute", "decomposition")


# ------------------------------------------------------------- utilities

def _obj(assignment: Assignment) -> dict:
    return dict(assignment.items_sorted)


def _sorted_contexts(joint: JointTable, names: Sequence[str]) -> list[Assignment]:
    cells = iter_group_assignments(joint.group(names))
    return sorted(cells, key=lambda a: a.sort_key)


def _emit(out: str | None, doc) -> None:
    text = dumps_report(doc) + "\n"
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_joint(path: str) -> JointTable:
    return joint_from_doc(load_json(path))


def _pick_direction(args, joint: JointTable) -> Direction:
    if getattr(args, "direction", None):
        return direction_from_tag(args.direction, joint.names)
    return default_direction(joint)


def _dist_entries(dist: DistVector) -> list[dict]:
    rows = sorted(zip(dist.outcomes(), dist.probs), key=lambda t: t[0].sort_key)
    return [{"outcome": _obj(o), "q": float(p)} for o, p in rows]


def _zero_rewards(joint: JointTable, direction: Direction) -> RewardTable:
    outcomes = list(iter_group_assignments(joint.group(direction.target)))
    entries = {
        ctx: {o: 0.0 for o in outcomes}
        for ctx in _sorted_contexts(joint, direction.conditioning)
    }
    return RewardTable(direction=direction, entries=entries, convention="zero rewards")


def _require_context_coverage(joint: JointTable, table: RewardTable, label: str) -> None:
    for ctx in _sorted_contexts(joint, table.direction.conditioning):
        if joint.event_mass(ctx) > 0 and ctx not in table.entries:
            raise CoverageMismatch(
                f"{label} has no entries for positive-mass context {ctx!r}"
            )


# ------------------------------------------------------------------ solve

def cmd_solve(args) -> int:
    joint = _load_joint(args.joint)
    if args.rewards:
        loaded = reward_from_doc(load_json(args.rewards), joint, fill_zero=args.fill_zero)
        direction = loaded.direction
        alpha = args.alpha if args.alpha is not None else loaded.alpha
        rewards, terminals = loaded.rewards, loaded.terminals
    else:
        direction = _pick_direction(args, joint)
        alpha = args.alpha if args.alpha is not None else 1.0
        rewards, terminals = _zero_rewards(joint, direction), EventValueFunction.zero()
    config = SolverConfig(alpha=alpha)
    entries = []
    skipped = []
    for ctx in _sorted_contexts(joint, direction.conditioning):
        if joint.event_mass(ctx) == 0:
            if not args.skip_zero_mass:
                raise ZeroMassContext(
                    f"conditioning event {ctx!r} has zero probability "
                    "(pass --skip-zero-mass to skip such contexts)"
                )
            skipped.append({"context": _obj(ctx), "reason": "zero conditioning mass"})
            continue
        if ctx not in rewards.entries:
            raise CoverageMismatch(
                f"reward file has no entries for positive-mass context {ctx!r}"
            )
        solution = solve_tilt(build_problem(joint, terminals, config, rewards, ctx))
        entries.append(
            {
                "context": _obj(ctx),
                "optimizer": _dist_entries(solution.optimizer),
                "soft_value": solution.soft_value,
                "log_normalizer": solution.log_normalizer,
            }
        )
    doc = direction_fields(direction)
    doc.update({"alpha": float(alpha), "entries": entries, "skipped": skipped})
    _emit(args.out, doc)
    return 0


# --------------------------------------------------------------- identify

def cmd_identify(args) -> int:
    joint = _load_joint(args.joint)
    direction = _pick_direction(args, joint)
    baseline = baseline_from_doc(load_json(args.baseline_file), joint) if args.baseline_file else None
    terminals = (
        values_from_doc(load_json(args.values), joint) if args.values else EventValueFunction.zero()
    )
    table = identify_interaction(joint, direction)
    calib = calibrate_rewards(joint, direction, terminals, args.alpha, baseline=baseline)

    skipped = [
        {"context": _obj(ctx), "reason": "zero conditioning mass"}
        for ctx in _sorted_contexts(joint, direction.conditioning)
        if joint.event_mass(ctx) == 0
    ]
    excluded = [
        {"context": _obj(ctx), "outcome": _obj(o), "reason": "zero joint mass"}
        for ctx, o in calib.excluded
    ]
    report = direction_fields(direction)
    report.update(
        {
            "alpha": float(args.alpha),
            "contexts": len(table.values),
            "context_values": [
                {"context": _obj(ctx), "V": calib.context_values[ctx]}
                for ctx in sorted(calib.context_values, key=lambda a: a.sort_key)
            ],
            "excluded": excluded,
            "skipped": skipped,
        }
    )
    prefix = args.out
    _emit(f"{prefix}.interaction.json", interaction_to_doc(table, args.alpha))
    _emit(f"{prefix}.rewards.json", reward_to_doc(args.alpha, calib.rewards, terminals))
    _emit(f"{prefix}.report.json", report)
    return 0


# ------------------------------------------------------------------ check

@dataclass
class CheckReport:
    """Outcome of one named check at one tolerance."""

    check: str
    tolerance: float
    max_residual: float
    passed: bool
    residuals: list[tuple[Assignment, float]]
    skipped: list[tuple[Assignment, str]] = field(default_factory=list)
    details: dict | None = None

    def to_doc(self) -> dict:
        doc = {
            "check": self.check,
            "tolerance": self.tolerance,
            "max_residual": self.max_residual,
            "passed": self.passed,
            "residuals": [
                {"at": _obj(cell), "residual": value}
                for cell, value in sorted(self.residuals, key=lambda t: t[0].sort_key)
            ],
            "skipped": [
                {"at": _obj(cell), "reason": reason}
                for cell, reason in sorted(self.skipped, key=lambda t: t[0].sort_key)
            ],
        }
        if self.details is not None:
            doc["details"] = self.details
        return doc


def _check_gauge(joint: JointTable, loaded: LoadedRewards, tol: float) -> CheckReport:
    fresh = calibrate_rewards(joint, loaded.direction, loaded.terminals, loaded.alpha)
    cmp = gauge_equivalent(
        (loaded.rewards, loaded.terminals), (fresh.rewards, loaded.terminals), joint, tol=tol
    )
    details: dict = {"convention": loaded.rewards.convention}
    if cmp.shifts is not None:
        details["shifts"] = [
            {"context": _obj(ctx), "c": cmp.shifts[ctx]}
            for ctx in sorted(cmp.shifts, key=lambda a: a.sort_key)
        ]
    if cmp.witness is not None:
        details["witness"] = _obj(cmp.witness[0].union(cmp.witness[1]))
    return CheckReport(
        check="gauge",
        tolerance=tol,
        max_residual=cmp.max_residual,
        passed=cmp.equivalent,
        residuals=[(ctx.union(o), v) for (ctx, o), v in cmp.residuals.items()],
        details=details,
    )


def _check_admissibility(
    joint: JointTable,
    loaded: LoadedRewards,
    interaction_path: str | None,
    tol: float | None,
) -> CheckReport:
    if interaction_path is not None:
        _, table = interaction_from_doc(load_json(interaction_path), joint)
        if table.direction != loaded.direction:
            raise SchemaError(
                f"interaction file direction {table.direction.tag!r} does not match "
                f"the rewards direction {loaded.direction.tag!r}"
            )
        tolerance = EXTERNAL_ADMIT_TOL if tol is None else tol
        source = "external file"
    else:
        table = identify_interaction(joint, loaded.direction)
        tolerance = IDENTITY_TOL if tol is None else tol
        source = "identified from joint"
    residuals = check_admissibility(table, joint)
    skipped = [
        (ctx, "zero conditioning mass")
        for ctx in _sorted_contexts(joint, loaded.direction.conditioning)
        if joint.event_mass(ctx) == 0
    ]
    max_residual = max(residuals.values(), default=0.0)
    return CheckReport(
        check="admissibility",
        tolerance=tolerance,
        max_residual=max_residual,
        passed=max_residual <= tolerance,
        residuals=list(residuals.items()),
        skipped=skipped,
        details={"source": source},
    )


def _merge_terminals(a: EventValueFunction, b: EventValueFunction) -> EventValueFunction:
    merged = {event: a.value(event) for event in a.events()}
    for event in b.events():
        v = b.value(event)
        if event in merged and abs(merged[event] - v) > 1e-12:
            raise CoverageMismatch(
                f"terminal values disagree at event {event!r}: {merged[event]!r} vs {v!r}"
            )
        merged.setdefault(event, v)
    default = a.default if a.default is not None else b.default
    return EventValueFunction(merged, default=default)


def _check_commute(
    joint: JointTable,
    loaded: LoadedRewards,
    swapped: LoadedRewards,
    tol: float,
) -> CheckReport:
    if swapped.direction != loaded.direction.swapped():
        raise SchemaError(
            f"--rewards-swapped direction {swapped.direction.tag!r} is not the swap "
            f"of {loaded.direction.tag!r}"
        )
    if swapped.alpha != loaded.alpha:
        raise SchemaError(
            f"alpha disagrees between reward files: {loaded.alpha!r} vs {swapped.alpha!r}"
        )
    _require_context_coverage(joint, swapped.rewards, "--rewards-swapped file")
    terminals = _merge_terminals(loaded.terminals, swapped.terminals)
    pair = DirectionPair(
        joint=joint,
        values=terminals,
        config=SolverConfig(alpha=loaded.alpha),
        forward=loaded.direction,
    )
    report = order_independence_check(pair, loaded.rewards, swapped.rewards, tol=tol)
    details = {
        "identification_max": {
            tag: max(row.values(), default=0.0)
            for tag, row in report.identification.items()
        },
        "symmetry_max": max(report.symmetry.values(), default=0.0),
        "commutativity_max": max(report.commutativity.values(), default=0.0),
    }
    return CheckReport(
        check="commute",
        tolerance=tol,
        max_residual=report.max_residual,
        passed=report.passed,
        residuals=list(report.commutativity.items()),
        skipped=list(report.skipped),
        details=details,
    )


def _check_decomposition(joint: JointTable, loaded: LoadedRewards, tol: float) -> CheckReport:
    config = SolverConfig(alpha=loaded.alpha)
    residuals: list[tuple[Assignment, float]] = []
    skipped: list[tuple[Assignment, str]] = []
    for ctx in _sorted_contexts(joint, loaded.direction.conditioning):
        if joint.event_mass(ctx) == 0:
            skipped.append((ctx, "zero conditioning mass"))
            continue
        problem = build_problem(joint, loaded.terminals, config, loaded.rewards, ctx)
        solution = solve_tilt(problem)
        probes = [problem.prior, solution.optimizer]
        for i, p in enumerate(problem.prior.probs):
            if p > 0:
                point = tuple(1.0 if j == i else 0.0 for j in range(len(problem.prior.probs)))
                probes.append(DistVector(problem.prior.over, point))
        worst = max(kl_decomposition_residual(problem, probe) for probe in probes)
        residuals.append((ctx, worst))
    max_residual = max((v for _, v in residuals), default=0.0)
    return CheckReport(
        check="decomposition",
        tolerance=tol,
        max_residual=max_residual,
        passed=max_residual <= tol,
        residuals=residuals,
        skipped=skipped,
    )


def cmd_check(args) -> int:
    joint = _load_joint(args.joint)
    loaded = reward_from_doc(load_json(args.rewards), joint, fill_zero=args.fill_zero)
    _require_context_coverage(joint, loaded.rewards, "rewards file")
    swapped = (
        reward_from_doc(load_json(args.rewards_swapped), joint, fill_zero=args.fill_zero)
        if args.rewards_swapped
        else None
    )
    if args.checks:
        names = [n.strip() for n in args.checks.split(",") if n.strip()]
        unknown = [n for n in names if n not in CHECK_NAMES]
        if unknown:
            raise SchemaError(
                f"unknown check {unknown[0]!r}; choose from {', '.join(CHECK_NAMES)}"
            )
        if "commute" in names and swapped is None:
            raise SchemaError("the commute check needs --rewards-swapped")
    else:
        names = [n for n in CHECK_NAMES if n != "commute" or swapped is not None]

    identity_tol = args.tol if args.tol is not None else IDENTITY_TOL
    reports: list[CheckReport] = []
    for name in names:
        if name == "gauge":
            reports.append(_check_gauge(joint, loaded, identity_tol))
        elif name == "admissibility":
            reports.append(_check_admissibility(joint, loaded, args.interaction, args.tol))
        elif name == "commute":
            reports.append(_check_commute(joint, loaded, swapped, identity_tol))
        elif name == "decomposition":
            reports.append(_check_decomposition(joint, loaded, identity_tol))
    all_passed = all(r.passed for r in reports)
    doc = direction_fields(loaded.direction)
    doc.update(
        {
            "alpha": loaded.alpha,
            "checks": [r.to_doc() for r in reports],
            "all_passed": all_passed,
        }
    )
    _emit(args.out, doc)
    return 0 if all_passed else 1


# -------------------------------------------------------------- construct

def cmd_construct(args) -> int:
    joint = _load_joint(args.joint)
    _, table = interaction_from_doc(load_json(args.interaction), joint)
    direction = table.direction
    tol_admit = args.tol if args.tol is not None else EXTERNAL_ADMIT_TOL
    entries = []
    skipped = []
    for ctx in table.contexts():
        try:
            prior = conditional(joint, direction.target, ctx.restrict(direction.base))
        except ZeroMassContext:
            if not args.skip_zero_mass:
                raise
            skipped.append({"context": _obj(ctx), "reason": "zero base mass"})
            continue
        row = table.values[ctx]
        signal = []
        log_terms = []
        for outcome, p in zip(prior.outcomes(), prior.probs):
            if p == 0:
                signal.append(-math.inf)
                continue
            if outcome not in row:
                raise CoverageMismatch(
                    f"interaction file misses prior-supported outcome {outcome!r} "
                    f"at context {ctx!r}"
                )
            signal.append(row[outcome])
            if row[outcome] > -math.inf:
                log_terms.append(math.log(p) + row[outcome])
        posterior = construct_posterior(prior, signal, tol_admit=tol_admit)
        entries.append(
            {
                "context": _obj(ctx),
                "posterior": _dist_entries(posterior),
                "normalization_residual": abs(logsumexp(log_terms)),
            }
        )
    doc = direction_fields(direction)
    doc.update({"tol_admit": tol_admit, "entries": entries, "skipped": skipped})
    _emit(args.out, doc)
    return 0


# -------------------------------------------------------------- countable

def cmd_countable(args) -> int:
    family = family_from_doc(load_json(args.family))
    estimate, cert = log_normalizer_truncated(
        family,
        eps_tail=args.eps_tail,
        start=args.start,
        max_doublings=args.max_doublings,
    )
    doc = {
        "family": family.describe,
        "eps_tail": args.eps_tail,
        "status": cert.status.value,
        "log_normalizer": estimate,
        "terms": cert.N,
        "log_partial": cert.log_partial,
        "tail_bound": cert.tail_bound,
    }
    _emit(args.out, doc)
    return 0


# ------------------------------------------------------------------- main

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="softtilt",
        description="Exponential-tilt solving, calibration, and coherence checks "
        "over discrete joint tables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_out(p):
        p.add_argument("--out", help="write the report here instead of stdout")

    p = sub.add_parser("solve", help="tilt the per-context priors and report optimizers")
    p.add_argument("joint", help="joint table JSON file")
    p.add_argument("--rewards", help="reward/terminal JSON file")
    p.add_argument("--alpha", type=float, help="concentration; overrides the file value")
    p.add_argument("--direction", help="direction tag such as x_given_yz")
    p.add_argument("--skip-zero-mass", action="store_true")
    p.add_argument("--fill-zero", action="store_true", help="default missing reward entries to 0")
    common_out(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("identify", help="extract interactions and calibrate rewards")
    p.add_argument("joint")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--direction")
    p.add_argument("--values", help="terminal event-value JSON file (default: all zero)")
    p.add_argument("--baseline-file", help="per-context baseline shift JSON file")
    p.add_argument("--out", required=True, help="output prefix for the three artifacts")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("check", help="run coherence checks against a reward file")
    p.add_argument("joint")
    p.add_argument("--rewards", required=True)
    p.add_argument("--rewards-swapped", help="reward file for the swapped direction")
    p.add_argument("--interaction", help="externally produced interaction file")
    p.add_argument("--checks", help=f"comma list from: {', '.join(CHECK_NAMES)}")
    p.add_argument("--tol", type=float, help="override the per-check default tolerance")
    p.add_argument("--fill-zero", action="store_true")
    common_out(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("construct", help="rebuild posteriors from an interaction file")
    p.add_argument("joint")
    p.add_argument("--interaction", required=True)
    p.add_argument("--tol", type=float, help="admissibility tolerance (default 1e-8)")
    p.add_argument("--skip-zero-mass", action="store_true")
    common_out(p)
    p.set_defaults(func=cmd_construct)

    p = sub.add_parser("countable", help="certified log-normalizer for a countable family")
    p.add_argument("family", help="family description JSON file")
    p.add_argument("--eps-tail", type=float, default=1e-12)
    p.add_argument("--start", type=int, default=DEFAULT_START)
    p.add_argument("--max-doublings", type=int, default=DEFAULT_MAX_DOUBLINGS)
    common_out(p)
    p.set_defaults(func=cmd_countable)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ZeroMassContext as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CoverageMismatch as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except SoftTiltError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
