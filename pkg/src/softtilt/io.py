"""JSON wire formats and deterministic serialization.

All emitted documents are rendered by a local writer: keys sorted, entry
lists in canonical (lexicographic assignment) order, numbers at 17
significant digits, nonfinite floats as quoted strings ("-inf" is the
interaction sentinel). Same inputs and flags therefore produce
byte-identical bytes.
"""

from __future__ import annotations

import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from math import fsum
from pathlib import Path

from .coherence import EventValueFunction
from .countable import CountableFamily
from .dist import Assignment, JointTable, VariableSpec
from .errors import SchemaError, SoftTiltError, ValidationError
from .identify import Direction, GaugeShift, InteractionTable, RewardTable

JOINT_SUM_TOL = 1e-9


# ---------------------------------------------------------------- reading

def load_json(path: str | Path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError(f"{path}: {exc.strerror or exc}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"
        ) from exc


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def _number(value, message: str) -> float:
    _require(isinstance(value, (int, float)) and not isinstance(value, bool), message)
    out = float(value)
    _require(math.isfinite(out), message)
    return out


def _binding(obj, what: str) -> Assignment:
    _require(isinstance(obj, dict) and obj, f"{what} must be a nonempty object")
    for k, v in obj.items():
        _require(isinstance(k, str) and isinstance(v, str), f"{what} must map strings to strings")
    return Assignment(obj)


def _check_binding(joint: JointTable, binding: Assignment, what: str) -> None:
    for name, label in binding.items_sorted:
        try:
            spec = joint.variable(name)
        except ValidationError as exc:
            raise SchemaError(f"{what}: {exc}") from exc
        _require(
            label in spec.alphabet,
            f"{what}: label {label!r} is not in the alphabet of {name!r}",
        )


def joint_from_doc(doc) -> JointTable:
    _require(isinstance(doc, dict), "joint document must be an object")
    var_docs = doc.get("variables")
    _require(isinstance(var_docs, list) and var_docs, "'variables' must be a nonempty array")
    specs = []
    for item in var_docs:
        _require(isinstance(item, dict), "each variable must be an object")
        name = item.get("name")
        alphabet = item.get("alphabet")
        _require(isinstance(name, str) and bool(name), "variable 'name' must be a nonempty string")
        _require(
            isinstance(alphabet, list) and alphabet and all(isinstance(a, str) for a in alphabet),
            f"variable {name!r}: 'alphabet' must be a nonempty array of strings",
        )
        try:
            specs.append(VariableSpec(name=name, alphabet=tuple(alphabet)))
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc
    mass_docs = doc.get("mass")
    _require(isinstance(mass_docs, list), "'mass' must be an array")
    pairs = []
    seen: set[Assignment] = set()
    total_probe = []
    for item in mass_docs:
        _require(isinstance(item, dict), "each mass entry must be an object")
        assign = _binding(item.get("assign"), "'assign'")
        p = item.get("p")
        _require(
            isinstance(p, (int, float)) and not isinstance(p, bool) and math.isfinite(float(p)),
            f"'p' at {assign!r} must be a finite number",
        )
        p = float(p)
        _require(p >= 0, f"negative mass {p!r} at {assign!r}")
        _require(assign not in seen, f"duplicate assignment {assign!r}")
        seen.add(assign)
        pairs.append((assign, p))
        total_probe.append(p)
    total = fsum(total_probe)
    _require(
        abs(total - 1.0) <= JOINT_SUM_TOL,
        f"masses sum to {total!r}, off 1 by more than {JOINT_SUM_TOL!r}",
    )
    try:
        return JointTable(specs, pairs, tol_norm=JOINT_SUM_TOL)
    except ValidationError as exc:
        raise SchemaError(str(exc)) from exc


def joint_to_doc(joint: JointTable) -> dict:
    return {
        "variables": [
            {"name": s.name, "alphabet": list(s.alphabet)} for s in joint.variables
        ],
        "mass": [
            {"assign": dict(cell.items_sorted), "p": float(p)}
            for cell, p in joint.support()
        ],
    }


# ------------------------------------------------------------- directions

def segment_names(text: str, names: Sequence[str]) -> tuple[str, ...]:
    """Split a lowercase concatenation of variable names back into names."""
    lowered: dict[str, str] = {}
    for name in names:
        low = name.lower()
        if low in lowered:
            raise SchemaError(f"variable names collide case-insensitively: {name!r}")
        lowered[low] = name
    ordered = sorted(lowered, key=len, reverse=True)

    def walk(i: int):
        if i == len(text):
            return []
        for low in ordered:
            if text.startswith(low, i):
                rest = walk(i + len(low))
                if rest is not None:
                    return [lowered[low]] + rest
        return None

    out = walk(0)
    if out is None:
        raise SchemaError(f"cannot segment {text!r} into variable names {sorted(names)!r}")
    return tuple(out)


def direction_from_tag(tag: str, names: Sequence[str]) -> Direction:
    _require(isinstance(tag, str) and tag.count("_given_") == 1, f"bad direction tag {tag!r}")
    left, _, right = tag.partition("_given_")
    target = segment_names(left, names)
    cond = segment_names(right, names)
    _require(bool(target) and bool(cond), f"bad direction tag {tag!r}")
    # convention: the last conditioning group is the observed one
    try:
        return Direction(target=target, base=cond[:-1], observed=(cond[-1],))
    except ValidationError as exc:
        raise SchemaError(f"direction tag {tag!r}: {exc}") from exc


def direction_fields(direction: Direction) -> dict:
    return {
        "direction": direction.tag,
        "direction_groups": {
            "target": list(direction.target),
            "base": list(direction.base),
            "observed": list(direction.observed),
        },
    }


def direction_from_doc(doc: dict, joint: JointTable) -> Direction:
    groups = doc.get("direction_groups")
    if groups is not None:
        _require(isinstance(groups, dict), "'direction_groups' must be an object")
        for key in ("target", "base", "observed"):
            part = groups.get(key, [] if key == "base" else None)
            _require(
                isinstance(part, list) and all(isinstance(n, str) for n in part),
                f"'direction_groups.{key}' must be an array of strings",
            )
        try:
            direction = Direction(
                target=tuple(groups["target"]),
                base=tuple(groups.get("base", [])),
                observed=tuple(groups["observed"]),
            )
        except ValidationError as exc:
            raise SchemaError(str(exc)) from exc
    else:
        tag = doc.get("direction")
        _require(isinstance(tag, str), "'direction' must be a string tag")
        direction = direction_from_tag(tag, joint.names)
    try:
        joint.group(direction.target + direction.base + direction.observed)
    except ValidationError as exc:
        raise SchemaError(str(exc)) from exc
    return direction


# ------------------------------------------------- reward and interaction

@dataclass
class LoadedRewards:
    """A reward/terminal document bound to a joint."""

    alpha: float
    direction: Direction
    rewards: RewardTable
    terminals: EventValueFunction


def reward_from_doc(doc, joint: JointTable, fill_zero: bool = False) -> LoadedRewards:
    _require(isinstance(doc, dict), "reward document must be an object")
    alpha = _number(doc.get("alpha"), "'alpha' must be a finite number")
    _require(alpha > 0, f"'alpha' must be > 0, got {alpha!r}")
    direction = direction_from_doc(doc, joint)
    entry_docs = doc.get("entries")
    _require(isinstance(entry_docs, list), "'entries' must be an array")
    entries: dict[Assignment, dict[Assignment, float]] = {}
    events: dict[Assignment, float] = {}
    for item in entry_docs:
        _require(isinstance(item, dict), "each entry must be an object")
        ctx = _binding(item.get("context"), "'context'")
        outcome = _binding(item.get("outcome"), "'outcome'")
        _check_binding(joint, ctx, "'context'")
        _check_binding(joint, outcome, "'outcome'")
        _require(
            set(ctx) == set(direction.conditioning),
            f"'context' must bind exactly {sorted(direction.conditioning)!r}, got {ctx!r}",
        )
        _require(
            set(outcome) == set(direction.target),
            f"'outcome' must bind exactly {sorted(direction.target)!r}, got {outcome!r}",
        )
        r = _number(item.get("r"), f"'r' at {ctx!r}/{outcome!r} must be a finite number")
        v = _number(item.get("V"), f"'V' at {ctx!r}/{outcome!r} must be a finite number")
        row = entries.setdefault(ctx, {})
        _require(outcome not in row, f"duplicate entry at {ctx!r}/{outcome!r}")
        row[outcome] = r
        events[outcome.union(ctx)] = v
    _fill_or_check_coverage(joint, direction, entries, events, fill_zero)
    rewards = RewardTable(direction=direction, entries=entries, convention="external")
    return LoadedRewards(
        alpha=alpha,
        direction=direction,
        rewards=rewards,
        terminals=EventValueFunction(events),
    )


def _fill_or_check_coverage(joint, direction, entries, events, fill_zero: bool) -> None:
    """Every prior-supported outcome in a positive-mass context needs an entry."""
    from .dist import conditional

    for ctx, row in entries.items():
        if joint.event_mass(ctx) == 0:
            continue  # handled at command level (skip or ZeroMassContext)
        prior = conditional(joint, direction.target, ctx.restrict(direction.base))
        for outcome, p in zip(prior.outcomes(), prior.probs):
            if p == 0 or outcome in row:
                continue
            if not fill_zero:
                raise SchemaError(
                    f"missing entry for outcome {outcome!r} at context {ctx!r} "
                    "(pass --fill-zero to default missing entries to 0)"
                )
            row[outcome] = 0.0
            events.setdefault(outcome.union(ctx), 0.0)


def reward_to_doc(
    alpha: float,
    rewards: RewardTable,
    terminals: EventValueFunction,
) -> dict:
    entries = []
    for ctx in rewards.contexts():
        for outcome in rewards.outcomes_for(ctx):
            entries.append(
                {
                    "context": dict(ctx.items_sorted),
                    "outcome": dict(outcome.items_sorted),
                    "r": rewards.entries[ctx][outcome],
                    "V": float(terminals.value(outcome.union(ctx))),
                }
            )
    doc = direction_fields(rewards.direction)
    doc["alpha"] = float(alpha)
    doc["entries"] = entries
    return doc


def interaction_from_doc(doc, joint: JointTable) -> tuple[float | None, InteractionTable]:
    _require(isinstance(doc, dict), "interaction document must be an object")
    alpha = doc.get("alpha")
    if alpha is not None:
        alpha = _number(alpha, "'alpha' must be a finite number")
        _require(alpha > 0, f"'alpha' must be > 0, got {alpha!r}")
    direction = direction_from_doc(doc, joint)
    entry_docs = doc.get("entries")
    _require(isinstance(entry_docs, list), "'entries' must be an array")
    values: dict[Assignment, dict[Assignment, float]] = {}
    for item in entry_docs:
        _require(isinstance(item, dict), "each entry must be an object")
        ctx = _binding(item.get("context"), "'context'")
        outcome = _binding(item.get("outcome"), "'outcome'")
        _check_binding(joint, ctx, "'context'")
        _check_binding(joint, outcome, "'outcome'")
        _require(
            set(ctx) == set(direction.conditioning),
            f"'context' must bind exactly {sorted(direction.conditioning)!r}, got {ctx!r}",
        )
        _require(
            set(outcome) == set(direction.target),
            f"'outcome' must bind exactly {sorted(direction.target)!r}, got {outcome!r}",
        )
        raw = item.get("i")
        if raw == "-inf":
            value = -math.inf
        else:
            value = _number(raw, f"'i' at {ctx!r}/{outcome!r} must be a number or \"-inf\"")
        row = values.setdefault(ctx, {})
        _require(outcome not in row, f"duplicate entry at {ctx!r}/{outcome!r}")
        row[outcome] = value
    return alpha, InteractionTable(direction=direction, values=values)


def interaction_to_doc(table: InteractionTable, alpha: float | None = None) -> dict:
    entries = []
    for ctx in table.contexts():
        for outcome in table.outcomes_for(ctx):
            value = table.values[ctx][outcome]
            entries.append(
                {
                    "context": dict(ctx.items_sorted),
                    "outcome": dict(outcome.items_sorted),
                    "i": "-inf" if value == -math.inf else value,
                }
            )
    doc = direction_fields(table.direction)
    if alpha is not None:
        doc["alpha"] = float(alpha)
    doc["entries"] = entries
    return doc


# -------------------------------------------------- values and baselines

def values_from_doc(doc, joint: JointTable | None = None) -> EventValueFunction:
    _require(isinstance(doc, dict), "values document must be an object")
    entry_docs = doc.get("entries")
    _require(isinstance(entry_docs, list), "'entries' must be an array")
    pairs = []
    seen: set[Assignment] = set()
    for item in entry_docs:
        _require(isinstance(item, dict), "each entry must be an object")
        event = _binding(item.get("event"), "'event'")
        if joint is not None:
            _check_binding(joint, event, "'event'")
        _require(event not in seen, f"duplicate event {event!r}")
        seen.add(event)
        v = _number(item.get("v"), f"'v' at {event!r} must be a finite number")
        pairs.append((event, v))
    default = doc.get("default")
    if default is not None:
        default = _number(default, "'default' must be a finite number")
    return EventValueFunction(pairs, default=default)


def values_to_doc(values: EventValueFunction) -> dict:
    doc: dict = {
        "entries": [
            {"event": dict(event.items_sorted), "v": values.value(event)}
            for event in values.events()
        ]
    }
    if values.default is not None:
        doc["default"] = values.default
    return doc


def baseline_from_doc(doc, joint: JointTable | None = None) -> GaugeShift:
    _require(isinstance(doc, dict), "baseline document must be an object")
    entry_docs = doc.get("entries", [])
    _require(isinstance(entry_docs, list), "'entries' must be an array")
    entries: dict[Assignment, float] = {}
    for item in entry_docs:
        _require(isinstance(item, dict), "each entry must be an object")
        ctx = _binding(item.get("context"), "'context'")
        if joint is not None:
            _check_binding(joint, ctx, "'context'")
        _require(ctx not in entries, f"duplicate context {ctx!r}")
        entries[ctx] = _number(item.get("c"), f"'c' at {ctx!r} must be a finite number")
    default = doc.get("default")
    if default is not None:
        default = _number(default, "'default' must be a finite number")
    try:
        return GaugeShift(entries=entries, default=default)
    except ValidationError as exc:
        raise SchemaError(str(exc)) from exc


# -------------------------------------------------------------- countable

def family_from_doc(doc) -> CountableFamily:
    _require(isinstance(doc, dict), "family document must be an object")
    prior = doc.get("prior")
    _require(isinstance(prior, dict), "'prior' must be an object")
    _require(prior.get("kind") == "geometric", "only 'geometric' priors are built in")
    q = _number(prior.get("q"), "'prior.q' must be a finite number")
    _require(0.0 < q < 1.0, f"'prior.q' must lie in (0, 1), got {q!r}")
    payoff = doc.get("payoff")
    _require(isinstance(payoff, dict), "'payoff' must be an object")
    kind = payoff.get("kind")
    _require(kind in ("constant", "linear"), "only 'constant' and 'linear' payoffs are built in")
    bounds = doc.get("bounds")
    _require(isinstance(bounds, dict), "'bounds' must be an object")
    _require(bounds.get("tail") == "geometric", "'bounds.tail' must be 'geometric'")
    _require(
        bounds.get("payoff") == kind,
        f"'bounds.payoff' must match the payoff kind {kind!r}",
    )
    if kind == "constant":
        value = _number(payoff.get("value"), "'payoff.value' must be a finite number")
        return CountableFamily.geometric_constant(q, value)
    slope = _number(payoff.get("slope"), "'payoff.slope' must be a finite number")
    intercept = payoff.get("intercept", 0.0)
    intercept = _number(intercept, "'payoff.intercept' must be a finite number")
    return CountableFamily.geometric_linear(q, slope, intercept)


# ------------------------------------------------------------- rendering

def format_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if x == math.inf:
        return '"inf"'
    if x == -math.inf:
        return '"-inf"'
    return format(x, ".17g")


def dumps_report(doc) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, 2-space indent."""
    return _render(doc, 0)


def _render(obj, depth: int) -> str:
    pad = "  " * depth
    inner = "  " * (depth + 1)
    if isinstance(obj, Mapping):
        if not obj:
            return "{}"
        parts = []
        for key in sorted(obj):
            if not isinstance(key, str):
                raise SoftTiltError(f"report keys must be strings, got {key!r}")
            parts.append(f"{inner}{json.dumps(key)}: {_render(obj[key], depth + 1)}")
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        parts = [f"{inner}{_render(item, depth + 1)}" for item in obj]
        return "[\n" + ",\n".join(parts) + "\n" + pad + "]"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return format_float(obj)
    raise SoftTiltError(f"cannot serialize {type(obj).__name__} into a report")
