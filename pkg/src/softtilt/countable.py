"""Log-normalizers over countable supports, with finiteness certificates.

The quantity is log Z with Z = sum_n p_n exp(payoff(n)), payoff already
scaled by alpha. Z is estimated by partial sums at doubling truncation
points; a user-supplied nonincreasing bound on the *tilted* tail
sum_{n>N} p_n exp(payoff(n)) certifies convergence when it drops below
eps_tail times the partial sum. The outcome is three-valued: 'finite' with
a certificate, 'diverged' when partial sums explode under nondecreasing
terms, or 'inconclusive' when the budget runs out. All accumulation happens
in log space, so large payoffs cannot overflow the partial sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable

from .errors import InvalidBounds, NotFinite, ValidationError
from .tilt import SoftUpdateProblem, logsumexp

DEFAULT_START = 16
# max truncation point is start << max_doublings; 16 << 17 keeps the
# worst-case (inconclusive) run around two million terms
DEFAULT_MAX_DOUBLINGS = 17
# partial sums never exceed the true Z, so no family with Z below this
# threshold can ever be declared diverged
DEFAULT_EXPLOSION_LOG = 500.0


class CertificateStatus(str, Enum):
    FINITE = "finite"
    DIVERGED = "diverged"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class CountableFamily:
    """A countably supported prior with an already-scaled payoff rule.

    The prior is supplied as log mass so geometric-type families stay exact
    far past the point where q^n underflows a float (underflowed masses
    would silently hide divergence). tail_bound(N) must bound
    sum_{n>N} p_n exp(payoff(n)) from above and be nonincreasing in N; it
    may be +inf where no finite bound is available.
    """

    log_prior_mass: Callable[[int], float]
    payoff: Callable[[int], float]
    tail_bound: Callable[[int], float]
    describe: str = "custom"

    @classmethod
    def from_split_bounds(
        cls,
        log_prior_mass: Callable[[int], float],
        prior_tail: Callable[[int], float],
        payoff: Callable[[int], float],
        payoff_sup: Callable[[int], float],
        describe: str = "split-bounds",
    ) -> "CountableFamily":
        """Combine a prior tail bound T(N) with a payoff sup bound B(N).

        The tilted tail is then bounded by T(N) exp(B(N)). Only usable when
        the payoff is bounded above on tails; for growing payoffs supply a
        direct tilted-tail bound instead.
        """

        def tail(n: int) -> float:
            t = prior_tail(n)
            if t < 0:
                raise InvalidBounds(f"prior tail bound at N={n} is negative: {t!r}")
            if t == 0:
                return 0.0
            return t * math.exp(payoff_sup(n))

        return cls(log_prior_mass=log_prior_mass, payoff=payoff, tail_bound=tail, describe=describe)

    @classmethod
    def geometric_linear(cls, q: float, slope: float, intercept: float = 0.0) -> "CountableFamily":
        """Prior (1-q) q^n with payoff slope*n + intercept.

        The tilted series is geometric with ratio q e^slope, so the tail
        bound is exact: (1-q) e^intercept (q e^slope)^(N+1) / (1 - q e^slope)
        when the ratio is below one, +inf otherwise.
        """
        if not (0.0 < q < 1.0):
            raise ValidationError(f"geometric parameter must lie in (0, 1), got {q!r}")
        if not math.isfinite(slope) or not math.isfinite(intercept):
            raise ValidationError("payoff slope and intercept must be finite")
        log_q = math.log(q)
        log_head = math.log1p(-q)
        ratio = q * math.exp(slope)
        scale = (1.0 - q) * math.exp(intercept)

        def tail(n: int) -> float:
            if ratio >= 1.0:
                return math.inf
            log_t = math.log(scale) + (n + 1) * math.log(ratio) - math.log1p(-ratio)
            return _safe_exp(log_t)

        return cls(
            log_prior_mass=lambda n: log_head + n * log_q,
            payoff=lambda n: slope * n + intercept,
            tail_bound=tail,
            describe=f"geometric(q={q!r}) with linear payoff",
        )

    @classmethod
    def geometric_constant(cls, q: float, value: float) -> "CountableFamily":
        """Prior (1-q) q^n with a constant payoff."""
        if not (0.0 < q < 1.0):
            raise ValidationError(f"geometric parameter must lie in (0, 1), got {q!r}")
        if not math.isfinite(value):
            raise ValidationError("payoff value must be finite")
        log_q = math.log(q)
        log_head = math.log1p(-q)
        return cls(
            log_prior_mass=lambda n: log_head + n * log_q,
            payoff=lambda n: value,
            tail_bound=lambda n: _safe_exp((n + 1) * log_q + value),
            describe=f"geometric(q={q!r}) with constant payoff",
        )

    @classmethod
    def from_finite(cls, problem: SoftUpdateProblem) -> "CountableFamily":
        """Embed a finite problem: zeros beyond the last outcome, exact tails."""
        probs = problem.prior.probs
        k = len(probs)
        payoffs = [problem.payoff(i) if probs[i] > 0 else 0.0 for i in range(k)]
        terms = [probs[i] * math.exp(payoffs[i]) if probs[i] > 0 else 0.0 for i in range(k)]
        suffix = [0.0] * (k + 1)
        for i in range(k - 1, -1, -1):
            suffix[i] = suffix[i + 1] + terms[i]

        def tail(n: int) -> float:
            return suffix[n + 1] if n + 1 < k else 0.0

        return cls(
            log_prior_mass=lambda n: (
                math.log(probs[n]) if n < k and probs[n] > 0 else -math.inf
            ),
            payoff=lambda n: payoffs[n] if n < k else 0.0,
            tail_bound=tail,
            describe=f"finite embedding ({k} outcomes)",
        )


@dataclass(frozen=True)
class TruncationCertificate:
    """What the truncation run established at its final N."""

    N: int
    partial: float
    tail_bound: float
    status: CertificateStatus
    log_partial: float


@dataclass(frozen=True)
class TruncatedTilt:
    """Truncated optimizer probabilities plus the certified tail fraction."""

    probs: tuple[float, ...]
    tail_mass: float
    certificate: TruncationCertificate


@dataclass
class _TruncationRun:
    status: CertificateStatus
    N: int
    log_partial: float
    tail_bound: float
    log_terms: list[float]


def _safe_exp(x: float) -> float:
    if x == -math.inf:
        return 0.0
    if x > 709.0:
        return math.inf
    return math.exp(x)


def _truncate(
    family: CountableFamily,
    eps_tail: float,
    start: int,
    max_doublings: int,
    explosion_log: float,
) -> _TruncationRun:
    if not math.isfinite(eps_tail) or eps_tail <= 0:
        raise ValidationError(f"eps_tail must be finite and > 0, got {eps_tail!r}")
    if start < 1 or max_doublings < 0:
        raise ValidationError("truncation schedule must have start >= 1, doublings >= 0")
    log_terms: list[float] = []
    prev_bound = math.inf
    prev_checkpoint_term: float | None = None
    run = None
    for k in range(max_doublings + 1):
        n_stop = start << k
        while len(log_terms) <= n_stop:
            n = len(log_terms)
            lp = float(family.log_prior_mass(n))
            if math.isnan(lp) or lp == math.inf:
                raise ValidationError(
                    f"log prior mass at n={n} must be in [-inf, inf), got {lp!r}"
                )
            if lp == -math.inf:
                log_terms.append(-math.inf)
                continue
            s = float(family.payoff(n))
            if math.isnan(s) or s == math.inf:
                raise ValidationError(f"payoff at n={n} must be in [-inf, inf), got {s!r}")
            log_terms.append(lp + s)
        log_partial = logsumexp(log_terms)
        bound = float(family.tail_bound(n_stop))
        if math.isnan(bound) or bound < 0:
            raise InvalidBounds(f"tail bound at N={n_stop} must be >= 0, got {bound!r}")
        if bound > prev_bound:
            raise InvalidBounds(
                f"tail bound increased along the schedule: {prev_bound!r} -> {bound!r} "
                f"at N={n_stop}"
            )
        prev_bound = bound
        certified = (bound == 0.0 and log_partial > -math.inf) or (
            bound > 0.0
            and log_partial > -math.inf
            and math.log(bound) < math.log(eps_tail) + log_partial
        )
        if certified:
            return _TruncationRun(
                status=CertificateStatus.FINITE,
                N=n_stop,
                log_partial=log_partial,
                tail_bound=bound,
                log_terms=log_terms,
            )
        last_term = log_terms[n_stop]
        if (
            log_partial > explosion_log
            and last_term > -math.inf
            and prev_checkpoint_term is not None
            and last_term >= prev_checkpoint_term - 1e-12
        ):
            return _TruncationRun(
                status=CertificateStatus.DIVERGED,
                N=n_stop,
                log_partial=log_partial,
                tail_bound=bound,
                log_terms=log_terms,
            )
        prev_checkpoint_term = last_term
        run = _TruncationRun(
            status=CertificateStatus.INCONCLUSIVE,
            N=n_stop,
            log_partial=log_partial,
            tail_bound=bound,
            log_terms=log_terms,
        )
    assert run is not None
    return run


def _certificate(run: _TruncationRun) -> TruncationCertificate:
    return TruncationCertificate(
        N=run.N,
        partial=_safe_exp(run.log_partial),
        tail_bound=run.tail_bound,
        status=run.status,
        log_partial=run.log_partial,
    )


def log_normalizer_truncated(
    family: CountableFamily,
    eps_tail: float,
    start: int = DEFAULT_START,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
    explosion_log: float = DEFAULT_EXPLOSION_LOG,
) -> tuple[float, TruncationCertificate]:
    """Estimate log Z with a three-valued certificate.

    When the certificate is 'finite' the estimate carries relative tail
    error below eps_tail. 'diverged' estimates are +inf; 'inconclusive'
    returns the best partial estimate reached within the budget.
    """
    run = _truncate(family, eps_tail, start, max_doublings, explosion_log)
    if run.status is CertificateStatus.DIVERGED:
        return math.inf, _certificate(run)
    return run.log_partial, _certificate(run)


def tilt_truncated(
    family: CountableFamily,
    eps_tail: float,
    start: int = DEFAULT_START,
    max_doublings: int = DEFAULT_MAX_DOUBLINGS,
    explosion_log: float = DEFAULT_EXPLOSION_LOG,
) -> TruncatedTilt:
    """Truncated tilt optimizer p_n exp(payoff(n)) / Z for n <= N.

    Requires a finite certificate; the reported tail fraction is below
    eps_tail by construction.
    """
    run = _truncate(family, eps_tail, start, max_doublings, explosion_log)
    if run.status is not CertificateStatus.FINITE:
        raise NotFinite(f"no finite certificate within budget (status: {run.status.value})")
    probs = tuple(_safe_exp(t - run.log_partial) for t in run.log_terms)
    if run.tail_bound == 0.0:
        tail_mass = 0.0
    else:
        tail_mass = _safe_exp(math.log(run.tail_bound) - run.log_partial)
    return TruncatedTilt(probs=probs, tail_mass=tail_mass, certificate=_certificate(run))
