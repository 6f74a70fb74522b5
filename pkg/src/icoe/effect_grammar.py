"""Token-level grammar for statistical effect expressions.

Two surface templates are recognized: a ratio measure with optional
confidence interval and attached p-value ("OR, 1.30; 95% CI, .81 to 2.09;
P = .28"), and a standalone p-value constraint ("p = 1.00"). Dash CI ranges
and middle-dot decimals are already rewritten by textproc, so the grammar
only ever sees "to" and ".".
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .textproc import Token

HR = "HR"
OR = "OR"
RR = "RR"
RATE_RATIO = "RateRatio"
CANONICAL_KINDS = (HR, OR, RR, RATE_RATIO)

P_OPS = ("=", "<", ">", "≤", "≥")

_NUM_RE = re.compile(r"(?:\d+(?:\.\d+)?|\.\d+)")
_PCT_RE = re.compile(r"(?:\d+(?:\.\d+)?|\.\d+)%")

# Longest head first at any given position.
_HEADS: tuple[tuple[tuple[str, ...], str], ...] = (
    (("hazard", "ratio"), HR),
    (("odds", "ratio"), OR),
    (("relative", "risk"), RR),
    (("risk", "ratio"), RR),
    (("rate", "ratio"), RATE_RATIO),
    (("hr",), HR),
    (("or",), OR),
    (("rr",), RR),
)

_HEAD_SURFACE = {HR: "HR", OR: "OR", RR: "RR", RATE_RATIO: "rate ratio"}


@dataclass
class PValueConstraint:
    """A reported bound on the p-value: operator plus value in [0, 1]."""

    op: str
    value: float
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


@dataclass
class EffectIndicator:
    """A ratio effect measure with optional confidence interval and p-value."""

    kind: str
    estimate: float
    ci_level: float = 95.0
    ci_low: float | None = None
    ci_high: float | None = None
    p: PValueConstraint | None = None
    start: int = field(default=0, compare=False)
    end: int = field(default=0, compare=False)


def normalize_number(token: str) -> float:
    """Parse a numeric token; leading-dot decimals get the implicit zero."""
    if not _NUM_RE.fullmatch(token):
        raise ValueError(f"not a numeric token: {token!r}")
    return float(token)


def _is_number(token: str) -> bool:
    return bool(_NUM_RE.fullmatch(token))


def _match_head(lower: list[str], i: int) -> tuple[str, int] | None:
    for words, kind in _HEADS:
        if lower[i : i + len(words)] == list(words):
            return kind, len(words)
    return None


def _match_pvalue(
    tokens: list[Token], lower: list[str], i: int, warnings: list[str] | None
) -> tuple[PValueConstraint | None, int] | None:
    """Match "P OP NUM" at position i; returns (constraint-or-discarded, next index)."""
    n = len(lower)
    if i >= n:
        return None
    if lower[i] == "p" and i + 1 < n and lower[i + 1] == "value":
        j = i + 2
    elif lower[i] in ("p", "p-value"):
        j = i + 1
    else:
        return None
    if j < n and lower[j] in P_OPS:
        op = lower[j]
        j += 1
    elif j + 1 < n and lower[j] == "less" and lower[j + 1] == "than":
        op = "<"
        j += 2
    elif j + 1 < n and lower[j] == "greater" and lower[j + 1] == "than":
        op = ">"
        j += 2
    else:
        return None
    if j >= n or not _is_number(lower[j]):
        return None
    value = normalize_number(lower[j])
    span = (tokens[i].start, tokens[j].end)
    if not 0.0 <= value <= 1.0:
        if warnings is not None:
            warnings.append(f"discarded p-value constraint with out-of-range value: P {op} {value}")
        return None, j + 1
    return PValueConstraint(op=op, value=value, start=span[0], end=span[1]), j + 1


def parse_indicators(tokens: list[Token], warnings: list[str] | None = None) -> list[EffectIndicator]:
    """Parse every ratio-measure expression in a token stream.

    Shape: HEAD sep NUM [sep [NUM%] CI sep NUM to NUM] [sep P OP NUM], where
    sep is one of , : = ; and the p-value clause must directly follow (a
    closing parenthesis ends the region). Non-positive values and reversed
    CI bounds are handled with warnings.
    """
    lower = [t.surface.lower() for t in tokens]
    n = len(tokens)
    out: list[EffectIndicator] = []
    i = 0
    while i < n:
        head = _match_head(lower, i)
        if head is None:
            i += 1
            continue
        kind, head_len = head
        j = i + head_len
        if not (j < n and lower[j] in (",", ":", "=")):
            i += 1
            continue
        j += 1
        if not (j < n and _is_number(lower[j])):
            i += 1
            continue
        estimate = normalize_number(lower[j])
        if estimate <= 0:
            if warnings is not None:
                warnings.append(f"discarded {kind} indicator with non-positive estimate {estimate}")
            i = j + 1
            continue
        last = j  # index of the last token belonging to the match
        scan = j + 1

        # Optional confidence interval.
        ci_level = 95.0
        ci_low = ci_high = None
        k = scan
        if k < n and lower[k] in (";", ","):
            k += 1
        level: float | None = None
        if k < n and _PCT_RE.fullmatch(lower[k]):
            level = normalize_number(lower[k][:-1])
            k += 1
        elif k + 1 < n and _is_number(lower[k]) and lower[k + 1] == "%":
            level = normalize_number(lower[k])
            k += 2
        if (
            k < n
            and lower[k] == "ci"
            and (bounds := _match_ci_bounds(lower, k + 1))
        ):
            low, high, nxt = bounds
            if low <= 0 or high <= 0:
                if warnings is not None:
                    warnings.append(f"discarded CI with non-positive bound: {low} to {high}")
            else:
                if low > high:
                    if warnings is not None:
                        warnings.append(f"reversed CI bounds swapped: {low} to {high}")
                    low, high = high, low
                ci_low, ci_high = low, high
                if level is not None:
                    ci_level = level
            last = nxt - 1
            scan = nxt

        # Optional attached p-value, stopped by a closing parenthesis.
        p = None
        m = scan
        if m < n and lower[m] in (";", ","):
            m += 1
        matched = _match_pvalue(tokens, lower, m, warnings)
        if matched is not None:
            p, nxt = matched
            last = nxt - 1
            scan = nxt

        out.append(
            EffectIndicator(
                kind=kind,
                estimate=estimate,
                ci_level=ci_level,
                ci_low=ci_low,
                ci_high=ci_high,
                p=p,
                start=tokens[i].start,
                end=tokens[last].end,
            )
        )
        i = scan
    return out


def _match_ci_bounds(lower: list[str], k: int) -> tuple[float, float, int] | None:
    """Match [sep] NUM to NUM starting at k; returns (low, high, next index)."""
    n = len(lower)
    if k < n and lower[k] in (",", ":", "=", ";"):
        k += 1
    if (
        k + 2 < n
        and _is_number(lower[k])
        and lower[k + 1] == "to"
        and _is_number(lower[k + 2])
    ):
        return normalize_number(lower[k]), normalize_number(lower[k + 2]), k + 3
    return None


def parse_pvalues(
    tokens: list[Token],
    exclude_spans: list[tuple[int, int]] | None = None,
    warnings: list[str] | None = None,
) -> list[PValueConstraint]:
    """Parse standalone p-value constraints, skipping regions already consumed
    by indicator matches."""
    lower = [t.surface.lower() for t in tokens]
    out: list[PValueConstraint] = []
    i = 0
    while i < len(tokens):
        matched = _match_pvalue(tokens, lower, i, warnings)
        if matched is None:
            i += 1
            continue
        constraint, nxt = matched
        if constraint is not None and not _overlaps_any(constraint, exclude_spans or []):
            out.append(constraint)
        i = nxt
    return out


def _overlaps_any(p: PValueConstraint, spans: list[tuple[int, int]]) -> bool:
    return any(p.start < end and start < p.end for start, end in spans)


def parse_effects(
    tokens: list[Token], warnings: list[str] | None = None
) -> tuple[list[EffectIndicator], list[PValueConstraint]]:
    """Parse indicators first, then the standalone p-values they did not consume."""
    indicators = parse_indicators(tokens, warnings)
    pvalues = parse_pvalues(tokens, [(e.start, e.end) for e in indicators], warnings)
    return indicators, pvalues


def _fmt(value: float) -> str:
    if float(value).is_integer():
        return str(int(value))
    return repr(float(value))


def render_indicator(e: EffectIndicator) -> str:
    """Canonical text form; parsing it back yields a structurally equal value."""
    head = _HEAD_SURFACE.get(e.kind, e.kind)
    parts = [f"{head}, {_fmt(e.estimate)}"]
    if e.ci_low is not None and e.ci_high is not None:
        parts.append(f"{_fmt(e.ci_level)}% CI, {_fmt(e.ci_low)} to {_fmt(e.ci_high)}")
    if e.p is not None:
        parts.append(f"P {e.p.op} {_fmt(e.p.value)}")
    return "; ".join(parts)
