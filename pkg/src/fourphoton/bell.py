"""Count tables, joint probabilities, CHSH statistics, and error propagation.

A detector setting pair (alpha, beta) only ever yields the (+1, +1)
coincidence; the remaining outcomes are read off the orthogonal settings
shifted by pi, exploiting the 2*pi-period cosine fringe.  Probabilities are
built with exact rational arithmetic on the integer counts, and
uncertainties follow first-order Poisson propagation with sigma_N = sqrt(N)
(floored at 1 for empty bins).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

TWO_PI = 2 * math.pi
_ANGLE_DECIMALS = 9


class FitError(RuntimeError):
    """The fringe fit could not produce a meaningful visibility."""


def angle_key(angle: float) -> float:
    """Canonical dictionary key for a phase setting, modulo 2*pi."""
    reduced = angle % TWO_PI
    key = round(reduced, _ANGLE_DECIMALS)
    if key >= round(TWO_PI, _ANGLE_DECIMALS):
        key = 0.0
    return key


@dataclass
class CountTable:
    """Coincidence counts indexed by the (alpha, beta) setting pair."""

    entries: dict[tuple[float, float], int] = field(default_factory=dict)
    duration: float = 60.0

    def add(self, alpha: float, beta: float, counts: int) -> None:
        if counts < 0:
            raise ValueError("counts must be non-negative")
        self.entries[(angle_key(alpha), angle_key(beta))] = int(counts)

    def get(self, alpha: float, beta: float) -> int:
        key = (angle_key(alpha), angle_key(beta))
        if key not in self.entries:
            raise KeyError(f"no entry for setting (alpha={key[0]}, beta={key[1]})")
        return self.entries[key]

    def missing(self, pairs: Iterable[tuple[float, float]]) -> list[str]:
        out = []
        for alpha, beta in pairs:
            key = (angle_key(alpha), angle_key(beta))
            if key not in self.entries:
                out.append(f"(alpha={key[0]}, beta={key[1]})")
        return out

    @classmethod
    def from_csv(cls, text: str) -> "CountTable":
        """Parse the ``alpha,beta,counts,duration_s`` interchange format."""
        reader = csv.DictReader(io.StringIO(text))
        required = {"alpha", "beta", "counts", "duration_s"}
        if reader.fieldnames is None or not required <= set(reader.fieldnames):
            raise ValueError(
                "count CSV must have header alpha,beta,counts,duration_s"
            )
        table = cls()
        durations = set()
        for lineno, row in enumerate(reader, start=2):
            try:
                alpha = float(row["alpha"])
                beta = float(row["beta"])
                counts = int(row["counts"])
                durations.add(float(row["duration_s"]))
            except (TypeError, ValueError) as exc:
                raise ValueError(f"malformed CSV row at line {lineno}: {exc}") from exc
            table.add(alpha, beta, counts)
        if durations:
            table.duration = durations.pop()
        return table

    def to_csv(self) -> str:
        lines = ["alpha,beta,counts,duration_s"]
        for (alpha, beta), counts in sorted(self.entries.items()):
            lines.append(f"{alpha:.9f},{beta:.9f},{counts},{self.duration:g}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class CorrelationResult:
    E: float
    sigma_E: float


@dataclass(frozen=True)
class CHSHResult:
    S: float
    sigma_S: float
    terms: dict[tuple[float, float], CorrelationResult]
    settings: tuple[float, float, float, float]
    violation_sigmas: float
    S_best_signs: float

    @property
    def violates(self) -> bool:
        return self.S > 2.0


@dataclass(frozen=True)
class NoiseModel:
    """Single-parameter fringe noise: visibility V and a Poisson rate scale."""

    visibility: float
    rate_scale: float

    def __post_init__(self):
        if not 0.0 <= self.visibility <= 1.0:
            raise ValueError("visibility must lie in [0, 1]")
        if self.rate_scale < 0:
            raise ValueError("rate_scale must be non-negative")


def _orthogonal_counts(table: CountTable, alpha: float, beta: float):
    """The four (+1,+1) counts that stand in for the four joint outcomes."""
    pairs = [
        (alpha, beta),
        (alpha + math.pi, beta),
        (alpha, beta + math.pi),
        (alpha + math.pi, beta + math.pi),
    ]
    missing = table.missing(pairs)
    if missing:
        raise KeyError("missing entries: " + ", ".join(missing))
    return tuple(table.get(a, b) for a, b in pairs)


def joint_probabilities(
    table: CountTable, alpha: float, beta: float
) -> dict[tuple[int, int], float]:
    """p(a, b | alpha, beta) for a, b in {+1, -1}; sums to 1 exactly.

    The (-1) outcomes are mapped onto (+1,+1) counts at the pi-shifted
    orthogonal settings before normalizing.
    """
    n_pp, n_mp, n_pm, n_mm = _orthogonal_counts(table, alpha, beta)
    total = n_pp + n_mp + n_pm + n_mm
    if total == 0:
        raise ZeroDivisionError("all four counts are zero; probabilities undefined")
    fractions = {
        (1, 1): Fraction(n_pp, total),
        (-1, 1): Fraction(n_mp, total),
        (1, -1): Fraction(n_pm, total),
        (-1, -1): Fraction(n_mm, total),
    }
    assert sum(fractions.values()) == 1
    return {k: float(v) for k, v in fractions.items()}


def correlation(table: CountTable, alpha: float, beta: float) -> CorrelationResult:
    """E = p(++) - p(-+) - p(+-) + p(--) with Poisson-propagated sigma."""
    n_pp, n_mp, n_pm, n_mm = _orthogonal_counts(table, alpha, beta)
    total = n_pp + n_mp + n_pm + n_mm
    if total == 0:
        raise ZeroDivisionError("all four counts are zero; correlation undefined")
    diff = n_pp - n_mp - n_pm + n_mm
    e_val = float(Fraction(diff, total))
    var = 0.0
    for n, sign in ((n_pp, 1), (n_mp, -1), (n_pm, -1), (n_mm, 1)):
        partial = (sign * total - diff) / total**2
        var += partial**2 * max(n, 1)
    return CorrelationResult(e_val, math.sqrt(var))


def chsh(
    table: CountTable,
    alphas: tuple[float, float] = (0.0, math.pi / 2),
    betas: tuple[float, float] = (math.pi / 4, 3 * math.pi / 4),
) -> CHSHResult:
    """S = |-E(a1,b1) + E(a1,b2) + E(a2,b1) + E(a2,b2)| and its uncertainty.

    Also reports the best S over the four standard minus-sign placements,
    which guards against settings-labeling mismatches.
    """
    a1, a2 = alphas
    b1, b2 = betas
    terms = {
        (a1, b1): correlation(table, a1, b1),
        (a1, b2): correlation(table, a1, b2),
        (a2, b1): correlation(table, a2, b1),
        (a2, b2): correlation(table, a2, b2),
    }
    es = [terms[(a1, b1)].E, terms[(a1, b2)].E, terms[(a2, b1)].E, terms[(a2, b2)].E]
    s_val = abs(-es[0] + es[1] + es[2] + es[3])
    sigma = math.sqrt(sum(t.sigma_E**2 for t in terms.values()))
    best = max(
        abs(sum(e * s for e, s in zip(es, signs)))
        for signs in (
            (-1, 1, 1, 1),
            (1, -1, 1, 1),
            (1, 1, -1, 1),
            (1, 1, 1, -1),
        )
    )
    if sigma > 0:
        violation = (s_val - 2.0) / sigma
    else:
        violation = math.inf if s_val > 2.0 else -math.inf
    return CHSHResult(s_val, sigma, terms, (a1, a2, b1, b2), violation, best)


@dataclass(frozen=True)
class VisibilityResult:
    V: float
    sigma_V: float
    method: str
    offset: float = 0.0
    phase: float = 0.0


def visibility(
    sweep: Sequence[tuple[float, float]], method: str = "fit"
) -> VisibilityResult:
    """Fringe visibility of a (beta, counts) sweep covering the full period.

    ``fit`` (default) performs a Poisson-weighted least-squares fit of
    c (1 + V cos(beta + phi)); ``extrema`` uses the raw max/min counts with
    propagated Poisson errors.
    """
    if len(sweep) < 4:
        raise FitError("need at least 4 sweep points")
    betas = np.array([b for b, _ in sweep], dtype=float)
    counts = np.array([c for _, c in sweep], dtype=float)
    # settings live on a circle: require the samples to cover the period
    # (largest cyclic gap at most half a period) rather than a raw span,
    # which multi-period sweeps reduced modulo 2*pi could never satisfy
    reduced = np.sort(betas % TWO_PI)
    gaps = np.diff(np.append(reduced, reduced[0] + TWO_PI))
    if gaps.max() > math.pi + 1e-9:
        raise FitError("sweep leaves more than half a period unsampled")
    if method == "extrema":
        hi, lo = counts.max(), counts.min()
        if hi + lo == 0:
            return VisibilityResult(0.0, 0.0, method)
        v_val = (hi - lo) / (hi + lo)
        d_hi = 2 * lo / (hi + lo) ** 2
        d_lo = 2 * hi / (hi + lo) ** 2
        sigma = math.sqrt(d_hi**2 * max(hi, 1) + d_lo**2 * max(lo, 1))
        return VisibilityResult(float(v_val), float(sigma), method)
    if method != "fit":
        raise ValueError(f"unknown visibility method {method!r}")
    # linear model N = c + a cos(beta) + b sin(beta), weighted by 1/sigma_N^2
    design = np.column_stack([np.ones_like(betas), np.cos(betas), np.sin(betas)])
    weights = 1.0 / np.maximum(counts, 1.0)
    wdesign = design * weights[:, None]
    gram = design.T @ wdesign
    try:
        cov = np.linalg.inv(gram)
    except np.linalg.LinAlgError as exc:
        raise FitError("singular design matrix in visibility fit") from exc
    params = cov @ (wdesign.T @ counts)
    c0, a, b = params
    if c0 <= 0:
        raise FitError("fitted offset is non-positive; visibility undefined")
    amp = math.hypot(a, b)
    v_val = amp / c0
    if amp == 0:
        grad = np.array([0.0, 1.0 / c0, 1.0 / c0])
    else:
        grad = np.array([-amp / c0**2, a / (amp * c0), b / (amp * c0)])
    sigma = math.sqrt(float(grad @ cov @ grad))
    return VisibilityResult(
        float(v_val), sigma, "fit", float(c0), float(math.atan2(-b, a))
    )


def s_from_visibility(v: float, sigma_v: float) -> tuple[float, float]:
    """S = 2 sqrt(2) V for fringe noise of the white (Werner) form."""
    if not 0.0 <= v <= 1.0:
        raise ValueError("visibility must lie in [0, 1]")
    factor = 2 * math.sqrt(2)
    return factor * v, factor * sigma_v


def fringe_mean(noise: NoiseModel, alpha: float, beta: float, duration: float) -> float:
    """Expected counts for one entry under the single-parameter noise model."""
    return 0.5 * noise.rate_scale * (1 + noise.visibility * math.cos(alpha + beta)) * duration


def simulate_counts(
    settings: Iterable[tuple[float, float]],
    noise: NoiseModel,
    duration: float,
    seed: int,
    rate_fn: Callable[[float, float], float] | None = None,
) -> CountTable:
    """Poisson-sampled count table over the given setting pairs.

    Every entry draws from its own counter-based (Philox) stream keyed by
    (seed, entry index), so results are reproducible and independent of
    evaluation order.
    """
    if duration <= 0:
        raise ValueError("duration must be positive")
    table = CountTable(duration=duration)
    for index, (alpha, beta) in enumerate(settings):
        if rate_fn is None:
            mean = fringe_mean(noise, alpha, beta, duration)
        else:
            mean = rate_fn(alpha, beta) * duration
        rng = np.random.Generator(np.random.Philox(key=[seed, index]))
        table.add(alpha, beta, int(rng.poisson(mean)))
    return table


def chsh_settings_grid(
    alphas: tuple[float, float], betas: tuple[float, float]
) -> list[tuple[float, float]]:
    """The sixteen setting pairs a CHSH evaluation needs."""
    pairs = []
    for a in alphas:
        for a_shift in (0.0, math.pi):
            for b in betas:
                for b_shift in (0.0, math.pi):
                    pairs.append((a + a_shift, b + b_shift))
    # deduplicate while preserving order
    seen = set()
    out = []
    for pair in pairs:
        key = (angle_key(pair[0]), angle_key(pair[1]))
        if key not in seen:
            seen.add(key)
            out.append(pair)
    return out


def lhv_bound_check() -> float:
    """Maximum of the CHSH combination over deterministic local strategies."""
    best = 0.0
    for a1 in (-1, 1):
        for a2 in (-1, 1):
            for b1 in (-1, 1):
                for b2 in (-1, 1):
                    s_val = abs(-a1 * b1 + a1 * b2 + a2 * b1 + a2 * b2)
                    best = max(best, float(s_val))
    return best


def chsh_report(result: CHSHResult) -> str:
    """Human-readable block for a CHSH evaluation."""
    a1, a2, b1, b2 = result.settings
    lines = [
        "CHSH evaluation",
        f"  settings: alpha1={a1:.6g} alpha2={a2:.6g} beta1={b1:.6g} beta2={b2:.6g}",
    ]
    for (alpha, beta), term in result.terms.items():
        lines.append(
            f"  E(alpha={alpha:.6g}, beta={beta:.6g}) = {term.E:+.4f} +- {term.sigma_E:.4f}"
        )
    lines.append(f"  S = {result.S:.4f} +- {result.sigma_S:.4f}")
    lines.append(f"  best S over sign placements = {result.S_best_signs:.4f}")
    if result.violates:
        lines.append(
            f"  classical bound 2 exceeded by {result.violation_sigmas:.2f} standard deviations"
        )
    else:
        lines.append("  no violation of the classical bound")
    return "\n".join(lines) + "\n"


def chsh_csv(result: CHSHResult) -> str:
    """Machine-readable CHSH summary: per-term rows plus the S row."""
    lines = ["term,E,sigma_E"]
    for (alpha, beta), term in result.terms.items():
        lines.append(f"E({alpha:.6g};{beta:.6g}),{term.E:.17g},{term.sigma_E:.17g}")
    lines.append("S,sigma_S,violation_sigmas")
    lines.append(f"{result.S:.17g},{result.sigma_S:.17g},{result.violation_sigmas:.17g}")
    return "\n".join(lines) + "\n"
