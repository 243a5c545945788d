"""Four-source path-identity layout and phase-dependent post-selected rates.

The canonical arrangement has four two-mode squeezers pumped coherently:
sources on (a1, b1) and (b2, a2) fire first, the measurement phases sit on
a1 and b2, and sources on (a1, a2) and (b2, b1) fire afterwards so the two
four-photon generation possibilities become indistinguishable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import fock, gaussian

CANONICAL_MODES = ("a1", "a2", "b1", "b2")


@dataclass(frozen=True)
class SourceElement:
    """Two-mode squeezer over labeled modes (signal mode first)."""

    modes: tuple[str, str]
    gain: float
    pump_phase: float = 0.0


@dataclass(frozen=True)
class PhaseElement:
    """Phase shifter on one labeled mode; the phase may be a free symbol."""

    mode: str
    phase: float | str


@dataclass(frozen=True)
class ExperimentLayout:
    modes: tuple[str, ...]
    elements: tuple[SourceElement | PhaseElement, ...]
    postselect: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.modes)) != len(self.modes):
            raise ValueError("mode labels must be unique")
        if len(self.postselect) != len(self.modes):
            raise ValueError("post-selection pattern must cover every mode")
        for el in self.elements:
            labels = el.modes if isinstance(el, SourceElement) else (el.mode,)
            for label in labels:
                if label not in self.modes:
                    raise ValueError(f"element references undeclared mode {label!r}")
        symbols = [
            el.phase
            for el in self.elements
            if isinstance(el, PhaseElement) and isinstance(el.phase, str)
        ]
        if len(symbols) != len(set(symbols)):
            raise ValueError("each phase symbol may be bound to one element only")

    def mode_index(self, label: str) -> int:
        return self.modes.index(label)

    @property
    def phase_symbols(self) -> tuple[str, ...]:
        return tuple(
            el.phase
            for el in self.elements
            if isinstance(el, PhaseElement) and isinstance(el.phase, str)
        )

    def bind(self, settings: Mapping[str, float]) -> "ExperimentLayout":
        """Substitute numeric values for symbolic phases."""
        missing = set(self.phase_symbols) - set(settings)
        if missing:
            raise ValueError(f"unbound phase symbols: {sorted(missing)}")
        elements = tuple(
            PhaseElement(el.mode, float(settings[el.phase]))
            if isinstance(el, PhaseElement) and isinstance(el.phase, str)
            else el
            for el in self.elements
        )
        return ExperimentLayout(self.modes, elements, self.postselect)


def canonical_layout(gain: float) -> ExperimentLayout:
    """The four-source arrangement with phases ``alpha`` on a1 and ``beta`` on b2."""
    if gain < 0:
        raise ValueError("gain must be non-negative")
    return ExperimentLayout(
        modes=CANONICAL_MODES,
        elements=(
            SourceElement(("a1", "b1"), gain),
            SourceElement(("b2", "a2"), gain),
            PhaseElement("a1", "alpha"),
            PhaseElement("b2", "beta"),
            SourceElement(("a1", "a2"), gain),
            SourceElement(("b2", "b1"), gain),
        ),
        postselect=(1, 1, 1, 1),
    )


def evolve_fock(
    layout: ExperimentLayout,
    settings: Mapping[str, float],
    policy: fock.TruncationPolicy | None = None,
) -> fock.FockState:
    """Run the layout on vacuum with the truncated Fock backend."""
    bound = layout.bind(settings)
    policy = policy or fock.TruncationPolicy()
    if sum(layout.postselect) > policy.max_total_photons:
        raise ValueError("post-selection pattern exceeds the photon cap")
    state = fock.vacuum(len(bound.modes), policy)
    for el in bound.elements:
        if isinstance(el, SourceElement):
            state = fock.apply_squeezer(
                state,
                fock.SqueezerSpec(
                    (bound.mode_index(el.modes[0]), bound.mode_index(el.modes[1])),
                    el.gain,
                    el.pump_phase,
                ),
            )
        else:
            state = fock.apply_phase(
                state, fock.PhaseSpec(bound.mode_index(el.mode), el.phase)
            )
    return state


def heisenberg_transform(
    layout: ExperimentLayout, settings: Mapping[str, float]
) -> gaussian.BogoliubovTransform:
    """Compose the layout into one Bogoliubov transform (Gaussian backend)."""
    bound = layout.bind(settings)
    n = len(bound.modes)
    total = gaussian.identity_transform(n)
    for el in bound.elements:
        if isinstance(el, SourceElement):
            step = gaussian.squeezer_transform(
                n,
                (bound.mode_index(el.modes[0]), bound.mode_index(el.modes[1])),
                el.gain,
                el.pump_phase,
            )
        else:
            step = gaussian.phase_transform(n, bound.mode_index(el.mode), el.phase)
        total = gaussian.compose(total, step)
    return total


def fourfold_rate(
    layout: ExperimentLayout,
    settings: Mapping[str, float],
    n0: float,
    policy: fock.TruncationPolicy | None = None,
) -> float:
    """Post-selected coincidence rate, N0 trials per unit time.

    In series mode the rate is the squared post-selected amplitude of the
    perturbative state times N0 (exactly g^4 N0 (2 + 2 cos(alpha+beta)) at
    order 2 for the canonical layout); in exact mode it is the normalized
    projection probability times N0.
    """
    if n0 <= 0:
        raise ValueError("n0 must be positive")
    state = evolve_fock(layout, settings, policy)
    if state.is_series:
        return n0 * abs(fock.amplitude(state, layout.postselect)) ** 2
    return n0 * fock.projection_probability(state, layout.postselect)


@dataclass(frozen=True)
class TwofoldResult:
    """One party's two-fold coincidence quantities at a given setting."""

    probability: float
    moment: float


def local_twofold_rate(
    layout: ExperimentLayout,
    settings: Mapping[str, float],
    order: int | None = None,
    policy_cap: int = 8,
    party_modes: tuple[str, str] = ("a1", "a2"),
) -> TwofoldResult:
    """Two-fold quantities for one party: P(1,1, anything) and <n n>.

    ``order`` selects the order-limited expansion; ``None`` computes exact
    values (probability from the exact Fock backend, moment from the
    contraction-based Gaussian backend).
    """
    idx = tuple(layout.mode_index(m) for m in party_modes)
    if order is not None:
        if order < 2:
            raise ValueError("order must be >= 2")
        policy = fock.TruncationPolicy(max_total_photons=policy_cap, series_order=order)
        state = evolve_fock(layout, settings, policy)
        vec = state.vector()
        n2 = float(np.vdot(vec, vec).real)
        sel = np.ones(state.basis.dim, dtype=bool)
        for m in idx:
            sel &= state.basis.counts(m) == 1
        prob = float(np.sum(np.abs(vec[sel]) ** 2) / n2)
        weights = np.prod([state.basis.counts(m) for m in idx], axis=0)
        moment = float(np.sum(np.abs(vec) ** 2 * weights) / n2)
        return TwofoldResult(prob, moment)
    policy = fock.TruncationPolicy(max_total_photons=policy_cap)
    state = evolve_fock(layout, settings, policy)
    vec = state.vector()
    sel = np.ones(state.basis.dim, dtype=bool)
    for m in idx:
        sel &= state.basis.counts(m) == 1
    prob = float(np.sum(np.abs(vec[sel]) ** 2) / (state.norm() ** 2))
    transform = heisenberg_transform(layout, settings)
    moment = gaussian.number_moment(transform, idx)
    return TwofoldResult(prob, moment)


@dataclass(frozen=True)
class TruncationStudyRow:
    order: int
    twofold_visibility: float
    fourfold_visibility: float


def truncation_study(
    layout: ExperimentLayout,
    orders: Sequence[int],
    betas: Sequence[float] | None = None,
    alpha: float = 0.0,
    policy_cap: int = 8,
) -> list[TruncationStudyRow]:
    """Two-fold and four-fold fringe visibility versus expansion order.

    Sweeps the ``beta`` phase at fixed ``alpha`` and reports, for every
    order-limited expansion, the visibility of one party's two-fold
    coincidence next to that of the post-selected four-fold coincidence.
    Both probabilities are normalized by the truncated state's squared norm,
    which is what makes the two-fold artifact decay monotonically with the
    retained order.
    """
    if any(k < 2 for k in orders):
        raise ValueError("orders must be >= 2")
    gains = {el.gain for el in layout.elements if isinstance(el, SourceElement)}
    if gains == {0.0}:
        raise ValueError("all source gains are zero; sweep is degenerate")
    if betas is None:
        betas = np.linspace(0.0, 2 * math.pi, 24, endpoint=False)
    rows = []
    for order in orders:
        twofold = []
        fourfold = []
        for beta in betas:
            settings = {"alpha": alpha, "beta": float(beta)}
            policy = fock.TruncationPolicy(
                max_total_photons=policy_cap, series_order=order
            )
            state = evolve_fock(layout, settings, policy)
            vec = state.vector()
            n2 = float(np.vdot(vec, vec).real)
            sel = np.ones(state.basis.dim, dtype=bool)
            for m in ("a1", "a2"):
                sel &= state.basis.counts(layout.mode_index(m)) == 1
            twofold.append(float(np.sum(np.abs(vec[sel]) ** 2) / n2))
            fourfold.append(
                abs(fock.amplitude(state, layout.postselect)) ** 2 / n2
            )
        rows.append(
            TruncationStudyRow(
                order,
                gaussian.fringe_visibility(twofold),
                gaussian.fringe_visibility(fourfold),
            )
        )
    return rows


def truncation_study_csv(rows: Sequence[TruncationStudyRow]) -> str:
    lines = ["order,v2,v4"]
    for row in rows:
        lines.append(
            f"{row.order},{row.twofold_visibility:.12g},{row.fourfold_visibility:.12g}"
        )
    return "\n".join(lines) + "\n"
