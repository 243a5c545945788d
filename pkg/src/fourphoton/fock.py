"""Truncated multimode Fock-space evolution for pair-generation circuits.

States live on the subspace of occupation vectors whose total photon number
does not exceed a configurable cap.  Two evolution modes are supported for
two-mode squeezers:

* exact mode: the squeezing unitary is applied on the truncated subspace via
  scipy's ``expm_multiply`` (Al-Mohy/Higham scaling with truncated Taylor,
  accurate to machine precision on the retained subspace);
* series mode: amplitudes are tracked as polynomials in the squeezing gain,
  and every contribution beyond a configured total power is dropped.  This
  reproduces order-limited perturbative expansions of the pair-generation
  process.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply


class TruncationOverflowWarning(UserWarning):
    """Amplitude mass above the prune threshold hit the photon-number cap."""


@dataclass(frozen=True)
class TruncationPolicy:
    """Controls the retained subspace and, optionally, perturbative order.

    ``series_order`` switches squeezer application to order-limited mode: only
    contributions up to that total power of the gain (summed over all
    squeezers applied so far) are kept.
    """

    max_total_photons: int = 8
    series_order: int | None = None
    prune_epsilon: float = 1e-15

    def __post_init__(self):
        if self.max_total_photons < 0:
            raise ValueError("max_total_photons must be non-negative")
        if self.series_order is not None and self.series_order < 1:
            raise ValueError("series_order must be >= 1 when set")


@dataclass(frozen=True)
class SqueezerSpec:
    """Two-mode squeezer exp(-g(ab - a'b')), pump phase on the pair-creation term."""

    mode_pair: tuple[int, int]
    gain: float
    pump_phase: float = 0.0

    def __post_init__(self):
        if self.mode_pair[0] == self.mode_pair[1]:
            raise ValueError("squeezer modes must be distinct")
        if self.gain < 0:
            raise ValueError("gain must be non-negative")


@dataclass(frozen=True)
class PhaseSpec:
    """Phase shifter acting as e^{i n phase} on photon number n of one mode."""

    mode: int
    phase: float


class FockBasis:
    """Enumeration of occupation vectors with bounded total photon number."""

    _cache: dict[tuple[int, int], "FockBasis"] = {}

    def __new__(cls, n_modes: int, max_total: int):
        key = (n_modes, max_total)
        if key not in cls._cache:
            cls._cache[key] = super().__new__(cls)
        return cls._cache[key]

    def __init__(self, n_modes: int, max_total: int):
        if getattr(self, "_built", False):
            return
        self.n_modes = n_modes
        self.max_total = max_total
        self.occupations: list[tuple[int, ...]] = list(
            _occupations(n_modes, max_total)
        )
        self.index = {occ: i for i, occ in enumerate(self.occupations)}
        self.dim = len(self.occupations)
        self.totals = np.array([sum(occ) for occ in self.occupations])
        self._counts = np.array(self.occupations)
        self._pair_ops: dict[tuple[int, int], sparse.csr_matrix] = {}
        self._built = True

    def counts(self, mode: int) -> np.ndarray:
        """Photon number of ``mode`` for every basis vector."""
        return self._counts[:, mode]

    def pair_creation(self, i: int, j: int) -> sparse.csr_matrix:
        """Matrix of a_i' a_j' restricted to this basis (overflow discarded)."""
        key = (i, j)
        if key not in self._pair_ops:
            rows, cols, vals = [], [], []
            for col, occ in enumerate(self.occupations):
                if sum(occ) + 2 > self.max_total:
                    continue
                target = list(occ)
                target[i] += 1
                target[j] += 1
                rows.append(self.index[tuple(target)])
                cols.append(col)
                vals.append(math.sqrt((occ[i] + 1) * (occ[j] + 1)))
            self._pair_ops[key] = sparse.csr_matrix(
                (vals, (rows, cols)), shape=(self.dim, self.dim)
            )
        return self._pair_ops[key]


def _occupations(n_modes: int, max_total: int) -> Iterable[tuple[int, ...]]:
    if n_modes == 0:
        yield ()
        return
    for head in range(max_total + 1):
        for tail in _occupations(n_modes - 1, max_total - head):
            yield (head,) + tail


@dataclass
class FockState:
    """Sparse-in-effect state over a :class:`FockBasis`.

    ``data`` is a dense complex vector over the basis, or a ``(dim, K+1)``
    matrix of gain-power coefficients in series mode.  Amplitudes below the
    prune threshold are stored as exact zeros.  Instances are treated as
    immutable; operations return new states.
    """

    basis: FockBasis
    data: np.ndarray
    policy: TruncationPolicy
    series_gain: float | None = None
    truncation_loss: float = 0.0

    @property
    def is_series(self) -> bool:
        return self.data.ndim == 2

    def vector(self) -> np.ndarray:
        """Amplitude vector; series states are evaluated at their gain."""
        if not self.is_series:
            return self.data
        g = self.series_gain if self.series_gain is not None else 0.0
        powers = g ** np.arange(self.data.shape[1])
        return self.data @ powers

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector()))

    def amplitudes(self) -> dict[tuple[int, ...], complex]:
        """Mapping of occupation vectors to non-negligible amplitudes."""
        vec = self.vector()
        eps = self.policy.prune_epsilon
        return {
            self.basis.occupations[i]: complex(vec[i])
            for i in np.nonzero(np.abs(vec) > eps)[0]
        }


def vacuum(n_modes: int, policy: TruncationPolicy | None = None) -> FockState:
    """All-zero occupation with unit amplitude."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    policy = policy or TruncationPolicy()
    basis = FockBasis(n_modes, policy.max_total_photons)
    if policy.series_order is not None:
        data = np.zeros((basis.dim, policy.series_order + 1), dtype=complex)
        data[basis.index[(0,) * n_modes], 0] = 1.0
    else:
        data = np.zeros(basis.dim, dtype=complex)
        data[basis.index[(0,) * n_modes]] = 1.0
    return FockState(basis, data, policy)


def apply_phase(state: FockState, spec: PhaseSpec) -> FockState:
    """Multiply each amplitude by e^{i n phase}; magnitudes are untouched."""
    if not 0 <= spec.mode < state.basis.n_modes:
        raise ValueError(f"unknown mode index {spec.mode}")
    factors = np.exp(1j * spec.phase * state.basis.counts(spec.mode))
    if state.is_series:
        data = state.data * factors[:, None]
    else:
        data = state.data * factors
    return replace(state, data=data)


def _prune(data: np.ndarray, eps: float) -> tuple[np.ndarray, float]:
    mask = (np.abs(data) < eps) & (data != 0)
    lost = float(np.sum(np.abs(data[mask]) ** 2))
    data = data.copy()
    data[mask] = 0.0
    return data, lost


def apply_squeezer(state: FockState, spec: SqueezerSpec) -> FockState:
    """Evolve by exp(-g(ab - a'b')) on the squeezer's mode pair.

    Exact mode applies the matrix exponential on the truncated subspace;
    series mode retains contributions only up to the policy's total gain
    power.  A diagnostic warning is emitted when the photon cap discards
    amplitude mass above the prune threshold.
    """
    basis = state.basis
    i, j = spec.mode_pair
    if not (0 <= i < basis.n_modes and 0 <= j < basis.n_modes):
        raise ValueError(f"unknown mode pair {spec.mode_pair}")
    create = basis.pair_creation(i, j)
    annihilate = create.T
    phase = np.exp(1j * spec.pump_phase)

    overflow = _overflow_estimate(state, spec)
    if overflow > state.policy.prune_epsilon:
        warnings.warn(
            f"photon cap {basis.max_total} discards ~{overflow:.3g} squared "
            f"amplitude during squeezer on modes {spec.mode_pair}",
            TruncationOverflowWarning,
        )

    if state.policy.series_order is not None:
        if state.series_gain is not None and state.series_gain != spec.gain:
            raise ValueError(
                "series mode tracks powers of a single gain; all squeezers "
                "in one evolution must share it"
            )
        order = state.policy.series_order
        total = state.data.copy()
        term = state.data
        for m in range(1, order + 1):
            # one application of (e^{ip} a'b' - e^{-ip} ab)/m, shifting the
            # tracked gain power up by one and dropping what exceeds K
            shifted = np.zeros_like(term)
            applied = (phase * (create @ term) - np.conj(phase) * (annihilate @ term)) / m
            shifted[:, 1:] = applied[:, :-1]
            term = shifted
            if not np.any(term):
                break
            total += term
        data, lost = _prune(total, state.policy.prune_epsilon)
        return replace(
            state,
            data=data,
            series_gain=spec.gain,
            truncation_loss=state.truncation_loss + lost + overflow,
        )

    generator = spec.gain * (phase * create - np.conj(phase) * annihilate)
    evolved = expm_multiply(generator.tocsc(), state.data)
    data, lost = _prune(evolved, state.policy.prune_epsilon)
    return replace(
        state, data=data, truncation_loss=state.truncation_loss + lost + overflow
    )


def _overflow_estimate(state: FockState, spec: SqueezerSpec) -> float:
    """Squared-amplitude mass the cap would discard in one pair creation."""
    i, j = spec.mode_pair
    basis = state.basis
    boundary = basis.totals + 2 > basis.max_total
    if not np.any(boundary):
        return 0.0
    vec = state.vector()
    weights = (basis.counts(i) + 1.0) * (basis.counts(j) + 1.0)
    return float(
        spec.gain**2 * np.sum(np.abs(vec[boundary]) ** 2 * weights[boundary])
    )


def amplitude(state: FockState, pattern: Sequence[int]) -> complex:
    """Stored amplitude of an occupation pattern (exact zero if absent)."""
    occ = tuple(pattern)
    if len(occ) != state.basis.n_modes:
        raise ValueError("pattern length does not match mode count")
    idx = state.basis.index.get(occ)
    if idx is None:
        return 0j
    return complex(state.vector()[idx])


def projection_probability(state: FockState, pattern: Sequence[int]) -> float:
    """|amplitude|^2 normalized by the state's stored squared norm."""
    n2 = state.norm() ** 2
    if n2 == 0:
        return 0.0
    return abs(amplitude(state, pattern)) ** 2 / n2


def expectation_nn(state: FockState, modes: Sequence[int]) -> float:
    """Expectation of the product of photon numbers on ``modes``."""
    if len(set(modes)) != len(modes):
        raise ValueError("modes must be distinct")
    vec = state.vector()
    n2 = float(np.vdot(vec, vec).real)
    if n2 == 0:
        return 0.0
    weights = np.ones(state.basis.dim)
    for m in modes:
        weights = weights * state.basis.counts(m)
    return float(np.sum(np.abs(vec) ** 2 * weights) / n2)


def expectation_ops(state: FockState, ops: Sequence[tuple[int, bool]]) -> complex:
    """Normalized expectation of an ordered ladder-operator string.

    ``ops`` lists (mode, dagger) pairs, leftmost first.  The string is applied
    in an enlarged basis so intermediate creations cannot overflow the cap.
    """
    basis = state.basis
    big = FockBasis(basis.n_modes, basis.max_total + len(ops))
    vec = np.zeros(big.dim, dtype=complex)
    small_vec = state.vector()
    for idx, occ in enumerate(basis.occupations):
        vec[big.index[occ]] = small_vec[idx]
    bra = vec
    ket = vec.copy()
    for mode, dagger in reversed(ops):
        ket = _apply_ladder(big, ket, mode, dagger)
    n2 = float(np.vdot(bra, bra).real)
    if n2 == 0:
        return 0j
    return complex(np.vdot(bra, ket) / n2)


def _apply_ladder(basis: FockBasis, vec: np.ndarray, mode: int, dagger: bool):
    out = np.zeros_like(vec)
    for idx in np.nonzero(vec)[0]:
        occ = basis.occupations[idx]
        n = occ[mode]
        if dagger:
            if sum(occ) + 1 > basis.max_total:
                continue
            target = list(occ)
            target[mode] += 1
            out[basis.index[tuple(target)]] += math.sqrt(n + 1) * vec[idx]
        else:
            if n == 0:
                continue
            target = list(occ)
            target[mode] -= 1
            out[basis.index[tuple(target)]] += math.sqrt(n) * vec[idx]
    return out


def relative_to_vacuum(state: FockState) -> FockState:
    """Rescale a series state so the vacuum component has unit coefficient.

    Pair-generation expansions are conventionally written with the vacuum
    term normalized to 1; this performs the corresponding truncated
    power-series division.
    """
    if not state.is_series:
        vec = state.data
        v0 = vec[state.basis.index[(0,) * state.basis.n_modes]]
        if v0 == 0:
            raise ValueError("vacuum amplitude is zero")
        return replace(state, data=vec / v0)
    order = state.data.shape[1] - 1
    vac = state.data[state.basis.index[(0,) * state.basis.n_modes]]
    if vac[0] == 0:
        raise ValueError("vacuum amplitude is zero at leading order")
    # truncated reciprocal of the vacuum power series
    recip = np.zeros(order + 1, dtype=complex)
    recip[0] = 1.0 / vac[0]
    for k in range(1, order + 1):
        recip[k] = -np.dot(vac[1 : k + 1], recip[k - 1 :: -1]) / vac[0]
    data = np.zeros_like(state.data)
    for k in range(order + 1):
        for jj in range(k + 1):
            data[:, k] += state.data[:, jj] * recip[k - jj]
    return replace(state, data=data)
