"""Exact Gaussian backend: mode-operator transforms and Wick vacuum moments.

Evolution is tracked in the Heisenberg picture as linear maps
``a_out = A a_in + B a_in^dag``.  Vacuum moments of output-operator strings
are evaluated by enumerating all pairwise contractions against the input
vacuum, which is exact at any squeezing and free of truncation artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

SYMPLECTIC_TOL = 1e-10


class UndefinedVisibilityError(ZeroDivisionError):
    """max + min of the swept signal is zero; fringe contrast is undefined."""


@dataclass(frozen=True)
class BogoliubovTransform:
    """Linear map on mode operators: a_out = A a_in + B a_in^dag."""

    A: np.ndarray
    B: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.A.shape[0]

    def symplectic_defect(self) -> float:
        """Max entrywise violation of A A^dag - B B^dag = I and A B^T = B A^T."""
        eye = np.eye(self.n_modes)
        d1 = np.abs(self.A @ self.A.conj().T - self.B @ self.B.conj().T - eye).max()
        d2 = np.abs(self.A @ self.B.T - self.B @ self.A.T).max()
        return float(max(d1, d2))


def identity_transform(n_modes: int) -> BogoliubovTransform:
    return BogoliubovTransform(
        np.eye(n_modes, dtype=complex), np.zeros((n_modes, n_modes), dtype=complex)
    )


def squeezer_transform(
    n_modes: int, pair: tuple[int, int], gain: float, pump_phase: float = 0.0
) -> BogoliubovTransform:
    """Two-mode squeezer: a -> cosh(g) a + e^{ip} sinh(g) b^dag on the pair."""
    if gain < 0:
        raise ValueError("gain must be non-negative")
    i, j = pair
    if i == j:
        raise ValueError("squeezer modes must be distinct")
    A = np.eye(n_modes, dtype=complex)
    B = np.zeros((n_modes, n_modes), dtype=complex)
    c, s = np.cosh(gain), np.sinh(gain)
    phase = np.exp(1j * pump_phase)
    A[i, i] = c
    A[j, j] = c
    B[i, j] = s * phase
    B[j, i] = s * phase
    return BogoliubovTransform(A, B)


def phase_transform(n_modes: int, mode: int, theta: float) -> BogoliubovTransform:
    """Phase shifter e^{i theta n}: a -> e^{i theta} a (diagonal passive map)."""
    A = np.eye(n_modes, dtype=complex)
    A[mode, mode] = np.exp(1j * theta)
    return BogoliubovTransform(A, np.zeros((n_modes, n_modes), dtype=complex))


def compose(first: BogoliubovTransform, then: BogoliubovTransform) -> BogoliubovTransform:
    """Transform equal to applying ``first`` and then ``then``."""
    if first.n_modes != then.n_modes:
        raise ValueError("transforms act on different mode sets")
    A = then.A @ first.A + then.B @ first.B.conj()
    B = then.A @ first.B + then.B @ first.A.conj()
    return BogoliubovTransform(A, B)


def perfect_pairings(n: int) -> Iterator[tuple[tuple[int, int], ...]]:
    """All perfect matchings of range(n), in deterministic order."""
    if n % 2:
        return
    indices = list(range(n))

    def _rec(rest: list[int]):
        if not rest:
            yield ()
            return
        first = rest[0]
        for k in range(1, len(rest)):
            partner = rest[k]
            remainder = rest[1:k] + rest[k + 1 :]
            for tail in _rec(remainder):
                yield ((first, partner),) + tail

    yield from _rec(indices)


def vacuum_moment(
    transform: BogoliubovTransform, ops: Sequence[tuple[int, bool]]
) -> complex:
    """Input-vacuum expectation of an ordered output-operator string.

    ``ops`` lists (mode, dagger) pairs, leftmost first.  Odd-length strings
    have exactly zero vacuum expectation and return 0.
    """
    if len(ops) > 8:
        raise ValueError("operator strings longer than 8 are not supported")
    if len(ops) % 2:
        return 0j
    if not ops:
        return 1.0 + 0j
    # each output operator is a linear form u.a + v.a^dag in input operators
    u_rows = []
    v_rows = []
    for mode, dagger in ops:
        if dagger:
            u_rows.append(transform.B[mode].conj())
            v_rows.append(transform.A[mode].conj())
        else:
            u_rows.append(transform.A[mode])
            v_rows.append(transform.B[mode])
    u = np.array(u_rows)
    v = np.array(v_rows)
    # only <a a^dag> = 1 survives on vacuum, so an (i, j) contraction with
    # i preceding j contributes u_i . v_j
    contraction = u @ v.T

    def _rec(rest: tuple[int, ...]) -> complex:
        if not rest:
            return 1.0 + 0j
        first = rest[0]
        total = 0j
        for k in range(1, len(rest)):
            partner = rest[k]
            total += contraction[first, partner] * _rec(rest[1:k] + rest[k + 1 :])
        return total

    return complex(_rec(tuple(range(len(ops)))))


def number_moment(transform: BogoliubovTransform, modes: Sequence[int]) -> float:
    """Vacuum expectation of a product of output photon-number operators."""
    ops: list[tuple[int, bool]] = []
    for m in modes:
        ops.extend([(m, True), (m, False)])
    return vacuum_moment(transform, ops).real


def fringe_visibility(values: Sequence[float]) -> float:
    """(max - min) / (max + min) of a real signal sampled over one period."""
    if len(values) < 8:
        raise ValueError("need at least 8 samples over the sweep period")
    arr = np.asarray(values, dtype=float)
    hi, lo = float(arr.max()), float(arr.min())
    if hi + lo == 0:
        raise UndefinedVisibilityError("max + min of the sweep is zero")
    return (hi - lo) / (hi + lo)
