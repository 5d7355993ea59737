"""Gate constructors built on the generalized XOR (GXOR) gate."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import pi
from typing import NamedTuple, Union

import numpy as np

from .core import (
    DensityMatrix,
    PureState,
    UnitaryOp,
    apply_unitary,
    check_dim,
    check_dit,
    dft_matrix,
    dft_unitary,
    mod_add,
    mod_sub,
)


class BellLabel(NamedTuple):
    l: int
    m: int


def _permutation(D: int, image) -> np.ndarray:
    P = np.zeros((D * D, D * D), dtype=complex)
    for i in range(D):
        for j in range(D):
            P[i * D + image(i, j), i * D + j] = 1
    return P


@lru_cache(maxsize=None)
def gxor_unitary(D: int) -> UnitaryOp:
    """|i, j> -> |i, i - j mod D>.  Hermitian and its own inverse."""
    D = check_dim(D)
    return UnitaryOp((D, D), _permutation(D, lambda i, j: mod_sub(i, j, D)))


@lru_cache(maxsize=None)
def gxor_add_unitary(D: int) -> UnitaryOp:
    """|i, j> -> |i, i + j mod D>.  Unitary, but not Hermitian for D > 2."""
    D = check_dim(D)
    return UnitaryOp((D, D), _permutation(D, lambda i, j: mod_add(i, j, D)))


def bell_state(l: int, m: int, D: int) -> PureState:
    """GXOR applied to (F|l>) |m>."""
    D = check_dim(D)
    prod_state = PureState(
        (D, D), np.kron(dft_matrix(D)[:, check_dit(l, D)], np.eye(D)[check_dit(m, D)]))
    return apply_unitary(prod_state, gxor_unitary(D), (0, 1))


def bell_basis(D: int) -> dict[BellLabel, PureState]:
    D = check_dim(D)
    return {BellLabel(l, m): bell_state(l, m, D) for l in range(D) for m in range(D)}


@lru_cache(maxsize=None)
def bell_disentangler(D: int) -> UnitaryOp:
    """(F^dagger x 1) GXOR, which maps psi_lm to |l>|m>."""
    Fd = dft_unitary(D).dag
    return UnitaryOp((D, D), np.kron(Fd.mat, np.eye(D)) @ gxor_unitary(D).mat)


def bell_measurement(state: Union[PureState, DensityMatrix]) -> dict[BellLabel, float]:
    """Exact outcome distribution of a Bell measurement on two qudits.

    The measurement is carried out by disentangling with GXOR and an inverse
    Fourier transform on the first qudit, then reading out in the
    computational basis.  Outcome ``(l, m)`` leaves the pair in ``psi_lm``.
    """
    if len(state.dims) != 2 or state.dims[0] != state.dims[1]:
        raise ValueError(f"Bell measurement needs two equal qudits, got dims {state.dims}")
    D = state.dims[0]
    out = apply_unitary(state, bell_disentangler(D), (0, 1))
    if isinstance(out, PureState):
        probs = np.abs(out.amps) ** 2
    else:
        probs = np.clip(np.diag(out.mat).real, 0.0, None)
    return {BellLabel(l, m): float(probs[l * D + m]) for l in range(D) for m in range(D)}


def correction_unitary(l: int, m: int, j: int, k: int, D: int) -> UnitaryOp:
    """U_lm |n> = exp(-2 pi i n (l - j) / D) |n - k - m>."""
    D = check_dim(D)
    l, m, j, k = (check_dit(x, D) for x in (l, m, j, k))
    U = np.zeros((D, D), dtype=complex)
    for n in range(D):
        U[mod_sub(mod_sub(n, k, D), m, D), n] = np.exp(-2j * pi * n * (l - j) / D)
    return UnitaryOp((D,), U)


@dataclass(frozen=True)
class KerrParams:
    """Cross-Kerr coupling H = chi n1 n2 (hbar = 1) run for t = 2 pi / (D chi)."""
    D: int
    chi: float = 1.0

    def __post_init__(self):
        check_dim(self.D)
        if not self.chi > 0:
            raise ValueError("chi must be positive")

    @property
    def time(self) -> float:
        return 2 * pi / (self.D * self.chi)

    @property
    def phase_per_step(self) -> float:
        return 2 * pi / self.D


def kerr_phases(params: KerrParams) -> np.ndarray:
    """Diagonal of exp(-i H t) over Fock pairs |n1, n2>, n1, n2 < D."""
    n = np.arange(params.D)
    return np.exp(-1j * params.chi * params.time * np.outer(n, n)).reshape(-1)


def kerr_gxor_images(D: int, chi: float = 1.0) -> np.ndarray:
    """Images of mixed-basis product states under Kerr evolution + phase conjugation.

    Column ``i * D + k`` is the image of Fock |i>_1 times Fourier |k>_2, written
    back in the mixed basis.  Phase conjugation is antilinear, so this is a
    statement about basis images only, not a linear operator.
    """
    params = KerrParams(check_dim(D), chi)
    F = dft_matrix(D)
    to_mixed = np.kron(np.eye(D), F.conj().T)
    phases = kerr_phases(params)
    cols = np.empty((D * D, D * D), dtype=complex)
    for i in range(D):
        for k in range(D):
            fock = np.kron(np.eye(D)[i], F[:, k])
            evolved = phases * fock
            conjugated = evolved.conj()
            cols[:, i * D + k] = to_mixed @ conjugated
    return cols


def kerr_residual(D: int, chi: float = 1.0) -> float:
    return float(np.abs(kerr_gxor_images(D, chi) - gxor_unitary(D).mat).max())
