"""Dense linear algebra over composite qudit systems.

States and operators carry an explicit tuple of subsystem dimensions.  Index
flattening is row-major: the first subsystem is the most significant digit,
which is what ``np.kron`` produces.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from math import prod
from typing import Sequence, Union

import numpy as np

ATOL = 1e-10
# Probabilities below this are treated as an impossible outcome.
PROB_FLOOR = 1e-15
# Largest matrix side length we are willing to build densely.
MAX_DENSE_SIDE = 10_000


class ImpossibleOutcomeError(ValueError):
    """Post-selection on an outcome that has (numerically) zero probability."""


class CapacityError(RuntimeError):
    """A dense construction would exceed the configured size guard."""


def check_dim(D: int) -> int:
    if isinstance(D, bool) or not isinstance(D, (int, np.integer)):
        raise TypeError(f"dimension must be an integer, got {D!r}")
    if D < 2:
        raise ValueError(f"dimension must be >= 2, got {D}")
    return int(D)


def check_dit(i: int, D: int) -> int:
    if isinstance(i, bool) or not isinstance(i, (int, np.integer)):
        raise TypeError(f"dit must be an integer, got {i!r}")
    if not 0 <= i < D:
        raise ValueError(f"dit {i} out of range for D={D}")
    return int(i)


def mod_sub(i: int, j: int, D: int) -> int:
    """Canonical residue of ``i - j`` modulo ``D``."""
    D = check_dim(D)
    return (check_dit(i, D) - check_dit(j, D)) % D


def mod_add(i: int, j: int, D: int) -> int:
    D = check_dim(D)
    return (check_dit(i, D) + check_dit(j, D)) % D


def check_side(n: int) -> None:
    if n > MAX_DENSE_SIDE:
        raise CapacityError(
            f"dense matrix side {n} exceeds guard of {MAX_DENSE_SIDE}")


def _norm_dims(dims: Sequence[int]) -> tuple[int, ...]:
    dims = tuple(check_dim(d) for d in dims)
    if not dims:
        raise ValueError("at least one subsystem is required")
    return dims


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def hermiticity_residual(mat: np.ndarray) -> float:
    return float(np.abs(mat - mat.conj().T).max())


def unitarity_residual(mat: np.ndarray) -> float:
    return float(np.abs(mat.conj().T @ mat - np.eye(mat.shape[0])).max())


@dataclass(frozen=True, eq=False)
class PureState:
    dims: tuple[int, ...]
    amps: np.ndarray
    atol: float = field(default=ATOL, repr=False)

    def __post_init__(self):
        dims = _norm_dims(self.dims)
        amps = np.asarray(self.amps, dtype=complex).reshape(-1)
        if amps.size != prod(dims):
            raise ValueError(f"{amps.size} amplitudes do not match dims {dims}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > self.atol:
            raise ValueError(f"state is not normalized (norm={norm!r})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", _frozen(amps))

    @classmethod
    def basis(cls, digits: Sequence[int], dims: Sequence[int]) -> "PureState":
        dims = _norm_dims(dims)
        if len(digits) != len(dims):
            raise ValueError("one digit per subsystem is required")
        idx = int(np.ravel_multi_index(
            tuple(check_dit(i, d) for i, d in zip(digits, dims)), dims))
        amps = np.zeros(prod(dims), dtype=complex)
        amps[idx] = 1
        return cls(dims, amps)

    @classmethod
    def normalized(cls, dims: Sequence[int], amps) -> "PureState":
        amps = np.asarray(amps, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm < PROB_FLOOR:
            raise ValueError("cannot normalize a zero vector")
        return cls(dims, amps / norm)

    @property
    def dim(self) -> int:
        return self.amps.size

    def density(self) -> "DensityMatrix":
        return DensityMatrix(self.dims, np.outer(self.amps, self.amps.conj()))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    dims: tuple[int, ...]
    mat: np.ndarray
    atol: float = field(default=ATOL, repr=False)

    def __post_init__(self):
        dims = _norm_dims(self.dims)
        n = prod(dims)
        check_side(n)
        mat = np.asarray(self.mat, dtype=complex)
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", _frozen(mat))
        problems = density_problems(self.mat, self.atol)
        if problems:
            raise ValueError("invalid density matrix: " + "; ".join(problems))

    @classmethod
    def _trusted(cls, dims: tuple[int, ...], mat: np.ndarray) -> "DensityMatrix":
        # Skips the eigenvalue check; callers guarantee validity by construction.
        obj = object.__new__(cls)
        object.__setattr__(obj, "dims", tuple(dims))
        object.__setattr__(obj, "mat", _frozen(mat))
        object.__setattr__(obj, "atol", ATOL)
        return obj

    @classmethod
    def maximally_mixed(cls, dims: Sequence[int]) -> "DensityMatrix":
        dims = _norm_dims(dims)
        n = prod(dims)
        return cls(dims, np.eye(n) / n)

    @property
    def dim(self) -> int:
        return self.mat.shape[0]

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.mat)


def density_problems(mat: np.ndarray, atol: float = ATOL) -> list[str]:
    """List every way ``mat`` fails to be a density matrix (empty if valid)."""
    out = []
    herm = hermiticity_residual(mat)
    if herm > atol:
        out.append(f"not Hermitian (residual {herm:.3g})")
    tr = np.trace(mat)
    if abs(tr - 1) > atol:
        out.append(f"trace {tr:.6g} != 1")
    if not out:
        low = np.linalg.eigvalsh((mat + mat.conj().T) / 2)[0]
        if low < -atol:
            out.append(f"negative eigenvalue {low:.3g}")
    return out


def assert_density_matrix(rho: Union[DensityMatrix, np.ndarray], atol: float = ATOL) -> None:
    """Raise AssertionError unless ``rho`` is Hermitian, PSD and unit trace."""
    mat = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    problems = density_problems(mat, atol)
    assert not problems, "; ".join(problems)


@dataclass(frozen=True, eq=False)
class UnitaryOp:
    dims: tuple[int, ...]
    mat: np.ndarray
    atol: float = field(default=ATOL, repr=False)

    def __post_init__(self):
        dims = _norm_dims(self.dims)
        n = prod(dims)
        check_side(n)
        mat = np.asarray(self.mat, dtype=complex)
        if mat.shape != (n, n):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        res = unitarity_residual(mat)
        if res > self.atol:
            raise ValueError(f"matrix is not unitary (residual {res:.3g})")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "mat", _frozen(mat))

    @property
    def dag(self) -> "UnitaryOp":
        return UnitaryOp(self.dims, self.mat.conj().T)

    def __matmul__(self, other: "UnitaryOp") -> "UnitaryOp":
        if not isinstance(other, UnitaryOp):
            return NotImplemented
        if self.dims != other.dims:
            raise ValueError(f"dims mismatch: {self.dims} vs {other.dims}")
        return UnitaryOp(self.dims, self.mat @ other.mat)

    def power(self, k: int) -> "UnitaryOp":
        return UnitaryOp(self.dims, np.linalg.matrix_power(self.mat, k))

    def conj(self) -> "UnitaryOp":
        return UnitaryOp(self.dims, self.mat.conj())


Quantum = Union[PureState, DensityMatrix, UnitaryOp]


def tensor(a: Quantum, b: Quantum) -> Quantum:
    """Kronecker product; the dims of ``b`` are appended to those of ``a``."""
    if type(a) is not type(b):
        raise TypeError(f"cannot tensor {type(a).__name__} with {type(b).__name__}")
    dims = a.dims + b.dims
    if isinstance(a, PureState):
        return PureState(dims, np.kron(a.amps, b.amps))
    check_side(prod(dims))
    if isinstance(a, DensityMatrix):
        return DensityMatrix._trusted(dims, np.kron(a.mat, b.mat))
    return UnitaryOp(dims, np.kron(a.mat, b.mat))


def tensor_all(items: Sequence[Quantum]) -> Quantum:
    out = items[0]
    for x in items[1:]:
        out = tensor(out, x)
    return out


def _check_subsystems(subsystems: Sequence[int], n: int) -> tuple[int, ...]:
    subs = tuple(int(s) for s in subsystems)
    if not subs:
        raise ValueError("no subsystems given")
    if len(set(subs)) != len(subs):
        raise ValueError(f"repeated subsystem in {subs}")
    for s in subs:
        if not 0 <= s < n:
            raise ValueError(f"subsystem {s} out of range for {n} subsystems")
    return subs


def _apply_on_axes(t: np.ndarray, op: np.ndarray, axes: tuple[int, ...],
                   sub_dims: tuple[int, ...]) -> np.ndarray:
    k = len(axes)
    op_t = op.reshape(sub_dims + sub_dims)
    out = np.tensordot(op_t, t, axes=(tuple(range(k, 2 * k)), axes))
    return np.moveaxis(out, tuple(range(k)), axes)


def apply_unitary(state: Union[PureState, DensityMatrix], U: UnitaryOp,
                  subsystems: Sequence[int]) -> Union[PureState, DensityMatrix]:
    """Apply ``U`` to the listed subsystems (in the order given)."""
    n = len(state.dims)
    subs = _check_subsystems(subsystems, n)
    sub_dims = tuple(state.dims[s] for s in subs)
    if sub_dims != U.dims:
        raise ValueError(f"operator dims {U.dims} do not match subsystems {sub_dims}")
    if isinstance(state, PureState):
        t = state.amps.reshape(state.dims)
        t = _apply_on_axes(t, U.mat, subs, sub_dims)
        return PureState(state.dims, t.reshape(-1))
    t = state.mat.reshape(state.dims + state.dims)
    t = _apply_on_axes(t, U.mat, subs, sub_dims)
    t = _apply_on_axes(t, U.mat.conj(), tuple(n + s for s in subs), sub_dims)
    side = state.dim
    m = t.reshape(side, side)
    # Re-symmetrize: iterated nonlinear maps amplify round-off anti-Hermitian parts.
    return DensityMatrix._trusted(state.dims, (m + m.conj().T) / 2)


def partial_trace(rho: DensityMatrix, keep: Sequence[int]) -> DensityMatrix:
    """Reduced state on ``keep`` (subsystem order preserved)."""
    n = len(rho.dims)
    keep = tuple(sorted(_check_subsystems(keep, n)))
    t = rho.mat.reshape(rho.dims + rho.dims)
    rows = list(range(n))
    cols = [n + s if s in keep else s for s in range(n)]
    out_axes = list(keep) + [n + s for s in keep]
    red = np.einsum(t, rows + cols, out_axes)
    kdims = tuple(rho.dims[s] for s in keep)
    side = prod(kdims)
    return DensityMatrix._trusted(kdims, red.reshape(side, side))


def post_select(state: DensityMatrix, subsystem: int, ket: int) -> tuple[DensityMatrix, float]:
    """Project ``subsystem`` onto ``|ket>`` and trace it out.

    Returns the renormalized state of the remaining subsystems and the
    probability of the outcome.
    """
    n = len(state.dims)
    if n < 2:
        raise ValueError("post-selection needs at least two subsystems")
    (s,) = _check_subsystems([subsystem], n)
    ket = check_dit(ket, state.dims[s])
    t = state.mat.reshape(state.dims + state.dims)
    idx = [slice(None)] * (2 * n)
    idx[s] = ket
    idx[n + s] = ket
    block = t[tuple(idx)]
    rest = state.dims[:s] + state.dims[s + 1:]
    side = prod(rest)
    block = block.reshape(side, side)
    p = float(np.trace(block).real)
    if p < PROB_FLOOR:
        raise ImpossibleOutcomeError(
            f"outcome |{ket}> on subsystem {s} has probability {p:.3g}")
    return DensityMatrix._trusted(rest, block / p), p


def fidelity(psi: PureState, rho: Union[DensityMatrix, PureState]) -> float:
    """Overlap <psi|rho|psi>; for a pure ``rho`` this is |<psi|phi>|^2."""
    if psi.dims != rho.dims:
        raise ValueError(f"dims mismatch: {psi.dims} vs {rho.dims}")
    if isinstance(rho, PureState):
        return float(abs(np.vdot(psi.amps, rho.amps)) ** 2)
    return float(np.vdot(psi.amps, rho.mat @ psi.amps).real)


def equal_up_to_phase(a: PureState, b: PureState, atol: float = ATOL) -> bool:
    return a.dims == b.dims and abs(abs(np.vdot(a.amps, b.amps)) - 1) <= atol


def dft_matrix(D: int) -> np.ndarray:
    k = np.arange(D)
    return np.exp(2j * np.pi * np.outer(k, k) / D) / np.sqrt(D)


@lru_cache(maxsize=None)
def dft_unitary(D: int) -> UnitaryOp:
    """Fourier gate with kernel exp(+2 pi i l k / D) / sqrt(D)."""
    D = check_dim(D)
    return UnitaryOp((D,), dft_matrix(D))


@lru_cache(maxsize=None)
def truncated_dft_unitary(D: int) -> UnitaryOp:
    """Fourier transform on |0>..|D-2>, identity on |D-1>."""
    D = check_dim(D)
    U = np.eye(D, dtype=complex)
    U[:D - 1, :D - 1] = dft_matrix(D - 1)
    return UnitaryOp((D,), U)


@lru_cache(maxsize=None)
def identity_unitary(D: int) -> UnitaryOp:
    D = check_dim(D)
    return UnitaryOp((D,), np.eye(D))


def random_pure_state(dims: Sequence[int], rng: np.random.Generator) -> PureState:
    """Haar-random pure state from a normalized complex Gaussian vector."""
    n = prod(_norm_dims(dims))
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    return PureState.normalized(dims, v)


def random_density_matrix(dims: Sequence[int], rng: np.random.Generator,
                          rank: int | None = None) -> DensityMatrix:
    n = prod(_norm_dims(dims))
    r = n if rank is None else rank
    g = rng.normal(size=(n, r)) + 1j * rng.normal(size=(n, r))
    m = g @ g.conj().T
    m = (m + m.conj().T) / 2
    return DensityMatrix(dims, m / np.trace(m).real)
