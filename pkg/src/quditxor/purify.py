"""Post-selected nonlinear map and the iterated purification experiment.

``werner_state`` keeps its historical name, though the family
lam |psi00><psi00| + (1 - lam) 1/D^2 is the isotropic one (invariant under
every U x U* twirl).
"""
from __future__ import annotations

import dataclasses
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .core import (
    ATOL,
    PROB_FLOOR,
    CapacityError,
    DensityMatrix,
    ImpossibleOutcomeError,
    MAX_DENSE_SIDE,
    PureState,
    UnitaryOp,
    apply_unitary,
    check_dim,
    density_problems,
    dft_unitary,
    fidelity,
    identity_unitary,
    post_select,
    tensor,
    tensor_all,
    truncated_dft_unitary,
)
from .gates import bell_state, gxor_unitary


# Side length cap for the brute-force oracle (a 4096^2 complex matrix is 268 MB).
ORACLE_MAX_SIDE = 4096


class VanishingProbabilityError(ImpossibleOutcomeError):
    """The post-selected branch of the nonlinear map has negligible weight."""


def nonlinear_map(sigma: DensityMatrix, N: int = 1) -> tuple[DensityMatrix, float]:
    """Entrywise (1 + N)-th power of ``sigma``, renormalized.

    Returns the output state and the success probability
    ``sum_i sigma_ii ** (1 + N)``.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    diag = np.diag(sigma.mat).real
    if not np.any(np.abs(diag) > 0):
        raise ValueError("density matrix has an all-zero diagonal")
    powered = sigma.mat ** (1 + N)
    p_c = float(np.sum(diag ** (1 + N)))
    if p_c < PROB_FLOOR:
        raise VanishingProbabilityError(f"vanishing success probability {p_c:.3g}")
    return DensityMatrix._trusted(sigma.dims, powered / p_c), p_c


def oracle_side(D: int, M: int, N: int) -> int:
    return D ** (M * (1 + N))


def nonlinear_map_oracle(sigma_c: DensityMatrix, sigma_t: DensityMatrix,
                         M: int, N: int = 1) -> tuple[DensityMatrix, float]:
    """Brute-force version of the map: GXOR every control qudit with the
    matching qudit of each of the N target copies, then project all target
    qudits onto |0>.
    """
    if M < 1 or N < 1:
        raise ValueError("M and N must be >= 1")
    if len(sigma_c.dims) != M or len(set(sigma_c.dims)) != 1:
        raise ValueError(f"control must be {M} equal qudits, got dims {sigma_c.dims}")
    if sigma_t.dims != sigma_c.dims:
        raise ValueError("control and target dims differ")
    D = sigma_c.dims[0]
    side = oracle_side(D, M, N)
    if side > ORACLE_MAX_SIDE:
        raise CapacityError(f"oracle needs a {side}x{side} matrix (guard {ORACLE_MAX_SIDE})")

    joint = tensor_all([sigma_c] + [sigma_t] * N)
    G = gxor_unitary(D)
    for i in range(N):
        for j in range(M):
            joint = apply_unitary(joint, G, (j, M + i * M + j))
    p_c = 1.0
    for _ in range(M * N):
        joint, p = post_select(joint, len(joint.dims) - 1, 0)
        p_c *= p
    return joint, p_c


@dataclass(frozen=True)
class MapPropertiesReport:
    valid_output: bool
    non_injective_witness: bool
    nonlinear_witness: bool
    fixed_points_ok: bool
    pure_to_pure: Optional[bool]  # None when the input is not pure
    details: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return (self.valid_output and self.non_injective_witness and self.nonlinear_witness
                and self.fixed_points_ok and self.pure_to_pure is not False)


def map_properties_check(sigma: DensityMatrix, N: int = 1,
                         fixed_points: Iterable[DensityMatrix] = (),
                         atol: float = ATOL) -> MapPropertiesReport:
    details = []
    out, _ = nonlinear_map(sigma, N)

    problems = density_problems(out.mat, atol)
    details += problems

    # Z multiplies one basis state by a (1+N)-th root of unity; the power kills it.
    omega = np.exp(2j * np.pi / (1 + N))
    witness = False
    for idx in range(sigma.dim):
        z = np.ones(sigma.dim, dtype=complex)
        z[idx] = omega
        rotated = z[:, None] * sigma.mat * z.conj()[None, :]
        if np.abs(rotated - sigma.mat).max() <= atol:
            continue
        out_rot, _ = nonlinear_map(DensityMatrix._trusted(sigma.dims, rotated), N)
        if np.abs(out_rot.mat - out.mat).max() <= atol:
            witness = True
            break
    if not witness:
        details.append("no phase-rotation witness found (diagonal input?)")

    mixed = DensityMatrix.maximally_mixed(sigma.dims)
    half = DensityMatrix._trusted(sigma.dims, (sigma.mat + mixed.mat) / 2)
    lhs = nonlinear_map(half, N)[0].mat
    rhs = (out.mat + nonlinear_map(mixed, N)[0].mat) / 2
    nonlinear = bool(np.abs(lhs - rhs).max() > atol)
    if not nonlinear:
        details.append("mixture with 1/d was mapped affinely")

    fixed_ok = True
    for fp in fixed_points:
        img = nonlinear_map(fp, N)[0]
        if np.abs(img.mat - fp.mat).max() > atol:
            fixed_ok = False
            details.append("supplied fixed point moved")

    evals = sigma.eigenvalues()
    pure_to_pure = None
    if evals[-2] < atol:
        pure_to_pure = bool(out.eigenvalues()[-2] < atol)
        if not pure_to_pure:
            details.append("pure input gave a mixed output")

    return MapPropertiesReport(
        valid_output=not problems,
        non_injective_witness=witness,
        nonlinear_witness=nonlinear,
        fixed_points_ok=fixed_ok,
        pure_to_pure=pure_to_pure,
        details=tuple(details),
    )


def psi00(D: int) -> PureState:
    return bell_state(0, 0, D)


def werner_state(lam: float, D: int) -> DensityMatrix:
    """lam |psi00><psi00| + (1 - lam) 1 / D^2 on two qudits."""
    D = check_dim(D)
    if not 0 <= lam <= 1:
        raise ValueError(f"lambda must lie in [0, 1], got {lam}")
    p = psi00(D).amps
    mat = lam * np.outer(p, p.conj()) + (1 - lam) * np.eye(D * D) / D ** 2
    return DensityMatrix((D, D), mat)


def separability_threshold(D: int) -> float:
    """Werner states are entangled iff lam > 1 / (1 + D)."""
    return 1 / (1 + check_dim(D))


def twirl(sigma: DensityMatrix, U: UnitaryOp) -> DensityMatrix:
    """(U x U*) sigma (U x U*)^dagger on a two-qudit state."""
    if len(sigma.dims) != 2 or U.dims != sigma.dims[:1] or sigma.dims[0] != sigma.dims[1]:
        raise ValueError(f"cannot twirl dims {sigma.dims} with a {U.dims} unitary")
    return apply_unitary(sigma, tensor(U, U.conj()), (0, 1))


TWIRLS = {
    "full_dft": dft_unitary,
    "truncated_dft": truncated_dft_unitary,
    "identity": identity_unitary,
}
DEFAULT_SCHEDULE = ("full_dft", "truncated_dft")


def twirl_for_step(D: int, step_index: int, schedule: Sequence[str] = DEFAULT_SCHEDULE) -> UnitaryOp:
    return TWIRLS[schedule[step_index % len(schedule)]](D)


def purification_step(sigma: DensityMatrix, step_index: int,
                      schedule: Sequence[str] = DEFAULT_SCHEDULE,
                      N: int = 1) -> tuple[DensityMatrix, float]:
    out, p_c = nonlinear_map(sigma, N)
    return twirl(out, twirl_for_step(sigma.dims[0], step_index, schedule)), p_c


@dataclass(frozen=True)
class PurifyConfig:
    D: int
    lam: Optional[float] = None
    initial: Optional[DensityMatrix] = field(default=None, compare=False, repr=False)
    M: int = 2
    N: int = 1
    max_iters: int = 500
    fidelity_target: float = 0.999
    twirl_schedule: tuple[str, ...] = DEFAULT_SCHEDULE

    def __post_init__(self):
        check_dim(self.D)
        if (self.lam is None) == (self.initial is None):
            raise ValueError("give exactly one of lam or initial")
        if self.lam is not None and not 0 <= self.lam <= 1:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.M != 2:
            raise ValueError("purification acts on two-qudit states (M = 2)")
        if self.initial is not None and self.initial.dims != (self.D, self.D):
            raise ValueError(f"initial state dims {self.initial.dims} != {(self.D, self.D)}")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if self.max_iters < 0:
            raise ValueError("max_iters must be >= 0")
        if not 0 < self.fidelity_target <= 1:
            raise ValueError("fidelity_target must lie in (0, 1]")
        sched = tuple(self.twirl_schedule)
        if not sched or any(s not in TWIRLS for s in sched):
            raise ValueError(f"twirl schedule must be a nonempty list from {sorted(TWIRLS)}")
        object.__setattr__(self, "twirl_schedule", sched)
        if self.D ** 2 > MAX_DENSE_SIDE:
            raise CapacityError(f"D={self.D} exceeds the dense size guard")

    def initial_state(self) -> DensityMatrix:
        return self.initial if self.initial is not None else werner_state(self.lam, self.D)


@dataclass(frozen=True)
class PurificationStep:
    iteration: int
    fidelity: float
    step_success_prob: float
    cumulative_success_prob: float


@dataclass(frozen=True)
class PurificationTrace:
    steps: tuple[PurificationStep, ...]
    converged: bool
    iterations_used: int
    reason: str
    final_state: Optional[DensityMatrix] = field(default=None, compare=False, repr=False)

    @property
    def final_fidelity(self) -> float:
        return self.steps[-1].fidelity


def run_purification(config: PurifyConfig) -> PurificationTrace:
    """Iterate the purification step until the psi00 fidelity hits the target.

    Step 0 of the trace is the initial state.
    """
    D = config.D
    target = psi00(D)
    sigma = config.initial_state()
    fid = fidelity(target, sigma)
    cum = 1.0
    steps = [PurificationStep(0, fid, 1.0, cum)]
    reason = "max_iters reached"
    it = 0
    if fid >= config.fidelity_target:
        reason = "target reached"
    else:
        while it < config.max_iters:
            try:
                sigma, p_c = purification_step(sigma, it, config.twirl_schedule, config.N)
            except VanishingProbabilityError as exc:
                reason = f"vanishing success probability: {exc}"
                break
            it += 1
            cum *= p_c
            fid = fidelity(target, sigma)
            steps.append(PurificationStep(it, fid, p_c, cum))
            if fid >= config.fidelity_target:
                reason = "target reached"
                break
    return PurificationTrace(
        steps=tuple(steps),
        converged=reason == "target reached",
        iterations_used=it,
        reason=reason,
        final_state=sigma,
    )


@dataclass(frozen=True)
class SweepRow:
    D: int
    lam: float
    converged: bool
    iterations_used: int
    cumulative_success_prob: float
    final_fidelity: float


def sweep_grid(dims: Sequence[int], lambdas: Sequence[float],
               entangled_only: bool = False) -> list[tuple[int, float]]:
    cells = []
    for D in dims:
        check_dim(D)
        for lam in lambdas:
            if not 0 <= lam <= 1:
                raise ValueError(f"lambda must lie in [0, 1], got {lam}")
            if entangled_only and lam <= separability_threshold(D):
                continue
            cells.append((int(D), float(lam)))
    return cells


def _run_cell(template: PurifyConfig, D: int, lam: float) -> SweepRow:
    cfg = dataclasses.replace(template, D=D, lam=lam, initial=None)
    tr = run_purification(cfg)
    return SweepRow(D, lam, tr.converged, tr.iterations_used,
                    tr.steps[-1].cumulative_success_prob, tr.final_fidelity)


def sweep(dims: Sequence[int], lambdas: Sequence[float],
          template: Optional[PurifyConfig] = None, *, entangled_only: bool = False,
          workers: Optional[int] = None) -> list[SweepRow]:
    """One row per (D, lam) cell, in grid order.

    With ``entangled_only`` the grid is intersected with (lam_D, 1].
    """
    if not len(dims) or not len(lambdas):
        raise ValueError("dimension and lambda grids must be nonempty")
    cells = sweep_grid(dims, lambdas, entangled_only)
    if not cells:
        raise ValueError("the (D, lambda) grid is empty after filtering")
    if template is None:
        template = PurifyConfig(D=cells[0][0], lam=cells[0][1])
    Ds, lams = zip(*cells)
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_run_cell, [template] * len(cells), Ds, lams))
    return [_run_cell(template, D, lam) for D, lam in cells]
