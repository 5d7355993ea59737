"""D-dimensional teleportation with generalized Bell states.

Particle 1 holds the input, particles 2 and 3 share ``psi_jk``.  Alice
Bell-measures (1, 2); Bob holds 3 and undoes ``U_lm``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log2, pi

import numpy as np

from .core import (
    ATOL,
    PureState,
    apply_unitary,
    check_dim,
    check_dit,
    fidelity,
    random_pure_state,
    tensor,
)
from .gates import BellLabel, bell_disentangler, bell_state, correction_unitary


def classical_bits(D: int) -> float:
    return 2 * log2(check_dim(D))


def _one_qudit(chi: PureState, D: int | None) -> int:
    if len(chi.dims) != 1:
        raise ValueError(f"input must be a single qudit, got dims {chi.dims}")
    if D is not None and chi.dims[0] != D:
        raise ValueError(f"input has dimension {chi.dims[0]}, expected {D}")
    return chi.dims[0]


def verify_teleport_identity(chi: PureState, j: int, k: int, D: int | None = None) -> float:
    """Max amplitude deviation between both sides of the teleportation identity."""
    D = _one_qudit(chi, D)
    j, k = check_dit(j, D), check_dit(k, D)
    lhs = np.kron(chi.amps, bell_state(j, k, D).amps)
    rhs = np.zeros_like(lhs)
    for l in range(D):
        for m in range(D):
            coeff = np.exp(-2j * pi * j * m / D) / D
            bob = correction_unitary(l, m, j, k, D).mat @ chi.amps
            rhs += coeff * np.kron(bell_state(l, m, D).amps, bob)
    return float(np.abs(lhs - rhs).max())


@dataclass(frozen=True, eq=False)
class TeleportRecord:
    outcome: BellLabel
    probability: float
    bob_pre_correction: PureState
    bob_post_correction: PureState
    fidelity_with_input: float
    classical_bits: float


def outcome_branches(chi: PureState, j: int, k: int) -> np.ndarray:
    """Bob's unnormalized state for every Alice outcome, shape (D, D, D)."""
    D = _one_qudit(chi, None)
    joint = tensor(chi, bell_state(check_dit(j, D), check_dit(k, D), D))
    joint = apply_unitary(joint, bell_disentangler(D), (0, 1))
    return joint.amps.reshape(D, D, D)


def teleport(chi: PureState, j: int = 0, k: int = 0, *, outcome=None,
             rng: np.random.Generator | int | None = None) -> TeleportRecord:
    """Run the protocol once.

    Pass ``outcome=(l, m)`` to force Alice's result; otherwise it is sampled
    from ``rng`` (a Generator or a seed).
    """
    D = _one_qudit(chi, None)
    branches = outcome_branches(chi, j, k)
    probs = np.sum(np.abs(branches) ** 2, axis=2)
    if outcome is None:
        rng = np.random.default_rng(rng)
        p = probs.reshape(-1)
        idx = int(rng.choice(D * D, p=p / p.sum()))
        l, m = divmod(idx, D)
    else:
        l, m = outcome
        l, m = check_dit(l, D), check_dit(m, D)
    prob = float(probs[l, m])
    pre = PureState.normalized((D,), branches[l, m])
    post = apply_unitary(pre, correction_unitary(l, m, j, k, D).dag, (0,))
    return TeleportRecord(
        outcome=BellLabel(l, m),
        probability=prob,
        bob_pre_correction=pre,
        bob_post_correction=post,
        fidelity_with_input=fidelity(chi, post),
        classical_bits=classical_bits(D),
    )


@dataclass(frozen=True)
class TeleportSummary:
    D: int
    trials: int
    seed: int | None
    min_fidelity: float
    mean_fidelity: float
    outcome_counts: tuple[tuple[int, ...], ...]
    classical_bits: float

    @property
    def frequencies(self) -> np.ndarray:
        return np.array(self.outcome_counts, dtype=float) / self.trials


def teleport_demo(D: int, trials: int, seed: int | None = None) -> TeleportSummary:
    """Teleport ``trials`` Haar-random states through random shared pairs.

    Each trial gets its own generator spawned from ``seed``.
    """
    D = check_dim(D)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    counts = np.zeros((D, D), dtype=int)
    fids = []
    for child in np.random.SeedSequence(seed).spawn(trials):
        rng = np.random.default_rng(child)
        chi = random_pure_state((D,), rng)
        j, k = (int(x) for x in rng.integers(0, D, size=2))
        rec = teleport(chi, j, k, rng=rng)
        counts[rec.outcome] += 1
        fids.append(rec.fidelity_with_input)
    return TeleportSummary(
        D=D,
        trials=trials,
        seed=seed,
        min_fidelity=float(min(fids)),
        mean_fidelity=float(np.mean(fids)),
        outcome_counts=tuple(tuple(int(c) for c in row) for row in counts),
        classical_bits=classical_bits(D),
    )


def bob_expected_state(chi: PureState, l: int, m: int, j: int, k: int) -> PureState:
    """exp(-2 pi i j m / D) U_lm |chi>, the state the identity predicts for Bob."""
    D = _one_qudit(chi, None)
    amps = np.exp(-2j * pi * j * m / D) * (correction_unitary(l, m, j, k, D).mat @ chi.amps)
    return PureState((D,), amps, atol=ATOL)
