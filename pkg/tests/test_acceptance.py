"""Exit criteria.  Each test records one PASS/FAIL line, shown in the
terminal summary under "acceptance criteria"."""
import json

import numpy as np
import pytest

from quditxor.cli import run
from quditxor.core import hermiticity_residual, unitarity_residual
from quditxor.gates import bell_basis, bell_state, gxor_add_unitary, gxor_unitary, kerr_residual
from quditxor.purify import (
    PurifyConfig,
    map_properties_check,
    nonlinear_map,
    nonlinear_map_oracle,
    psi00,
    purification_step,
    run_purification,
    separability_threshold,
)
from quditxor.core import assert_density_matrix, random_density_matrix, random_pure_state
from quditxor.teleport import classical_bits, teleport, verify_teleport_identity

from conftest import ACCEPTANCE_LINES

# Worst case over the criterion-6 grid was 17 iterations; pinned at twice that.
PINNED_MAX_ITERS = 34
SPEC_MAX_ITERS = 500


def record(n, title, ok, detail=""):
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {n}. {title}" + (f" ({detail})" if detail else ""))
    assert ok, detail


def test_1_gate_laws():
    worst = 0.0
    for D in range(2, 21):
        G = gxor_unitary(D).mat
        worst = max(worst, unitarity_residual(G), hermiticity_residual(G),
                    float(np.abs(G @ G - np.eye(D * D)).max()))
    add_worst = 0.0
    for D in range(3, 9):
        A = gxor_add_unitary(D)
        add_worst = max(add_worst, float(np.abs(A.power(D - 1).mat - A.mat.conj().T).max()))
    record(1, "gate laws", worst < 1e-12 and add_worst < 1e-12,
           f"GXOR residual {worst:.1e}, additive inverse residual {add_worst:.1e}")


def test_2_bell_basis():
    r = 1 / np.sqrt(3)
    w = np.exp(2j * np.pi / 3)
    e = np.eye(9)
    printed = {
        (0, 0): r * (e[0] + e[4] + e[8]),
        (1, 0): r * (e[0] + w * e[4] + w.conj() * e[8]),
        (2, 0): r * (e[0] + w.conj() * e[4] + w * e[8]),
        (0, 1): r * (e[2] + e[3] + e[7]),
    }
    printed_err = max(float(np.abs(bell_state(l, m, 3).amps - v).max()) for (l, m), v in printed.items())
    gram_err = 0.0
    for D in range(2, 13):
        vecs = np.array([s.amps for s in bell_basis(D).values()])
        gram_err = max(gram_err, float(np.abs(vecs.conj() @ vecs.T - np.eye(D * D)).max()))
    record(2, "Bell basis", printed_err < 1e-12 and gram_err < 1e-12,
           f"D=3 printed states {printed_err:.1e}, Gram {gram_err:.1e}")


def test_3_teleportation():
    rng = np.random.default_rng(3)
    ident = 0.0
    for D in (2, 3, 4, 5):
        for j in range(D):
            for k in range(D):
                for _ in range(10):
                    ident = max(ident, verify_teleport_identity(random_pure_state((D,), rng), j, k))
    fid_err = prob_err = 0.0
    bits_ok = True
    for D in range(2, 11):
        for j in range(D):
            for k in range(D):
                chi = random_pure_state((D,), rng)
                for l in range(D):
                    for m in range(D):
                        rec = teleport(chi, j, k, outcome=(l, m))
                        fid_err = max(fid_err, abs(rec.fidelity_with_input - 1))
                        prob_err = max(prob_err, abs(rec.probability - 1 / D**2))
                        bits_ok &= rec.classical_bits == 2 * np.log2(D)
        bits_ok &= classical_bits(D) == 2 * np.log2(D)
    ok = ident < 1e-12 and fid_err < 1e-10 and prob_err < 1e-12 and bits_ok
    record(3, "teleportation", ok,
           f"identity {ident:.1e}, fidelity {fid_err:.1e}, probability {prob_err:.1e}, bits exact={bits_ok}")


def test_4_oracle_equivalence():
    rng = np.random.default_rng(4)
    state_err = prob_err = 0.0
    for D, M, N in [(2, 1, 1), (3, 1, 1), (2, 1, 2), (2, 2, 1), (3, 2, 1)]:
        for _ in range(20):
            sigma = random_density_matrix((D,) * M, rng)
            o, op = nonlinear_map_oracle(sigma, sigma, M, N)
            c, cp = nonlinear_map(sigma, N)
            state_err = max(state_err, float(np.abs(o.mat - c.mat).max()))
            prob_err = max(prob_err, abs(op - cp))
    record(4, "nonlinear map oracle equivalence", state_err < 1e-10 and prob_err < 1e-12,
           f"state {state_err:.1e}, probability {prob_err:.1e}")


def test_5_map_properties():
    rng = np.random.default_rng(5)
    valid = 0
    for i in range(100):
        D = 2 + i % 4
        sigma = random_density_matrix((D,), rng, rank=1 + i % D)
        out, _ = nonlinear_map(sigma, 1 + i % 3)
        assert_density_matrix(out)
        valid += 1
    second_eig = 0.0
    for D in (2, 3, 4, 9):
        psi = random_pure_state((D,), rng).density()
        rep = map_properties_check(psi)
        assert rep.pure_to_pure
        second_eig = max(second_eig, float(nonlinear_map(psi)[0].eigenvalues()[-2]))
    witness = map_properties_check(random_density_matrix((3,), rng)).non_injective_witness
    fixed_err = 0.0
    for D in range(2, 21):
        b = psi00(D).density()
        fixed_err = max(fixed_err, float(np.abs(nonlinear_map(b)[0].mat - b.mat).max()))
        for step in (0, 1):
            fixed_err = max(fixed_err, float(np.abs(purification_step(b, step)[0].mat - b.mat).max()))
    ok = valid == 100 and second_eig < 1e-10 and witness and fixed_err < 1e-10
    record(5, "map properties", ok,
           f"{valid}/100 valid, 2nd eigenvalue {second_eig:.1e}, witness={witness}, fixed point {fixed_err:.1e}")


def criterion6_cells():
    for D in range(2, 21):
        lam_d = separability_threshold(D)
        for lam in (lam_d + 0.02, 0.25, 0.5, 0.75, 0.95):
            if lam_d < lam <= 1:
                yield D, lam


def test_6_purification_convergence():
    failures, worst = [], 0
    for D, lam in criterion6_cells():
        tr = run_purification(PurifyConfig(D=D, lam=lam, max_iters=PINNED_MAX_ITERS,
                                           fidelity_target=0.999))
        worst = max(worst, tr.iterations_used)
        if not (tr.converged and tr.final_fidelity >= 0.999):
            failures.append((D, round(lam, 4)))
    ok = not failures and PINNED_MAX_ITERS <= SPEC_MAX_ITERS
    record(6, "purification convergence, D=2..20", ok,
           f"worst {worst} iterations, cap {PINNED_MAX_ITERS}, failures {failures}")


def test_7_separability_threshold():
    exact = all(separability_threshold(D) == 1 / (1 + D) for D in range(2, 101))
    stalled = []
    for D in (2, 3, 5):
        tr = run_purification(PurifyConfig(D=D, lam=separability_threshold(D) / 2))
        stalled.append(not tr.converged)
    record(7, "separability threshold", exact and all(stalled),
           f"formula exact={exact}; lam_D/2 non-convergent for D=2,3,5: {stalled}")


def test_8_kerr_realization():
    worst = max(kerr_residual(D) for D in range(2, 9))
    record(8, "Kerr realization", worst < 1e-10, f"max residual {worst:.1e}")


@pytest.mark.parametrize("argv", [
    ["bell", "--dim", "3"],
    ["teleport", "--dim", "3", "--trials", "50", "--seed", "11"],
    ["purify", "--dim", "4", "--lambda", "0.3"],
    ["sweep", "--dim", "2..5", "--lambda-offset", "0.05", "--lambda", "0.6"],
    ["kerr-check", "--dim", "2..5"],
])
def test_9_determinism(argv):
    a = json.loads(run(argv)[1])["data"]
    b = json.loads(run(argv)[1])["data"]
    csv_a, csv_b = run(argv + ["--format", "csv"])[1], run(argv + ["--format", "csv"])[1]
    record(9, f"determinism: {argv[0]}", a == b and csv_a == csv_b)
