import numpy as np
import pytest

from puredist import linalg
from puredist.sampling import (
    basis_povm,
    bell_pair,
    ginibre_density,
    random_density,
    random_povm,
    random_unitary,
)
from puredist.states import (
    CQState,
    DensityOperator,
    DephasingChannel,
    Povm,
    ProtocolTranscript,
    PureState,
    control_state,
    dephase,
    rank1_refine,
)


def test_density_operator_canonical_register_order(rng):
    rho = ginibre_density(rng, 2)
    sig = ginibre_density(rng, 3)
    # construct with registers out of order; matrix must be permuted to B,A -> A,B
    joint = np.kron(sig, rho)  # order (B, A)
    d = DensityOperator([("B", 3), ("A", 2)], joint)
    assert d.labels == ["A", "B"]
    assert np.allclose(d.partial_trace("A").matrix, rho, atol=1e-9)
    assert np.allclose(d.partial_trace("B").matrix, sig, atol=1e-9)


def test_density_operator_validation():
    with pytest.raises(ValueError):
        DensityOperator([("A", 2)], np.array([[0.5, 0.3], [0.1, 0.5]]))  # not Hermitian
    with pytest.raises(ValueError):
        DensityOperator([("A", 2)], np.diag([0.8, 0.8]))  # trace != 1
    with pytest.raises(ValueError):
        DensityOperator([("A", 2)], np.diag([1.5, -0.5]))  # genuinely negative
    # tiny negative eigenvalue is clipped
    d = DensityOperator([("A", 2)], np.diag([1.0 + 5e-11, -5e-11]))
    assert np.min(d.spectrum()) >= 0


def test_partial_trace_unknown_label(rng):
    d = random_density(rng, 4, "A")
    with pytest.raises(KeyError):
        d.partial_trace("Z")


def test_cq_state_drops_zero_probability(rng):
    conds = [random_density(rng, 2, "B") for _ in range(3)]
    cq = CQState([0, 1, 2], [0.6, 0.4, 1e-15], conds)
    assert len(cq) == 2 and cq.dropped
    assert np.isclose(np.sum(cq.probs), 1.0)


def test_cq_average_and_joint(rng):
    conds = [random_density(rng, 2, "B") for _ in range(3)]
    cq = CQState([0, 1, 2], [0.2, 0.3, 0.5], conds)
    avg = cq.average_state()
    assert np.allclose(avg.matrix, sum(p * c.matrix for p, c in zip(cq.probs, cq.conditionals)))
    j = cq.joint_matrix()
    assert np.isclose(np.real(np.trace(j)), 1.0)


def test_povm_validation(rng):
    with pytest.raises(ValueError):
        Povm([np.diag([0.5, 0.5]), np.diag([0.4, 0.4])])  # doesn't sum to I
    with pytest.raises(ValueError):
        Povm([np.diag([1.5, 1.0]), np.diag([-0.5, 0.0])])  # not PSD
    p = random_povm(rng, 3, 4)
    assert np.allclose(sum(p.elements), np.eye(3), atol=1e-8)


def test_dephase_diagonal_unchanged_and_plus_mixed():
    ch = DephasingChannel.computational(2, "XA", "XB")
    diag = DensityOperator([("XA", 2)], np.diag([0.3, 0.7]))
    out = dephase(diag, ch)
    assert np.allclose(out.matrix, np.diag([0.3, 0.7]))
    assert out.labels == ["XB"]
    plus = DensityOperator([("XA", 2)], np.full((2, 2), 0.5))
    assert np.allclose(dephase(plus, ch).matrix, np.eye(2) / 2)


def test_dephase_keeps_classical_correlations(rng):
    # |0>|phi0> + |1>|phi1> correlated state dephases to a cq state with the
    # same diagonal blocks
    phi0 = np.array([1.0, 0.0])
    phi1 = np.array([1.0, 1.0]) / np.sqrt(2)
    vec = (np.kron([1, 0], phi0) + np.kron([0, 1], phi1)) / np.sqrt(2)
    rho = DensityOperator([("XA", 2), ("B", 2)], np.outer(vec, vec.conj()))
    out = dephase(rho, DephasingChannel.computational(2, "XA", "XB"))
    # canonical register order is (B, XB): extract the x blocks by reshaping
    assert out.labels == ["B", "XB"]
    t = out.matrix.reshape(2, 2, 2, 2)
    assert np.allclose(t[:, 0, :, 0], 0.5 * np.outer(phi0, phi0))
    assert np.allclose(t[:, 1, :, 1], 0.5 * np.outer(phi1, phi1))
    assert np.allclose(t[:, 0, :, 1], 0)


def test_dephase_idempotent_unital(rng):
    ch = DephasingChannel.computational(3, "XA", "XB")
    ch2 = DephasingChannel.computational(3, "XB", "XC")
    rho = random_density(rng, 3, "XA")
    once = dephase(rho, ch)
    twice = dephase(once, ch2)
    assert np.allclose(once.matrix, twice.matrix, atol=1e-12)
    mixed = DensityOperator([("XA", 3)], np.eye(3) / 3)
    assert np.allclose(dephase(mixed, ch).matrix, np.eye(3) / 3)


def test_control_state_trivial_povm(rng):
    psi = PureState([("A", 2), ("B", 2), ("R", 1)],
                    np.array([1, 0, 0, 1]) / np.sqrt(2))
    cq = control_state(psi, Povm([np.eye(2)], register="A"), condition_on=["B", "R"])
    assert len(cq) == 1
    assert np.allclose(cq.conditionals[0].matrix, psi.marginal(["B", "R"]), atol=1e-12)


def test_control_state_classical_oracle(rng):
    # diagonal rho^{AB}, basis measurement: P_X and conditionals from the
    # probability table directly
    joint = rng.dirichlet(np.ones(6)).reshape(2, 3)
    vec = np.sqrt(joint).reshape(-1)
    psi = PureState([("A", 2), ("B", 3)], vec)
    cq = control_state(psi, basis_povm(2, "A"), condition_on=["B"])
    pa = joint.sum(axis=1)
    assert np.allclose(cq.probs, pa, atol=1e-12)
    for i, cond in enumerate(cq.conditionals):
        want = np.diag(joint[i] / pa[i])
        # conditional of a classical superposition is the pure conditional vector
        v = np.sqrt(joint[i] / pa[i])
        assert np.allclose(cond.matrix, np.outer(v, v), atol=1e-12)


def test_control_state_flags_dropped_outcomes():
    # measuring |0><0| in the basis: outcome 1 has zero probability
    psi = PureState([("A", 2), ("B", 1)], np.array([1.0, 0.0]))
    cq = control_state(psi, basis_povm(2, "A"), condition_on=["B"])
    assert len(cq) == 1 and cq.dropped


def test_dephase_missing_register(rng):
    rho = random_density(rng, 2, "A")
    with pytest.raises(KeyError):
        dephase(rho, DephasingChannel.computational(2, "XA", "XB"))


def test_control_state_bell_basis(rng):
    psi = bell_pair()
    cq = control_state(PureState([("A", 2), ("B", 2)], psi.vector()),
                       basis_povm(2, "A"), condition_on=["B"])
    assert np.allclose(cq.probs, [0.5, 0.5])
    assert np.allclose(cq.conditionals[0].matrix, np.diag([1.0, 0.0]), atol=1e-12)
    assert np.allclose(cq.conditionals[1].matrix, np.diag([0.0, 1.0]), atol=1e-12)


def test_control_state_marginal_preserved(rng):
    # measurement cannot change the marginal on B,R
    for _ in range(25):
        da, db = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        vec = rng.normal(size=da * db * 2) + 1j * rng.normal(size=da * db * 2)
        vec /= np.linalg.norm(vec)
        psi = PureState([("A", da), ("B", db), ("R", 2)], vec)
        povm = random_povm(rng, da, int(rng.integers(2, 5)))
        cq = control_state(psi, povm, condition_on=["B", "R"])
        assert np.isclose(np.sum(cq.probs), 1.0, atol=1e-9)
        mix = sum(p * c.matrix for p, c in zip(cq.probs, cq.conditionals))
        assert np.max(np.abs(mix - psi.marginal(["B", "R"]))) <= 1e-8


def test_rank1_refine(rng):
    already = basis_povm(3)
    ref = rank1_refine(already)
    assert len(ref) == 3
    two = Povm([0.5 * np.eye(3), 0.5 * np.eye(3)])
    ref = rank1_refine(two)
    assert len(ref) == 6
    assert np.allclose(sum(ref.elements), np.eye(3), atol=1e-9)
    # grouping by parent label reproduces parents
    p = random_povm(rng, 4, 3)
    ref = rank1_refine(p)
    for lbl, elem in zip(p.labels, p.elements):
        regroup = sum(e for (pl, _), e in zip(ref.labels, ref.elements) if pl == lbl)
        assert np.max(np.abs(regroup - elem)) <= 1e-9
    for e in ref.elements:
        w, _ = linalg.eig_hermitian(e)
        assert np.sum(w > 1e-9) == 1  # rank one


def test_pure_state_apply_and_branches(rng):
    psi = bell_pair()
    u = random_unitary(rng, 2)
    rotated = psi.apply(u, ["A"])
    assert np.isclose(rotated.norm(), 1.0)
    back = rotated.apply(linalg.dagger(u), ["A"])
    assert np.allclose(back.vector(), psi.vector())
    branches = psi.branches("A")
    assert len(branches) == 2
    total = sum(b.norm() ** 2 for _, b in branches)
    assert np.isclose(total, 1.0)


def test_pure_state_apply_isometry_reshapes_registers():
    psi = PureState([("A", 2), ("B", 2)], np.array([1, 0, 0, 1]) / np.sqrt(2))
    iso = np.zeros((6, 2), dtype=complex)  # embed qubit into qutrit x flag
    iso[0, 0] = iso[4, 1] = 1.0
    out = psi.apply(iso, ["A"], out_regs=[("C", 3), ("F", 2)])
    assert out.labels == ["C", "F", "B"]
    assert np.isclose(out.norm(), 1.0)


def test_transcript_accounting():
    t = ProtocolTranscript("local", 3, 2, 1, 2, 0.01, eps=0.1)
    assert t.net_rate == 4
    d = t.to_dict()
    assert d["net_rate"] == 4
    with pytest.raises(ValueError):
        ProtocolTranscript("local", 1.5, 0, 0, 0, 0.0, eps=0.1)
    with pytest.raises(ValueError):
        ProtocolTranscript("local", -1, 0, 0, 0, 0.0, eps=0.1)
