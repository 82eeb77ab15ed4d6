"""Executable simulations of the distillation protocols.

Every run returns a ProtocolTranscript whose ``final_error`` is the exactly
computed trace distance of the produced state to the target pure state,
never a bound. Conditional evolutions exploit that all protocols dephase
the communicated register, so the global state is block diagonal in it and
per-outcome branches mix exactly.

O(log 1/eps) slack terms from the rate formulas are never folded into
numbers: transcripts carry them in ``slack_bits`` (default log2(1/eps)) and
``rate_bound_real`` holds the slack-free formula value.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import entropy, linalg
from .compression import (
    CompressedMeasurement,
    compress_measurement,
    find_good_k,
    nice_sets,
    simulated_conditionals,
)
from .states import DensityOperator, Povm, ProtocolTranscript, PureState


def next_pow2(n: int) -> int:
    return 1 << max(0, int(n - 1).bit_length())


def _descending_eig(mat: np.ndarray):
    w, v = linalg.eig_hermitian(mat, tol=1e-7)
    w = linalg.clip_psd_spectrum(w)
    order = np.argsort(w)[::-1]
    return w[order], v[:, order]


@dataclass(eq=False)
class DistillationIsometry:
    """Isometry relabeling the kept eigenvectors into |0>^{A_p} (x) basis(A_g).

    ``matrix`` has shape (2^a_p_bits * ag_dim, d) with orthonormal columns;
    eigenvector i (eigenvalues descending) maps to basis state
    |i // ag_dim>^{A_p} |i mod ag_dim>^{A_g}, so the kept ones (i < kept_dim
    <= ag_dim) land in the A_p = 0 block.
    """

    source: str
    pure_label: str
    garbage_label: str
    matrix: np.ndarray
    kept_dim: int
    a_p_bits: int
    ag_dim: int

    def out_regs(self):
        return [(self.pure_label, 2 ** self.a_p_bits), (self.garbage_label, self.ag_dim)]


def _relabel_isometry(d: int, ap_bits: int) -> np.ndarray:
    ap = 2 ** ap_bits
    ag = math.ceil(d / ap)
    iso = np.zeros((ap * ag, d), dtype=complex)
    for i in range(d):
        iso[i, i] = 1.0
    return iso


def _distill_isometry(mat: np.ndarray, eps: float, source: str = "A",
                      pure_label: str = "Ap", garbage_label: str = "Ag",
                      force_ap_bits: int | None = None) -> DistillationIsometry:
    w, v = _descending_eig(mat)
    d = mat.shape[0]
    supp = int(np.sum(w > 1e-12))
    asc = np.sort(w[w > 1e-12])
    k = int(np.searchsorted(np.cumsum(asc), eps + 1e-15, side="right"))
    k = min(k, supp - 1)
    kept = supp - k
    ap_bits = (d // kept).bit_length() - 1 if force_ap_bits is None else force_ap_bits
    ap = 2 ** ap_bits
    ag = math.ceil(d / ap)
    iso = np.zeros((ap * ag, d), dtype=complex)
    for i in range(d):
        iso[i, :] = np.conj(v[:, i])  # eigenvector i -> basis state i
    return DistillationIsometry(source, pure_label, garbage_label, iso,
                                kept_dim=kept, a_p_bits=ap_bits, ag_dim=ag)


def local_distill(rho, eps: float, source: str = "A"):
    """Single-system distillation isometry plus its exactly achieved error.

    The eigenvectors carrying all but the smallest <= eps of spectral mass
    are relabeled into |0>^{A_p} (x) basis(A_g) with
    a_p = floor(log2 d - log2 kept_dim) qubits; the achieved error is the
    exact trace distance of the A_p marginal from |0><0|.
    """
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps must be in [0, 1), got {eps}")
    mat = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)
    iso = _distill_isometry(mat, eps, source=source)
    out = iso.matrix @ mat @ linalg.dagger(iso.matrix)
    ap = 2 ** iso.a_p_bits
    marg = linalg.partial_trace(out, [ap, iso.ag_dim], 0)
    target = np.zeros((ap, ap))
    target[0, 0] = 1.0
    err = linalg.trace_distance(marg, target)
    return iso, float(err)


def _good_set_bits(values, masses, budget):
    """Largest b such that the outcomes with value >= b keep mass
    >= 1 - budget; returns (b, indicator list)."""
    values = np.asarray(values, dtype=int)
    masses = np.asarray(masses, dtype=float)
    best = 0
    for b in sorted(set(values.tolist()), reverse=True):
        if float(np.sum(masses[values >= b])) >= 1.0 - budget - 1e-12:
            best = b
            break
    return best, values >= best


def _branch_states(psi: PureState, elements, reg: str):
    """Sub-normalized branches of measuring ``elements`` coherently on reg."""
    out = []
    for e in elements:
        out.append(psi.apply(linalg.psd_power(e, 0.5), [reg]))
    return out


def _conditional_codes(branches, reg: str, eps: float, pure_label, garbage_label,
                       budget: float):
    """Per-branch distillation isometries with one shared output size.

    The shared qubit count is the largest one achievable on a set of
    branches of probability mass >= 1 - budget; the excluded branches get
    the plain index relabeling (their isometry distills nothing). The
    budget is capped at 1/2 so the rule stays meaningful at large eps.
    """
    budget = min(budget, 0.5)
    probs = np.array([b.norm() ** 2 for b in branches])
    d = branches[0].dim(reg)
    isos, bits = [], []
    for b, p in zip(branches, probs):
        if p < 1e-12:
            isos.append(None)
            bits.append(0)
            continue
        mat = b.marginal([reg]) / p
        iso = _distill_isometry(mat, eps, source=reg,
                                pure_label=pure_label, garbage_label=garbage_label)
        isos.append(iso)
        bits.append(iso.a_p_bits)
    shared, ok = _good_set_bits(bits, probs, budget)
    final = []
    for i, (b, p) in enumerate(zip(branches, probs)):
        if p < 1e-12 or not ok[i]:
            mat_iso = _relabel_isometry(d, shared)
            ag = math.ceil(d / 2 ** shared)
            final.append(DistillationIsometry(reg, pure_label, garbage_label,
                                              mat_iso, kept_dim=d,
                                              a_p_bits=shared, ag_dim=ag))
        else:
            mat = b.marginal([reg]) / p
            final.append(_distill_isometry(mat, eps, source=reg,
                                           pure_label=pure_label,
                                           garbage_label=garbage_label,
                                           force_ap_bits=shared))
    return shared, final


def _mix_final_state(branches, alice_isos, bob_isos, a_reg, b_reg):
    """Exact A_p x B_p mixture over dephased branches."""
    sigma = None
    for br, ia, ib in zip(branches, alice_isos, bob_isos):
        if br.norm() ** 2 < 1e-15:
            continue
        st = br.apply(ia.matrix, [a_reg], out_regs=ia.out_regs())
        st = st.apply(ib.matrix, [b_reg], out_regs=ib.out_regs())
        m = st.marginal([ia.pure_label, ib.pure_label])
        sigma = m if sigma is None else sigma + m
    return sigma


def _pure_target(dim_a: int, dim_b: int) -> np.ndarray:
    t = np.zeros((dim_a * dim_b, dim_a * dim_b))
    t[0, 0] = 1.0
    return t


def run_protocol_a(psi: PureState, povm: Povm, eps: float,
                   bob_label: str = "B", slack_bits: float | None = None,
                   seed: int | None = None) -> ProtocolTranscript:
    """Coherent measurement of the full POVM plus conditional local codes.

    Alice borrows ceil(log2 |X|) qubits to hold the coherent outcome,
    applies the per-outcome locally optimal code, sends the outcome register
    through the dephasing channel, and Bob applies his per-outcome code.
    The |X| = 1 case degenerates to two independent local distillations.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if slack_bits is None:
        slack_bits = float(np.log2(1.0 / eps))
    a_reg = povm.register
    if povm.dim != psi.dim(a_reg):
        raise ValueError(f"POVM dimension {povm.dim} does not match register "
                         f"{a_reg!r} dimension {psi.dim(a_reg)}")
    n_x = len(povm)
    branches = _branch_states(psi, povm.elements, a_reg)
    budget = 2.0 * np.sqrt(eps)
    a_bits, alice_isos = _conditional_codes(branches, a_reg, eps, "Ap", "Ag", budget)
    b_bits, bob_isos = _conditional_codes(branches, bob_label, eps, "Bp", "Bg", budget)
    sigma = _mix_final_state(branches, alice_isos, bob_isos, a_reg, bob_label)
    ap, bp = 2 ** a_bits, 2 ** b_bits
    err = linalg.trace_distance(sigma, _pure_target(ap, bp))

    env = [l for l in psi.labels if l != a_reg]
    da, db = psi.dim(a_reg), psi.dim(bob_label)
    from .states import control_state
    cq_a = control_state(psi, povm, condition_on=[a_reg], retain_measured=True)
    cq_b = control_state(psi, povm, condition_on=[bob_label])
    formula = (np.log2(da) - entropy.h_h_cond_cq(cq_a, eps * eps).value
               + np.log2(db) - entropy.h_h_cond_cq(cq_b, eps * eps).value
               - np.log2(n_x))
    borrowed = math.ceil(np.log2(n_x)) if n_x > 1 else 0
    return ProtocolTranscript(
        protocol="protocol-a",
        distilled_alice=a_bits,
        distilled_bob=b_bits,
        borrowed=borrowed,
        communication=borrowed,
        final_error=float(err),
        eps=eps,
        seed=seed,
        dims={"A": da, "B": db, "X": n_x},
        slack_bits=slack_bits,
        rate_bound_real=float(formula),
        extra={"env": env},
    )


def run_kd_oneshot(psi: PureState, povm: Povm, K: int, L: int, eps: float,
                   seed: int, bob_label: str = "B",
                   slack_bits: float | None = None,
                   cm: CompressedMeasurement | None = None) -> ProtocolTranscript:
    """Derandomized compressed-measurement protocol.

    Builds the K x L compressed measurement, fixes the best k, measures
    Theta(k) coherently into a borrowed register of dimension L + 1
    (failure outcome included), distills both sides per outcome, and
    dephases the outcome register to Bob. Communication equals the
    borrowed register size, ceil(log2(L + 1)) bits.
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if slack_bits is None:
        slack_bits = float(np.log2(1.0 / eps))
    a_reg = povm.register
    if cm is None:
        cm = compress_measurement(psi, povm, K, L, seed)
    k = find_good_k(cm, psi, povm, eps, bob_labels=(bob_label,))
    theta = cm.thetas[k]
    branches = _branch_states(psi, theta, a_reg)
    budget = 2.0 * np.sqrt(eps)
    a_bits, alice_isos = _conditional_codes(branches, a_reg, eps, "Ap", "Ag", budget)
    b_bits, bob_isos = _conditional_codes(branches, bob_label, eps, "Bp", "Bg", budget)
    sigma = _mix_final_state(branches, alice_isos, bob_isos, a_reg, bob_label)
    err = linalg.trace_distance(sigma, _pure_target(2 ** a_bits, 2 ** b_bits))

    da, db = psi.dim(a_reg), psi.dim(bob_label)
    env = [l for l in psi.labels if l != a_reg]
    from .states import control_state
    ideal_env = control_state(psi, povm, condition_on=env)
    ideal_a = control_state(psi, povm, condition_on=[a_reg], retain_measured=True)
    ideal_b = control_state(psi, povm, condition_on=[bob_label])
    imax = entropy.i_max_cq(ideal_env, eps ** 4)
    formula = (np.log2(da) - entropy.h_h_cond_cq(ideal_a, eps).value
               + np.log2(db) - entropy.h_h_cond_cq(ideal_b, eps).value
               - imax.value)
    borrowed = math.ceil(np.log2(L + 1))
    return ProtocolTranscript(
        protocol="kd-oneshot",
        distilled_alice=a_bits,
        distilled_bob=b_bits,
        borrowed=borrowed,
        communication=borrowed,
        final_error=float(err),
        eps=eps,
        seed=seed,
        dims={"A": da, "B": db, "K": cm.K, "L": cm.L},
        slack_bits=slack_bits,
        rate_bound_real=float(formula),
        extra={"k": k, "c_norm": cm.c_norm, "imax_bits": imax.value},
    )


def uhlmann_unitary(phi: PureState, chi: PureState, phi_system, chi_system):
    """Isometry on phi's system registers maximizing the overlap with chi.

    ``phi_system`` and ``chi_system`` name the registers to be mapped; the
    remaining registers of both states must agree (label and dimension) and
    are untouched. Returns (matrix, achieved overlap); the achieved overlap
    equals the fidelity of the shared-register marginals (Uhlmann), which is
    asserted within 1e-8. The matrix is unitary when the system dimensions
    match and an isometry when chi's side is larger.
    """
    phi_system = [phi_system] if isinstance(phi_system, str) else list(phi_system)
    chi_system = [chi_system] if isinstance(chi_system, str) else list(chi_system)
    shared = [l for l in phi.labels if l not in phi_system]
    chi_shared = [l for l in chi.labels if l not in chi_system]
    if sorted(shared) != sorted(chi_shared):
        raise ValueError(f"shared registers differ: {shared} vs {chi_shared}")
    for l in shared:
        if phi.dim(l) != chi.dim(l):
            raise ValueError(f"shared register {l!r} has mismatched dimension")
    dp = int(np.prod([phi.dim(l) for l in phi_system]))
    dq = int(np.prod([chi.dim(l) for l in chi_system]))
    if dq < dp:
        raise ValueError("target system smaller than source")

    shared_sorted = sorted(shared)
    phi_mat = np.transpose(phi.tensor,
                           [phi.labels.index(l) for l in phi_system + shared_sorted])
    phi_mat = phi_mat.reshape(dp, -1)
    chi_mat = np.transpose(chi.tensor,
                           [chi.labels.index(l) for l in chi_system + shared_sorted])
    chi_mat = chi_mat.reshape(dq, -1)
    overlap = phi_mat @ linalg.dagger(chi_mat)  # N[p, q]
    v, s, wh = np.linalg.svd(overlap, full_matrices=False)
    u = linalg.dagger(wh) @ linalg.dagger(v)
    achieved = float(np.sum(s))
    fid = linalg.fidelity(phi_mat.T @ np.conj(phi_mat), chi_mat.T @ np.conj(chi_mat))
    assert abs(achieved - fid) <= 1e-8, f"Uhlmann overlap {achieved} != fidelity {fid}"
    return u, achieved


@dataclass
class FewQubitsPlan:
    """Embedding and borrow plan for the in-place protocol.

    ``case`` is decided by the entropic condition (constants exposed via
    ``slack_bits``); the embedding dims multiply to |A| * 2^borrow exactly.
    """

    case: str
    borrow: int
    a_p_bits: int
    b_p_bits: int | None
    ap_dim: int
    la_dim: int
    ag_dim: int
    nice_count: int
    condition_lhs: float
    condition_rhs: float
    delta_bits: float
    extra: dict = field(default_factory=dict)


def plan_fewqubits(psi: PureState, povm: Povm, cm: CompressedMeasurement,
                   k: int, eps: float, bob_label: str = "B",
                   slack_bits: float | None = None) -> FewQubitsPlan:
    """Evaluate the case condition and lay out the in-place embedding.

    Case I requires I_max + H_H(env|X) + slack <= log|A| (entropic
    quantities on the ideal control state); the embedding then fits inside
    A and the construction borrows only the power-of-two rounding (0 for
    power-of-two instances). Case II borrows the shortfall, its theoretical
    size being Delta = H_H(env|X) - H_min(env|X) + slack.
    """
    if slack_bits is None:
        slack_bits = float(np.log2(1.0 / eps))
    a_reg = povm.register
    da = psi.dim(a_reg)
    env = [l for l in psi.labels if l != a_reg]
    from .states import control_state
    ideal = control_state(psi, povm, condition_on=env)
    imax = entropy.i_max_cq(ideal, eps ** 4).value
    hh_env = entropy.h_h_cond_cq(ideal, eps).value
    lhs = imax + hh_env + slack_bits
    rhs = float(np.log2(da))
    case = "I" if lhs <= rhs else "II"
    hmin_env = entropy.h_min_cq_smoothed(ideal, eps)
    delta = max(0.0, entropy.h_h_cond_cq(ideal, eps * eps).value - hmin_env + slack_bits)
    ideal_bob = ideal.map_conditionals(lambda c: c.partial_trace([bob_label]))
    b_p_est = max(0, math.floor(np.log2(psi.dim(bob_label))
                                - entropy.h_h_cond_cq(ideal_bob, eps * eps).value))

    _, nice_all = nice_sets(cm, psi, povm, eps, bob_labels=(bob_label,),
                            slack_bits=slack_bits)
    nice = nice_all[k]
    sims, env_sorted = simulated_conditionals(cm, psi, povm)
    smooth = eps ** 0.125
    # A_g holds the purifications of the truncated branch states: its size is
    # the largest truncated rank, which 2^{H_H} + 1 upper-bounds
    ag_req, ag_cap = 1, 2
    for l in nice:
        x = int(cm.decode[k, l])
        hh_pair = entropy.h_h(sims[x], smooth)
        rank = int(np.sum(hh_pair.witness["weights"] > 1e-12))
        ag_req = max(ag_req, rank)
        ag_cap = max(ag_cap, math.ceil(2.0 ** hh_pair.value + 1 - 1e-9))
    assert ag_req <= ag_cap, "truncated rank exceeded its entropic cap"
    la = next_pow2(max(1, len(nice)))
    ag_pow = next_pow2(ag_req)

    if case == "I" and da >= la * ag_pow:
        ap_bits = int(da // (la * ag_pow)).bit_length() - 1
    else:
        ap_bits = 0
    ap = 2 ** ap_bits
    borrow = 0
    while (da << borrow) < ap * la * ag_pow or (da << borrow) % (ap * la) != 0:
        borrow += 1
    ag = (da << borrow) // (ap * la)
    return FewQubitsPlan(
        case=case, borrow=borrow, a_p_bits=ap_bits, b_p_bits=b_p_est,
        ap_dim=ap, la_dim=la, ag_dim=ag, nice_count=len(nice),
        condition_lhs=float(lhs), condition_rhs=rhs, delta_bits=float(delta),
        extra={"ag_required": ag_req, "ag_entropic_cap": ag_cap,
               "imax_bits": imax, "hh_env_bits": hh_env},
    )


def run_fewqubits(psi: PureState, povm: Povm, K: int, L: int, eps: float,
                  seed: int, bob_label: str = "B",
                  slack_bits: float | None = None,
                  cm: CompressedMeasurement | None = None) -> ProtocolTranscript:
    """In-place compressed measurement via the Uhlmann embedding.

    Alice's single unitary maps A (plus any Case II borrow) onto
    A_p (x) L_A (x) A_g so that the post-measurement state is reproduced by
    truncated purifications of the nice outcome branches; L_A is dephased to
    Bob, who distills per outcome (identity relabeling off the nice set).
    """
    if not (0.0 < eps < 1.0):
        raise ValueError(f"eps must be in (0, 1), got {eps}")
    if slack_bits is None:
        slack_bits = float(np.log2(1.0 / eps))
    a_reg = povm.register
    if cm is None:
        cm = compress_measurement(psi, povm, K, L, seed)
    k = find_good_k(cm, psi, povm, eps, bob_labels=(bob_label,))
    plan = plan_fewqubits(psi, povm, cm, k, eps, bob_label=bob_label,
                          slack_bits=slack_bits)
    _, nice_all = nice_sets(cm, psi, povm, eps, slack_bits=slack_bits,
                            bob_labels=(bob_label,))
    nice = nice_all[k]
    if not nice:
        raise RuntimeError("empty nice outcome set; raise L or K")

    da = psi.dim(a_reg)
    env = [l for l in psi.labels if l != a_reg]
    env_sorted = sorted(env)
    d_env = int(np.prod([psi.dim(l) for l in env_sorted]))
    sims, _ = simulated_conditionals(cm, psi, povm)
    q_lk = cm.q_l_given_k(k)
    p_nice = np.array([q_lk[l] for l in nice])
    if np.sum(p_nice) <= 1e-30:
        raise RuntimeError("nice outcomes carry no probability; raise L or K")
    p_nice = p_nice / np.sum(p_nice)

    # truncated conditionals and their purifications into A_g
    smooth = eps ** 0.125
    ap, la, ag = plan.ap_dim, plan.la_dim, plan.ag_dim
    target = np.zeros((ap, la, ag, d_env), dtype=complex)
    for idx, l in enumerate(nice):
        x = int(cm.decode[k, l])
        w, v = _descending_eig(sims[x])
        res = entropy.h_h(sims[x], smooth)
        weights = np.zeros_like(w)
        weights[: len(res.witness["weights"])] = res.witness["weights"]
        tw = w * weights
        tw = tw / np.sum(tw)
        for j in range(min(ag, len(tw))):
            if tw[j] <= 1e-15:
                continue
            target[0, idx, j, :] = np.sqrt(p_nice[idx] * tw[j]) * v[:, j]

    chi = PureState([("Ap", ap), ("LA", la), ("Ag", ag)]
                    + [(l, psi.dim(l)) for l in env_sorted], target)
    if plan.borrow > 0:
        # append |0>^borrow to A: out index a * 2^borrow + 0
        block = 2 ** plan.borrow
        ext = np.zeros((da * block, da), dtype=complex)
        for i in range(da):
            ext[i * block, i] = 1.0
        phi = psi.apply(ext, [a_reg], out_regs=[(a_reg, da * block)])
    else:
        phi = psi
    u, overlap = uhlmann_unitary(phi, chi, [a_reg], ["Ap", "LA", "Ag"])
    state = phi.apply(u, [a_reg], out_regs=[("Ap", ap), ("LA", la), ("Ag", ag)])

    # Bob's per-branch codes: distill on nice branches, relabel elsewhere
    db = psi.dim(bob_label)
    budget = 2.0 * np.sqrt(eps)
    bob_isos = {}
    bits, masses = [], []
    for idx, l in enumerate(nice):
        x = int(cm.decode[k, l])
        bob_mat = linalg.partial_trace(
            sims[x], [psi.dim(lab) for lab in env_sorted],
            [env_sorted.index(bob_label)])
        iso = _distill_isometry(bob_mat, eps, source=bob_label,
                                pure_label="Bp", garbage_label="Bg")
        bob_isos[idx] = (bob_mat, iso)
        bits.append(iso.a_p_bits)
        masses.append(p_nice[idx])
    b_bits, _ = _good_set_bits(bits, masses, budget)
    bp = 2 ** b_bits
    bg = math.ceil(db / bp)

    sigma = None
    for idx, branch in state.branches("LA"):
        if branch.norm() ** 2 < 1e-15:
            continue
        if idx < len(nice) and bob_isos[idx][1].a_p_bits >= b_bits:
            iso = _distill_isometry(bob_isos[idx][0], eps, source=bob_label,
                                    pure_label="Bp", garbage_label="Bg",
                                    force_ap_bits=b_bits)
        else:
            iso = DistillationIsometry(bob_label, "Bp", "Bg",
                                       _relabel_isometry(db, b_bits),
                                       kept_dim=db, a_p_bits=b_bits, ag_dim=bg)
        st = branch.apply(iso.matrix, [bob_label], out_regs=iso.out_regs())
        m = st.marginal(["Ap", "Bp"])
        sigma = m if sigma is None else sigma + m
    err = linalg.trace_distance(sigma, _pure_target(ap, bp))

    comm = int(np.log2(la))
    return ProtocolTranscript(
        protocol="fewqubits",
        distilled_alice=plan.a_p_bits,
        distilled_bob=b_bits,
        borrowed=plan.borrow,
        communication=comm,
        final_error=float(err),
        eps=eps,
        seed=seed,
        dims={"A": da, "B": db, "K": cm.K, "L": cm.L,
              "Ap": ap, "LA": la, "Ag": ag},
        slack_bits=slack_bits,
        case=plan.case,
        rate_bound_real=None,
        extra={"k": k, "uhlmann_overlap": overlap,
               "nice_count": len(nice), "plan_delta_bits": plan.delta_bits},
    )


def verify_derandomization(psi: PureState, povm: Povm, cm: CompressedMeasurement,
                           eps: float, bob_label: str = "B",
                           slack_bits: float | None = None) -> dict:
    """Measure the fraction of (k, l) pairs passing both entropic bounds.

    The claimed lower bound on the fraction is 1 - eps^(1/8); the report
    carries pass/fail plus the slack convention used, and never raises on
    failure (degenerate tables legitimately fail).
    """
    _, nice = nice_sets(cm, psi, povm, eps, bob_labels=(bob_label,),
                        slack_bits=slack_bits)
    total = cm.K * cm.L
    good = sum(len(v) for v in nice.values())
    fraction = good / total
    bound = 1.0 - eps ** 0.125
    return {
        "fraction": fraction,
        "bound": bound,
        "passed": bool(fraction >= bound),
        "pairs": total,
        "nice_pairs": good,
        "slack_bits": slack_bits if slack_bits is not None else float(np.log2(1 / eps)),
    }


def _block_diag_mix(blocks, keep):
    """Block-diagonal matrix mixing each branch's ``keep`` marginal with an
    explicit classical index (a dephased classical register)."""
    mats = [b.marginal(keep) for b in blocks]
    d = mats[0].shape[0]
    n = len(mats)
    out = np.zeros((n * d, n * d), dtype=complex)
    for x, m in enumerate(mats):
        out[x * d:(x + 1) * d, x * d:(x + 1) * d] = m
    return out


def _stack_coherent(blocks, label):
    """Rebuild the coherent pure state sum_x |x> (x) block_x."""
    full = None
    for x, b in enumerate(blocks):
        vec = np.zeros((len(blocks),) + b.tensor.shape, dtype=complex)
        vec[x] = b.tensor
        full = vec if full is None else full + vec
    return PureState([(label, len(blocks))] + list(blocks[0].regs), full)


def purity_trace(psi: PureState, povm: Povm, eps: float,
                 bob_label: str = "B") -> list:
    """Step-wise purity bookkeeping along Protocol A on a small instance.

    Returns [(step name, corrected purity measure)] where the measure is
    log2(dim) - H_H^eps of the state held by the parties minus the borrowed
    qubit correction. Allowable operations must never increase it.
    """
    a_reg = povm.register
    n_x = len(povm)
    held = sorted(l for l in psi.labels if l != "R")
    trace = []

    def measure(mat, borrowed_bits):
        return float(np.log2(mat.shape[0]) - entropy.h_h(mat, eps).value - borrowed_bits)

    rho0 = psi.marginal(held)
    trace.append(("input", measure(rho0, 0.0)))

    # borrow the outcome register (pure ancilla, accounted)
    borrow_bits = float(np.log2(n_x)) if n_x > 1 else 0.0
    xa = np.zeros((n_x, n_x))
    xa[0, 0] = 1.0
    trace.append(("borrow", measure(np.kron(xa, rho0), borrow_bits)))

    # coherent measurement: a unitary on X_A x A given the |0> ancilla
    da = psi.dim(a_reg)
    iso = np.zeros((n_x * da, da), dtype=complex)
    for x, e in enumerate(povm.elements):
        iso[x * da:(x + 1) * da, :] = linalg.psd_power(e, 0.5)
    post = psi.apply(iso, [a_reg], out_regs=[("XA", n_x), (a_reg, da)])
    trace.append(("coherent-measure",
                  measure(post.marginal(sorted(held + ["XA"])), borrow_bits)))

    # Alice's conditional codes (a controlled unitary for power-of-two dims)
    branches = _branch_states(psi, povm.elements, a_reg)
    budget = 2.0 * np.sqrt(eps)
    _, alice_isos = _conditional_codes(branches, a_reg, eps, "Ap", "Ag", budget)
    blocks = [b.apply(alice_isos[x].matrix, [a_reg], out_regs=alice_isos[x].out_regs())
              for x, b in post.branches("XA")]
    coherent = _stack_coherent(blocks, "XA")
    keep = sorted(set(coherent.labels) - {"R"})
    trace.append(("conditional-codes", measure(coherent.marginal(keep), borrow_bits)))

    # dephase X_A -> X_B (a strict decrease is allowed here)
    keep_b = sorted(set(blocks[0].labels) - {"R"})
    trace.append(("dephase", measure(_block_diag_mix(blocks, keep_b), borrow_bits)))

    # Bob's conditional codes, then discard the garbage registers
    _, bob_isos = _conditional_codes(branches, bob_label, eps, "Bp", "Bg", budget)
    final_blocks = [b.apply(bob_isos[x].matrix, [bob_label],
                            out_regs=bob_isos[x].out_regs())
                    for x, b in enumerate(blocks)]
    keep_f = sorted(set(final_blocks[0].labels) - {"R"})
    trace.append(("bob-codes", measure(_block_diag_mix(final_blocks, keep_f), borrow_bits)))

    final = sum(b.marginal(["Ap", "Bp"]) for b in final_blocks)
    trace.append(("discard-garbage", measure(final, borrow_bits)))
    return trace
