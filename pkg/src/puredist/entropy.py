"""One-shot entropic quantities, all in bits (base-2).

Covers the smoothed support/norm max entropies, the smooth hypothesis
testing entropy (unconditional greedy LP, general Neyman-Pearson
bisection, cq-conditional blockwise greedy), the cq conditional min
entropy with a truncation-based smoothing, the truncated Renyi-1/2 max
entropy, and the D_max-based mutual information of cq ensembles.

Smoothing convention: unless noted otherwise, smoothing is operationalized
as spectral truncation (dropping smallest-eigenvalue mass up to the budget)
rather than optimization over a purified-distance ball; each function's
docstring says whether it lower- or upper-bounds the ball-optimal quantity.
"""

import heapq
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .states import CQState, DensityOperator

SUPPORT_TOL = 1e-12


@dataclass
class EntropyResult:
    """Entropy value plus the witness that attains it.

    ``witness`` holds enough data to re-evaluate ``value`` independently
    (see ``reevaluate``); ``method`` is one of greedy-lp, neyman-pearson,
    blockwise, closed-form, iterative.
    """

    value: float
    witness: dict = field(default_factory=dict)
    method: str = ""

    def reevaluate(self) -> float:
        """Recompute the value from the stored witness."""
        w = self.witness
        if self.method in ("greedy-lp", "blockwise"):
            return float(np.log2(np.dot(w["costs"], w["weights"])))
        if self.method == "neyman-pearson":
            return float(-np.log2(w["test_cost"]))
        return self.value


@dataclass
class ImaxResult:
    """Certified D_max mutual information of a cq ensemble.

    ``value`` is attained by the feasible ``sigma``; ``duality_gap`` bounds
    the distance to the true optimum (value - gap <= optimum <= value).
    """

    value: float
    sigma: DensityOperator
    duality_gap: float
    iterations: int = 0
    converged: bool = True


def _validate_eps(eps):
    if not (0.0 <= eps < 1.0):
        raise ValueError(f"eps must be in [0, 1), got {eps}")


def _spectrum(rho) -> np.ndarray:
    if isinstance(rho, DensityOperator):
        return rho.spectrum()
    w, _ = linalg.eig_hermitian(np.asarray(rho, dtype=complex))
    return linalg.clip_psd_spectrum(w)


def _matrix(rho) -> np.ndarray:
    return rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho, dtype=complex)


def _truncation_count(ascending: np.ndarray, eps: float) -> int:
    """Number k of smallest support eigenvalues whose sum stays <= eps."""
    csum = np.cumsum(ascending)
    return int(np.searchsorted(csum, eps + 1e-15, side="right"))


def h_tilde_max(rho, eps: float) -> float:
    """Smoothed support max entropy: log2(|supp| - k) after dropping the
    smallest eigenvalues of total mass <= eps."""
    _validate_eps(eps)
    w = _spectrum(rho)
    supp = np.sort(w[w > SUPPORT_TOL])
    k = _truncation_count(supp, eps)
    k = min(k, len(supp) - 1)
    return float(np.log2(len(supp) - k))


def h_prime_max(rho, eps: float) -> float:
    """Smoothed norm max entropy: log2(1 / lambda_{k+1}) with k as in
    ``h_tilde_max``."""
    _validate_eps(eps)
    w = _spectrum(rho)
    supp = np.sort(w[w > SUPPORT_TOL])
    k = _truncation_count(supp, eps)
    k = min(k, len(supp) - 1)
    return float(-np.log2(supp[k]))


def _greedy_lp(gains: np.ndarray, costs: np.ndarray, target: float):
    """Fractional-knapsack minimum of sum(costs * lam) subject to
    sum(gains * lam) >= target, 0 <= lam <= 1.

    Entries must be pre-sorted by gain/cost ratio descending. Returns
    (total cost, lam).
    """
    lam = np.zeros(len(gains))
    acc = 0.0
    for i, g in enumerate(gains):
        if acc >= target - 1e-15 or g <= 0:
            break
        take = min(1.0, (target - acc) / g)
        lam[i] = take
        acc += take * g
    return float(np.dot(costs, lam)), lam


def h_h(rho, eps: float) -> EntropyResult:
    """Smooth hypothesis testing entropy of a single system.

    Solves the LP  min sum(lam_a)  s.t.  sum(P(a) lam_a) >= 1 - eps,
    0 <= lam <= 1, over the eigenvalues P of the state, by the greedy
    fractional-knapsack rule (fill the largest eigenvalues first).
    The value is log2 of the LP optimum and can be negative.
    """
    _validate_eps(eps)
    w = _spectrum(rho)
    p = np.sort(w[w > SUPPORT_TOL])[::-1]
    costs = np.ones_like(p)
    total, lam = _greedy_lp(p, costs, 1.0 - eps)
    return EntropyResult(
        value=float(np.log2(total)),
        witness={"weights": lam, "gains": p, "costs": costs},
        method="greedy-lp",
    )


def d_h(rho, sigma, eps: float, iterations: int = 200) -> EntropyResult:
    """Hypothesis testing relative entropy D_H^eps(rho || sigma), in bits.

    The optimal test is a Neyman-Pearson operator: the projector onto the
    positive part of (rho - t*sigma) plus a fractional weight on the
    threshold eigenspace, with t located by bisection on Tr[Pi_t rho] =
    1 - eps. ``sigma`` only needs to be PSD (not normalized). Returns
    +inf (flagged in the witness) when the constraint is satisfiable with
    zero overlap on supp(sigma).
    """
    _validate_eps(eps)
    r = _matrix(rho)
    s = _matrix(sigma)
    if r.shape != s.shape:
        raise ValueError(f"dimension mismatch: {r.shape} vs {s.shape}")
    ws, _ = linalg.eig_hermitian(s)
    ws = linalg.clip_psd_spectrum(ws)
    target = 1.0 - eps

    # mass of rho available at zero sigma-cost
    ker = np.eye(s.shape[0]) - linalg.support_projector(s)
    free_mass = float(np.real(np.trace(ker @ r @ ker)))
    if free_mass >= target - 1e-12:
        return EntropyResult(value=np.inf, witness={"infinite": True},
                             method="neyman-pearson")

    def pos_mass(t):
        # strict positive part; the bisection pins the crossing eigenvalue
        # onto this threshold, so the final split must use a wider band
        w, v = linalg.eig_hermitian(r - t * s, tol=1e-7)
        pos = v[:, w > 0]
        return float(np.real(np.trace(linalg.dagger(pos) @ r @ pos)))

    lmax_r = float(np.max(_spectrum(r)))
    lmin_s = float(np.min(ws[ws > SUPPORT_TOL])) if np.any(ws > SUPPORT_TOL) else 1.0
    lo = 0.0
    hi = lmax_r / lmin_s + 1.0
    guard = 0
    while pos_mass(hi) >= target and guard < 60:
        hi *= 2.0
        guard += 1
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if pos_mass(mid) >= target:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-14 * max(1.0, hi):
            break
    t = 0.5 * (lo + hi)
    snorm = float(np.max(ws)) if len(ws) else 1.0
    band = max(SUPPORT_TOL, 10.0 * (hi - lo) * snorm)
    w, v = linalg.eig_hermitian(r - t * s, tol=1e-7)
    pos = v[:, w > band]
    zero = v[:, np.abs(w) <= band]
    a = float(np.real(np.trace(linalg.dagger(pos) @ r @ pos)))
    b = float(np.real(np.trace(linalg.dagger(zero) @ r @ zero)))
    gamma = 0.0 if b <= 1e-15 else min(1.0, max(0.0, (target - a) / b))
    cost = float(np.real(np.trace(linalg.dagger(pos) @ s @ pos)))
    cost += gamma * float(np.real(np.trace(linalg.dagger(zero) @ s @ zero)))
    cost = max(cost, 1e-300)
    test = pos @ linalg.dagger(pos) + gamma * (zero @ linalg.dagger(zero))
    return EntropyResult(
        value=float(-np.log2(cost)),
        witness={"t": t, "gamma": gamma, "test": test, "test_cost": cost,
                 "achieved_mass": a + gamma * b},
        method="neyman-pearson",
    )


def h_h_cond_cq(cq: CQState, eps: float) -> EntropyResult:
    """Conditional smooth hypothesis testing entropy H_H^eps(B|X) of a cq state.

    The optimizer is blockwise, Pi = sum_x |x><x| (x) Pi_x, so the LP
    separates: pairs (x, eigenvalue of rho_x) are filled greedily by
    eigenvalue descending, with gain P(x)*lambda and cost P(x) per pair.
    """
    _validate_eps(eps)
    gains, costs = [], []
    for p, cond in zip(cq.probs, cq.conditionals):
        w = cond.spectrum()
        for lam in w[w > SUPPORT_TOL]:
            gains.append(p * lam)
            costs.append(p)
    gains = np.asarray(gains)
    costs = np.asarray(costs)
    ratio = gains / costs
    order = np.argsort(-ratio, kind="stable")
    total, lam = _greedy_lp(gains[order], costs[order], 1.0 - eps)
    return EntropyResult(
        value=float(np.log2(total)),
        witness={"weights": lam, "gains": gains[order], "costs": costs[order]},
        method="blockwise",
    )


def h_min_cq(cq: CQState) -> float:
    """Unsmoothed conditional min entropy H_min(B|X) of a cq state:
    -log2 sum_x P(x) lambda_max(rho_x), the closed form of the SDP."""
    acc = sum(p * float(np.max(c.spectrum())) for p, c in zip(cq.probs, cq.conditionals))
    return float(-np.log2(acc))


def h_min_cq_smoothed(cq: CQState, eps: float) -> float:
    """Truncation-smoothed H_min^eps(B|X) for cq states.

    Removes up to eps^2 of global trace weight from the tops of the
    conditionals' spectra (optimal exact water-cut allocation) before
    applying the closed form. This restricted smoothing lower-bounds the
    purified-distance-ball optimum; at eps = 0 it equals ``h_min_cq``.
    """
    _validate_eps(eps)
    budget = eps * eps
    # per symbol: spectra descending, current cut level, multiplicity at level
    levels = []
    for p, cond in zip(cq.probs, cq.conditionals):
        w = np.sort(cond.spectrum())[::-1]
        m0 = int(np.sum(w >= w[0] - 1e-15))
        levels.append({"p": p, "w": w, "t": float(w[0]), "m": m0})
    # lower the level with the smallest multiplicity first (P cancels in the
    # gain/cost ratio); advance to eigenvalue breakpoints until budget is gone
    heap = [(st["m"], i) for i, st in enumerate(levels)]
    heapq.heapify(heap)
    while budget > 1e-18 and heap:
        m, i = heapq.heappop(heap)
        st = levels[i]
        if m != st["m"]:
            continue  # stale entry
        w, t = st["w"], st["t"]
        nxt = float(w[st["m"]]) if st["m"] < len(w) else 0.0
        step_cost = st["p"] * st["m"] * (t - nxt)
        if step_cost <= budget:
            budget -= step_cost
            st["t"] = nxt
            while st["m"] < len(w) and w[st["m"]] >= nxt - 1e-15:
                st["m"] += 1
            if st["t"] > 0:
                heapq.heappush(heap, (st["m"], i))
        else:
            st["t"] = t - budget / (st["p"] * st["m"])
            budget = 0.0
    acc = sum(st["p"] * max(st["t"], 0.0) for st in levels)
    return float(-np.log2(max(acc, 1e-300)))


def h_max_smooth(rho, eps: float) -> float:
    """Truncation-smoothed unconditional max entropy.

    Renyi-1/2 of the eps-truncated, renormalized spectrum:
    2 log2 sum_i sqrt(lambda'_i). Guaranteed <= ``h_tilde_max`` at the same
    eps (checked at runtime); lower-bounds the ball-smoothed H_max only in
    the truncation-smoothing convention documented in the module docstring.
    """
    _validate_eps(eps)
    w = _spectrum(rho)
    supp = np.sort(w[w > SUPPORT_TOL])
    k = _truncation_count(supp, eps)
    k = min(k, len(supp) - 1)
    kept = supp[k:]
    kept = kept / np.sum(kept)
    value = float(2.0 * np.log2(np.sum(np.sqrt(kept))))
    bound = h_tilde_max(rho, eps)
    assert value <= bound + 1e-9, f"Renyi-1/2 {value} exceeded support bound {bound}"
    return value


def _imax_smooth_support(cq: CQState, eps: float) -> list:
    """Indices of symbols kept after removing lowest-probability symbols
    totaling at most eps mass (always keeps at least one)."""
    order = np.argsort(cq.probs, kind="stable")
    removed = 0.0
    drop = set()
    for i in order[:-1]:
        if removed + cq.probs[i] <= eps + 1e-15:
            removed += cq.probs[i]
            drop.add(int(i))
        else:
            break
    return [i for i in range(len(cq)) if i not in drop]


def i_max_cq(cq: CQState, eps: float = 0.0, max_iterations: int = 10000,
             gap_tol: float = 1e-9) -> ImaxResult:
    """Smooth max mutual information I_max^eps(X:B) of a cq ensemble.

    For cq states the D_max-based definition reduces to
    log2 min{Tr tau : tau >= rho_x for all x in the smoothed support},
    because rho^{XB} <= 2^lam rho^X (x) sigma iff rho_x <= 2^lam sigma for
    every supported x. Smoothing removes the lowest-probability symbols of
    total mass <= eps before solving.

    The SDP dual is unnormalized multi-state discrimination
    max sum_x Tr[Y_x rho_x] over POVMs {Y_x}; we iterate the discrimination
    fixed point and certify with a feasible primal, reporting the gap in
    bits. ``value`` is the feasible (upper) side, so value - duality_gap <=
    optimum <= value always holds.
    """
    _validate_eps(eps)
    keep = _imax_smooth_support(cq, eps)
    states = [cq.conditionals[i].matrix for i in keep]
    regs = cq.conditionals[0].registers
    d = states[0].shape[0]
    n = len(states)

    if n == 1:
        sigma = DensityOperator(regs, states[0], validate=False)
        return ImaxResult(0.0, sigma, 0.0, iterations=0)

    povm = [np.eye(d, dtype=complex) / n for _ in range(n)]
    best_lb = 1e-300
    best_tau = sum(states)  # always feasible: tau = sum_x rho_x >= rho_x
    best_ub = float(np.real(np.trace(best_tau)))
    gap = np.inf
    iters = 0
    for iters in range(1, max_iterations + 1):
        S = sum(w @ pi @ w for w, pi in zip(states, povm))
        S = (S + linalg.dagger(S)) / 2.0
        T = linalg.psd_power(S, -0.5)
        new = [T @ (w @ pi @ w) @ T for w, pi in zip(states, povm)]
        new = [(m + linalg.dagger(m)) / 2.0 for m in new]
        # complete the POVM: assign any kernel slack to the best receiver
        slack = np.eye(d) - sum(new)
        slack = (slack + linalg.dagger(slack)) / 2.0
        if np.max(np.abs(slack)) > 1e-14:
            gains = [float(np.real(np.trace(slack @ w))) for w in states]
            new[int(np.argmax(gains))] += slack
        povm = new
        lb = sum(float(np.real(np.trace(pi @ w))) for pi, w in zip(povm, states))
        # feasible primal from the Lagrange operator, inflated to dominance
        Y = sum(w @ pi for w, pi in zip(states, povm))
        Y = (Y + linalg.dagger(Y)) / 2.0
        c = 0.0
        for w in states:
            ev, _ = linalg.eig_hermitian(w - Y, tol=1e-6)
            c = max(c, float(np.max(ev)))
        ub = float(np.real(np.trace(Y))) + d * max(c, 0.0)
        if lb > best_lb:
            best_lb = lb
        if 0 < ub < best_ub:
            best_ub = ub
            best_tau = Y + max(c, 0.0) * np.eye(d)
        gap = np.log2(best_ub) - np.log2(max(best_lb, 1e-300))
        if gap <= gap_tol:
            break
    converged = gap <= max(gap_tol, 1e-6)
    if not converged:
        warnings.warn(
            f"i_max_cq hit the iteration cap with duality gap {gap:.2e} bits")
    sigma = DensityOperator(regs, best_tau / np.real(np.trace(best_tau)),
                            validate=False)
    return ImaxResult(
        value=float(np.log2(best_ub)),
        sigma=sigma,
        duality_gap=float(max(gap, 0.0)),
        iterations=iters,
        converged=bool(converged),
    )
