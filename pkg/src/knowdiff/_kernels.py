"""Compiled inner loops of the diffusion step.

Topology is passed as per-layer CSR: ``indptr[j, i]:indptr[j, i+1]`` indexes
into the flat ``indices``/``strength`` arrays. Knowledge ``K`` is indexed
``[agent, layer]`` and updated in place.

Ledger arrays (all per step):
    flow_gain[j, n], flow_loss[j, n]  received on n from changes on j, by sign
    floor_corr[j, n]                  propagated minus received (floor effect)
    out_gain[j], out_loss[j]          source-side deltas that were propagated
    counters                          horizontal, forgetting, self-learning
"""

import numpy as np
from numba import njit

H_EVENTS = 0
FORGET_EVENTS = 1
LEARN_EVENTS = 2


@njit(cache=True)
def floor_value(old, new, omega):
    """Non-zero knowledge rule: a positive entry never lands below ``omega``."""
    if old <= 0.0 and new <= 0.0:
        return 0.0
    if new < omega:
        return omega
    return new


@njit(cache=True)
def horizontal_delta(k_teacher, k_learner, l_teacher, o_learner, d_teacher, d_max, strength, coeff_a):
    gap = k_teacher - k_learner
    if gap <= 0.0:
        return 0.0
    return gap * l_teacher * o_learner / (d_teacher * coeff_a) * d_max * strength


@njit(cache=True)
def forgetting_decrement(k, k_tilde, o, coeff_b):
    gap = k - k_tilde
    if gap <= 0.0:
        return 0.0
    return gap * (1.0 - o) / coeff_b


@njit(cache=True)
def self_learning_increment(k, k_tilde, o, cc, coeff_c, coeff_d):
    gap = k_tilde - k
    if gap <= 0.0:
        return 0.0
    if cc > 0.0:
        return gap * o * cc / coeff_c
    return gap * o / coeff_d


@njit(cache=True)
def select_teacher(K, social, indptr, indices, i, j, learner_score):
    """CSR position of the best-scoring neighbour, or -1 if it does not beat the learner."""
    best = -1
    best_score = -np.inf
    for p in range(indptr[j, i], indptr[j, i + 1]):
        z = indices[p]
        s = K[z, j] * social[z]
        if s > best_score:
            best_score = s
            best = p
    if best >= 0 and best_score > learner_score:
        return best
    return -1


@njit(cache=True)
def avg_potential(K, social, indptr, indices, i, j):
    lo = indptr[j, i]
    hi = indptr[j, i + 1]
    if hi == lo:
        return 0.0
    total = 0.0
    for p in range(lo, hi):
        z = indices[p]
        total += K[z, j] * social[z]
    return total / (hi - lo)


@njit(cache=True)
def vertical(K, R, i, j, delta, omega, flow_gain, flow_loss, floor_corr, out_gain, out_loss):
    if delta == 0.0:
        return
    if delta > 0.0:
        out_gain[j] += delta
    else:
        out_loss[j] -= delta
    for n in range(K.shape[1]):
        if n == j:
            continue
        raw = R[i, j, n] * delta
        if raw == 0.0:
            continue
        old = K[i, n]
        new = floor_value(old, old + raw, omega)
        K[i, n] = new
        received = new - old
        if raw > 0.0:
            flow_gain[j, n] += received
        else:
            flow_loss[j, n] -= received
        floor_corr[j, n] += raw - received


@njit(cache=True)
def set_level(K, i, j, new, omega):
    """Write a new level through the floor rule; returns the applied change."""
    old = K[i, j]
    K[i, j] = floor_value(old, new, omega)
    return K[i, j] - old


@njit(cache=True)
def visit(K, cognitive, social, indptr, indices, strength, degree, cc, dmax, R, i, j,
          omega, coeff_a, coeff_b, coeff_c, coeff_d,
          flow_gain, flow_loss, floor_corr, out_gain, out_loss, counters):
    # horizontal diffusion, then its vertical echo
    p = select_teacher(K, social, indptr, indices, i, j, K[i, j] * cognitive[i])
    if p >= 0:
        z = indices[p]
        counters[H_EVENTS] += 1
        d = horizontal_delta(K[z, j], K[i, j], social[z], cognitive[i],
                             degree[j, z], dmax[j], strength[p], coeff_a)
        if d > 0.0:
            applied = set_level(K, i, j, K[i, j] + d, omega)
            vertical(K, R, i, j, applied, omega, flow_gain, flow_loss, floor_corr, out_gain, out_loss)
    # forgetting or self-learning against the neighbourhood potential
    kt = avg_potential(K, social, indptr, indices, i, j)
    k = K[i, j]
    if k * cognitive[i] >= kt:
        counters[FORGET_EVENTS] += 1
        xi = forgetting_decrement(k, kt, cognitive[i], coeff_b)
        applied = set_level(K, i, j, k - xi, omega)
    else:
        counters[LEARN_EVENTS] += 1
        psi = self_learning_increment(k, kt, cognitive[i], cc[j, i], coeff_c, coeff_d)
        applied = set_level(K, i, j, k + psi, omega)
    vertical(K, R, i, j, applied, omega, flow_gain, flow_loss, floor_corr, out_gain, out_loss)


@njit(cache=True)
def node_order(K, alive_ids, j):
    """Alive ids by ascending knowledge on layer ``j``; ties keep ascending id."""
    keys = np.empty(alive_ids.shape[0])
    for q in range(alive_ids.shape[0]):
        keys[q] = K[alive_ids[q], j]
    return alive_ids[np.argsort(keys, kind="mergesort")]


@njit(cache=True)
def step(K, cognitive, social, alive_ids, indptr, indices, strength, degree, cc, dmax, R,
         layer_order, omega, coeff_a, coeff_b, coeff_c, coeff_d,
         flow_gain, flow_loss, floor_corr, out_gain, out_loss, counters):
    for j in layer_order:
        order = node_order(K, alive_ids, j)
        for i in order:
            visit(K, cognitive, social, indptr, indices, strength, degree, cc, dmax, R, i, j,
                  omega, coeff_a, coeff_b, coeff_c, coeff_d,
                  flow_gain, flow_loss, floor_corr, out_gain, out_loss, counters)
