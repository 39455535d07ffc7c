"""Numba kernels operating in place on batched amplitude arrays.

Every kernel takes a 2-D ``(batch, 2**n)`` complex array. Qubit ``k`` is
bit ``k`` of the amplitude index (qubit 0 is least significant).
"""

import numba as nb
import numpy as np


@nb.njit(cache=True)
def apply_1q(states, k, m00, m01, m10, m11):
    batch, dim = states.shape
    lo = 1 << k
    for b in range(batch):
        for base in range(0, dim, 2 * lo):
            for i in range(base, base + lo):
                a0 = states[b, i]
                a1 = states[b, i + lo]
                states[b, i] = m00 * a0 + m01 * a1
                states[b, i + lo] = m10 * a0 + m11 * a1


@nb.njit(cache=True)
def apply_rotation_layer(states, mats):
    """Apply ``mats[k]`` (a 2x2 matrix) to every qubit ``k``."""
    for k in range(mats.shape[0]):
        apply_1q(states, k, mats[k, 0, 0], mats[k, 0, 1], mats[k, 1, 0], mats[k, 1, 1])


@nb.njit(cache=True)
def apply_cz(states, a, b):
    batch, dim = states.shape
    mask = (1 << a) | (1 << b)
    for s in range(batch):
        for i in range(dim):
            if i & mask == mask:
                states[s, i] = -states[s, i]


@nb.njit(cache=True)
def apply_cnot(states, control, target):
    batch, dim = states.shape
    cbit = 1 << control
    tbit = 1 << target
    for s in range(batch):
        for i in range(dim):
            if i & cbit and not i & tbit:
                j = i | tbit
                tmp = states[s, i]
                states[s, i] = states[s, j]
                states[s, j] = tmp


@nb.njit(cache=True)
def pauli_matvec(states, flips, consts, vec_index, vecs, out):
    """out[b] = sum_f w_f * states[b][idx ^ f] with w_f constant or per-index."""
    batch, dim = states.shape
    for b in range(batch):
        for i in range(dim):
            out[b, i] = 0.0
        for t in range(flips.shape[0]):
            f = flips[t]
            v = vec_index[t]
            if v < 0:
                c = consts[t]
                for i in range(dim):
                    out[b, i] += c * states[b, i ^ f]
            else:
                for i in range(dim):
                    out[b, i] += vecs[v, i] * states[b, i ^ f]


@nb.njit(cache=True)
def pauli_expectations(states, flips, consts, vec_index, vecs):
    """Return <psi_b|H|psi_b> for every row without materializing H|psi>."""
    batch, dim = states.shape
    out = np.zeros(batch, dtype=np.complex128)
    for b in range(batch):
        acc = 0.0 + 0.0j
        for t in range(flips.shape[0]):
            f = flips[t]
            v = vec_index[t]
            if v < 0:
                # sum_i conj(a_i) a_{i^f} is real, so only the real part is summed
                r = 0.0
                for i in range(dim):
                    x = states[b, i]
                    y = states[b, i ^ f]
                    r += x.real * y.real + x.imag * y.imag
                acc += consts[t] * r
            else:
                s = 0.0 + 0.0j
                for i in range(dim):
                    s += states[b, i].conjugate() * vecs[v, i] * states[b, i ^ f]
                acc += s
        out[b] = acc
    return out
