"""Compiled single-site update kernels over flat term arrays."""

import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def local_energies(ext, site, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q, out):
    """Energy of every term containing ``site`` for each candidate symbol at that site."""
    for a in range(q):
        out[a] = 0.0
    for p in range(site_ptr[site], site_ptr[site + 1]):
        t = site_term[p]
        pos = site_pos[p]
        k = term_k[t]
        for a in range(q):
            idx = 0
            for j in range(k):
                s = a if j == pos else ext[term_sites[t, j]]
                idx = idx * q + s
            out[a] += tables[term_offset[t] + idx]


@njit(cache=True, nogil=True)
def heat_bath_probabilities(ext, site, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q):
    energies = np.empty(q)
    local_energies(ext, site, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q, energies)
    lowest = energies.min()
    probs = np.empty(q)
    total = 0.0
    for a in range(q):
        probs[a] = math.exp(lowest - energies[a])
        total += probs[a]
    for a in range(q):
        probs[a] /= total
    return probs


@njit(cache=True, nogil=True)
def heat_bath_pass(ext, order, uniforms, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q):
    """Resample each site in ``order`` from its exact single-site conditional law."""
    energies = np.empty(q)
    weights = np.empty(q)
    for i in range(order.size):
        site = order[i]
        local_energies(ext, site, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q, energies)
        lowest = energies.min()
        total = 0.0
        for a in range(q):
            weights[a] = math.exp(lowest - energies[a])
            total += weights[a]
        u = uniforms[site, 0] * total
        choice = q - 1
        acc = 0.0
        for a in range(q):
            acc += weights[a]
            if u < acc:
                choice = a
                break
        ext[site] = choice


@njit(cache=True, nogil=True)
def metropolis_pass(ext, order, uniforms, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q):
    """Propose a uniformly chosen different symbol at each site; accept with min(1, e^{-dH})."""
    energies = np.empty(q)
    for i in range(order.size):
        site = order[i]
        current = ext[site]
        proposal = (current + 1 + int(uniforms[site, 0] * (q - 1))) % q
        local_energies(ext, site, term_sites, term_k, term_offset, tables, site_ptr, site_term, site_pos, q, energies)
        delta = energies[proposal] - energies[current]
        if delta <= 0.0 or uniforms[site, 1] < math.exp(-delta):
            ext[site] = proposal
