"""Counter-based random streams keyed by (seed, chain, sweep, site).

Every sweep of every chain draws from its own Philox block, so results do
not depend on how chains are scheduled across threads.
"""

import hashlib
from typing import Optional

import numpy as np

SITE_STREAM = 0
ORDER_STREAM = 1
INITIAL_STREAM = 2

_MASK64 = (1 << 64) - 1


def chain_key(seed: int, chain: int) -> int:
    """128-bit Philox key for one chain, a hash of (seed, chain index)."""
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    digest = hashlib.blake2b(f"{seed}:{chain}".encode(), digest_size=16).digest()
    return int.from_bytes(digest, "little")


def stream(seed: int, chain: int, sweep: int, kind: int = SITE_STREAM) -> np.random.Generator:
    """Generator for one (chain, sweep, purpose) block."""
    bit_generator = np.random.Philox(key=chain_key(seed, chain), counter=[0, 0, sweep, kind])
    return np.random.Generator(bit_generator)


def sweep_uniforms(seed: int, chain: int, sweep: int, n_sites: int) -> np.ndarray:
    """Uniforms of shape (n_sites, 2); row x is reserved for site x of that sweep."""
    return stream(seed, chain, sweep, SITE_STREAM).random((n_sites, 2))


def sweep_order(seed: int, chain: int, sweep: int, n_sites: int, random_order: bool = False) -> np.ndarray:
    if not random_order:
        return np.arange(n_sites, dtype=np.int64)
    return stream(seed, chain, sweep, ORDER_STREAM).permutation(n_sites).astype(np.int64)


def initial_spins(
    seed: int,
    chain: int,
    n_sites: int,
    alphabet_size: int,
    uniform_symbol: Optional[int] = None,
) -> np.ndarray:
    """Starting state: the boundary symbol everywhere when given, else i.i.d. uniform symbols."""
    if uniform_symbol is not None:
        return np.full(n_sites, uniform_symbol, dtype=np.int64)
    return stream(seed, chain, 0, INITIAL_STREAM).integers(0, alphabet_size, size=n_sites, dtype=np.int64)


def derive_seed(seed: int, label: str) -> int:
    """Deterministic 64-bit seed for a named sub-experiment (one grid point of a sweep)."""
    digest = hashlib.blake2b(f"{seed}/{label}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")
