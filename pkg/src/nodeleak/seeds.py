"""Deterministic seed derivation.

Every stochastic call site takes a seed derived from a master seed plus a
stable string label (and indices), so no code depends on ambient RNG state
and identical runs reproduce bit-identical results regardless of worker
scheduling.
"""

import hashlib

_MASK = (1 << 63) - 1


def derive_seed(*parts) -> int:
    """Hash (seed, label, index, ...) into an independent 63-bit child seed."""
    text = "\x1f".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & _MASK
