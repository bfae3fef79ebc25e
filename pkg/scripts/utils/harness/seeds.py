"""
Replication seeds derived from the cell coordinates.
"""

import hashlib


def derive_seed(master_seed, signal_id, s, n, r):
    """Stable 64-bit seed for replication r of cell (signal, s, n).

    Depends only on its arguments, so a cell run alone reproduces the same
    replications as a full run in any order.
    """
    key = repr((int(master_seed), str(signal_id), float(s), int(n), int(r))).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "little")
