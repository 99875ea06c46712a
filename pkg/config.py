# config.py
import logging
import os

logger = logging.getLogger(__name__)

# --- Configuration ---
SCHEMA_VERSION = 1

# Horizon the main-theorem exponents need (largest power used is X^34)
DEFAULT_N_MAX = 34

# Minimal witnesses (n, m, l, k) are searched up to this bound
WITNESS_BOUND = 8

# d-closure refuses to grow past this many atoms
ATOM_BUDGET = 2 ** 16

# Associativity: exhaustive up to this order, sampled above
EXHAUSTIVE_ASSOCIATIVITY_LIMIT = 512
SAMPLED_TRIPLES = 100_000

# Error-set scans over more pairs than this are sampled and flagged
EXHAUSTIVE_PAIR_LIMIT = 10 ** 6
SAMPLED_PAIRS = 200_000

# Brute-force group isomorphism search limit
ISO_SEARCH_LIMIT = 64

# Exact set-cover refinement gives up after this many search nodes
COVER_SEARCH_NODES = 2_000_000

# Tower truncation depth and hard cap for automatic deepening
TOWER_DEPTH = 8
TOWER_DEPTH_CAP = 64

LOG_LEVEL = os.environ.get("GLCM_LOG_LEVEL", "WARNING").upper()


def worker_count():
    """Number of worker processes for instance batches (GLCM_WORKERS, default 1)."""
    raw = os.environ.get("GLCM_WORKERS", "1")
    try:
        workers = int(raw)
        if workers < 1:
            raise ValueError(raw)
        return workers
    except ValueError:
        logger.warning(f"Ignoring malformed GLCM_WORKERS={raw!r}; using 1 worker.")
        return 1
