# suites/sl2_suite.py
import logging

import pandas as pd

from sl2_cover import generic_exponent_ledger, grid_cocycle_failures, identity_batch, rational_grid

logger = logging.getLogger(__name__)

SAMPLES = 10_000


def run(seed=0, samples=None):
    """Randomized identity batch, the exhaustive grid scan and the replayed exponent ledger."""
    frame = identity_batch(seed, samples or SAMPLES)
    grid = rational_grid()
    failures = grid_cocycle_failures(grid)
    grid_row = {
        "check_id": "sl2-cocycle-identity (grid)",
        "cases": len(grid) ** 3,
        "failures": len(failures),
        "verdict": "fail" if failures else "pass",
        "first_failure": [str(m) for m in failures[0]] if failures else "",
    }
    ledger = generic_exponent_ledger()
    logger.info(f"Generic exponent ledger:\n{ledger.to_frame().to_string(index=False)}")
    frame = pd.concat([frame, pd.DataFrame([grid_row])], ignore_index=True)
    frame["passed"] = frame["verdict"] == "pass"
    return frame
