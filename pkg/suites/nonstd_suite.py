# suites/nonstd_suite.py
import logging

import pandas as pd

from nonstd_oracle import circle_tower, lemma_kernel_report, oracle_batch, oracle_values, verify_relations

logger = logging.getLogger(__name__)

SAMPLES = 1000


def run(seed=0, samples=None):
    """Sandwich verdicts, vanishing cocycle values, relation checks and the numeric oracle batch."""
    kernel = lemma_kernel_report()
    rows = kernel.to_dict("records")

    tower = circle_tower()
    relations = verify_relations(tower, oracle_values(tower))
    rows.append({"check_id": "nonstd-relations", "case": "circle rewrite and parametrisation",
                 "expected": True, "observed": all(relations.values()), "passed": all(relations.values())})

    batch = oracle_batch(seed, samples or SAMPLES, tower)
    counts = batch["status"].value_counts().to_dict()
    mismatches = counts.get("mismatch", 0)
    rows.append({"check_id": "nonstd-oracle-soundness", "case": f"{len(batch)} random expressions",
                 "expected": 0, "observed": counts, "passed": mismatches == 0})
    logger.info(f"Oracle batch outcome: {counts}")
    return pd.DataFrame(rows, columns=["check_id", "case", "expected", "observed", "passed"])
