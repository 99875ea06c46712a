# suites/pipeline_suite.py
import logging

from glcm_pipeline import run_random_batch

logger = logging.getLogger(__name__)

INSTANCE_COUNT = 100


def run(seed=0, samples=None):
    """The randomized main-theorem batch; one row per instance."""
    frame = run_random_batch(samples or INSTANCE_COUNT, seed)
    frame["passed"] = frame["passed"].astype(bool)
    return frame
