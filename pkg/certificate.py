# certificate.py
import json
import logging
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
import pandas as pd

import config

logger = logging.getLogger(__name__)


def plain(value):
    """Converts numpy scalars/arrays and sets into JSON-ready values (sets become sorted lists)."""
    if isinstance(value, dict):
        return {str(k): plain(v) for k, v in value.items()}
    if isinstance(value, (set, frozenset)):
        return sorted(plain(v) for v in value)
    if isinstance(value, (list, tuple)):
        return [plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    return value


class CheckSpec(NamedTuple):
    formula: str
    statement: str
    location: str
    anchor: str  # verbatim source text the check reproduces


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    passed: bool
    exponents: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    note: str = ""

    def to_document(self):
        doc = {
            "verdict": "pass" if self.passed else "fail",
            "exponents": plain(self.exponents),
            "witnesses": plain(self.witnesses),
        }
        if self.note:
            doc["note"] = self.note
        return doc


@dataclass
class Certificate:
    subject: dict
    checks: list
    seed: int = 0
    ledger: dict = field(default_factory=dict)
    schema: int = config.SCHEMA_VERSION

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def failures(self):
        return [c.check_id for c in self.checks if not c.passed]

    def extend(self, results):
        self.checks.extend(results)

    def to_document(self):
        return {
            "schema": self.schema,
            "seed": self.seed,
            "subject": plain(self.subject),
            "passed": self.passed,
            "checks": {c.check_id: c.to_document() for c in self.checks},
            "ledger": plain(self.ledger),
        }

    def to_json(self):
        return json.dumps(self.to_document(), sort_keys=True, indent=2, ensure_ascii=False) + "\n"

    def to_frame(self):
        rows = [
            {
                "check_id": c.check_id,
                "verdict": "pass" if c.passed else "fail",
                "exponents": ", ".join(f"{k}={v}" for k, v in plain(c.exponents).items()),
                "note": c.note,
            }
            for c in self.checks
        ]
        return pd.DataFrame(rows, columns=["check_id", "verdict", "exponents", "note"])


def merge_schemas(*schemas):
    """Combines per-module check schemas; a check id may be declared only once."""
    merged = {}
    for schema in schemas:
        for check_id, entry in schema.items():
            if check_id in merged:
                raise ValueError(f"Check id {check_id!r} is declared twice")
            merged[check_id] = entry
    return merged
