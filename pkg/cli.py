# cli.py
import argparse
import importlib
import json
import logging
import sys

import yaml

import config
import glcm_pipeline
import nonstd_oracle
import quasihom_calculus
import sl2_cover
from certificate import merge_schemas, plain
from ellis_engine import EllisError
from g_algebra import AlgebraError
from group_core import FiniteGroup, GroupError, central_extension

logger = logging.getLogger(__name__)

# --- Configuration ---
SUITES = {
    "ellis": "suites.ellis_suite",
    "quasihom": "suites.quasihom_suite",
    "sl2": "suites.sl2_suite",
    "nonstd": "suites.nonstd_suite",
    "pipeline": "suites.pipeline_suite",
}
GROUP_KINDS = ("cyclic", "table", "perm", "matrix", "extension")
INSTANCE_KEYS = ("schema", "label", "group", "X", "n_max", "seeds", "equivalence_mode", "checks", "seed")
EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SIGN_SYMBOLS = {1: "+", -1: "-", 0: "0"}


class InstanceFileError(ValueError):
    def __init__(self, path, line, message):
        where = f"{path}:{line}" if line else str(path)
        super().__init__(f"{where}: {message}")
        self.line = line


# --- 1. Instance Files ---

def _key_lines(root):
    """Line (1-based) of each top-level key and of each key of the group mapping."""
    lines = {}
    if isinstance(root, yaml.MappingNode):
        for key, value in root.value:
            lines[key.value] = key.start_mark.line + 1
            if key.value == "group" and isinstance(value, yaml.MappingNode):
                for sub, _ in value.value:
                    lines[f"group.{sub.value}"] = sub.start_mark.line + 1
    return lines


def _build_group(spec, fail):
    if not isinstance(spec, dict):
        fail("group", "group must be a mapping with a 'kind'")
    kind = spec.get("kind")
    if kind not in GROUP_KINDS:
        fail("group.kind" if "kind" in spec else "group", f"group kind must be one of {GROUP_KINDS}, got {kind!r}")
    try:
        if kind == "cyclic":
            return FiniteGroup.cyclic(int(spec["n"]))
        if kind == "table":
            return FiniteGroup.from_table(spec["table"], spec.get("labels"))
        if kind == "perm":
            return FiniteGroup.from_permutations(spec["generators"])
        if kind == "matrix":
            return FiniteGroup.from_matrices(spec["matrices"], int(spec["prime"]))
        base = _build_group(spec["base"], fail)
        m = int(spec["modulus"])
        cocycle = spec["cocycle"]
        if cocycle == "carry":
            if spec["base"].get("kind") != "cyclic":
                fail("group.cocycle", "the carry cocycle needs a cyclic base")
            n = base.order

            def carry(a, b):
                return 1 if a + b >= n else 0

            cocycle = carry
        return central_extension(base, m, cocycle)
    except KeyError as e:
        fail("group", f"group kind {kind!r} needs the field {e.args[0]!r}")
    except (GroupError, TypeError, ValueError) as e:
        fail("group", str(e))


def parse_instance(text, path="<instance>"):
    """Parses instance YAML into keyword arguments for build_instance plus run options."""
    try:
        root = yaml.compose(text)
        data = yaml.safe_load(text)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise InstanceFileError(path, mark.line + 1 if mark else None, f"YAML parse error: {getattr(e, 'problem', e)}")
    lines = _key_lines(root)

    def fail(key, message):
        raise InstanceFileError(path, lines.get(key, lines.get(key.split(".")[0])), message)

    if not isinstance(data, dict):
        raise InstanceFileError(path, 1, "instance file must be a mapping")
    unknown = [k for k in data if k not in INSTANCE_KEYS]
    if unknown:
        fail(str(unknown[0]), f"unknown field {unknown[0]!r}")
    if data.get("schema") != config.SCHEMA_VERSION:
        fail("schema", f"schema must be {config.SCHEMA_VERSION}, got {data.get('schema')!r}")
    for required in ("group", "X"):
        if required not in data:
            raise InstanceFileError(path, None, f"missing required field {required!r}")

    group = _build_group(data["group"], fail)
    try:
        X = group.subset(data["X"])
    except (GroupError, TypeError) as e:
        fail("X", str(e))
    try:
        seeds = tuple(group.subset(s) for s in data.get("seeds") or ())
    except (GroupError, TypeError) as e:
        fail("seeds", str(e))

    n_max = data.get("n_max", config.DEFAULT_N_MAX)
    if not isinstance(n_max, int) or n_max < glcm_pipeline.REQUIRED_HORIZON:
        fail("n_max", f"n_max must be an integer >= {glcm_pipeline.REQUIRED_HORIZON}, got {n_max!r}")
    mode = data.get("equivalence_mode", "atoms")
    if mode not in glcm_pipeline.EQUIVALENCE_MODES:
        fail("equivalence_mode", f"equivalence_mode must be one of {glcm_pipeline.EQUIVALENCE_MODES}")
    checks = data.get("checks", "all")
    if checks != "all":
        if not isinstance(checks, list):
            fail("checks", "checks must be 'all' or a list of check ids")
        bad = [c for c in checks if c not in glcm_pipeline.CHECK_SCHEMA]
        if bad:
            fail("checks", f"unknown check id(s): {', '.join(map(str, bad))}")
    seed = data.get("seed", 0)
    if not isinstance(seed, int):
        fail("seed", f"seed must be an integer, got {seed!r}")
    return {
        "group": group, "X": X, "n_max": n_max, "seeds": seeds, "equivalence_mode": mode,
        "label": str(data.get("label", path)), "checks": None if checks == "all" else checks, "seed": seed,
    }


def load_instance(path):
    """Returns (parsed instance, status message)."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except OSError as e:
        return None, f"Cannot read instance file: {e}"
    try:
        return parse_instance(text, path), "Success"
    except InstanceFileError as e:
        return None, str(e)


# --- 2. Entry Points ---

def run_pipeline(path, seed=None, checks=None):
    """Builds the instance, runs the selected checks and returns (certificate, status)."""
    spec, status = load_instance(path)
    if spec is None:
        return None, status
    try:
        inst = glcm_pipeline.build_instance(
            spec["group"], spec["X"], spec["n_max"], spec["seeds"], spec["equivalence_mode"], spec["label"],
        )
        cert = glcm_pipeline.theorem_certificate(
            inst, checks or spec["checks"], seed if seed is not None else spec["seed"],
        )
    except glcm_pipeline.HorizonTooSmall as e:
        return None, f"Refused: {e}"
    except (GroupError, AlgebraError, EllisError, ValueError) as e:
        return None, f"Pipeline failed: {e}"
    return cert, "Success"


def run_suite(name, seed=0, samples=None):
    """Runs a named suite; returns (verdict table, status)."""
    if name not in SUITES:
        return None, f"Unknown suite {name!r}; expected one of {', '.join(SUITES)}"
    module = importlib.import_module(SUITES[name])
    try:
        frame = module.run(seed=seed, samples=samples)
    except (GroupError, AlgebraError, EllisError, quasihom_calculus.QuasiHomError,
            nonstd_oracle.TowerError, sl2_cover.DeterminantError) as e:
        return None, f"Suite {name} failed to run: {e}"
    return frame, "Success"


def all_check_schemas():
    return merge_schemas(
        glcm_pipeline.CHECK_SCHEMA, quasihom_calculus.CHECK_SCHEMA,
        sl2_cover.CHECK_SCHEMA, nonstd_oracle.CHECK_SCHEMA,
    )


def explain(check_id):
    schemas = all_check_schemas()
    check_id = quasihom_calculus.CHECK_ALIASES.get(check_id, check_id)
    if check_id not in schemas:
        return None, f"Unknown check id {check_id!r}"
    spec = schemas[check_id]
    lines = [
        check_id,
        f"  formula:   {spec.formula}",
        f"  location:  {spec.location}",
        f"  anchor:    \"{spec.anchor}\"",
        f"  statement: {spec.statement}",
    ]
    return "\n".join(lines), "Success"


def suite_document(name, seed, samples, frame):
    return json.dumps(
        {"schema": config.SCHEMA_VERSION, "suite": name, "seed": seed, "samples": samples,
         "passed": bool(frame["passed"].all()), "rows": plain(frame.to_dict("records"))},
        sort_keys=True, indent=2, ensure_ascii=False, default=str,
    ) + "\n"


# --- 3. Command Line ---

def build_parser():
    parser = argparse.ArgumentParser(description="Finite models of approximate subgroups: certificates and suites.")
    target = parser.add_mutually_exclusive_group(required=True)
    target.add_argument("--instance", metavar="PATH", help="instance YAML file to certify")
    target.add_argument("--suite", metavar="NAME", help=f"suite to run ({', '.join(SUITES)})")
    target.add_argument("--explain", metavar="CHECK_ID", help="print a check's formula, source location and anchor")
    target.add_argument("--nonstd-expr", metavar="TEXT", help="sign of a prefix expression in the default tower")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--samples", type=int, default=None)
    parser.add_argument("--checks", default=None, help="comma-separated check ids (instance mode)")
    parser.add_argument("--out", metavar="PATH", help="write the certificate or suite document here")
    parser.add_argument("-v", "--verbose", action="store_true", help="log at INFO")
    return parser


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else config.LOG_LEVEL,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.explain:
        text, status = explain(args.explain)
        if text is None:
            print(status, file=sys.stderr)
            return EXIT_USAGE
        print(text)
        return EXIT_PASS

    if args.nonstd_expr:
        try:
            verdict = nonstd_oracle.decide_sign(nonstd_oracle.default_tower(), args.nonstd_expr)
        except nonstd_oracle.UndecidableSign as e:
            print(str(e), file=sys.stderr)
            return EXIT_FAIL
        except nonstd_oracle.TowerError as e:
            print(str(e), file=sys.stderr)
            return EXIT_USAGE
        print(f"sign: {SIGN_SYMBOLS[verdict.sign]}\nleading term: {verdict.leading_term}\ndepth: {verdict.depth}")
        return EXIT_PASS

    if args.suite:
        seed = args.seed or 0
        frame, status = run_suite(args.suite, seed, args.samples)
        if frame is None:
            print(status, file=sys.stderr)
            return EXIT_USAGE if status.startswith("Unknown suite") else EXIT_FAIL
        if args.out:
            _emit(suite_document(args.suite, seed, args.samples, frame), args.out)
        print(frame.to_string(index=False))
        return EXIT_PASS if frame["passed"].all() else EXIT_FAIL

    checks = [c.strip() for c in args.checks.split(",") if c.strip()] if args.checks else None
    cert, status = run_pipeline(args.instance, args.seed, checks)
    if cert is None:
        print(status, file=sys.stderr)
        return EXIT_USAGE
    _emit(cert.to_json(), args.out)
    if args.out:
        print(cert.to_frame().to_string(index=False))
    return EXIT_PASS if cert.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
