"""Validates every JSON report in a directory against the report schema."""

import json
import pathlib
import sys

import jsonschema


def main(argv):
    if len(argv) != 3:
        print("usage: check_reports.py SCHEMA DIR", file=sys.stderr)
        return 2
    schema = json.loads(pathlib.Path(argv[1]).read_text())
    jsonschema.Draft202012Validator.check_schema(schema)
    validator = jsonschema.Draft202012Validator(schema)
    reports = sorted(pathlib.Path(argv[2]).rglob("*.json"))
    if not reports:
        print(f"no reports in {argv[2]}", file=sys.stderr)
        return 1
    failures = 0
    for path in reports:
        errors = list(validator.iter_errors(json.loads(path.read_text())))
        for e in errors[:5]:
            where = "/".join(str(p) for p in e.absolute_path)
            print(f"{path.relative_to(argv[2])}: {where}: {e.message}")
        failures += bool(errors)
        print(f"{path.relative_to(argv[2])}: {'FAIL' if errors else 'ok'}")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
