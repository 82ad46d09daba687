"""Validates every line of a JSONL file against a JSON schema."""

import argparse
import json
import sys

import jsonschema


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("schema")
    parser.add_argument("records")
    args = parser.parse_args()

    with open(args.schema, encoding="utf-8") as f:
        schema = json.load(f)
    validator_cls = jsonschema.validators.validator_for(schema)
    validator_cls.check_schema(schema)
    validator = validator_cls(schema)

    count = 0
    failures = 0
    with open(args.records, encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            count += 1
            doc = json.loads(line)
            for error in validator.iter_errors(doc):
                failures += 1
                path = "$" + "".join(f"[{p!r}]" for p in error.absolute_path)
                print(f"line {line_no}: {path}: {error.message}", file=sys.stderr)

    if count == 0:
        print("no records found", file=sys.stderr)
        return 1
    print(f"{count} records checked, {failures} violations")
    return 0 if failures == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
