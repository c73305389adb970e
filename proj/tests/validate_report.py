"""Validate an eval report against the JSON schema.

usage: validate_report.py SCHEMA REPORT [--oracle]

With --oracle the SFNO column must be a perfect score.
"""
import json
import sys

import jsonschema


def main(argv):
    if len(argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    with open(argv[1]) as f:
        schema = json.load(f)
    with open(argv[2]) as f:
        report = json.load(f)
    jsonschema.validate(report, schema)
    if "--oracle" in argv[3:]:
        sfno = report["models"]["SFNO"]
        expected = {"mse": 0, "acc": 1, "ms_ssim": 1, "psnr": "+inf"}
        for key, want in expected.items():
            got = sfno[key]
            ok = got == want if isinstance(want, str) else abs(got - want) <= 1e-12
            if not ok:
                print(f"oracle {key}: expected {want}, got {got}", file=sys.stderr)
                return 1
    print("report ok")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
