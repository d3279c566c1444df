#!/usr/bin/env python3
# Copyright 2026 The LQST Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Runs a small CLI pipeline and validates every JSON artifact against the
shipped schemas. Also usable on existing files: validate.py --check SCHEMA FILE."""

import argparse
import glob
import json
import os
import subprocess
import sys
import tempfile

import jsonschema


def load(path):
    with open(path, encoding="utf-8") as f:
        return json.load(f)


def check(schema_dir, schema, path):
    validator = jsonschema.Draft202012Validator(load(os.path.join(schema_dir, schema)))
    errors = sorted(validator.iter_errors(load(path)), key=lambda e: list(e.path))
    for e in errors:
        print(f"FAIL {os.path.basename(path)} vs {schema}: {'/'.join(map(str, e.path))}: {e.message}")
    if not errors:
        print(f"ok   {os.path.basename(path)} vs {schema}")
    return not errors


def pipeline(cli, schema_dir):
    with tempfile.TemporaryDirectory(prefix="lqst_schema_") as tmp:
        def run(*args):
            subprocess.run([cli, *args], cwd=tmp, check=True, stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)

        run("gen-data", "--qubits", "2", "--rank", "1", "--meas", "10", "--sizes", "30,10,10", "--out", "d.bin")
        run("train", "--data", "d.bin", "--layers", "2", "--batch", "10", "--max-epochs", "2", "--quiet", "--out", "m.ckpt")
        run("eval", "--ckpt", "m.ckpt", "--data", "d.bin", "--split", "test", "--out", "e.json")
        run("gen-data", "--qubits", "2", "--rank", "1", "--povm", "pauli4", "--meas", "12", "--n-avg", "100",
            "--sizes", "20,5,0", "--out", "b.bin")
        run("train", "--data", "b.bin", "--layers", "1", "--batch", "10", "--max-epochs", "1", "--quiet", "--out", "b.ckpt")
        run("eval", "--bell", "--ckpt", "b.ckpt", "--m", "12", "--repeats", "3", "--out", "bell.json")
        run("svt", "--psd-prob", "--tau", "0.5", "--delta", "0.2", "--trials", "3", "--qubits", "2", "--meas", "10",
            "--max-iters", "100", "--out", "p.json")
        run("svt", "--ranks", "1", "--taus", "0.5", "--deltas", "0.2", "--trials", "2", "--qubits", "2", "--meas", "10",
            "--max-iters", "100", "--out", "s.csv")
        run("report", "--svt", "s.csv", "--eval", "e.json", "--rank", "1", "--tau", "0.5", "--delta", "0.2", "--out", "r.csv")

        jobs = [("train_report.schema.json", "m.ckpt.report.json"),
                ("eval_report.schema.json", "e.json"),
                ("eval_report.schema.json", "bell.json"),
                ("psd_report.schema.json", "p.json"),
                ("checkpoint.schema.json", "m.ckpt"),
                ("checkpoint.schema.json", "b.ckpt")]
        manifests = sorted(glob.glob(os.path.join(tmp, "*.manifest.json")))
        if len(manifests) < 9:
            print(f"FAIL expected a manifest per command, found {len(manifests)}")
            return False
        jobs += [("manifest.schema.json", m) for m in manifests]
        ok = True
        for schema, path in jobs:
            ok &= check(schema_dir, schema, os.path.join(tmp, path))
        # Every report names the manifest that produced it.
        for report in ("m.ckpt.report.json", "e.json", "bell.json", "p.json"):
            target = load(os.path.join(tmp, report))["manifest"]
            if not os.path.exists(os.path.join(tmp, target)):
                print(f"FAIL {report} references missing manifest {target}")
                ok = False
        return ok


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--schemas", default=os.path.dirname(os.path.abspath(__file__)))
    ap.add_argument("--cli", help="lqst executable; runs the pipeline")
    ap.add_argument("--check", nargs=2, metavar=("SCHEMA", "FILE"))
    args = ap.parse_args()
    if args.cli:
        args.cli = os.path.abspath(args.cli)
    if args.check:
        return 0 if check(args.schemas, *args.check) else 1
    if not args.cli:
        ap.error("need --cli or --check")
    return 0 if pipeline(args.cli, args.schemas) else 1


if __name__ == "__main__":
    sys.exit(main())
