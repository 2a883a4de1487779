#!/usr/bin/env python3
# Run every subcommand on the bundled inputs and validate stdout against schemas/.
# Also checks that repeated runs are byte-identical and exit codes match.
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import jsonschema

binary, root = Path(sys.argv[1]), Path(sys.argv[2])
schemas = {p.stem: json.loads(p.read_text()) for p in (root / "schemas").glob("*.json")}
M = root / "models"
failures = []


def run(args):
    return subprocess.run([str(binary), *args], capture_output=True, text=True, timeout=300)


def case(schema, args, code):
    first = run(args)
    name = " ".join(args)
    if first.returncode != code:
        failures.append(f"{name}: exit {first.returncode}, expected {code}\n{first.stderr}")
        return None
    try:
        doc = json.loads(first.stdout)
        jsonschema.validate(doc, schemas[schema])
    except (ValueError, jsonschema.ValidationError) as e:
        failures.append(f"{name}: {str(e)[:400]}")
        return None
    if run(args).stdout != first.stdout:
        failures.append(f"{name}: output differs between runs")
    print(f"ok  {schema:22s} {name}")
    return doc


for model in sorted(M.glob("*.json")):
    try:
        jsonschema.validate(json.loads(model.read_text()), schemas["model"])
        print(f"ok  model                  {model.name}")
    except jsonschema.ValidationError as e:
        failures.append(f"{model.name}: {e.message}")

case("analyze", ["analyze", "--model", str(M / "lattice2d.json"), "--alpha-max", "2"], 0)
case("analyze", ["analyze", "--model", str(M / "clusters_exp.json"), "--alpha-max", "4"], 2)
case("analyze", ["analyze", "--model", str(M / "clusters_exp.json"), "--model", str(M / "clusters_exp.json"),
                 "--alpha", "1", "--alpha-max", "2"], 2)
case("bm", ["bm", "--model", str(M / "lattice_defects_ring2d.json"), "--alpha-max", "3"], 0)
case("rays", ["rays", "--model", str(M / "lattice2d.json"), "--alpha", "1"], 0)
case("rays", ["rays", "--model", str(M / "wedge3.json"), "--alpha", "1"], 0)
case("rays", ["rays", "--model", str(M / "clusters_exp.json"), "--alpha", "2"], 2)

with tempfile.TemporaryDirectory() as tmp:
    w = Path(tmp) / "w.json"
    r = run(["rays", "--model", str(M / "lattice_defects_ring2d.json"), "--alpha", "2", "--out", str(w)])
    if r.returncode != 0:
        failures.append("rays --out: exit %d" % r.returncode)
    else:
        case("verify", ["verify", "--model", str(M / "lattice_defects_ring2d.json"), "--witness", str(w)], 0)
case("verify", ["verify", "--model", str(M / "lattice1d.json"), "--witness", str(M / "witnesses" / "bad_lattice1d.json")], 2)

case("net", ["net", "--domain", str(M / "domains" / "box10.json"), "--r", "1"], 0)
case("net", ["net", "--domain", str(M / "domains" / "annulus.json"), "--r", "1"], 0)
case("net", ["net", "--domain", str(M / "domains" / "two_box.json"), "--r", "1"], 2)
case("transfer", ["transfer", "--model", str(M / "clusters_exp.json"), "--model", str(M / "clusters_exp.json"),
                  "--alpha", "1"], 0)
case("operator_certificate", ["mvn", "--k", "1,2,3,4"], 0)
case("operator_certificate", ["mvn", "--n-max", "12", "--k-max", "4", "--seed", "7"], 0)
case("operator_certificate", ["wannier", "--space", str(M / "spaces" / "blocks.json")], 0)
case("operator_certificate", ["wannier", "--space", str(M / "spaces" / "overlap_frame.json"), "--frame",
                              "--lambda-min", "0.1"], 0)
case("operator_certificate", ["wannier", "--space", str(M / "spaces" / "shared_cell.json")], 2)

bad = run(["analyze", "--model", str(M / "does_not_exist.json")])
try:
    err = json.loads(bad.stderr)
    assert bad.returncode == 1 and set(err["error"]) == {"code", "message"}
    print("ok  error                  missing model")
except (ValueError, KeyError, AssertionError):
    failures.append(f"missing model: exit {bad.returncode}, stderr {bad.stderr[:200]}")

for f in failures:
    print("FAIL", f)
sys.exit(1 if failures else 0)
