#!/usr/bin/env python3
"""End-to-end run of the eca executable on a synthetic cohort."""
import csv
import filecmp
import json
import subprocess
import sys
import tempfile
from pathlib import Path

try:
    import jsonschema
except ImportError:  # schema check is skipped, the rest still runs
    jsonschema = None

ECA, ROOT = sys.argv[1], Path(sys.argv[2])
failures = []


def check(ok, what):
    print(("ok   " if ok else "FAIL ") + what)
    if not ok:
        failures.append(what)


def run(*args):
    return subprocess.run([ECA, *map(str, args)], capture_output=True, text=True)


with tempfile.TemporaryDirectory() as tmp:
    tmp = Path(tmp)
    cohort, truth = tmp / "cohort.csv", tmp / "truth.json"
    r = run("synth", "--scenario", ROOT / "data/scenario.toml", "--out", cohort, "--truth", truth)
    check(r.returncode == 0 and cohort.exists() and truth.exists(), "synth writes cohort and truth")

    r = run("validate", "--cohort", cohort, "--plan", ROOT / "data/plan.toml")
    check(r.returncode == 0 and "ok:" in r.stdout, "validate accepts the sample plan")

    schema = json.loads((ROOT / "schema/runlog.schema.json").read_text())
    outs = []
    for k, extra in enumerate([[], [], ["--workers", "3"]]):
        out = tmp / f"out{k}"
        r = run("analyze", "--cohort", cohort, "--plan", ROOT / "data/plan.toml", "--out", out, "--reps", 200,
                "--dump-reps", tmp / f"reps{k}.csv", "--dump-psmodel", tmp / f"ps{k}.json", *extra)
        check(r.returncode == 0, f"analyze run {k} exits 0 ({r.stderr.strip()})")
        outs.append(out)
        for d in (out, out / "subgroup"):
            for name in ("balance.csv", "effects.csv", "km_curves.csv", "runlog.json"):
                check((d / name).exists(), f"{d.name}/{name} written")
            log = json.loads((d / "runlog.json").read_text())
            if jsonschema:
                try:
                    jsonschema.validate(log, schema)
                    check(True, f"{d.name}/runlog.json validates against the schema")
                except jsonschema.ValidationError as e:
                    check(False, f"{d.name}/runlog.json schema: {e.message}")
    for a in outs[1:]:
        for name in ("balance.csv", "effects.csv", "km_curves.csv", "subgroup/effects.csv"):
            check(filecmp.cmp(outs[0] / name, a / name, shallow=False), f"{name} identical in {a.name}")
    check(filecmp.cmp(tmp / "reps0.csv", tmp / "reps2.csv", shallow=False), "replicates identical across workers")
    check("stage2" in json.loads((tmp / "ps0.json").read_text()), "psmodel dump has both stages")

    rows = list(csv.DictReader(open(outs[0] / "effects.csv")))
    per_estimand = {"cr": 5, "os": 6 + 2 * 2 + 2, "pfs_composite": 6 + 2 + 2, "pfs_hypothetical": 6 + 2}
    check(len(rows) == 2 * sum(per_estimand.values()), f"effects.csv has {len(rows)} rows")

    r = run("analyze", "--cohort", cohort, "--plan", ROOT / "data/plan.toml", "--out", tmp / "frozen", "--reps", 50,
            "--freeze-weights")
    log = json.loads((tmp / "frozen/runlog.json").read_text())
    check(r.returncode == 0 and log["flags"]["freeze_weights"] is True, "--freeze-weights recorded in runlog")
    check(log["overrides"] == ["bootstrap_reps"], "command-line overrides recorded")
    log0 = json.loads((outs[0] / "runlog.json").read_text())
    check(log0["flags"]["freeze_weights"] is False, "default run refits weights")

    bad_plan = tmp / "future.toml"
    bad_plan.write_text((ROOT / "data/plan.toml").read_text().replace("2014-01-01", "2099-01-01"))
    r = run("analyze", "--cohort", cohort, "--plan", bad_plan, "--out", tmp / "bad", "--reps", 20)
    err = json.loads(r.stderr.strip().splitlines()[-1]) if r.stderr.strip() else {}
    check(r.returncode != 0 and err.get("error") == "configuration_error",
          "subgroup without trial patients is a configuration error")

    broken = tmp / "broken.csv"
    broken.write_text(cohort.read_text().replace("TRIAL", "TRAIL", 1))
    r = run("analyze", "--cohort", broken, "--plan", ROOT / "data/plan.toml", "--out", tmp / "bad2")
    err = json.loads(r.stderr.strip()) if r.stderr.strip() else {}
    check(r.returncode != 0 and err.get("error") == "parse_error" and "row 1" in err.get("message", ""),
          "malformed cohort reported with its row")

print(f"{len(failures)} failure(s)")
sys.exit(1 if failures else 0)
