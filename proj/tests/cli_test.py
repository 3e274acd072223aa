"""End-to-end checks of the command line tool: exit codes, determinism and the results schema."""

import filecmp
import json
import pathlib
import subprocess
import sys
import tempfile

import jsonschema

exe, schema_path, config_dir = sys.argv[1:4]
schema = json.loads(pathlib.Path(schema_path).read_text())
failures = []


def run(*args):
    return subprocess.run([exe, *map(str, args)], capture_output=True, text=True)


def expect(name, ok, detail=""):
    print(("ok    " if ok else "FAIL  ") + name + (f"  ({detail})" if detail and not ok else ""))
    if not ok:
        failures.append(name)


with tempfile.TemporaryDirectory() as tmp:
    tmp = pathlib.Path(tmp)
    smoke = pathlib.Path(config_dir) / "smoke.json"

    for cfg in sorted(pathlib.Path(config_dir).glob("*.json")):
        expect(f"validate {cfg.name}", run("validate", cfg).returncode == 0)

    bad = tmp / "bad.json"
    bad.write_text(json.dumps({"experiment": "moments", "model": {"kappa": -1}}))
    r = run("validate", bad)
    diags = json.loads(r.stdout)["diagnostics"]
    expect("validate rejects negative kappa", r.returncode == 1 and diags[0]["field"] == "model.kappa", r.stdout)

    typo = tmp / "typo.json"
    typo.write_text(json.dumps({"experiment": "moments", "ensemble": 3}))
    expect("unknown key is an error", run("validate", typo).returncode == 1)
    expect("run with invalid config exits 1", run("run", bad, "--output", tmp / "x").returncode == 1)

    warn = tmp / "warn.json"
    warn.write_text(json.dumps({"experiment": "ou_regime", "model": {"kappa": 0.5}}))
    r = run("validate", warn)
    expect("regime mismatch is a warning", r.returncode == 0 and "warning" in r.stdout, r.stdout)

    a, b, c = tmp / "a", tmp / "b", tmp / "c"
    ra, rb = run("run", smoke, "--output", a), run("run", smoke, "--output", b, "--workers", "2")
    expect("run exits 0", ra.returncode == 0 and rb.returncode == 0, ra.stderr + rb.stderr)
    expect("results are identical across runs and worker counts",
           filecmp.cmp(a / "results.json", b / "results.json", shallow=False))
    expect("csv outputs are identical", filecmp.cmp(a / "moments.csv", b / "moments.csv", shallow=False))
    results = json.loads((a / "results.json").read_text())
    try:
        jsonschema.validate(results, schema)
        expect("results.json matches the schema", True)
    except jsonschema.ValidationError as e:
        expect("results.json matches the schema", False, e.message)
    prov = json.loads((a / "provenance.json").read_text())
    expect("provenance records seed and config", prov["seed"] == 3 and prov["config"]["experiment"] == "moments")

    run("run", smoke, "--output", c, "--seed", "4")
    expect("seed override changes results",
           json.loads((c / "results.json").read_text())["reports"] != results["reports"])
    expect("seed override is recorded", json.loads((c / "provenance.json").read_text())["seed"] == 4)

    expect("report on a passing run exits 0", run("report", a).returncode == 0)
    expect("report on a missing directory exits 2", run("report", tmp / "missing").returncode == 2)

    failing = dict(results)
    failing["reports"] = [dict(results["reports"][0], **{"pass": False})]
    failing["status"] = "fail"
    (tmp / "f").mkdir()
    (tmp / "f" / "results.json").write_text(json.dumps(failing))
    expect("report on a failed criterion exits 3", run("report", tmp / "f").returncode == 3)

    partial = dict(results, final=False, status="error", error="interrupted")
    (tmp / "p").mkdir()
    (tmp / "p" / "results.json").write_text(json.dumps(partial))
    jsonschema.validate(partial, schema)
    expect("report on a non-final run exits 2", run("report", tmp / "p").returncode == 2)

    expect("unknown subcommand exits 1", run("frobnicate").returncode == 1)
    expect("--version exits 0", run("--version").returncode == 0)

sys.exit(1 if failures else 0)
