"""Run experiments, write result files and keep the run manifest."""

from __future__ import annotations

import hashlib
import os
import time
from datetime import datetime, timezone
from typing import Optional, Tuple

from .. import __version__
from .config import SCHEMA_VERSION, ExperimentConfig
from .experiments import FAIL, INCONCLUSIVE, REGISTRY, ExperimentResult, derived_seed
from .serialize import dumps, loads

EXIT_PASS, EXIT_ERROR, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2, 3
MANIFEST = "manifest.json"


def _sha256(path: str) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def load_manifest(out_dir: str) -> dict:
    path = os.path.join(out_dir, MANIFEST)
    if os.path.exists(path):
        with open(path) as fh:
            return loads(fh.read())
    return {"schema": SCHEMA_VERSION, "runs": {}}


def write_text(path: str, text: str) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def status_code(res: ExperimentResult) -> int:
    return {FAIL: EXIT_FAIL, INCONCLUSIVE: EXIT_INCONCLUSIVE}.get(res.status, EXIT_PASS)


def run_experiment(cfg: ExperimentConfig) -> Tuple[ExperimentResult, int]:
    """Run one experiment, write ``<name>.json``, its CSV tables and update the manifest."""
    fn = REGISTRY[cfg.experiment]
    os.makedirs(cfg.out, exist_ok=True)
    started = _now()
    t0 = time.perf_counter()
    res = fn(cfg, derived_seed(cfg.seed, cfg.experiment))
    elapsed = time.perf_counter() - t0
    files = {}
    body = res.to_dict()
    body["config"] = cfg.semantic()
    body["config_hash"] = cfg.hash()
    main = f"{cfg.experiment}.json"
    write_text(os.path.join(cfg.out, main), dumps(body) + "\n")
    files[main] = None
    for name, text in sorted(res.tables.items()):
        write_text(os.path.join(cfg.out, name), text)
        files[name] = None
    code = status_code(res)
    man = load_manifest(cfg.out)
    man["runs"][cfg.experiment] = {
        "config": cfg.to_dict(),
        "config_hash": cfg.hash(),
        "code_version": __version__,
        "started": started,
        "finished": _now(),
        "runtime_seconds": round(elapsed, 3),
        "status": res.status,
        "exit_code": code,
        "files": [{"path": f, "sha256": _sha256(os.path.join(cfg.out, f))} for f in sorted(files)],
    }
    write_text(os.path.join(cfg.out, MANIFEST), dumps(man) + "\n")
    return res, code


def report(manifest_path: str, out_dir: Optional[str] = None) -> Tuple[str, str, list]:
    """Text and CSV digest of every check listed in a manifest; returns warnings too."""
    from .serialize import csv_text

    warnings = []
    with open(manifest_path) as fh:
        man = loads(fh.read())
    base = os.path.dirname(os.path.abspath(manifest_path))
    lines, rows = [], []
    for name in sorted(man.get("runs", {})):
        run = man["runs"][name]
        path = os.path.join(base, f"{name}.json")
        if not os.path.exists(path):
            warnings.append(f"missing result file for {name}: {name}.json")
            continue
        for f in run.get("files", []):
            fp = os.path.join(base, f["path"])
            if not os.path.exists(fp):
                warnings.append(f"missing file listed for {name}: {f['path']}")
            elif _sha256(fp) != f["sha256"]:
                warnings.append(f"checksum mismatch for {f['path']}")
        with open(path) as fh:
            body = loads(fh.read())
        lines.append(f"== {name}: {body.get('status', '?')} (config {run.get('config_hash', '')[:12]})")
        for c in body.get("checks", []):
            lines.append(f"  [{c['verdict']:>12}] {c['name']}")
            lines.append(f"      target ({c['anchor']}): {_short(c['target'])}")
            lines.append(f"      measured: {_short(c['measured'])}   tolerance: {_short(c['tolerance'])}")
            rows.append((name, c["name"], c["anchor"], _short(c["target"]), _short(c["measured"]),
                         _short(c["tolerance"]), c["verdict"]))
        rep = body.get("data", {}).get("report")
        if isinstance(rep, dict) and "gaps" in rep:
            lines.append("      eps            normalized              target                  gap")
            for e, v, g in zip(rep["eps"], rep["values"], rep["gaps"]):
                lines.append(f"      {e:<14.6g} {_short(v):<23} {_short(rep['target']):<23} {_short(g)}")
    for w in warnings:
        lines.append(f"WARNING: {w}")
    text = "\n".join(lines) + ("\n" if lines else "")
    table = csv_text(["experiment", "check", "anchor", "target", "measured", "tolerance", "verdict"], rows)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
        write_text(os.path.join(out_dir, "report.txt"), text)
        write_text(os.path.join(out_dir, "report.csv"), table)
    return text, table, warnings


def _short(v) -> str:
    if isinstance(v, float):
        return "%.10g" % v
    if isinstance(v, list):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return "" if v is None else str(v)
