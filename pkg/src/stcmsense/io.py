"""Deterministic CSV emission and the result manifest.

Floats are written with ``repr`` (shortest round-trip form), so identical
inputs produce byte-identical files on every platform.  Masked cells carry
an empty value field plus an explicit boolean mask column; sentinel numbers
are never used.  The manifest is written only after every data file exists.
"""

from __future__ import annotations

import datetime
import hashlib
import json
import os


def format_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_cell(v) for v in row) + "\n")


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, experiment: str, cfg_hash: str, version: str, outputs) -> str:
    """JSON sidecar with checksums of every produced file."""
    manifest = {
        "experiment": experiment,
        "config_sha256": cfg_hash,
        "code_version": version,
        "written_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "outputs": {
            os.path.basename(p): sha256_file(p) for p in outputs
        },
    }
    path = os.path.join(out_dir, f"{experiment}_manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path
