"""Convert the KEEL copies of UCI ``segment`` and ``letter`` into LIBSVM files.

The raw tables ship inside the ``keel_ds`` wheel on PyPI.  Usage::

    pip download --no-deps keel_ds -d /tmp/keel
    python scripts/prepare_keel_data.py /tmp/keel/keel_ds-*.whl data/

Letter labels A..Z are written as 1..26; segment keeps its 1..7 codes.
Features with a value of exactly zero are omitted (sparse LIBSVM convention).
"""
import json
import sys
import zipfile
from pathlib import Path

DATASETS = ("segment", "letter")


def convert(raw: str) -> list[str]:
    lines = []
    for row in raw.splitlines():
        row = row.strip()
        if not row or row.startswith("@"):
            continue
        *feats, label = [tok.strip() for tok in row.split(",")]
        if label.isalpha():
            label = str(ord(label.upper()) - ord("A") + 1)
        pairs = [f"{j}:{v}" for j, v in enumerate(feats, start=1) if float(v) != 0.0]
        lines.append(" ".join([label, *pairs]))
    return lines


def main(wheel: str, out_dir: str) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    registry = {}
    with zipfile.ZipFile(wheel) as zf:
        for name in DATASETS:
            raw = zf.read(f"keel_ds/data/balanced/raw/{name}.dat").decode()
            lines = convert(raw)
            (out / f"{name}.libsvm").write_text("\n".join(lines) + "\n")
            registry[name] = {"path": f"{name}.libsvm", "task": "classification"}
            print(f"{name}: {len(lines)} rows")
    (out / "registry.json").write_text(json.dumps(registry, indent=2, sort_keys=True) + "\n")


if __name__ == "__main__":
    main(*sys.argv[1:3])
