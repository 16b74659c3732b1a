"""Fetch the small benchmark KGs that PyKEEN bundles in its wheel.

Nations, Kinships and UMLS ship as TSV split files inside the ``pykeen``
wheel on PyPI, so they can be obtained with nothing but pip.  Each dataset
is unpacked to ``<dest>/<name>/{train,valid,test}.txt`` together with a
``manifest.ini`` that ``kgprofile analyze --input`` accepts.

    python scripts/fetch_datasets.py [dest]      # default: ./data
"""

import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

BUNDLED = {"nations": "Nations", "kinships": "Kinships", "umls": "UMLS"}
SPLITS = ("train", "valid", "test")


def main(dest: str = "data") -> None:
    root = Path(dest)
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "pykeen==1.11.1", "--no-deps", "-q", "-d", tmp],
            check=True,
        )
        wheel = next(Path(tmp).glob("pykeen-*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            for key, name in BUNDLED.items():
                out = root / key
                out.mkdir(parents=True, exist_ok=True)
                for split in SPLITS:
                    (out / f"{split}.txt").write_bytes(zf.read(f"pykeen/datasets/{key}/{split}.txt"))
                lines = ["[dataset]", f"name = {name}", "format = tsv"]
                lines += [f"{split} = {split}.txt" for split in SPLITS]
                (out / "manifest.ini").write_text("\n".join(lines) + "\n")
                print(f"wrote {out}")


if __name__ == "__main__":
    main(*sys.argv[1:])
