#!/usr/bin/env python3
"""Regenerates tests/fixtures: the first 200 lines of the sample day, plus the
same file as a gzip stream and as stored and deflated zip archives (made with
the standard library, independently of the project's own reader)."""

import gzip
import shutil
import zipfile
from pathlib import Path

root = Path(__file__).resolve().parent.parent
fixtures = root / "tests" / "fixtures"
fixtures.mkdir(parents=True, exist_ok=True)
small = fixtures / "small.csv"
with open(root / "data" / "sample" / "aisdk-2024-03-01.csv") as src:
    small.write_text("".join(line for _, line in zip(range(200), src)))

with zipfile.ZipFile(fixtures / "small_deflate.zip", "w", zipfile.ZIP_DEFLATED) as z:
    z.writestr("notes/README", "name,value\nalpha,1\nbeta,2\n")
    z.write(small, "aisdk-2024-03-01.csv")
with zipfile.ZipFile(fixtures / "small_stored.zip", "w", zipfile.ZIP_STORED) as z:
    z.write(small, "aisdk-2024-03-01.csv")
with open(small, "rb") as f, gzip.open(fixtures / "small.csv.gz", "wb") as g:
    shutil.copyfileobj(f, g)
