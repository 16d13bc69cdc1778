"""
Batch run over the shipped scenarios
====================================

Copies scenarios/ to a scratch directory, runs every file, and prints
the summary table the command line tool would write.
"""

import shutil
import tempfile
from pathlib import Path

from stickyflow.cli import batch

src = Path(__file__).resolve().parent.parent / "scenarios"
with tempfile.TemporaryDirectory() as tmp:
    work = Path(tmp) / "scenarios"
    shutil.copytree(src, work)
    summary, code = batch(work, parallelism=2)
    print(summary)
    print("exit code", code)
    print("written:", sorted(p.name for p in work.glob("symmetric_pair.*")))
