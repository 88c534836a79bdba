# main.py

import logging
import os
import sys
from pathlib import Path

project_root = Path(__file__).resolve().parent
src_dir = project_root / "src"
sys.path.insert(0, str(src_dir))

from kato_scat.cli.runner import run

if __name__ == "__main__":
    # stdout carries the JSON report, so log lines go to stderr
    logging.basicConfig(
        level=os.getenv("KATO_SCAT_LOG_LEVEL", "INFO").upper(),
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    sys.exit(run())
