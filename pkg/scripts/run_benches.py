#!/usr/bin/env python3
"""Run both bundled benches end to end and drop their artifacts under out/.

Equivalent to:
    flycap simulate --config configs/nominal.cfg --out out/nominal
    flycap compare  --config configs/noisy_loadstep.cfg --out out/noisy_loadstep
"""

import sys
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from flycap.cli import main  # noqa: E402

if __name__ == "__main__":
    rc = main(["simulate",
               "--config", str(REPO / "configs" / "nominal.cfg"),
               "--out", str(REPO / "out" / "nominal")])
    rc |= main(["compare",
                "--config", str(REPO / "configs" / "noisy_loadstep.cfg"),
                "--out", str(REPO / "out" / "noisy_loadstep")])
    sys.exit(rc)
