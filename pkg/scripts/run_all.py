"""Run every study from the JSON configs in scripts/configs/ through the CLI.

    python3 scripts/run_all.py [--out results/] [--only converge_time ...]
"""

import argparse
import sys
import time
from pathlib import Path

from quenchsplit.cli import cli_main

HERE = Path(__file__).resolve().parent
STUDIES = {
    "run_sqrt2": "run",
    "converge_time": "converge-time",
    "converge_space_uniform": "converge-space",
    "converge_space_graded": "converge-space",
    "critical_a": "critical-a",
    "validate": "validate",
}


def main() -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--only", nargs="*", choices=sorted(STUDIES))
    args = p.parse_args()
    worst = 0
    for name in args.only or STUDIES:
        mode = STUDIES[name]
        argv = [mode, "--out", str(args.out / name)]
        cfg = HERE / "configs" / f"{name}.json"
        if cfg.exists():
            argv += ["--config", str(cfg)]
        t0 = time.perf_counter()
        code = cli_main(argv)
        print(f"{name:24s} exit {code}  {time.perf_counter() - t0:7.1f} s")
        worst = max(worst, code)
    return worst


if __name__ == "__main__":
    sys.exit(main())
