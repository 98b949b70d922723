"""Cross-check the certifier against exhaustive enumeration on random instances.

    python3 scripts/soundness_sweep.py --instances 1000 --seed 0
"""

import argparse
import sys
import time

from biascert.crosscheck import sweep


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--instances", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--cap", type=int, default=20_000)
    args = ap.parse_args(argv)
    t = time.time()
    done, robust, skipped, failures = sweep(args.instances, args.seed, args.cap)
    print(f"instances={done} certified={robust} resampled={skipped} failures={len(failures)} seconds={time.time() - t:.1f}")
    for inst, bad in failures[:5]:
        print(inst.data.rows, inst.model, inst.x, inst.depth)
        for b in bad[:5]:
            print("   ", b)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
