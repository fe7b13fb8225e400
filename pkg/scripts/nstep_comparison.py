"""Score a parameter set 1, 2, and 3 steps ahead on one dataset.

Prints a small table of mean NSS/AUC per step count for both history
handling modes and writes the full reports next to the manifest. Expect
the one-step score to be the best; how fast the advantage decays with n
is the interesting part.

Usage:
    python3 scripts/nstep_comparison.py --manifest data/manifest.json \
        --params fitted.json --outdir reports/
"""

import argparse
from pathlib import Path

from gazeval.dataio import load_manifest, load_params
from gazeval.evaluate import evaluate, write_report
from gazeval.presets import default_cost_profile
from gazeval.dataio import load_profile


def parse_args():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--manifest", type=Path, required=True)
    p.add_argument("--params", type=Path, required=True)
    p.add_argument("--profile", type=Path, help="cost profile JSON (default: packaged)")
    p.add_argument("--outdir", type=Path, required=True)
    p.add_argument("--max-steps", type=int, default=3)
    p.add_argument("--threads", type=int, default=0, help="0 = all cores")
    return p.parse_args()


def main():
    args = parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(args.manifest)
    params = load_params(args.params)
    profile = load_profile(args.profile) if args.profile else default_cost_profile()

    print(f"{'mode':>9} {'n':>2} {'nss':>8} {'auc':>7} {'baseline nss':>13} {'samples':>8}")
    for mode in ("truncate", "rollout"):
        for n in range(1, args.max_steps + 1):
            rep = evaluate(
                manifest, params, profile,
                n=n, mode=mode, model_id=args.params.stem,
                threads=args.threads or None,
            )
            write_report(rep, args.outdir / f"report_{mode}_n{n}.json")
            print(
                f"{mode:>9} {n:>2} {rep.mean_nss:>8.4f} {rep.mean_auc:>7.4f} "
                f"{rep.baseline_nss:>13.4f} {rep.sample_count:>8}"
            )


if __name__ == "__main__":
    main()
