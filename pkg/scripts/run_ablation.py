"""Variant matrix on the synthetic presets: held-out metrics as mean +- std over seeds.

    python3 scripts/run_ablation.py --preset uncertainty-only --variants uSASTd SASTd
    python3 scripts/run_ablation.py --out results/ablation.json
"""

from __future__ import annotations

import argparse
import json
import sys

from usast import synth
from usast.core import VARIANTS, VariantConfig
from usast.metrics import mean_std_rows
from usast.pipeline import run_experiment


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--preset", nargs="+", choices=sorted(synth.PRESETS), default=sorted(synth.PRESETS))
    p.add_argument("--variants", nargs="+", choices=list(VARIANTS), default=list(VARIANTS))
    p.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--data-seed", type=int, default=0)
    p.add_argument("--n-trees", type=int, default=100)
    p.add_argument("--n-jobs", type=int, default=1)
    p.add_argument("--out", help="optional JSON file for the raw per-run numbers")
    args = p.parse_args(argv)

    table = []
    print(f"{'preset':<18}{'variant':<10}{'accuracy':>18}{'f1':>18}{'pool':>8}")
    for preset in args.preset:
        ds = synth.generate(synth.PRESETS[preset](seed=args.data_seed))
        for variant in args.variants:
            runs, _ = run_experiment(ds, VariantConfig.from_variant(variant), seeds=args.seeds,
                                     classifier_params={"n_trees": args.n_trees}, n_jobs=args.n_jobs)
            agg = mean_std_rows(runs, keys=("accuracy", "f1", "pool_size"))
            (am, asd), (fm, fsd), (pm, _) = agg["accuracy"], agg["f1"], agg["pool_size"]
            print(f"{preset:<18}{variant:<10}{am:>11.3f} ± {asd:.3f}{fm:>11.3f} ± {fsd:.3f}{pm:>8.0f}")
            table.append({"preset": preset, "variant": variant,
                          "runs": [{k: v for k, v in r.items() if k != "reports"} for r in runs]})
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(table, fh, indent=1)
    return 0


if __name__ == "__main__":
    sys.exit(main())
