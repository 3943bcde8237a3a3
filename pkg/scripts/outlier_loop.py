"""Show the calibration loop pulling injected outliers into a second round."""

import argparse

from phasepat.calibrate import calibrate
from phasepat.interpret import Motion
from phasepat.synth import GeneratorSpec, generate, inject_outliers


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--per-group", type=int, default=223)
    ap.add_argument("--outliers", type=int, default=5)
    args = ap.parse_args()

    clean, _ = generate([
        GeneratorSpec(Motion.CATCH_UP, count=args.per_group, seed=11),
        GeneratorSpec(Motion.KEEP_AWAY, count=args.per_group, seed=12),
    ])
    lib, injected = inject_outliers(clean, args.outliers)
    report = calibrate(lib)

    for r in report.rounds:
        eps = "" if r.epsilon is None else " eps=" + ",".join(f"{e:.3g}" for e in r.epsilon)
        print(f"round {r.index}: pool {len(r.clustering.assignment)}, k={r.clustering.k}, "
              f"df={r.clustering.inter_cluster_df:.4g}, audited={r.dsi_evaluated}{eps}")
        if r.re_extracted:
            extra = sorted(set(r.re_extracted) - set(injected))
            print(f"  re-extracted {len(r.re_extracted)} (non-injected: {extra})")
        if r.importance is not None:
            print("  importance " + ", ".join(f"{s:.3f}" for s in r.importance.scores))
    print(f"patterns {len(report.patterns)}, unresolved {report.unresolved}, "
          f"conservation violations {report.conservation_violations(lib.ids)}")


if __name__ == "__main__":
    main()
