"""Scan generator noise and jitter over a seed ensemble.

For each setting, report how often the uniform-style full regression separates
on the training half, its mean McFadden R², the testing accuracies of the full
regression and the two-cue tree, mean two-cue #Frug, the share of seeds where
regression >= tree >= 0.80 with #Frug <= 2, and the uniform-minus-case-by-case
regression accuracy gap.

    python3 scripts/calibrate.py --noise 0.75 1.0 1.5 --jitter 0.5 --seeds 10
"""

from __future__ import annotations

import argparse
import statistics
import warnings

from frugal_judge.evaluation import compare, role_split
from frugal_judge.logistic import SeparationWarning, vif, DesignMatrix
from frugal_judge.metrics import Split
from frugal_judge.synthetic import CaseByCase, SynthConfig, Uniform, achieved_marginals, generate


def run(noise: float, jitter: float, seeds: range, correlation: float) -> dict:
    rows = []
    for seed in seeds:
        out = {}
        for name, style in (("uniform", Uniform(noise_sd=noise)),
                            ("case", CaseByCase(weight_jitter_sd=jitter, noise_sd=noise))):
            ds = generate(SynthConfig(style=style, seed=seed, latent_correlation=correlation))
            plan = role_split(ds)
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                comp = compare(ds, plan, depth_max=2)
            out[name] = comp
            if name == "uniform":
                out["separated"] = any(issubclass(w.category, SeparationWarning) for w in caught)
                out["vif"] = vif(DesignMatrix.from_dataset(ds.subset(plan.train_indices)))
                out["top6"] = achieved_marginals(ds)["referees"]["top6_share"]
        u = out["uniform"]
        reg = u.record("All cues", Split.TESTING)
        tree = u.record("2 cues", Split.TESTING)
        rows.append({
            "separated": out["separated"],
            "mcfadden": u.full_model.diagnostics.pseudo_r2["mcfadden"],
            "reg": reg.acc,
            "tree": tree.acc,
            "frug": tree.frug_abs,
            "pattern": reg.acc >= tree.acc >= 0.80 and tree.frug_abs <= 2.0,
            "gap": reg.acc - out["case"].record("All cues", Split.TESTING).acc,
            "vif_max": max(out["vif"].values()),
            "top6": out["top6"],
        })
    mean = lambda k: statistics.fmean(r[k] for r in rows)  # noqa: E731
    return {
        "noise": noise, "jitter": jitter,
        "separated": sum(r["separated"] for r in rows),
        "mcfadden": mean("mcfadden"), "reg": mean("reg"), "tree": mean("tree"), "frug": mean("frug"),
        "pattern": sum(r["pattern"] for r in rows), "gap_min": min(r["gap"] for r in rows),
        "vif_max": mean("vif_max"), "top6": mean("top6"), "n": len(rows),
    }


def main() -> None:
    p = argparse.ArgumentParser()
    p.add_argument("--noise", type=float, nargs="+", default=[0.75, 1.0, 1.25, 1.5, 2.0])
    p.add_argument("--jitter", type=float, nargs="+", default=[0.5])
    p.add_argument("--correlation", type=float, default=0.75)
    p.add_argument("--seeds", type=int, default=10)
    a = p.parse_args()
    print("noise jitter  sep  McF   reg   tree  #Frug pattern gap_min vif_max top6")
    for noise in a.noise:
        for jitter in a.jitter:
            r = run(noise, jitter, range(a.seeds), a.correlation)
            print(f"{r['noise']:5.2f} {r['jitter']:6.2f} {r['separated']:4d} {r['mcfadden']:.2f} "
                  f"{r['reg']:.3f} {r['tree']:.3f} {r['frug']:5.2f} {r['pattern']:4d}/{r['n']} "
                  f"{r['gap_min']:7.3f} {r['vif_max']:7.2f} {r['top6']:.2f}")


if __name__ == "__main__":
    main()
