"""Max-elevation statistics over a seeded ensemble of random waves.

Every seed draws its own random elevation profile; each run records the
spatial maximum of |eta| every 0.1 time units inside a post-transient window.
Because the plain scheme bleeds energy, its waves flatten and the resulting
distribution of maxima sits much lower than the conserving scheme's.

Uses the batched ensemble engine (all seeds advance as one stacked state),
so twenty 30-unit runs take seconds.
"""

import numpy as np

from rons.config import RunConfig
from rons.runner import run_experiment

SEEDS = tuple(range(20))
CELLS = 192
HORIZON = 30.0
WINDOW = (10.0, 30.0)


def ensemble(scheme, enforce):
    config = RunConfig(
        model="swe", scheme=scheme, seeds=SEEDS, cells=CELLS, length=10.0,
        horizon=HORIZON, cadence=1.0, swe_ic="random", snapshot_times=(),
        enforce=enforce,
    ).validate()
    config.sample_window = WINDOW
    config.sample_cadence = 0.1
    config.bins = 12
    return run_experiment(config)


print(f"running {len(SEEDS)}-seed ensembles at {CELLS} cells ...")
plain = ensemble("fv", ())
conserving = ensemble("fv-rons", ("total_elevation", "total_velocity", "total_energy"))

print(f"\nensemble mean of max|eta| in t = {WINDOW}:")
print(f"  plain       : {plain.metrics['max_elevation_mean']:.4e}")
print(f"  conserving  : {conserving.metrics['max_elevation_mean']:.4e}")
print(f"  ratio       : "
      f"{conserving.metrics['max_elevation_mean'] / plain.metrics['max_elevation_mean']:.1f}x")

print("\nhistogram of the conserving ensemble (density integrates to 1):")
edges, density = conserving.histogram
for lo, hi, d in zip(edges[:-1], edges[1:], density):
    bar = "#" * int(round(d * (hi - lo) * 200))
    print(f"  [{lo:.2e}, {hi:.2e}) {bar}")

# At the protocol step size the explicit stepper still leaks a little energy
# through the constrained run (the leak shrinks as dt^3); the plain scheme
# loses essentially all of it.
drifts = [r["total_energy_drift"] for r in conserving.seed_records]
plain_drifts = [r["total_energy_drift"] for r in plain.seed_records]
print("\nper-seed relative energy change at protocol step sizes:")
print(f"  conserving : median {np.median(drifts):.2e}")
print(f"  plain      : median {np.median(plain_drifts):.2e}")
