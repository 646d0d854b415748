"""Reproduce a slice of the published guessing-probability minima.

The entropy certificate of a walk-based generator is set by the walk
duration (and coin angles) the adversary would pick, so the number that
matters for a (kappa, P) cell is the minimum over the sweep grid of the
largest outcome probability.  Here we sweep three cells and compare
against the stored reference values.
"""

from qwrng.experiments import reference_value
from qwrng.maxprob import SweepGrid, g_function
from qwrng.walk import MeasurementMode

ALL = MeasurementMode.ALL
MEM = MeasurementMode.MEMORY_ONLY

hadamard = SweepGrid(t_min=1, t_max=2000)
general = SweepGrid(t_min=1, t_max=1000, R=8)

runs = [
    ("hadamard", 3, 1, ALL, hadamard),
    ("hadamard", 3, 2, ALL, hadamard),
    ("general", 3, 1, MEM, general),
]

print(f"{'coin':<10}{'kappa':>6}{'P':>4}{'mode':>10}{'minimum':>12}{'reference':>12}")
for kind, P, kappa, mode, grid in runs:
    res = g_function(P, kappa, mode, grid)
    ref = reference_value(kind, mode, kappa, P)
    print(f"{kind:<10}{kappa:>6}{P:>4}{mode.value:>10}{res.value:>12.4f}{ref:>12.4f}")
    extra = "" if res.at_theta is None else f", theta={res.at_theta:.3f}, phi={res.at_phi:.3f}"
    print(f"{'':>10}achieved at t={res.at_t}, flip={res.at_flip.name}{extra}")

print("\nThe generalized sweep sits at or below the Hadamard value: a wider")
print("family can only help the adversary, never the user.")
