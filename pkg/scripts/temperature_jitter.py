"""Fidelity against compensator temperature spread.

Only the part of the compensator outside the oven is assumed to fluctuate.
Prints the temperature spread that alone brings the fidelity down to the
target value.
"""
import numpy as np

from twocolor import config, phase, sim

slab = phase.compensator_element(1.0)
k = sim.phase_sensitivity_per_mm(slab, config.SIGNAL_WAVELENGTH_NM, config.IDLER_WAVELENGTH_NM)
print(f"phase sensitivity {k:.4f} rad/K per mm")
for sT in np.arange(0.0, 0.61, 0.05):
    j = sim.JitterModel(temperature_sigma=float(sT), phase_sensitivity=k)
    g = sim.damping_from_jitter(j)
    print(f"sigma_T={sT:.2f} K  sigma_phi={j.phase_sigma:.3f} rad  F={(1 + g) / 2:.4f}")
j = sim.jitter_for_fidelity(config.TARGET_FIDELITY, k)
print(f"F={config.TARGET_FIDELITY} needs sigma_T={j.temperature_sigma:.3f} K over {j.free_length:g} mm")
