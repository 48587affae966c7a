"""How forgiving is the compensator length?

For each literature data set, reports the optimal length, the stock-slab
rounding, and the spectral coherence left when the length is off by a few mm.
"""
import numpy as np

from twocolor import config, phase, qpm, sim
from twocolor.materials import default_registry

S, I = config.SIGNAL_WAVELENGTH_NM, config.IDLER_WAVELENGTH_NM
pump = phase.pump_wavelength(S, I)
T = qpm.temperature_for_signal(qpm.default_config(pump_wavelength=pump), S)
first = phase.first_pass_stack(T)
reg = default_registry()

for src in reg.source_labels("YVO4"):
    try:
        models = phase.compensator_models(src)
    except phase.CompensationError:
        print(f"{src:9} point values only")
        continue
    d = phase.design_compensation(S, I, source=src)
    slabs = phase.round_to_slabs(d.optimal_length)
    print(f"{src:9} L={d.optimal_length:7.2f} mm  slabs {'+'.join(f'{s:g}' for s in slabs.slabs)} = {slabs.total:g} mm")
    for dL in (-10, -5, -2, 0, 2, 5, 10):
        st = first + phase.OpticalStack((phase.compensator_element(d.optimal_length + dL, src),))
        g = sim.damping_from_profile(st, S, pump)
        print(f"          dL={dL:+4d} mm  gamma={g:.6f}  F_max={(1 + g) / 2:.6f}")
