"""Physical defaults for the folded-sandwich source.

Every number the toolkit treats as a property of the reference setup lives
here; modules import these rather than repeating literals.
"""

# pump and target pair
PUMP_WAVELENGTH_NM = 532.0
SIGNAL_WAVELENGTH_NM = 894.3
IDLER_WAVELENGTH_NM = 1313.1

# periodically poled 5% MgO:LN crystal, type-0 grating
CRYSTAL_LENGTH_MM = 40.0
POLING_PERIOD_UM = 7.0
QPM_AXIS = "extraordinary"
OVEN_RANGE_C = (20.0, 160.0)

# Fresnel rhomb: BK7 glass path per pass (not published; calibrated, see README)
RHOMB_LENGTH_MM = 29.0

# YVO4 compensator
COMPENSATOR_SOURCE = "shi"
COMPENSATOR_LENGTH_MM = 153.0           # length used in the experiment
COMPENSATOR_TEMPERATURE_C = 20.0
STABILIZED_SLAB_MM = 30.0               # slab inside the temperature-controlled oven
YVO4_EXPANSION_PER_K = 4.43e-6          # a-axis thermal expansion
SLAB_STOCK = {20.0: 7, 10.0: 1, 2.0: 1, 1.0: 1}   # slab length (mm): count

# pair source and detection
PAIR_RATE_MCPS_PER_MW = 5.8
LINEWIDTH_GHZ = 560.0
PUMP_POWER_MW = 1.0
DETECTION_EFFICIENCY = 1e-4
INTEGRATION_TIME_S = 1.0
ACCIDENTAL_RATE_CPS = 0.0

# measured fidelity used to anchor the temperature-jitter default
TARGET_FIDELITY = 0.753
