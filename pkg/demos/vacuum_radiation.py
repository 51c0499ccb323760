"""
Radiation through empty space
=============================

An incoming pulse enters from the left through past null infinity.  With no
matter, the energy on the slice is exactly the energy that has come in.
"""
import warnings

import numpy as np

from hypervlasov import runner
from hypervlasov.scenarios import load_config

cfg = load_config(None, ["scenario=vacuum_radiation", "wave_ramp=1", "wave_duration=4", "tau_end=8"])
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    result = runner.run_config(cfg)

for r in result.records[::10]:
    print(f"tau={r.tau:4.1f}  M0={r.M0:.10f}  inflow={r.inflow_energy:.10f}  diff={r.M0 - r.inflow_energy:+.1e}")

# the pulse is a unit-speed shift in z; sample it on the final slice
f = result.history.fields[-1]
x = np.linspace(-6, 6, 13)
print("x      phi")
for xi, v in zip(x, f.phi_at(x)):
    print(f"{xi:5.1f}  {v:.6f}")
