"""
Free streaming on hyperboloids
==============================

Without fields the markers move on straight lines.  The weight sum is the
conserved mass, the cloud never leaves ``sqrt(1 + x**2) <= R0 + tau / 2``
and the energy stays fixed.
"""
import warnings

import numpy as np

from hypervlasov import runner
from hypervlasov.scenarios import load_config

cfg = load_config(None, ["scenario=free_stream", "tau_end=20"])
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    result = runner.run_config(cfg)

recs = result.records
M0 = np.array([r.M0 for r in recs])
print(f"R0 = {result.R0:.6f}, {len(recs)} snapshots")
print(f"mass drift   {max(abs(r.N0 - recs[0].N0) for r in recs):.3e}")
print(f"energy drift {np.max(np.abs(M0 - M0[0])) / M0[0]:.3e}")
for r in recs[:: len(recs) // 5]:
    print(f"tau={r.tau:5.1f}  support {r.support_radius:.5f} <= {r.support_bound:.5f}")
for name, c in result.summary["checks"].items():
    print(f"{'PASS' if c['pass'] else 'FAIL'}  {name}")
