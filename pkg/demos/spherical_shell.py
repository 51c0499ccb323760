"""
A spherically symmetric shell
=============================

A charged shell with a symmetric spread of momenta expands under its
own radial field.  Angular momentum of every marker is conserved and the
field outside the shell is the Coulomb field of the enclosed charge.
"""
import warnings

import numpy as np

from hypervlasov import runner
from hypervlasov.scenarios import load_config

cfg = load_config(None, ["scenario=spherical_shell"])
with warnings.catch_warnings():
    warnings.simplefilter("ignore")
    result = runner.run_config(cfg)

recs = result.records
print(f"{len(result.solver.markers)} markers, R0 = {result.R0:.4f}")
for r in recs[:: len(recs) // 5]:
    print(f"tau={r.tau:5.2f}  N0={r.N0:.12f}  M0={r.M0:.8f}  support={r.support_radius:.4f}")
field = result.history.fields[-1]
r = np.array([30.0, 60.0])
print("E at", r, field.E_at(r), "Coulomb", field.total_charge / (4 * np.pi * r * r))
for name, c in result.summary["checks"].items():
    print(f"{'PASS' if c['pass'] else 'FAIL'}  {name}: {c['value']}")
