"""
Hyperboloidal slices and the straightened null coordinates
==========================================================

Points on a slice are labelled by ``x``; the compactified radius is
``hat(x) = x / sqrt(1 + x**2)``.  Right-moving light rays are straight lines
in ``z = g_plus_inv(x)``, left-moving ones in ``zeta = g_minus_inv(x)``.
"""
import numpy as np

from hypervlasov.geometry import (
    classify_region,
    g_minus_inv,
    g_plus,
    g_plus_inv,
    hat,
    in_vacuum,
)

x = np.array([-10.0, -1.0, 0.0, 1.0, 10.0])
print("x        hat(x)     z          zeta       z*zeta")
for xi, h, z, zeta in zip(x, hat(x), g_plus_inv(x), g_minus_inv(x)):
    print(f"{xi:7.2f}  {h:9.6f}  {z:9.5f}  {zeta:9.5f}  {z * zeta:.15f}")

# a right-moving ray leaving x = 2 at tau = 0 is a unit shift in z
z0 = g_plus_inv(2.0)
for tau in (0.0, 1.0, 5.0):
    print(f"tau={tau:3.1f}  ray at x={g_plus(z0 + tau):10.4f}")

# regions and the vacuum of a cloud with R0 = 1.5
R0 = 1.5
for tau, xi in [(0.0, 0.0), (2.0, -3.0), (2.0, 3.0), (6.0, 0.5)]:
    label = classify_region(tau, xi, R0).label
    print(f"tau={tau:3.1f} x={xi:5.1f}  {label.name}  vacuum={bool(in_vacuum(tau, xi, R0))}")
