# %% [markdown]
# # Dispersion and phase matching in PPKTP
#
# Refractive and group indices from the bundled Sellmeier sets, the poling
# period that phase-matches 532 nm -> 810 nm + 1550 nm, and the spectral
# width of the idler set by a 4.5 mm crystal.

# %%
import numpy as np

from twocrystal.materials import default_registry, group_index, refractive_index
from twocrystal.phasematch import idler_wavelength, solve_poling_period

reg = default_registry()
print("bundled models:", sorted(m.key for m in reg))

# %% [markdown]
# Group indices along the crystal Z axis at the three wavelengths.

# %%
for wl in (532.0, 810.0, 1550.0):
    m = reg.get("KTP", "Z")
    um = wl / 1000
    print(f"{wl:7.1f} nm  n = {refractive_index(m, um, 111.0):.5f}  n_g = {group_index(m, um, 111.0):.5f}")

# %%
period = solve_poling_period(reg, 810, 532, 111)
print(f"poling period {period:.3f} um, idler {idler_wavelength(532, 810):.4f} nm")

# %% [markdown]
# Period against temperature near the operating point.

# %%
for T in np.arange(30.0, 151.0, 30.0):
    print(f"T = {T:5.1f} C  period = {solve_poling_period(reg, 810, 532, T):.4f} um")
