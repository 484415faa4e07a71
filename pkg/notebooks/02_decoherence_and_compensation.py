# %% [markdown]
# # Coherence loss in two crossed crystals and its cancellation
#
# The X- and Z-polarized pairs leave the crystals with different
# signal/idler group delays. That distinguishability reduces the
# off-diagonal element rho_1122. A calcite plate in the idler arm adds the
# opposite delay.

# %%
import numpy as np

from twocrystal.coherence import (
    asymptotic_rho, coherence_scan, group_delay_taus, ktp_source, rho1122, ridge, solve_plate_thickness,
)

cfg = ktp_source(4.5, idler_fwhm_nm=10.0)
tau_x, tau_z = group_delay_taus(cfg)
print(f"tau_X = {tau_x * 1e12:.3f} ps, tau_Z = {tau_z * 1e12:.3f} ps, ratio {tau_x / tau_z:.3f}")

# %% [markdown]
# Visibility against crystal length, no plate. It drops quickly, then
# settles on the long-crystal limit.

# %%
rows = coherence_scan(cfg, [0.5, 1, 2, 4.5, 10, 50, 200])
for r in rows:
    print(f"L = {r.length_mm:6.1f} mm  V = {r.result.visibility:.4f}")
print(f"asymptote V = {2 * asymptotic_rho(cfg):.4f}")

# %% [markdown]
# Lithium niobate has a much larger walk-off and the coherence disappears.

# %%
for material, T in (("LN", 21.0), ("MgO:LN", 111.0)):
    print(material, rho1122(ktp_source(200.0, material=material, temperature_c=T)).visibility)

# %%
d = solve_plate_thickness(cfg)
print(f"plate thickness {d:.4f} mm, V = {rho1122(ktp_source(4.5, plate_mm=d)).visibility:.6f}")

# %% [markdown]
# Scanning length and thickness together traces the compensation ridge.

# %%
grid = coherence_scan(cfg, np.arange(1.0, 10.1, 1.0), np.round(np.arange(0, 2.001, 0.01), 2))
for row in ridge(grid):
    print(f"L = {row.length_mm:5.1f} mm  best d = {row.thickness_mm:.2f} mm  V = {row.result.visibility:.6f}")
