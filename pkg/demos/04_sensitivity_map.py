"""Shot-noise-limited sensitivity over NV concentration and Rabi frequency.

Each point solves for the impedance-matched input coupler, freezes the pump
rate, finds the steepest point of the single-tone resonance and converts the
slope to a magnetic sensitivity.
"""
import numpy as np

from admr_sim import sensitivity as sens

grid = sens.SweepGrid(np.geomspace(1, 1000, 7), [0.5], np.linspace(0.1, 1.0, 4))
for channel in ("reflect", "transmit"):
    res = sens.sweep(grid, channel)
    eta = res.values()[:, 0, :] * 1e12
    print(f"\n{channel}: eta (pT/rtHz); rows [NV] (ppb), columns Omega (MHz)")
    print("        " + "".join(f"{w:9.2f}" for w in grid.omega_values))
    for nv, row in zip(grid.nv_ppb_values, eta):
        print(f"{nv:7.1f} " + "".join(f"{v:9.1f}" for v in row))

# Refine the reflection optimum on a small grid.
opt = sens.optimize(grid, "reflect", rounds=2, factor=5)
b = opt.best
print(f"\nrefined reflection optimum: {b.eta * 1e12:.2f} pT/rtHz at {b.nv_ppb:.2f} ppb,"
      f" Omega {b.omega:.3f} MHz")
print(f"  R1 {b.r1_matched:.5f}, finesse {b.finesse:.1f}, P_cav {b.p_cav:.2f} W,"
      f" P_r on resonance {b.p_r_on * 1e6:.3f} uW")
