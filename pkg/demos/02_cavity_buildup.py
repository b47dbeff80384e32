"""Impedance matching and pump-rate enhancement in the optical cavity."""
from admr_sim import bloch, cavity as cav

rates = bloch.RateSet()
sample = cav.DiamondSample()  # 0.16 ppb, 2.6 mm path
print(f"NV density {sample.nv_density:.3e} per mm^3, NV round-trip loss {sample.nv_loss:.3e}")

alpha = cav.propagation_loss(sample, 1.0)
print(f"total round-trip loss at full ground population: {alpha:.5f}")

for r1 in (0.90, 0.948, 0.98):
    mirrors = cav.MirrorPair(r1, 0.998)
    p_cav = cav.intracavity_power(0.4, mirrors, alpha)
    p_t = cav.transmitted_power(0.4, mirrors, alpha)
    p_r = cav.reflected_power(0.4, mirrors, alpha)
    print(f"R1 = {r1:.3f}: finesse {cav.finesse(mirrors, alpha):6.1f}, "
          f"P_cav {p_cav:6.3f} W, P_t {p_t * 1e3:6.2f} mW, P_r {p_r * 1e3:7.3f} mW")

# The pump rate follows the circulating power, not the input power.
config = cav.CavityConfig(cav.MirrorPair(0.948, 0.998), sample)
for p_in in (0.1, 0.4, 0.8):
    gp = cav.frozen_pump_rate(p_in, config)
    rho_g = float(bloch.ground_population(rates, 0.0, gp, 0.0))
    print(f"P_in {p_in:.1f} W -> pump rate {gp:.4f} MHz, rho_g {rho_g:.5f}")
