"""
admr_sim
========

Model of NV-ensemble magnetometry read out through pump-light absorption in
an optical cavity.

Modules
-------
bloch
    Five-level steady state (populations versus MW drive and pump rate).
cavity
    Round-trip loss, finesse, intra-cavity, transmitted and reflected power.
spectrum
    Single-resonance power response and frequency-modulated lock-in spectra.
sensitivity
    Shot-noise-limited sensitivity, impedance matching, sweeps, optimizer.
noise
    Amplitude spectral density, overlapping Allan deviation, synthetic traces.
config, cli
    ``key = value`` run configuration and the ``admr-sim`` command.
"""

__version__ = "0.1.0"

from .bloch import DrivePoint, RateSet, SteadyState, steady_state, steady_state_ode_oracle
from .cavity import (CavityConfig, DiamondSample, MirrorPair, finesse, intracavity_power,
                     ppb_to_density, propagation_loss, pump_rate, reflected_power,
                     transmitted_power)
from .noise import TimeTrace, allan_overlapping, asd, lowpass_response, synth_trace, volts_to_tesla
from .sensitivity import SensorDesign, SweepGrid, impedance_match_r1, shot_noise_asd, sweep
from .spectrum import (LockinConfig, lockin_spectrum, resonance_power, slope_at_resonance,
                       zeeman_resonances)
