"""
Double-sweep pulse design toolkit
Fourier-designed low-power waveforms combined with adiabatic double sweeps
for broadband excitation and π/2 rotations.
"""

__version__ = "0.3.0"
