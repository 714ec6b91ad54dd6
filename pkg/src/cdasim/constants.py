"""Physical constants and the defaults shared across modules."""

SPEED_OF_LIGHT = 299_792_458.0
#: Rounded value used for reproducing hand-worked numbers (``--paper-c``).
PAPER_SPEED_OF_LIGHT = 3.0e8

DEFAULT_SAMPLE_RATE = 25e6
#: Usable complex bandwidth at the default sample rate.
DEFAULT_NOISE_BANDWIDTH = DEFAULT_SAMPLE_RATE / 2

UPLINK_CARRIER = 4.25e9
DOWNLINK_CARRIER = 5.25e9
BEAMFORMING_CARRIER = 1.5e9

#: Amplitude is 1 at this distance under the 1/R spreading model (meters).
REFERENCE_DISTANCE = 1.0
