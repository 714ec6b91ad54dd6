# %% [markdown]
# One secondary ranging to the primary through its repeater, then the Kalman
# tracker smoothing the measured delay.

# %%
import numpy as np

from cdasim import TWO_NODE, LinkParams, estimate_range, round_trip, synthesize
from cdasim.ranging import ambiguity_gate, interpolation_tolerance
from cdasim.tracking import run_filter, steady_state_gain

spec = TWO_NODE.spec
tx = synthesize(spec)
gate = ambiguity_gate(spec)

# %%
# Noiseless: the interpolated peak lands on 2d/c.
clean = round_trip(tx, 1.5, 3.0, LinkParams())
est = estimate_range(clean, tx, max_delay=gate)
print(f"range {est.range:.5f} m, delay error {abs(est.delay - 3.0 / 299792458.0) * 1e12:.2f} ps")
print(f"interpolation tolerance {interpolation_tolerance(spec.sample_rate) * 1e12:.0f} ps")

# %%
# 30 dB per leg.  The gate keeps the peak search inside one envelope lobe;
# without it a single-pulse waveform can lock onto a neighbouring lobe.
link = LinkParams(snr_db=30.0)
ranges = np.array(
    [estimate_range(round_trip(tx, 1.5, 3.0, link, seed=s), tx, max_delay=gate).range for s in range(200)]
)
print(f"mean {ranges.mean():.5f} m, std {ranges.std() * 1e3:.3f} mm")

# %%
# Tracking the delay in sample units.  With the default variances the gain
# settles at one third.
z = ranges * 2 / 299792458.0 * spec.sample_rate
states = run_filter(z)
print(f"steady-state gain {steady_state_gain(3e-5, 5e-6):.4f}, final gain {states[-1].gain:.4f}")
print(f"raw std {z.std():.5f} samples, filtered std {np.std([s.estimate for s in states[50:]]):.5f} samples")
