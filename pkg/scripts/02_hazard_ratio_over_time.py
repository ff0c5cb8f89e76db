# %% [markdown]
# The hazard ratio of a mixture is not constant
#
# Each subgroup has proportional hazards, but once g- and g+ are pooled the
# treated/control hazard ratio drifts as the faster-failing subgroup is
# depleted.  The two common summary HRs are constants and miss this.

# %%
import numpy as np

from submix import SCENARIOS, MixtureSpec, ModelParams, mixture_hazard_ratio
from submix.survival import (Arm, mixture_quantile_time, naive_hr_event_weighted,
                             naive_hr_lsmeans, subgroup_hazard_ratios)

p = SCENARIOS["a"]
mix = MixtureSpec.two_group(0.5)

# %%
t = np.array([mixture_quantile_time(p, mix, Arm.C, s) for s in (0.9, 0.8, 0.5, 0.2, 0.1)])
hr = mixture_hazard_ratio(p, mix, t)
for ti, h in zip(t, hr):
    print(f"t={ti:7.1f} weeks  mixture HR={h:.3f}")

sub = subgroup_hazard_ratios(p)
hr_minus, hr_plus = list(sub.values())
print("event-weighted HR (incorrect):", round(naive_hr_event_weighted(hr_plus, hr_minus, 1, 2), 3))
print("LSmeans HR (incorrect):      ", round(naive_hr_lsmeans(p), 3))

# %% [markdown]
# Without marker effects the two subgroups are identical and the mixture HR
# is exactly the treatment HR at every time.

# %%
flat = ModelParams(50.0, 1.25, 0.5)
print(mixture_hazard_ratio(flat, mix, np.logspace(-1, 2.5, 5)))
