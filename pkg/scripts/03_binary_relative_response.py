# %% [markdown]
# Relative response in subgroups and overall
#
# An 86-patient table: 20 g+ and 23 g- subjects per arm.  Fractions keep
# every quantity exact.

# %%
from submix.binary import (mix_rr_correct, mix_rr_naive_log, mix_rr_naive_prevalence,
                           rr_overall, rr_report, rr_subgroup, table2)

t = table2()
rr_plus, rr_minus = rr_subgroup(t, "g_plus"), rr_subgroup(t, "g_minus")
print("RR g+ =", rr_plus, " RR g- =", rr_minus, " overall =", rr_overall(t))

# %% [markdown]
# Weighting the subgroup RRs by each subgroup's share of control responders
# reproduces the overall RR.  Weighting by prevalence does not.

# %%
print("control-responder mix:", mix_rr_correct(rr_plus, rr_minus, t.p("C", "g_plus", "R"),
                                               t.p("C", "g_minus", "R")))
print("prevalence mix:       ", mix_rr_naive_prevalence(rr_plus, rr_minus, t.prevalence()))
print("log prevalence mix:   ", round(mix_rr_naive_log(rr_plus, rr_minus, t.prevalence()), 4))

# %%
import json

print(json.dumps(rr_report(t), indent=1))
