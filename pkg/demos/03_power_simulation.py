# coding: utf-8

# # Power under dependence
#
# Eight Gaussian test statistics, two of them null, with either AR(1)
# positive correlation or equicorrelated negative correlation. Each
# replication sums 100 observations per hypothesis and turns the sums into
# likelihood-ratio e-values. Raise REPS for smoother curves.

# In[1]:

import sys

from epartition.simlab import figure_grid, run_experiment

REPS = int(sys.argv[1]) if len(sys.argv) > 1 else 200

configs = figure_grid((0.125, 0.25, 0.375, 0.5), ("ar1", "neg_equicorr"), reps=REPS, seed=2024)
result = run_experiment(configs, ("ebh", "ebh_plus"))


# In[2]:

print(f"{'covariance':<14}{'A':>7}{'eBH':>9}{'eBH+':>9}")
for cfg in configs:
    base = result.lookup(cfg.cov_kind, cfg.A, "ebh")["power"]
    plus = result.lookup(cfg.cov_kind, cfg.A, "ebh_plus")["power"]
    print(f"{cfg.cov_kind:<14}{cfg.A:>7.3f}{base:>9.3f}{plus:>9.3f}")


# The improved procedure never loses power, and the largest gains show up
# at intermediate signal strength. The raw table is available as CSV:

# In[3]:

print(result.to_csv())
