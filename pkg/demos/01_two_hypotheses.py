# coding: utf-8

# # Rejection collections with two hypotheses
#
# With m = 2 hypotheses there are only four candidate rejection sets, so the
# whole collection can be listed by brute force. Each set R is admitted when
# alpha * e_S >= |R & S| / |R| for every non-empty S, with e_S the mean of
# the e-values in S.

# In[1]:

import numpy as np

from epartition import largest_prefix, mean_e_suite
from epartition.oracle import brute_collection
from epartition.stepup import ebh

alpha = 0.05


def show(e):
    table = brute_collection(mean_e_suite(e), alpha)
    sets = ["{" + ",".join(str(i + 1) for i in R) + "}" for R in table]
    print(f"e = {e}:  collection = {', '.join(sets)}")


# A single large e-value is not enough when the other one is exactly zero,
# because the pair {1,2} averages down to 18 < 1/alpha.

# In[2]:

show([36.0, 0.0])
show([36.0, 4.0])
show([30.0, 10.0])


# # eBH against its improvement
#
# The step-up eBH procedure needs the k-th largest e-value to clear m/(k alpha).
# Here no rank qualifies, yet the full set is in the collection.

# In[3]:

e = np.array([35.0, 25.0, 15.0, 5.0])
print("eBH rejects", ebh(e, alpha).r, "hypotheses")
print("eBH+ rejects", largest_prefix(e, alpha).r, "hypotheses")


# # Larger problems
#
# Membership of a prefix is decided without enumerating subsets, so the
# improvement is cheap even for thousands of hypotheses.

# In[4]:

rng = np.random.default_rng(1)
m = 5000
signal = rng.random(m) < 0.1
e = np.where(signal, rng.lognormal(6.0, 1.0, m), rng.exponential(1.0, m))
print("m =", m)
print("eBH :", ebh(e, alpha).r)
print("eBH+:", largest_prefix(e, alpha).r)
