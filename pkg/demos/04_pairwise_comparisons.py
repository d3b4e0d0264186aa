# coding: utf-8

# # Logical constraints between hypotheses
#
# Comparing four parameters pairwise gives six hypotheses "theta_i = theta_j".
# Not every pattern of true nulls is possible: theta1 = theta2 and
# theta1 = theta3 force theta2 = theta3. Impossible patterns get an infinite
# e-value, which can only enlarge the collection.

# In[1]:

import numpy as np

from epartition import check_membership, clique_feasibility, mean_e_suite, with_feasibility
from epartition.suites import pairwise_labels

alpha = 0.05
labels = pairwise_labels(4)
print("hypotheses:", [f"{a}={b}" for a, b in labels])

# Strong evidence against theta1 = theta2, moderate against the next two pairs.
e = np.array([4 / alpha, 1 / alpha, 1 / alpha, 0.0, 0.0, 0.0])


# In[2]:

plain = mean_e_suite(e)
restricted = with_feasibility(plain, clique_feasibility(4))
R = [0, 1, 2]
print("without constraints:", bool(check_membership(plain, R, alpha)))
print("with constraints:   ", bool(check_membership(restricted, R, alpha)))


# In[3]:

f = clique_feasibility(4)
count = sum(
    f(np.flatnonzero((code >> np.arange(6)) & 1)) for code in range(1, 64)
)
print("possible non-empty null patterns:", count, "of 63")
