# coding: utf-8

# # Choosing a rejection set after looking at the data
#
# Every set in the collection may be reported, so the choice can depend on
# the data. Three common moves: ask about a particular set, switch to
# familywise error control, or lower the level when the signal is strong.

# In[1]:

import numpy as np

from epartition import check_membership, critical_alpha, mean_e_suite, singleton_rejections

alpha = 0.05
e = np.array([400.0, 90.0, 60.0, 30.0, 4.0, 1.0, 0.5, 0.0])
suite = mean_e_suite(e)


# ## Asking about a set
#
# A non-member comes with a witness: a set S whose mean e-value is too small
# for the share of R it covers.

# In[2]:

for R in ([0, 1, 2], [0, 1, 2, 3, 4], [4]):
    res = check_membership(suite, R, alpha)
    label = [i + 1 for i in R]
    if res:
        print(label, "is a member")
    else:
        w = res.witness
        print(label, "is not a member; S =", [i + 1 for i in w.S], "mean e =", round(w.e_S, 3))


# ## Switching to familywise error control
#
# The singleton members together form a set that controls the familywise
# error rate.

# In[3]:

print("FWER set:", [i + 1 for i in singleton_rejections(suite, alpha)])


# ## The smallest level at which a set is admitted
#
# The mean e-value suite does not depend on alpha, so the level itself can
# be chosen afterwards.

# In[4]:

for R in ([0], [0, 1], [0, 1, 2, 3], [0, 1, 2, 3, 4, 5]):
    print([i + 1 for i in R], "admitted from alpha =", round(critical_alpha(suite, R), 4))
