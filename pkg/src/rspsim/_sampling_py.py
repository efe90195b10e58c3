"""Reference trajectory counter (numpy); same contract as the compiled kernel.

A trial lands in branch ``k``, the first index with ``u_branch < cumulative[k]``
(the last branch absorbs rounding), and succeeds when
``u_ancilla < pass_prob[k]``.
"""
import numpy as np


def count_trajectories(u_branch, u_ancilla, cumulative, pass_prob, branch_counts):
    nb = cumulative.shape[0]
    k = np.searchsorted(cumulative[:-1], u_branch, side="right")
    branch_counts += np.bincount(k, minlength=nb)
    return int(np.count_nonzero(u_ancilla < pass_prob[k]))
