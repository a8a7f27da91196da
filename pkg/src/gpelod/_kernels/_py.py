"""Pure numpy element kernels, the fallback backend.

Same signatures and semantics as the compiled module `_element`. All
element matrices come out exactly symmetric: the basis-product table
phi[q, i] * phi[q, j] is symmetric by commutativity and the reduction
over quadrature points runs in the same order for (i, j) and (j, i).
"""

import numpy as np


def mass_entries(detj, qw, phi, wvals):
    """Per-element weighted mass matrices.

    out[e, i, j] = sum_q detj[e] * qw[q] * wvals[e, q] * phi[q, i] * phi[q, j]
    """
    pp = np.einsum("qi,qj->qij", phi, phi)
    w = wvals * qw[np.newaxis, :] * detj[:, np.newaxis]
    return np.einsum("eq,qij->eij", w, pp)


def stiffness_entries(scale, grads):
    """Per-element gradient-gradient matrices.

    out[e, i, j] = scale[e] * grads[e, i, :] . grads[e, j, :]
    """
    gg = np.einsum("eid,ejd->eij", grads, grads)
    return gg * scale[:, np.newaxis, np.newaxis]


def load_entries(detj, qw, phi, fvals):
    """Per-element load vectors for quadrature-point data fvals.

    out[e, i] = sum_q detj[e] * qw[q] * fvals[e, q] * phi[q, i]
    """
    w = fvals * qw[np.newaxis, :] * detj[:, np.newaxis]
    return w @ phi


def pair_integral(detj, qw, avals, bvals):
    """Integral of the product of two quadrature-point fields.

    sum_e detj[e] * sum_q qw[q] * avals[e, q] * bvals[e, q]
    """
    return float(np.einsum("e,q,eq,eq->", detj, qw, avals, bvals))
