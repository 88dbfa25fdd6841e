"""Shared helpers for the test suite."""

import numpy as np

from plarray import Facet


def rect_facet(fid, p0, e1, e2, gamma=1.0):
    """Rectangle spanned by edge vectors e1, e2 from corner p0."""
    p0 = np.asarray(p0, float)
    e1 = np.asarray(e1, float)
    e2 = np.asarray(e2, float)
    return Facet(fid, fid, np.array([p0, p0 + e1, p0 + e1 + e2, p0 + e2]), gamma)
