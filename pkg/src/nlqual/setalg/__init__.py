"""Exact polyhedral set algebra and the LP kernel it runs on."""

from .lp import LP, LPCertificate, LPResult, lp_solve, make_lp, solve, verify
from .polyset import (
    Membership,
    Polyhedron,
    PolySet,
    cone_intersection_trivial,
    contains,
    contains_zero,
    from_setspec,
    minkowski_sum,
    minkowski_sum_all,
    set_equal,
    subset_of,
    verify_membership,
)
from .project import project, project_h

__all__ = [
    "LP",
    "LPCertificate",
    "LPResult",
    "Membership",
    "PolySet",
    "Polyhedron",
    "cone_intersection_trivial",
    "contains",
    "contains_zero",
    "from_setspec",
    "lp_solve",
    "make_lp",
    "minkowski_sum",
    "minkowski_sum_all",
    "project",
    "project_h",
    "set_equal",
    "solve",
    "subset_of",
    "verify",
    "verify_membership",
]
