"""Random finite instances and straight-line brute-force oracles for tests.

Nothing here calls into bestprox.conditions or bestprox.iterate.
"""
import itertools
import math

import numpy as np

from bestprox.mappings import AuxiliaryMap, IdentityMap, MappingBundle, NonSelfMap, TableMap, make_beta
from bestprox.metric import FiniteSet, Point
from bestprox.scenarios import InstanceBundle


def random_finite_instance(rng, max_points=30):
    """Points on the lines x=0 (A) and x=delta (B), plus off-line extras.

    T is a table built from one of: a rounded affine map of the height (0),
    the same with noise (1), random targets (2), or the shift h_k -> h_{k+1}
    down a geometric chain h_k = H 3^-k, whose pair ratios stay <= 1/2 (3).
    """
    m = int(rng.integers(3, max_points - 8))
    delta = float(rng.uniform(0.2, 2.0))
    kind = int(rng.integers(0, 4))
    if kind == 3:
        top = float(rng.uniform(10, 40))
        heights = [0.0] + sorted(top * 3.0 ** -k for k in range(m - 1))
    else:
        heights = sorted(rng.choice(40, size=m, replace=False).tolist())
    a_pts = [Point(0.0, h) for h in heights]
    b_pts = [Point(delta, h) for h in heights]
    for _ in range(int(rng.integers(0, 5))):
        b_pts.append(Point(delta + rng.uniform(0.5, 2.0), rng.uniform(-5, 45)))
    n_extra_a = 0 if kind == 3 else int(rng.integers(0, 4))
    extras = [Point(-rng.uniform(0.5, 2.0), rng.uniform(-5, 45)) for _ in range(n_extra_a)]
    kappa = float(rng.uniform(0.1, 0.95))
    shift = float(rng.uniform(0, 20))
    table = []
    for i, a in enumerate(a_pts):
        if kind == 3:
            # heights[0] = 0 and heights[1] is the bottom of the chain
            target = b_pts[i - 1] if i > 1 else b_pts[0]
        elif kind == 2:
            target = b_pts[int(rng.integers(0, len(b_pts)))]
        else:
            h = kappa * a[1] + shift * (1 - kappa)
            if kind == 1:
                h += rng.normal(0, 2.0)
            hh = min(heights, key=lambda v: (abs(v - h), v))
            target = Point(delta, hh)
        table.append((a, target))
    for a in extras:
        table.append((a, b_pts[int(rng.integers(0, len(b_pts)))]))
    A = FiniteSet(a_pts + extras)
    B = FiniteSet(b_pts)
    T = NonSelfMap(TableMap(table), A, B)
    beta = make_beta("constant", k=float(rng.uniform(0.5, 0.95)))
    inst = InstanceBundle(A, B, MappingBundle(T, AuxiliaryMap(IdentityMap()), beta),
                          flags={"a0_closed": True, "b0_closed": True}, provenance="random")
    return inst.validate()


def brute_gap(A, B):
    a = np.array([p.coords for p in A.points])
    b = np.array([p.coords for p in B.points])
    return float(np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(-1)).min())


def brute_proximity(A, B, tol=1e-9):
    gap = brute_gap(A, B)
    a0 = [x for x in A.points if any(abs(math.dist(x, y) - gap) <= tol for y in B.points)]
    b0 = [y for y in B.points if any(abs(math.dist(x, y) - gap) <= tol for x in A.points)]
    return gap, a0, b0


def brute_condition(inst, rhs, tol=1e-9, use_s=True, guard=None):
    """Straight-line check of d(Su,Sv) <= rhs(x, y) over every premise quadruple.

    Returns "Vacuous", "Falsified" or "NotFalsified"."""
    S = inst.S if use_s else (lambda p: p)
    T = inst.T
    gap = brute_gap(inst.A, inst.B)
    pts = inst.A.points
    premise = [(x, u) for x in pts for u in pts
               if abs(math.dist(S(u), S(T(x))) - gap) <= tol]
    applicable = 0
    for (x, u), (y, v) in itertools.product(premise, repeat=2):
        if guard is not None and not guard(x, y, gap):
            continue
        applicable += 1
        if math.dist(S(u), S(v)) - rhs(x, y, gap) > tol:
            return "Falsified"
    return "Vacuous" if applicable == 0 else "NotFalsified"
