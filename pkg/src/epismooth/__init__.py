"""epismooth: smoothing toolkit for nonsmooth convex and convex-composite
optimization.

The package provides projectable convex sets with normal cones, Moreau
envelopes and extended piecewise linear-quadratic (EPLQ) penalties with exact
smoothed gradients, a calculus for combining smoothing families, penalty
continuation for constrained problems with KKT-multiplier recovery, and a
probe harness that numerically checks the variational properties the whole
construction rests on.
"""

__version__ = "0.1.0"
