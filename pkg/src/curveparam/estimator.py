"""scikit-learn style facade over the classify/check/loops/verify pipeline."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .cut_classifier import check_conditions, classify
from .edge_topology import build_loops, orient_loops
from .parameterization import sample_loops, verify_homeomorphism
from .triangulation import Triangulation


class PositiveEdgeParameterizer(BaseEstimator):
    """Parameterize a curve over the positive edges of a triangulation.

    Parameters
    ----------
    curve : BoundaryCurve
    mode : {"positive", "negative"}
    samples_per_edge : int
        Interior samples per positive edge used by the certificate.
    strict : bool
        Raise on a positive edge shared by two positively cut triangles.

    Attributes
    ----------
    classification_ : CutClassification
    report_ : ConditionReport
    loops_ : list of PositiveLoop
    samples_ : list of LoopSamples
    verification_ : VerificationReport

    Examples
    --------
    >>> from curveparam import circle, generate_equilateral_grid
    >>> est = PositiveEdgeParameterizer(circle((0.01, -0.03), 1.0))
    >>> est.fit(generate_equilateral_grid((-1.3, -1.3, 1.3, 1.3), 0.2)).certified_
    True
    """

    def __init__(self, curve=None, mode="positive", samples_per_edge=8, strict=True):
        self.curve = curve
        self.mode = mode
        self.samples_per_edge = samples_per_edge
        self.strict = strict

    def fit(self, X, y=None):
        """Run the pipeline on triangulation ``X``.

        ``X`` is a :class:`Triangulation` or a ``(vertices, triangles)`` pair.
        Structural errors (degree violations, open chains) propagate.
        """
        if self.curve is None:
            raise ValueError("curve must be set")
        if self.mode not in ("positive", "negative"):
            raise ValueError(f"mode must be 'positive' or 'negative', got {self.mode!r}")
        if int(self.samples_per_edge) < 2:
            raise ValueError("samples_per_edge must be at least 2")
        tri = X if isinstance(X, Triangulation) else Triangulation(*X)
        cls = classify(self.curve, tri, mode=self.mode, strict=self.strict)
        rep = check_conditions(cls.curve, tri, cls)
        loops = orient_loops(build_loops(cls), cls.curve, tri.vertices)
        samples = sample_loops(cls.curve, tri, loops, int(self.samples_per_edge), rep)
        self.triangulation_ = tri
        self.classification_ = cls
        self.report_ = rep
        self.loops_ = loops
        self.samples_ = samples
        self.verification_ = verify_homeomorphism(cls.curve, tri, cls, rep, loops, samples)
        return self

    @property
    def certified_(self) -> bool:
        check_is_fitted(self, "verification_")
        return self.verification_.global_pass

    def transform(self, X):
        """Closest points on the curve of the rows of ``X``."""
        check_is_fitted(self, "verification_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 2:
            raise ValueError(f"expected 2 columns, got {X.shape[1]}")
        return self.classification_.curve.project(X).position

    def signed_distance(self, X):
        """Signed distance of the rows of ``X`` in the fitted mode."""
        check_is_fitted(self, "verification_")
        X = check_array(X, dtype=np.float64)
        return self.classification_.curve.project(X).phi
