"""Exception hierarchy shared by all modules."""


class CurveParamError(Exception):
    """Base class for every error raised by this package."""


# curve geometry
class ProjectionDidNotConverge(CurveParamError):
    pass


class OutsideTube(CurveParamError):
    pass


class CurvatureSingularity(CurveParamError):
    pass


class DegenerateCurve(CurveParamError):
    pass


# triangulation
class MeshError(CurveParamError):
    pass


class DegenerateTriangle(MeshError):
    pass


class NonManifoldEdge(MeshError):
    pass


class DuplicateVertex(MeshError):
    pass


class IndexOutOfRange(MeshError):
    pass


class UnknownEdge(MeshError, KeyError):
    pass


# structural failures of the positive-edge set
class StructuralError(CurveParamError):
    pass


class NotImmersed(StructuralError):
    pass


class SharedPositiveEdgeConflict(StructuralError):
    def __init__(self, edge, owners):
        self.edge = tuple(edge)
        self.owners = tuple(owners)
        super().__init__(
            f"edge {self.edge} is the positive edge of triangles {self.owners}"
        )


class DegreeViolation(StructuralError):
    def __init__(self, vertex, degree):
        self.vertex = int(vertex)
        self.degree = int(degree)
        super().__init__(
            f"vertex {self.vertex} has {self.degree} incident positive edges (expected 2)"
        )


class OpenChain(StructuralError):
    pass


class AmbiguousOrientation(StructuralError):
    pass


class InvariantViolation(CurveParamError):
    """A property guaranteed by construction was observed to fail."""


class ConfigError(CurveParamError, ValueError):
    pass


class AdjacentAngleUndefinedWarning(UserWarning):
    """Positive edge meets the curve but lies on the mesh boundary."""
