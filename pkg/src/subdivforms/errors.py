"""Exception hierarchy shared by all modules."""


class SubdivFormsError(Exception):
    """Base class for library errors."""


class MeshError(SubdivFormsError, ValueError):
    pass


class NonManifold(MeshError):
    pass


class DegenerateFace(MeshError):
    pass


class UnsupportedConfiguration(SubdivFormsError):
    pass


class LevelOrder(SubdivFormsError, ValueError):
    pass


class BoundaryLeak(SubdivFormsError):
    pass


class TooLarge(SubdivFormsError):
    pass


class DegenerateElement(SubdivFormsError, ValueError):
    pass


class DimensionMismatch(SubdivFormsError, ValueError):
    pass


class EmptyInterior(SubdivFormsError, ValueError):
    pass


class SolverFailure(SubdivFormsError):
    pass


class NotConverged(SolverFailure):
    pass


class NotSpd(SolverFailure):
    pass


class IndefiniteMass(SolverFailure):
    pass


class SingularNormalMatrix(SolverFailure):
    pass


class MissingInput(SubdivFormsError):
    pass
