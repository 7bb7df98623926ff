"""Exception hierarchy shared by every germdeform module.

Each error carries a stable ``code`` so the CLI can report it as JSON.
"""


class GermDeformError(Exception):
    code = "GermDeformError"

    def __init__(self, message=""):
        super().__init__(message)
        self.message = message

    def to_json(self):
        return {"error": self.code, "message": self.message}


def _error(name):
    return type(name, (GermDeformError,), {"code": name})


ZeroLeadingCoefficient = _error("ZeroLeadingCoefficient")
TruncationUnstable = _error("TruncationUnstable")
NoContraction = _error("NoContraction")
NotWeierstrass = _error("NotWeierstrass")
DegenerateGerm = _error("DegenerateGerm")
RankDeficient = _error("RankDeficient")
SingularPairing = _error("SingularPairing")
OutOfDomain = _error("OutOfDomain")
ContourTooClose = _error("ContourTooClose")
AliasingDetected = _error("AliasingDetected")
RootCountMismatch = _error("RootCountMismatch")
NotSymmetric = _error("NotSymmetric")
IncompatibleRealStructure = _error("IncompatibleRealStructure")
SheetCollision = _error("SheetCollision")
SingularSheet = _error("SingularSheet")
ToleranceExceeded = _error("ToleranceExceeded")
InputError = _error("InputError")
RigidGerm = _error("RigidGerm")
