"""Exception types shared across the simulator."""


class ProtocolError(ValueError):
    """A pulse or operation sequence that the device protocol does not allow."""


class ProfileError(ValueError):
    """A calibration profile file that cannot be parsed or validated."""


class NotSPDError(ValueError):
    """A system handed to a CG path is not symmetric positive definite."""


class DimensionError(ValueError):
    """Operand shapes do not match the array or each other."""
