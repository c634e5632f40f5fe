"""Exception hierarchy shared by every module."""


class QlinkError(Exception):
    pass


class ConfigurationError(QlinkError, ValueError):
    """Bad parameters or config input. Carries an optional dotted field path."""

    def __init__(self, message, field=None):
        self.field = field
        super().__init__(f"{field}: {message}" if field else message)


class DimensionError(QlinkError, ValueError):
    pass


class InvalidStateError(QlinkError, ValueError):
    """Matrix fails the Hermitian / unit-trace / PSD checks of a density matrix."""


class NumericalError(QlinkError, ArithmeticError):
    pass


class TraceDriftError(NumericalError):
    def __init__(self, drift, time, step=None):
        self.drift = drift
        self.time = time
        self.step = step
        where = f" (step {step})" if step is not None else ""
        super().__init__(f"trace drifted by {drift:.3e} at t={time:g}{where}")


class NotPurifiableError(QlinkError, ValueError):
    """Raw fidelity too low for a recurrence round to help."""
