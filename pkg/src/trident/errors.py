"""Exception hierarchy. Every error carries a machine-readable ``code``."""


class TridentError(Exception):
    code = "ERROR"

    def __init__(self, code: str | None = None, detail: str = ""):
        if code is not None:
            self.code = code
        self.detail = detail
        super().__init__(f"{self.code}: {detail}" if detail else self.code)


class EntropyError(TridentError):
    """The entropy source cannot supply bytes. Registration must not proceed."""

    code = "ENTROPY_FAILURE"


class MatrixError(TridentError):
    pass


class ValidationError(TridentError):
    pass


class RegistrationError(TridentError):
    pass


class StoreError(TridentError):
    pass


class FrameError(TridentError):
    pass


class ScenarioError(TridentError):
    code = "UNKNOWN_SCENARIO"
