"""Exception hierarchy shared by every layer of the package."""


class ImsHagError(Exception):
    """Base class for domain errors (CLI exit status 1)."""


class ScenarioParseError(ImsHagError):
    """Malformed scenario document (CLI exit status 2)."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ModelValidationError(ImsHagError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "\n".join(f"  {v}" for v in self.violations)
        super().__init__(f"{len(self.violations)} model violation(s):\n{lines}")


class UnknownNodeError(ImsHagError, KeyError):
    def __str__(self):
        return f"unknown node: {self.args[0]}"


class UnknownGroupError(ImsHagError, KeyError):
    def __str__(self):
        return f"unknown group: {self.args[0]}"


class UnknownVulnerabilityError(ImsHagError, KeyError):
    def __str__(self):
        return f"unknown vulnerability: {self.args[0]}"


class UnknownThreatError(ImsHagError, ValueError):
    pass


class PathLimitExceeded(ImsHagError):
    pass


class UnsupportedRecordError(ImsHagError):
    """NVD record without a CVSS v3.x metric."""


class MissingWeightsError(ImsHagError):
    def __init__(self, cve_ids):
        self.cve_ids = sorted(cve_ids)
        super().__init__("no STRIDE weights for: " + ", ".join(self.cve_ids))


class FetchError(ImsHagError):
    def __init__(self, message, status=None):
        self.status = status
        super().__init__(message)


class CveNotFoundError(FetchError):
    pass
