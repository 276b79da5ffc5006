from typing import Any, Dict, Optional


class FinsecError(Exception):
    """Base exception for all finsec errors."""

    CODE = 1

    def __init__(self, detail: str, code: Optional[int] = None):
        super().__init__(detail)
        self.detail = detail
        self.code = self.CODE if code is None else code

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "detail": self.detail,
            "code": self.code,
        }


class FinsecUsageError(FinsecError):
    """Parameters that do not fit together."""

    CODE = 1


class FinsecValidationError(FinsecError):
    """Input data that violates a declared domain: alphabets, table entries,
    lengths, divisibility."""

    CODE = 2

    def __init__(self, detail: str, path: Optional[str] = None):
        super().__init__(detail)
        self.path = path

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        if self.path is not None:
            data["path"] = self.path
        return data


class FinsecBudgetError(FinsecError):
    """An enumeration or table would exceed its configured budget."""

    CODE = 3

    def __init__(self, detail: str, budget: int, required: int):
        super().__init__(detail)
        self.budget = budget
        self.required = required

    def to_dict(self) -> Dict[str, Any]:
        data = super().to_dict()
        data["budget"] = self.budget
        data["required"] = self.required
        return data


class FinsecIntegrityError(FinsecError):
    """Malformed bitstreams, headers or cryptograms, and keys under which a
    cryptogram does not decrypt."""

    CODE = 4
