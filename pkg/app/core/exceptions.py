from typing import Any, Dict, Optional


class EngineError(Exception):
    """
    Base error for the engine. `anchor` names the assumption or
    inequality a failure relates to, when there is one.
    """

    def __init__(self, detail: str, anchor: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        self.anchor = anchor

    def to_dict(self) -> Dict[str, Any]:
        return {
            "error": type(self).__name__,
            "detail": self.detail,
            "anchor": self.anchor,
        }


class InvalidModeError(EngineError):
    pass


class AliasingError(EngineError):
    pass


class NonFiniteFieldError(EngineError):
    pass


class GridMismatchError(EngineError):
    pass


class InvalidGridError(EngineError):
    pass


class InfeasibleGridError(EngineError):
    pass


class DomainError(EngineError):
    pass


class KernelAssumptionError(EngineError):
    def __init__(self, detail: str, node: Optional[int] = None, s: Optional[float] = None):
        super().__init__(detail, anchor="M1")
        self.node = node
        self.s = s


class KernelFileError(EngineError):
    pass


class CFLViolationError(EngineError):
    def __init__(self, detail: str, spacing: float):
        super().__init__(detail, anchor="transport-cfl")
        self.spacing = spacing


class InsufficientHistoryError(EngineError):
    pass


class PotentialAssumptionError(EngineError):
    pass


class NoiseAssumptionError(EngineError):
    pass


class ControlConfigurationError(EngineError):
    def __init__(self, detail: str):
        super().__init__(detail, anchor="spectral-gap")


class BlowUpError(EngineError):
    def __init__(self, detail: str, last_state: Any = None):
        super().__init__(detail, anchor="blow-up")
        self.last_state = last_state


class OracleRefusalError(EngineError):
    pass


class ConfigurationError(EngineError):
    pass
