"""Exception hierarchy shared by every stage of the pipeline."""


class TERankError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class IngestError(TERankError):
    code = "ingest_error"


class ParamError(TERankError, ValueError):
    code = "param_error"


class ScalingError(TERankError):
    code = "scaling_error"


class EmptySetError(TERankError):
    code = "empty_set"


class EstimateUnreliable(TERankError):
    code = "estimate_unreliable"


class NumericalError(TERankError):
    code = "numerical_error"


class SimulationError(TERankError):
    code = "simulation_error"


class ConfigError(TERankError):
    code = "config_error"
