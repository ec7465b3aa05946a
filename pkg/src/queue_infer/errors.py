"""Exception hierarchy. Each subclass carries the module name used in CLI error lines."""


class QueueInferError(ValueError):
    module = "queue_infer"

    def cli_line(self) -> str:
        return f"error[{self.module}]: {self}"


class DistributionError(QueueInferError):
    module = "distributions"


class SimulationError(QueueInferError):
    module = "simulator"


class EstimationError(QueueInferError):
    module = "estimator"


class AsymptoticsError(QueueInferError):
    module = "asymptotics"


class BootstrapError(QueueInferError):
    module = "bootstrap"


class IngestError(QueueInferError):
    module = "ingest"
