"""Exception hierarchy shared by every pipeline stage.

The CLI maps each family onto an exit code (see ``causalnet.cli``); library
callers can keep catching the builtin base classes.
"""

from __future__ import annotations


class CausalNetError(Exception):
    exit_code = 2


class ConfigError(CausalNetError, ValueError):
    exit_code = 1


class StageOrderError(CausalNetError, RuntimeError):
    exit_code = 1

    def __init__(self, stage: str, missing: str | None = None):
        self.stage = stage
        self.missing = missing
        detail = f" (missing {missing})" if missing else ""
        super().__init__(f"run `{stage}` first{detail}")


class CorpusError(CausalNetError, OSError):
    pass


class LexiconError(CausalNetError, ValueError):
    pass


class GraphError(CausalNetError, ValueError):
    pass


class StatisticUndefinedError(GraphError):
    pass


class NumericalError(CausalNetError, ArithmeticError):
    pass


class ConvergenceError(CausalNetError, RuntimeError):
    exit_code = 3
