"""Exception types shared across the library.

Everything raised on purpose derives from ApolloOptError so callers can
catch library failures without trapping bugs.
"""


class ApolloOptError(Exception):
    """Base class for all library errors."""


class ShapeMismatchError(ApolloOptError):
    """Two operands disagree on shape. The message names both shapes."""

    def __init__(self, left_shape, right_shape, op=""):
        self.left_shape = tuple(left_shape)
        self.right_shape = tuple(right_shape)
        what = f" in {op}" if op else ""
        super().__init__(
            f"shape mismatch{what}: {self.left_shape} vs {self.right_shape}"
        )


class DivisionByZeroError(ApolloOptError):
    """Elementwise division hit a zero denominator entry."""


class ConfigError(ApolloOptError):
    """Invalid hyperparameter, config key, or config file contents."""


class NonFiniteGradientError(ApolloOptError):
    """A gradient contained NaN or Inf. Carries the step index."""

    def __init__(self, step, detail=""):
        self.step = step
        msg = f"non-finite gradient at step {step}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class NonFiniteEvalError(ApolloOptError):
    """An objective evaluation was NaN or Inf. Names the coordinate if known."""


class InfeasibleSecantError(ApolloOptError):
    """The constrained least-change problem has no feasible direction (s = 0)."""


class DivergenceError(ApolloOptError):
    """A training run produced a non-finite loss; the trace was truncated."""

    def __init__(self, step, message=""):
        self.step = step
        super().__init__(message or f"run diverged at step {step}")


class CheckpointError(ApolloOptError):
    """Unreadable, unversioned, or inconsistent optimizer state file."""
