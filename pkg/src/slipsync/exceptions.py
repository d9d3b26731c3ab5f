"""Exception types raised by slipsync."""


class ConfigError(ValueError):
    """Invalid configuration or argument value."""


class OutOfSupportError(ValueError):
    """A requested sampling instant falls outside the stream's time support."""

    def __init__(self, index, instant, support):
        self.index = index
        self.instant = instant
        self.support = support
        lo, hi = support
        super().__init__(
            f"sampling instant k={index} at t={instant:.6g} lies outside "
            f"the interpolable support [{lo:.6g}, {hi:.6g}]"
        )
