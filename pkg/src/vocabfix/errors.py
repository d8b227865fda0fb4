"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    """An argument violates an operation's preconditions."""


class ParseError(ValueError):
    """A file row could not be parsed."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        where = []
        if path is not None:
            where.append(str(path))
        if lineno is not None:
            where.append(f"line {lineno}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class ConfigError(ValueError):
    """Inconsistent or out-of-range configuration."""


class PoolError(InvalidInputError):
    """A negative-candidate pool cannot supply enough phrases."""

    def __init__(self, pool, needed, available):
        self.pool = pool
        super().__init__(
            f"pool '{pool}' has {available} usable phrases, {needed} needed")
