"""Exception types shared across the package."""


class NodeSpeedError(Exception):
    """Base class for all errors raised by nodespeed."""


class InputError(NodeSpeedError, ValueError):
    """Invalid or empty input. The CLI maps this to exit code 2."""
