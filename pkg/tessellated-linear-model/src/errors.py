"""
Exception types raised by the TLM library; the CLI maps each to an exit code
"""


class TLMError(Exception):
    """Base class for all library errors"""
    exit_code = 1


class ConfigError(TLMError, ValueError):
    """Invalid configuration value or document"""
    exit_code = 2


class DataError(TLMError, ValueError):
    """Unreadable, malformed or dimensionally inconsistent data"""
    exit_code = 3


class NumericError(TLMError, ArithmeticError):
    """Singular systems, diverging losses and other numerical failures"""
    exit_code = 4
