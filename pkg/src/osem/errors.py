"""Exception types shared across the package.

The CLI maps these onto stable exit codes: InputError -> 2, everything
else raised deliberately by the library -> 3.
"""


class OsemError(Exception):
    """Base class for errors raised deliberately by this package."""


class InputError(OsemError):
    """Invalid user-supplied data, file, or argument."""


class StructuralError(OsemError):
    """A graph violates a structural requirement (e.g. contains a cycle)."""


class NumericError(OsemError):
    """A numerical computation left its domain of validity."""
