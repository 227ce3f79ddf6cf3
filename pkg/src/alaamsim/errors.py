"""Exception hierarchy shared by all modules."""


class AlaamError(Exception):
    """Base class for errors raised by alaamsim."""


class InputError(AlaamError, ValueError):
    """Invalid argument or malformed input data."""


class DegenerateDataError(AlaamError):
    """Observed data admits no finite estimate (e.g. constant outcomes)."""


class DataFormatError(InputError):
    """A file could not be parsed; carries the path and line number."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
