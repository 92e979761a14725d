"""Module to handle logging for experiment runs."""

import logging


NOTICE = 25


class ReportFilter(logging.Filter):
    """A logging filter that prefixes records according to their severity."""

    # pylint: disable=too-few-public-methods

    prefixes = {
        logging.DEBUG: "debug: ",
        logging.INFO: "",
        NOTICE: "",
        logging.WARNING: "warning: ",
        logging.ERROR: "error: ",
        logging.CRITICAL: "error: ",
    }

    def filter(self, record):
        record.levelprefix = self.prefixes.get(record.levelno, "")
        return True


def setup_logging(verbose: bool = False):
    """Set up logging for the package root logger."""
    root_logger = logging.getLogger(__name__.rpartition(".")[0])

    if logging.getLevelName("NOTICE") == NOTICE and root_logger.handlers:
        # Already configured; only the verbosity may change
        for handler in root_logger.handlers:
            handler.setLevel(logging.DEBUG if verbose else logging.INFO)
        return

    logging.addLevelName(NOTICE, "NOTICE")

    handler = logging.StreamHandler()
    handler.setLevel(logging.DEBUG if verbose else logging.INFO)
    handler.setFormatter(logging.Formatter("%(levelprefix)s%(message)s"))
    handler.addFilter(ReportFilter())

    root_logger.addHandler(handler)
    root_logger.setLevel(logging.DEBUG)


class LoggingMixin:
    """A mixin class for logging."""

    # pylint: disable=too-few-public-methods

    @property
    def logger(self) -> logging.Logger:
        """Create and return a logger for instance or class."""
        if not hasattr(self, "_logger") or not self._logger:
            self._logger = logging.getLogger(
                f"{self.__class__.__module__}.{self.__class__.__name__}"
            )
        return self._logger
