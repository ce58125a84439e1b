""" Logging setup shared by the services and library packages of the pipeline """

from pathlib import Path
import sys
import logging
import coloredlogs

from .configuration import Configuration

coloredlogs.DEFAULT_LEVEL_STYLES = {"debug": {"color": 244}, "info": {"color": 250},
                                    "warning": {"color": 214}, "error": {"color": 203},
                                    "critical": {"color": 196, "bold": True}}
coloredlogs.DEFAULT_FIELD_STYLES = {"asctime": {"color": "green"},
                                    "levelname": {"color": "white"},
                                    "name": {"color": 25}}

LOG_FORMAT = "%(asctime)s [%(name)s] %(levelname)s: %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

# Names of the loggers that already carry handlers
_CONFIGURED_LOGGERS = set()


def _parse_level(level_name):
    return logging.getLevelName(level_name) if level_name in (
        "CRITICAL", "ERROR", "WARNING", "INFO") else logging.DEBUG


class LoggingConfiguration:

    """
    #==============================================================================================#
    #   TYPE     NAME                   CONFIGURATION KEY     MEANING                              #
    #==============================================================================================#
    #  string   log_level_console      logLevelConsole       #Lowest level printed on std.out      #
    #  bool     log_to_file            logToFile             #Also write events to a file          #
    #  string   log_level_file         logLevelFile          #Lowest level written to the file     #
    #  string   log_file_write_mode    logFileWriteMode      #"a" appends, "w" truncates           #
    #  Path     log_file_path          logFilePath           #The log file                         #
    #  bool     show_progress          showProgress          #Training draws per-epoch progress    #
    #==============================================================================================#
    """

    # Packaged default document and its schema, next to this module
    default_conf_path = "logging.json"
    schema_path = "logging.schema.json"

    def to_dict(self):
        return {"log_level_console": self.log_level_console, "log_to_file": self.log_to_file,
                "log_level_file": self.log_level_file,
                "log_file_write_mode": self.log_file_write_mode,
                "log_file_path": str(self.log_file_path), "show_progress": self.show_progress}

    def __str__(self):
        return str(self.to_dict())

    def _file_handler(self, logger):
        log_dir = self.log_file_path.parent
        if not log_dir.exists():
            logger.warning("Creating the missing log folder %s", log_dir.absolute())
            log_dir.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(self.log_file_path, mode=self.log_file_write_mode)
        handler.setFormatter(logging.Formatter(LOG_FORMAT, DATE_FORMAT))
        handler.setLevel(_parse_level(self.log_level_file))
        return handler

    def attach(self, logger):

        """
        DESCRIPTION:  Give a logger its console handler (coloredlogs) and, when configured,
                      its file handler; a logger is configured at most once

        ARGUMENTS:    - logger:   The logger of a service or library package

        RETURNS:      The same logger

        RAISES:       - OSError:  If the log file cannot be opened
        """

        if logger.name in _CONFIGURED_LOGGERS:
            return logger
        _CONFIGURED_LOGGERS.add(logger.name)

        console = logging.StreamHandler(sys.stdout)
        console.setFormatter(coloredlogs.ColoredFormatter(LOG_FORMAT, DATE_FORMAT))
        console.setLevel(_parse_level(self.log_level_console))
        logger.addHandler(console)
        logger.setLevel(console.level)
        logger.propagate = False

        if self.log_to_file:
            handler = self._file_handler(logger)
            logger.addHandler(handler)
            logger.setLevel(min(logger.level, handler.level))

        return logger

    def __init__(self, config=None):

        """
        DESCRIPTION:  Load and validate a logging configuration

        ARGUMENTS:    - config:   Logging document; the packaged "logging.json" when None

        RAISES:       - OSError, JSONDecodeError, ValidationError
        """

        here = Path(__file__).parent
        field = Configuration(here / LoggingConfiguration.default_conf_path,
                              here / LoggingConfiguration.schema_path, field=config).field

        self.log_level_console = field["logLevelConsole"]
        self.log_to_file = field["logToFile"]
        self.log_level_file = field["logLevelFile"]
        self.log_file_write_mode = field["logFileWriteMode"]
        self.log_file_path = Path(field["logFilePath"])
        self.show_progress = field["showProgress"]


# Shared by every logger initialized afterwards; pipeline.py may replace it
_ACTIVE_CONFIGURATION = None


def use_logging_configuration(logging_configuration):
    global _ACTIVE_CONFIGURATION
    _ACTIVE_CONFIGURATION = logging_configuration


def active_logging_configuration():
    """The logging configuration in use (the packaged default until replaced)."""
    global _ACTIVE_CONFIGURATION
    if _ACTIVE_CONFIGURATION is None:
        _ACTIVE_CONFIGURATION = LoggingConfiguration()
    return _ACTIVE_CONFIGURATION


def initialize_logger(name):
    """Return logging.getLogger(name) with the pipeline's handlers attached.

    Args:
        name (str): Normally the module's __name__.
    """
    return active_logging_configuration().attach(logging.getLogger(name))
