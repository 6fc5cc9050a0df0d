# Console and log.txt handlers in the style of the detectron2 logger.
import functools
import logging
import os
import sys

from termcolor import colored

_PLAIN_FORMAT = "[%(asctime)s.%(msecs)03d] %(name)s %(levelname)s: %(message)s"
_DATE_FORMAT = "%m/%d %H:%M:%S"
_LEVEL_COLORS = {
    logging.WARNING: ("WARNING", "yellow", []),
    logging.ERROR: ("ERROR", "red", ["underline"]),
    logging.CRITICAL: ("CRITICAL", "red", ["bold", "underline"]),
}


class _ColorfulFormatter(logging.Formatter):
    """Shortens ``stnoffload.sim.engine`` to ``stn.sim.engine`` and tags warnings and errors."""

    def __init__(self, *args, root_name, abbrev_name="", **kwargs):
        self._root_name = root_name + "."
        self._abbrev_name = abbrev_name + "." if abbrev_name else ""
        super(_ColorfulFormatter, self).__init__(*args, **kwargs)

    def formatMessage(self, record):
        record.name = record.name.replace(self._root_name, self._abbrev_name)
        log = super(_ColorfulFormatter, self).formatMessage(record)
        if record.levelno not in _LEVEL_COLORS:
            return log
        label, color, attrs = _LEVEL_COLORS[record.levelno]
        return colored(label, color, attrs=attrs) + " " + log


def setup_logger(output=None, *, color=None, name="stnoffload", abbrev_name="stn", verbosity=1):
    """
    Configure the package logger for one run.

    Handlers from an earlier call are replaced, so a process that runs several
    commands logs each of them to its own output directory.

    Args:
        output (str): directory for ``log.txt``, or a ``.txt``/``.log`` file name.
            None logs to the console only.
        color (bool): colored console output; defaults to whether stdout is a tty.
        verbosity (int): console level, 0 warnings, 1 info, 2 debug. The file
            always receives debug records.

    Returns:
        logging.Logger
    """
    logger = logging.getLogger(name)
    logger.setLevel(logging.DEBUG)
    logger.propagate = False
    for handler in list(logger.handlers):
        logger.removeHandler(handler)

    if color is None:
        color = sys.stdout.isatty()
    ch = logging.StreamHandler(stream=sys.stdout)
    ch.setLevel({0: logging.WARNING, 1: logging.INFO}.get(verbosity, logging.DEBUG))
    if color:
        ch.setFormatter(
            _ColorfulFormatter(
                colored("[%(asctime)s.%(msecs)03d %(name)s]: ", "green") + "%(message)s",
                datefmt=_DATE_FORMAT,
                root_name=name,
                abbrev_name=abbrev_name,
            )
        )
    else:
        ch.setFormatter(logging.Formatter(_PLAIN_FORMAT, datefmt=_DATE_FORMAT))
    logger.addHandler(ch)

    if output is not None:
        filename = output if output.endswith((".txt", ".log")) else os.path.join(output, "log.txt")
        os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
        fh = logging.StreamHandler(_cached_log_stream(os.path.abspath(filename)))
        fh.setLevel(logging.DEBUG)
        fh.setFormatter(logging.Formatter(_PLAIN_FORMAT, datefmt=_DATE_FORMAT))
        logger.addHandler(fh)
    return logger


# one open stream per log file, shared by every run that writes to it
@functools.lru_cache(maxsize=None)
def _cached_log_stream(filename):
    return open(filename, "a", encoding="utf-8", buffering=1)
