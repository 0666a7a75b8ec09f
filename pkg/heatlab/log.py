import logging
import sys

FORMAT = "[%(asctime)s %(name)s] %(message)s"
DATEFMT = "%Y-%m-%d %H:%M:%S"


class _StderrHandler(logging.StreamHandler):
    """Writes to whatever `sys.stderr` is at emit time"""

    @property
    def stream(self):
        return sys.stderr

    @stream.setter
    def stream(self, value):
        pass


def configure(level="INFO"):
    """Send all heatlab logs to stderr; safe to call more than once"""
    root = logging.getLogger("heatlab")
    root.setLevel(level)
    if not any(isinstance(h, _StderrHandler) for h in root.handlers):
        handler = _StderrHandler()
        handler.setFormatter(logging.Formatter(FORMAT, DATEFMT))
        root.addHandler(handler)
    return root


def make_log(name):
    """Return a `log(message, level=logging.INFO)` callable bound to `heatlab.<name>`"""
    logger = logging.getLogger(f"heatlab.{name}")

    def log(message, level=logging.INFO):
        logger.log(level, message)

    log.logger = logger
    return log
