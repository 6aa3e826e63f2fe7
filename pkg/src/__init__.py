# Almost-Prime Moment Lab Package
import logging

__version__ = '1.0.0'


def configure_logging(level: str = 'WARNING') -> None:
    """Send lab logs to stderr; only the CLI calls this"""
    handler = logging.StreamHandler()
    handler.setFormatter(logging.Formatter('%(asctime)s %(levelname)s %(name)s: %(message)s'))
    root = logging.getLogger('src')
    root.handlers[:] = [handler]
    root.setLevel(getattr(logging, level.upper(), logging.WARNING))
    root.propagate = False
