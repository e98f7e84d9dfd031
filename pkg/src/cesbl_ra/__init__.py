"""Joint activity detection and channel estimation for asynchronous grant-free access."""

__version__ = "0.1.0"
