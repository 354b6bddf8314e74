"""Word dissemination statistics for user/thread-structured text corpora."""

__version__ = "0.1.0"
