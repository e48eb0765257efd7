"""slrank: exact rank-metric experiments on finite special linear groups."""

__version__ = "0.1.0"
