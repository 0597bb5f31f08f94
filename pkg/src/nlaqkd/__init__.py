"""Key rates of NLA-assisted continuous-variable QKD."""

__version__ = "0.1.0"
