import os

try:
    fname = os.path.join(os.path.dirname(__file__), "VERSION")
    __version__ = open(fname).read().strip()
except Exception:
    __version__ = "???"
