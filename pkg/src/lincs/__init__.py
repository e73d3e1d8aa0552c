"""Linear control systems on SL(2): flows, cylinder projection and control sets."""
__version__ = "0.1.0"
