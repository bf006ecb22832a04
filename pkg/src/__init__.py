"""capnet - Sum-rate capacity toolbox for multi-message interference networks"""

__version__ = "0.1.0"
