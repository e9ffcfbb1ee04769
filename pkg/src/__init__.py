# Finite-dimensional operator algebra structure toolkit
__version__ = "0.1.0"
