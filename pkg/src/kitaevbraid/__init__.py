"""Exact six-site simulation of Majorana braiding on two Kitaev chains."""

__version__ = "0.1.0"
