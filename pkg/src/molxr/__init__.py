"""Multiuser real-time XR collaboration system for 3D molecular scenes."""

__version__ = "0.1.0"
