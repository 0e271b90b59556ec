"""Piecewise quadratic Kolmogorov systems: Lyapunov quantities, centers and crossing cycles."""

APP_VERSION = "1.0"
