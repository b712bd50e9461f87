"""子步 ODE 求解器"""

from dlra.solvers.substep import integrate, integrate_with_stats

__all__ = ["integrate", "integrate_with_stats"]
