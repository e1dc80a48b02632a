"""Adaptive mesh refinement for the 1D+1V Vlasov-Poisson system."""
__version__ = "0.1.0"
