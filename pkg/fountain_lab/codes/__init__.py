"""Finite-field algebra, degree distributions and LT, LRFC and Raptor codes."""
