"""Besov and coorbit machinery on abelian groups and the Heisenberg group."""
