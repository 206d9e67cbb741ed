"""Verifiers: compute both sides of each comparison as subspaces, plus the constructive decompositions."""
