"""Predicting kernels and recovery tools for sequences with periodic spectral degeneracy."""
