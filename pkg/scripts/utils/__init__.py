"""Estimation, testing and simulation modules for stable-noise deconvolution."""
