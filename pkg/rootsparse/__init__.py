"""Roots of derivatives of polynomial sequences in root-sparse regions."""
