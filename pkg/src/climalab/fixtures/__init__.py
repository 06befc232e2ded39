"""Deterministic fixture corpus: catalog rows, seeded library, scripted replies."""
