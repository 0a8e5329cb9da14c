"""Exact algebra workbench for filtered A-infinity structures and friends."""
