"""Synthetic environments: hierarchical items, graphical factors, transitions."""
