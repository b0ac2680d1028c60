"""Core containers: dense linear algebra, networks, losses and regime registry."""
