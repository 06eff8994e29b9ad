"""Heat-trace asymptotics of Laplacians on manifolds with wedge singularities."""

__version__ = "0.1.0"
