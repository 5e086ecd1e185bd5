"""Classical simulation toolkit for the Kitaev honeycomb model as a fermion encoding."""
from kfsim.lattice import Boundary, Lattice, LinkType, Site, build_lattice

__all__ = ["Boundary", "Lattice", "LinkType", "Site", "build_lattice"]
