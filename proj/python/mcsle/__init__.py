"""Python access to the mcsle lattice library.

The heavy lifting lives in the compiled ``_mcsle`` extension; this package
re-exports it and adds a couple of conveniences.
"""

from ._mcsle import *  # noqa: F401,F403
from ._mcsle import DomainSpec, Hole, LatticeDomain, McsleError

__all__ = [name for name in dir() if not name.startswith("_")]


def disk(mesh, holes=(), **kwargs):
    """Unit disk with circular holes given as ((cx, cy), r) pairs."""
    spec = DomainSpec(mesh=mesh, holes=[Hole(c, r) for c, r in holes], **kwargs)
    return LatticeDomain.build_circle(spec)
