"""chorkit: write global protocols, run them, compile them to process
networks, repair the ones that will not compile, and check the semantic
correspondences between all of the above by bounded exploration."""

from . import amendment, cc, projection, sp, syntax, verifier

__all__ = ["amendment", "cc", "projection", "sp", "syntax", "verifier"]

__version__ = "0.1.0"
