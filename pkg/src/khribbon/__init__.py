"""Khovanov homology over F2 and Z with cobordism maps, ribbon movies and Sq1."""

from .diagram import Diagram, Tangle, parse_diagram, parse_tangle
from .khcomplex import build_complex, khovanov_homology, verify_shumakovitch
from .movie import Move, Movie, movie_chain_map
from .steenrod import sq1, sq1_reduced

__version__ = "0.1.0"

__all__ = [
    "Diagram",
    "Tangle",
    "parse_diagram",
    "parse_tangle",
    "build_complex",
    "khovanov_homology",
    "verify_shumakovitch",
    "Move",
    "Movie",
    "movie_chain_map",
    "sq1",
    "sq1_reduced",
]
