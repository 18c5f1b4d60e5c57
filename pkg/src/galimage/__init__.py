"""galimage: mod-5 Galois image classification for genus-2 Jacobians.

The package matches Frobenius statistics of a curve's Jacobian against the
exact local distributions of the admissible subgroup classes of GSp4(F5),
then sharpens the candidate set with rational and quadratic 5-torsion
searches.
"""

from .algebra import (
    BigRational,
    FpField,
    Poly,
    QuadField,
    QuadFieldElement,
    RationalField,
    QQ,
    crt,
    poly_gcd,
    poly_xgcd,
    rational_reconstruct,
    sqrt_mod_p,
    squarefree_part,
)
from .gspfour import (
    GROUP_ORDER,
    GspElement,
    LatticeFormatError,
    LatticeVerificationError,
    LocalDistribution,
    ResourceError,
    Subgroup,
    SubgroupLattice,
    build_named_subgroup,
    enumerate_subgroups_small,
    generate_subgroup,
    has_group_eigenspace,
    invariant_pair,
    is_admissible,
    load_lattice,
    local_distribution,
    similitude,
    stream_invariant_pairs,
    verify_lattice,
)

__version__ = "0.1.0"

__all__ = [
    "BigRational",
    "FpField",
    "Poly",
    "QuadField",
    "QuadFieldElement",
    "RationalField",
    "QQ",
    "crt",
    "poly_gcd",
    "poly_xgcd",
    "rational_reconstruct",
    "sqrt_mod_p",
    "squarefree_part",
    "GROUP_ORDER",
    "GspElement",
    "LatticeFormatError",
    "LatticeVerificationError",
    "LocalDistribution",
    "ResourceError",
    "Subgroup",
    "SubgroupLattice",
    "build_named_subgroup",
    "enumerate_subgroups_small",
    "generate_subgroup",
    "has_group_eigenspace",
    "invariant_pair",
    "is_admissible",
    "load_lattice",
    "local_distribution",
    "similitude",
    "stream_invariant_pairs",
    "verify_lattice",
    "__version__",
]
