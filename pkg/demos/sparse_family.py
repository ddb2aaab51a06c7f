"""Build a sparse family for one field and check the pointwise bound."""
from carleson_sparse import (build_sparse_family, check_sparse_domination, make_grid, poisson_kernel,
                             verify_sparse)
from carleson_sparse.corpus import named_field

g = make_grid(1, (0, 1), 7)
f = named_field(g, "dipole-vertical")
k = poisson_kernel(1)
b = build_sparse_family(k, f)
print(f"{len(b.family.members)} cubes, c = {b.c:g}")
print("1/2-sparse:", bool(verify_sparse(b.family, 0.5, g)))
d = check_sparse_domination(k, f, b)
print(f"|Sf| <= {d.constant:.4g} * sparse sum, violations: {d.violations}")
