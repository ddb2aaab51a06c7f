"""The area functional of (t + |x - x0|)^-1 blows up with depth while C stays bounded."""
from carleson_sparse import area, carleson, make_grid
from carleson_sparse.corpus import named_field

for J in range(4, 11):
    f = named_field(make_grid(1, (0, 1), J), "counterexample")
    print(f"J={J:2d}  max A = {area(f).values.max():7.4f}  max C = {carleson(f).values.max():.4f}")
