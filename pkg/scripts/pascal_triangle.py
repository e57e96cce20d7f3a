"""Independent k-cycle counts of the d-closed complexes, laid out as a triangle."""

from topolasso.homology import betti_numbers, d_closed_complex, expected_independent_cycles

D_MAX = 6

print("d \\ k " + "".join(f"{k:>6}" for k in range(1, D_MAX + 1)))
for d in range(1, D_MAX + 1):
    row = []
    for k in range(1, d + 1):
        got = betti_numbers(d_closed_complex(k, d + 2))[0][k]
        assert got == expected_independent_cycles(k, d)
        row.append(f"{got:>6}")
    print(f"{d:<6}" + "".join(row))
