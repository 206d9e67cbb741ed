"""Independent enumeration oracles shared by several test modules."""

import itertools


def log_kernel_one_variable(p: int, prec: int, twist: int) -> set[tuple[int, ...]]:
    """Coefficient vectors (c_m for T^m dT, m < prec - 1) with C^{-1}w - w exact, by enumeration."""
    width = prec - 1
    found = set()
    for coeffs in itertools.product(range(p), repeat=width):
        if any(coeffs[m] for m in range(min(twist, width))):
            continue
        defect = [(-c) % p for c in coeffs]
        for m, c in enumerate(coeffs):
            image = p * m + p - 1  # C^{-1}(T^m dT) = T^{pm + p - 1} dT
            if image < width:
                defect[image] = (defect[image] + c) % p
        if all(defect[m] == 0 for m in range(width) if (m + 1) % p == 0):
            found.add(coeffs)
    return found
