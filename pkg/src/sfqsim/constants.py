"""Physical constants (SI units)."""

# Reduced Planck constant, J*s
HBAR = 1.054571817e-34

# Superconducting flux quantum h/2e, Wb
PHI0 = 2.067833848e-15

# Electron charge magnitude, C (used for eV <-> J conversion)
ELEMENTARY_CHARGE = 1.602176634e-19
