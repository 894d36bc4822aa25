# Numerical core: grid, transforms, state, dynamics, diagnostics
