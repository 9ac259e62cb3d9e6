"""Why kappa and tau take the values they do.

The level-2 vector (kappa/2 L_{-1}^2 - 2 L_{-2} + tau/2 J.J) psi is null
only on the line fixed by the level.  Nudging kappa off it, or using the
spin-1 field, leaves an O(1) residual.
"""
from multisle import model_params, null_state_residual

for k in (2, 3, 5, 10):
    p = model_params(k)
    on = max(null_state_residual(k, 1, p.kappa, p.tau))
    off = max(null_state_residual(k, 1, float(p.kappa) + 0.1, p.tau))
    spin1 = max(null_state_residual(k, 2, p.kappa, p.tau))
    print(f"k={k:2d}  on line {on:.1e}   kappa+0.1 {off:.3f}   spin-1 field {spin1:.3f}")
