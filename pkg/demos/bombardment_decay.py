"""
Bombardment and slow decay
==========================

A heavy particle is hit by ever lighter, ever slower particles.  With
the right initial speed it comes to rest exactly at the centre of mass,
and the energy gap decays like a power of time.
"""

from stickyflow import (
    decay_fit,
    energy_gap_series,
    engine_cross_validation,
    exponent_sweep,
    reference_family,
    run_recursion,
)

spec = reference_family()
run = run_recursion(spec, K=60)
print("admissible speed a =", run.a)
print("first contact (v1, t1, y1) =", tuple(str(q) for q in (run.v[1], run.t[1], run.y[1])))
print("momentum identity exact for every k:", all(r == 0 for r in run.momentum_residuals))

gaps = energy_gap_series(run, spec)
print(f"rest point {float(gaps.y_bar):.15f} +- {float(gaps.y_bar_error):.1e}")
for k in (0, 10, 20, 40, 60):
    print(f"  k={k:2d}  t={float(gaps.t[k]):.3e}  e={float(gaps.e[k]):.3e}")

fit = decay_fit(gaps.t[20:], gaps.e[20:])
print(f"fitted exponent over k in [20, 60]: {fit.gamma:.6f}")

# the event engine on a truncated system agrees with the recursion
cv = engine_cross_validation(spec, 12, renormalize="scale")
print("engine matches recursion through k =", cv.matched_through)

print("\nslower incoming speeds b_k = n^-k:")
for row in exponent_sweep((2, 3, 4, 8, 16), K=50):
    print(f"  n={row['n']:2d}  gamma={row['gamma']:.4f}")
