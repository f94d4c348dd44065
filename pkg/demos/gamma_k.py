"""Tabulate the moment coefficient gamma_K for real K and its conjectured bracket."""
import math

from rmtlab import analytic

print(f"{'K':>5} {'gamma_K':>12} {'lower':>10} {'upper':>10}")
for i in range(1, 10):
    k = i / 10
    g = math.exp(analytic.log_gamma_k_integral(k).log_value)
    lo, hi = analytic.gamma_k_bounds(k)
    print(f"{k:5.1f} {g:12.8f} {lo:10.6f} {hi:10.6f}")

for k in (1, 2, 3, 4):
    print(f"gamma_{k} = {analytic.gamma_k_integer(k).value:.6e}")
