"""Closed-form CIR characteristic function for models/cir_ou.json at u2 = 0."""
import json
import math
import pathlib

here = pathlib.Path(__file__).resolve().parent
p = json.loads((here / "../../models/cir_ou.json").read_text())
a1, a2 = p["a1"], p["a2"]
alpha = p["alpha"][0][0] + p["alpha"][0][1]
t, u1, x1, x2 = 1.0, -1.0, 1.0, 0.0

e = math.exp(-a1 * t)
den = 1 - alpha * u1 * (1 - e) / a1
v1 = u1 * e / den
psi = -(a2 / alpha) * math.log(den)
value = math.exp(x1 * v1 + psi)

print("t,u1_re,u1_im,u2_im,value_re,value_im")
print(f"{t!r},{u1!r},0,0,{value!r},0")
