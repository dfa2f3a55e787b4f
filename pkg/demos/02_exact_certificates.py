"""Exact rational lower-bound certificates, verified without any floating point.

A certificate asserts f - gamma = sum_i phi_i h_i + sum_J sigma_J g^J with
SOS sigma_J, proving f >= gamma on the feasible set.  Verification expands
the identity over exact rationals; any tampering is detected.
"""

from fractions import Fraction as F

from momentsos import Certificate, verify_certificate
from momentsos.gallery import certified_fixtures

for name, fx in certified_fixtures().items():
    verdict = verify_certificate(fx.problem, fx.certificate)
    print(f"{name:<26} gamma = {str(fx.certificate.gamma):>5}  "
          f"k = {fx.certificate.k}  -> {verdict.status}")

# Tamper with one certificate and watch verification fail.
fx = certified_fixtures()["line-on-quartic-origin"]
c = fx.certificate
bad = Certificate(gamma=c.gamma + F(1, 100), k=c.k, kind=c.kind,
                  ideal_part=c.ideal_part, cone_part=c.cone_part)
verdict = verify_certificate(fx.problem, bad)
print()
print(f"tampered gamma: ok={verdict.ok}  reason: {verdict.reason}")
