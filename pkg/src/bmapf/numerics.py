"""Shared numeric constants."""

import math

# log of the smallest positive double (subnormal).  Used to floor log
# quantities that must stay strictly above log(0).
LOG_TINY = math.log(math.ulp(0.0))

HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)
