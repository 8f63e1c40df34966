"""Frozen mpmath reference values for the special-function tests.

Writes airy_table.inc, bessel_table.inc and zeta_table.inc next to this script.
Run: python3 tests/oracles/specfun_tables.py
"""
from pathlib import Path

import mpmath as mp

mp.mp.dps = 40
HERE = Path(__file__).resolve().parent

AIRY_POINTS = [
    (0, 0), (1, 0), (-1, 0), (4.5, 0), (-4.5, 0), (-10, 0), (-25, 0), (12, 0), (30, 0),
    (2, 3), (-3, 2), (-6, -1), (0.5, -0.5), (8, 8), (-9, 9), (0, 15), (5, -12),
]

BESSEL_POINTS = [(n, x) for n in (0, 1, 5, 50, 200, 500) for x in (1e-3, 0.5, 1, 10, 100, 700)]
MODIFIED_POINTS = [(n, x) for n in (0, 1, 5, 50, 200) for x in (1e-2, 0.5, 3, 40, 300)]
ZETA_POINTS = [0.2, 0.3, 0.5, 0.8, 0.99, 0.999, 0.9995, 1.0005, 1.001, 1.01, 1.2, 1.5, 2, 3, 5, 10]


def sci(v):
    """Mantissa and decimal exponent, so values outside double range survive."""
    v = mp.mpf(v)
    if v == 0:
        return "0.0, 0"
    e = int(mp.floor(mp.log10(abs(v))))
    m = v / mp.mpf(10) ** e
    return f"{mp.nstr(m, 20)}, {e}"


def airy():
    rows = []
    for re, im in AIRY_POINTS:
        w = mp.mpc(re, im)
        a, da = mp.airyai(w), mp.airyai(w, derivative=1)
        rows.append(f"    {{{re}, {im}, {mp.nstr(a.real, 20)}, {mp.nstr(a.imag, 20)}, "
                    f"{mp.nstr(da.real, 20)}, {mp.nstr(da.imag, 20)}}},")
    (HERE / "airy_table.inc").write_text("\n".join(rows) + "\n")


def bessel():
    rows = []
    for n, x in BESSEL_POINTS:
        x = mp.mpf(x)
        rows.append(f"    {{{n}, {mp.nstr(x, 20)}, {sci(mp.besselj(n, x))}, {sci(mp.bessely(n, x))}}},")
    (HERE / "bessel_table.inc").write_text("\n".join(rows) + "\n")
    rows = []
    for n, x in MODIFIED_POINTS:
        x = mp.mpf(x)
        rows.append(f"    {{{n}, {mp.nstr(x, 20)}, {sci(mp.besseli(n, x))}, {sci(mp.besselk(n, x))}}},")
    (HERE / "modified_table.inc").write_text("\n".join(rows) + "\n")


def zeta_closed(rho):
    rho = mp.mpf(rho)
    if rho < 1:
        w = mp.sqrt(1 - rho**2)
        g = mp.log((1 + w) / rho) - w
        return (mp.mpf(3) / 2 * g) ** (mp.mpf(2) / 3)
    w = mp.sqrt(rho**2 - 1)
    f = w - mp.acos(1 / rho)
    return -((mp.mpf(3) / 2 * f) ** (mp.mpf(2) / 3))


def zeta():
    rows = [f"    {{{r}, {mp.nstr(zeta_closed(r), 20)}}}," for r in ZETA_POINTS]
    (HERE / "zeta_table.inc").write_text("\n".join(rows) + "\n")


if __name__ == "__main__":
    airy()
    bessel()
    zeta()
