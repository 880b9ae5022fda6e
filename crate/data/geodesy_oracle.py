"""Reference geodesy values at 40 significant digits (mpmath).

Independent of the Rust code: ENU comes from the ECEF difference rotated by
the tangent-plane basis; the meridian arc is integrated numerically.
"""
import json
from mpmath import mp, mpf, sin, cos, sqrt, radians, quad

mp.dps = 40
A = mpf(6378137)
F = 1 / mpf("298.257223563")
E2 = F * (2 - F)


def ecef(lat, lon, alt):
    la, lo = radians(mpf(lat)), radians(mpf(lon))
    n = A / sqrt(1 - E2 * sin(la) ** 2)
    return ((n + alt) * cos(la) * cos(lo), (n + alt) * cos(la) * sin(lo), (n * (1 - E2) + alt) * sin(la))


def enu(p, o):
    x, y, z = ecef(*p)
    x0, y0, z0 = ecef(*o)
    la, lo = radians(mpf(o[0])), radians(mpf(o[1]))
    d = (x - x0, y - y0, z - z0)
    e = -sin(lo) * d[0] + cos(lo) * d[1]
    n = -sin(la) * cos(lo) * d[0] - sin(la) * sin(lo) * d[1] + cos(la) * d[2]
    u = cos(la) * cos(lo) * d[0] + cos(la) * sin(lo) * d[1] + sin(la) * d[2]
    return (e, n, u)


def meridian_arc(lat0, lat1):
    m = lambda phi: A * (1 - E2) / (1 - E2 * sin(phi) ** 2) ** mpf(1.5)
    return quad(m, [radians(mpf(lat0)), radians(mpf(lat1))])


origin = (mpf("42.3365"), mpf("-71.0578"), mpf(0))
corner = (mpf("42.3320"), mpf("-71.0638"), mpf(0))
high = (mpf("42.3410"), mpf("-71.0518"), mpf("35.5"))
out = {
    "ecef_origin": [float(v) for v in ecef(*origin)],
    "ecef_high": [float(v) for v in ecef(*high)],
    "enu_corner": [float(v) for v in enu(corner, origin)],
    "enu_high": [float(v) for v in enu(high, origin)],
    "equator_0001_north": [float(v) for v in enu((mpf("0.001"), mpf(0), mpf(0)), (mpf(0), mpf(0), mpf(0)))],
    "meridian_arc_0001": float(meridian_arc(0, mpf("0.001"))),
    "semi_minor": float(A * (1 - F)),
}
print(json.dumps(out, indent=1))
