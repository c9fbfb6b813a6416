"""Physical constants shared across the simulator.

All values are SI.  The speed of light is exact by definition; the
gravitational parameter and rotation rate follow the usual GNSS
interface conventions.
"""

# Speed of light in vacuum, m/s (exact).
SPEED_OF_LIGHT = 299_792_458.0

# WGS-84 reference ellipsoid.
WGS84_A = 6_378_137.0                 # semi-major axis, m
WGS84_F = 1.0 / 298.257223563         # flattening
WGS84_B = WGS84_A * (1.0 - WGS84_F)   # semi-minor axis, m
WGS84_E2 = WGS84_F * (2.0 - WGS84_F)  # first eccentricity squared

# Mean Earth radius used when turning a shell altitude into a circular
# orbit radius (keeps "altitude" round numbers round).
EARTH_RADIUS_MEAN = 6_371_000.0

# Earth gravitational parameter, m^3/s^2.
MU_EARTH = 3.986004418e14

# Earth rotation rate, rad/s.
OMEGA_EARTH = 7.2921151467e-5
