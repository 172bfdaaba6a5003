"""Constants shared by the numpy and numba kernel backends.

The packed scene parameter vector layout (float64, length 24):

    0:3    head ellipsoid radii
    3:6    nose ellipsoid radii
    6:9    nose center offset
    9:11   eye socket radii (left, right)
    11:14  left socket center
    14:17  right socket center
    17:20  base albedo RGB
    20:22  blotch coefficients (b1, b2)
    22     specular intensity k_s
    23     shininess exponent
"""

N_SCENE_PARAMS = 24

K_UNION = 0.08      # smooth-union blend width (head + nose)
K_SOCKET = 0.05     # smooth-subtraction blend width (eye sockets)

SAFETY = 0.8        # sphere-tracing step factor on the approximate SDF
SURF_TOL = 1e-6     # |sdf| convergence target at the surface
MIN_STEP = 1e-4     # march floor; overshoots are recovered by bisection
MAX_MARCH = 1024
MAX_BISECT = 100

NORMAL_H = 1e-4     # central-difference step for SDF normals
SHADE_BAND = 8.0    # shade field points within this many eps_surf of the surface

# trace status codes
MISS = 0
HIT = 1
OVERFLOW = 2
