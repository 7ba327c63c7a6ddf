from django.conf import settings

DEFAULTS = {
    'THREADS': 1,
    'MODULUS_RESOLUTION_1D': 256,
    'MODULUS_RESOLUTION_2D': 96,
    'IMAGE_RESOLUTION_2D': 64,
    'LIPSCHITZ_RESOLUTION': 128,
    'RK4_STEPS_PER_UNIT_TIME': 300,
    'PINV_TOLERANCE': 1e-10,
    'HULL_TOLERANCE': 1e-6,
    'BOX_TOLERANCE': 1e-12,
    'GRADIENT_TOLERANCE': 1e-5,
    'MODULUS_INFLATION': 1,
    'EVALUATION_GRID_1D': 1001,
    'EVALUATION_GRID_2D': 121,
}


def koopman_setting(name):
    """Return a value of the KOOPMAN settings dict, falling back to DEFAULTS."""
    if name not in DEFAULTS:
        raise KeyError(f"Unknown KOOPMAN setting '{name}'")
    overrides = getattr(settings, 'KOOPMAN', {}) or {}
    return overrides.get(name, DEFAULTS[name])


def modulus_resolution(dimension):
    if dimension == 1:
        return koopman_setting('MODULUS_RESOLUTION_1D')
    return koopman_setting('MODULUS_RESOLUTION_2D')


def evaluation_points_per_axis(dimension):
    if dimension == 1:
        return koopman_setting('EVALUATION_GRID_1D')
    return koopman_setting('EVALUATION_GRID_2D')
