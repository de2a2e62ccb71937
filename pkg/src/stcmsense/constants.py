"""Physical constants and shared numeric conventions."""

SPEED_OF_LIGHT = 299792458.0  # m/s

# Condition number above which an information matrix is treated as singular
# and the corresponding bound is masked instead of inverted.
CONDITION_LIMIT = 1e12
