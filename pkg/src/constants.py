DEFAULT_SAMPLES = 25
DEFAULT_TOL = 1e-9
DEFAULT_SEED = 0x5EED
DEFAULT_SUITE = "all"
DEFAULT_FORMAT = "text"

FLOW_STEP = 1e-4
FLOW_TOL = 1e-5
INTEGER_TOL = 1e-6
LSTSQ_TOL = 1e-8
RANK_TOL = 1e-8
FIND_2ISO_STEPS = 25
MAX_DEPTH = 4

# Width of the smooth cut-off used by partitions of unity, as a fraction of
# the chart width along each axis.
PARTITION_MARGIN = 0.25
COVER_GRID = 7

# Random instances drawn per suite run.
CALCULUS_INSTANCES = 100
APPENDIX_INSTANCES = 20
# Eleven carrier elements give 55 distinct pairs for the bracket checks.
CARRIER_SAMPLES = 11
FINDIM_INSTANCES = 20
MORPHISM_TRIPLES = 20
