"""k-means seeding with PNN-smoothing, baseline seeders and exact Lloyd accelerators."""

from .core import (Configuration, Dataset, DistanceLedger, RngStream, RunReport,
                   WeightedCentroidSet, assign_all, sq_dist)
from .lloyd import AcceleratorKind, LloydOutcome, run_lloyd, update_centroids
from .metrics import (AggregateStats, GroundTruth, aggregate, centroid_index, scaled_iterations,
                      sse, success_rate)
from .pnn import (compute_J, merge_cost, merge_pair, pnn_reduce, seed_pnn, seed_pnns,
                  seed_refine, split_evenly)
from .seeding import (SeederSpec, parse_seeder, seed, seed_gkmpp, seed_kmpp, seed_maxmin,
                      seed_unif)

__version__ = "0.1.0"
