from embedding.tsne import TsneConfig, Embedding2D, tsne, calibrate_affinities, joint_probabilities
from embedding.summary import ClusterSummary, cluster_summary, load_selection

__all__ = [
    "TsneConfig",
    "Embedding2D",
    "tsne",
    "calibrate_affinities",
    "joint_probabilities",
    "ClusterSummary",
    "cluster_summary",
    "load_selection",
]
