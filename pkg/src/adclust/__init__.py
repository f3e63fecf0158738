"""Self-labeling single-cluster anomaly detection for multivariate time series.

The pipeline: embed windows into a feature space, pull embeddings toward
a learnable center under a quantile-radius hypersphere objective, and
simultaneously self-label points by thresholding their center similarity
at a learnable value whose training pressure only moves it upward.
Scores combine the self-labeling loss term with the centered distance;
labels come from a percentile threshold at the expected anomaly ratio.
"""

from .cluster import (ClusterState, assign_target, distance_loss, grad_one_directed,
                      one_directed_loss, one_directed_loss_value, one_directed_terms,
                      soft_assign, soft_assign_values, total_loss, update_radius)
from .data import (NormalizationStats, SynthSpec, TimeSeriesDataset, WindowView,
                   apply_normalizer, fit_normalizer, invert_normalizer, load_csv,
                   make_windows, save_csv, synth_dataset)
from .embed import EmbedderConfig, EmbedderParams, forward, forward_values, init_params
from .errors import CollapseError, ConfigError, NumericalAbort
from .metrics import (EvalReport, affiliation_pr, evaluate, f1_pointwise, range_auc, vus)
from .model import ModelState, load_model, save_model
from .multicluster import (MultiClusterState, kl_cluster_loss, multi_anomaly_score,
                           multi_distance_loss, student_t_assign, student_t_assign_values,
                           target_distribution)
from .score import (ScoreSeries, embedding_dispersion, label_scores, percentile_threshold,
                    score_multi, score_series, score_single)
from .train import TrainConfig, TrainLog, export_centroid_trajectory, train, warm_start

__version__ = "0.1.0"
