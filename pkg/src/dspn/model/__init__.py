"""Satisfaction prediction models: the two-stage network and the flat baseline."""

from .baseline import mlp_baseline_forward
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import DspnConfig
from .dspn import (augmented_reports, bce_loss, day_vectors, dspn_forward,
                   intent_vector, satisfaction_head, watch_all)
from .layers import (GruLeaves, action_fusion, action_rows, bigru_layer,
                     build_query, embed_valued, gather, gru_cell,
                     masked_mean_rows, report_embedding, sum_valid_rows)
from .params import (ParamSet, embedding, glorot, init_baseline_params,
                     init_dspn_params)

__all__ = [
    "CheckpointError",
    "DspnConfig",
    "GruLeaves",
    "ParamSet",
    "action_fusion",
    "action_rows",
    "augmented_reports",
    "mlp_baseline_forward",
    "bce_loss",
    "bigru_layer",
    "build_query",
    "day_vectors",
    "dspn_forward",
    "embed_valued",
    "embedding",
    "gather",
    "glorot",
    "gru_cell",
    "init_baseline_params",
    "init_dspn_params",
    "intent_vector",
    "load_checkpoint",
    "masked_mean_rows",
    "report_embedding",
    "satisfaction_head",
    "save_checkpoint",
    "sum_valid_rows",
    "watch_all",
]
