"""Cross-structural time-series classification.

A multiscale Transformer reads the series as a token sequence; a simplicial
message-passing network reads the Vietoris-Rips complex of its patches.  The
two embeddings are aligned with a contrastive loss and concatenated for a
linear softmax classifier.
"""

from .config import ABLATIONS, TrainConfig
from .data import Dataset, load_split, load_tsv, sine_vs_noise, znormalize
from .model import HighTS
from .training import fit, grid_search, ablate

__all__ = ["ABLATIONS", "TrainConfig", "Dataset", "load_split", "load_tsv", "sine_vs_noise",
           "znormalize", "HighTS", "fit", "grid_search", "ablate"]
__version__ = "0.1.0"
