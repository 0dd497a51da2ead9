"""Multilingual common semantic space construction and evaluation.

Words and clusters from several languages are jointly projected into one
shared space by a correlational network with word-level, neighborhood,
character-level and linguistic-property alignment losses; the resulting
embeddings are scored with QVEC and QVEC-CCA.
"""

from .corpus import (
    CharInventory,
    DictionaryPairSet,
    EmbeddingTable,
    LinguisticClusterSet,
    Vocabulary,
    build_char_inventory,
    load_clusters,
    load_dictionary,
    load_embeddings,
    save_embeddings,
)
from .numerics import (
    AdadeltaState,
    adadelta_step,
    cca_first_correlation,
    cosine_row_loss,
    finite_diff_check,
    pearson,
    sigmoid,
    tanh_map,
)
from .qvec import QvecInstance, align_vocab, multilingual_instance, qvec_cca_score, qvec_score
from .trainer import (
    ModelParams,
    TrainConfig,
    TrainResources,
    load_checkpoint,
    project_vocabulary,
    save_checkpoint,
    train,
)

__version__ = "0.1.0"
