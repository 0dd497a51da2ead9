import numpy as np
import pytest

from corrspace import corpus, trainer
from corrspace.cli import _full_dictionary
from corrspace import synth


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def make_table(language, words, matrix):
    return corpus.EmbeddingTable(corpus.Vocabulary(language, list(words)), np.asarray(matrix, float))


def toy_state(seed=0, vocab=10, dim=4, components="W+N+Ch+L", dim_common=3,
              filters=2, widths=(1, 2), neighbors=3, batch_size=64, epochs=5):
    """A tiny ready-to-train two-language setup built in memory."""
    data = synth.generate(seed, vocab, dim, 0.05)
    resources = trainer.TrainResources(
        tables={synth.LANG_A: data.table_a, synth.LANG_B: data.table_b},
        dictionaries=[_full_dictionary(data)],
        clusters={
            synth.LANG_A: corpus.LinguisticClusterSet(synth.LANG_A, data.clusters_a),
            synth.LANG_B: corpus.LinguisticClusterSet(synth.LANG_B, data.clusters_b),
        },
    )
    config = trainer.TrainConfig(
        dim_common=dim_common, filters=filters, widths=widths, batch_size=batch_size,
        neighbors=neighbors, epochs=epochs, seed=seed,
        components=trainer.parse_components(components),
    )
    return resources, config
