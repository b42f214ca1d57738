"""seqlab: bidirectional recurrent and linear-chain CRF sequence taggers in numpy."""

__version__ = "0.1.0"

from .corpus import Document, TaggedSequence, gen_synthetic, load_conll, save_conll  # noqa: E402
from .crf import CrfModel, CrfTrainConfig, init_crf, train_crf  # noqa: E402
from .embeddings import EmbeddingTable, SkipGramConfig, init_embedding_layer, train_skipgram  # noqa: E402
from .errors import ContractError, DataFormatError, EmptyInputError, NumericError, SeqlabError  # noqa: E402
from .model import SequenceModel, TrainConfig, init_model, train  # noqa: E402
from .serialize import load_model, save_model  # noqa: E402
from .tagscheme import EntitySpan, Metrics, bio_decode, bio_encode, evaluate, kfold_split  # noqa: E402
from .vocab import TagSet, Vocabulary  # noqa: E402
