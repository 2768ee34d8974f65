"""promptknn: image-to-prompt embedding prediction.

Offline, a prompt corpus is filtered and stored as paired CLIP-space and
sentence-space embedding files. Online, an image embedding retrieves its
top-k corpus rows by cosine similarity in CLIP space; the paired sentence
embeddings are mean-pooled and fused with an optional caption embedding to
produce the predicted prompt embedding.
"""

from .builder import (
    BuildReport,
    FilterConfig,
    TermEmbeddings,
    VocabMode,
    build_corpus,
    clean_prompts,
    dedup_by_similarity,
    vocab_filter,
)
from .core import (
    EmbeddingMatrix,
    EmbeddingVector,
    cosine_similarity,
    l2_normalize,
    mean_pool,
    weighted_fuse,
)
from .errors import (
    AllocationCapExceededError,
    BadDtypeError,
    BadHeaderError,
    BadMagicError,
    CountMismatchError,
    DimMismatchError,
    EmptyMatrixError,
    IoFailureError,
    MalformedJsonLineError,
    ManifestError,
    MissingVocabularyError,
    NonFinitePayloadError,
    NormalizationError,
    PromptKnnError,
    RowCountMismatchError,
    StoreError,
    TruncatedFileError,
    ZeroVectorError,
)
from .evaluator import (
    EvalRecord,
    EvalSummary,
    SyntheticFixtureSpec,
    Variant,
    compare_variants,
    evaluate,
    make_fixture,
    sweep,
)
from .index import (
    CorpusIndex,
    Neighbor,
    QueryResult,
    build_index,
    search,
    search_batch,
)
from .predictor import (
    FusionConfig,
    Prediction,
    predict,
    predict_batch,
    predict_knn_component,
)
from .store import (
    CorpusBundle,
    CorpusManifest,
    load_corpus,
    read_embeddings,
    write_embeddings,
)

__version__ = "0.1.0"
