"""voxstyle: speech style conversion, style embeddings, and evaluation stats.

The package covers a whisper-conversion pipeline built on frame-wise LPC
source-filter processing, a spectral-shaping + compression intelligibility
enhancer, SNR-exact noise mixing, an LSTM + self-attention style encoder
(forward pass), PCA/silhouette style-space analysis, and the statistics of
AB/MOS/word-recognition listening tests. `voxstyle --help` lists the batch
CLI over corpus manifests.
"""

from .analysis import (
    ClusterReport,
    PcaModel,
    StylePca,
    pca_fit,
    pca_project,
    silhouette,
    voicing_ratio,
)
from .audio import AudioBuffer, FrameSpec, frame_count, frames, overlap_add, rms
from .convert import (
    EnhanceConfig,
    IntelligibilityEnhancer,
    NoiseMixSpec,
    NoiseMixer,
    WhisperConfig,
    WhisperConverter,
    enhance,
    mix_at_snr,
    whisperize,
)
from .embedding import (
    EncoderDims,
    EncoderWeights,
    StyleEmbedding,
    StyleEncoder,
    STYLES,
    attention_pool,
    cosine_similarity,
    embed,
    init_random,
    load_weights,
    lstm_forward,
    save_weights,
    style_centroid,
)
from .errors import FormatError, NumericError, UnsupportedFormatError, VoxstyleError
from .evalstats import (
    AbResponseSet,
    MosResponseSet,
    MosSummary,
    WrrResult,
    ab_summary,
    mos_mean,
    word_score,
    wrr,
)
from .lpc import (
    LpcSolution,
    PoleSet,
    analyze_frames,
    autocorrelate,
    default_order,
    inverse_filter,
    levinson,
    modify_formants,
    poles,
    reconstruct,
    synthesis_filter,
)
from .manifest import CorpusManifest, ManifestRecord, read_manifest, write_manifest
from .spectral import (
    MelBank,
    MelFeatures,
    Spectrogram,
    dct_matrix,
    hz_to_mel,
    log_mel,
    mel_bank,
    mel_cepstra,
    mel_to_hz,
    parseval_weights,
    spectral_centroid,
    stft,
)
from .wavio import read_wav, write_wav

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
