"""Multimodal Finnish dialect identification toolkit."""

from murreid._murreid import (  # noqa: F401
    ClassSignal,
    CorpusStats,
    DialectLabel,
    DspConfig,
    EvalReport,
    ModelBundle,
    ModelDims,
    Prediction,
    SplitManifest,
    SynthConfig,
    SynthResult,
    TrainConfig,
    TrainReport,
    Utterance,
    Vocabulary,
    Waveform,
    compute_stats,
    confusion,
    decode_wav,
    encode_fixed,
    evaluate_bundle,
    extract_features,
    fft_magnitude,
    filter_by_duration,
    hz_to_mel,
    load_bundle,
    mel_filterbank,
    mel_to_hz,
    metrics,
    parse_manifest,
    read_split,
    registry,
    render_report,
    resample,
    split,
    synth_describe,
    synth_generate,
    tokenize,
    train_fusion,
    train_text_only,
    write_manifest,
    write_split,
)

__version__ = "0.1.0"
