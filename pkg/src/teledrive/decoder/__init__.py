"""Desk-scale intent decode pipeline.

Feature extraction from synthetic broadband (cascaded dual-branch 1-D
convolutions), latent-variable cursor regression with exponential
smoothing, and the discriminant + two-state Markov click classifier.
"""

from teledrive.decoder.fenet import BroadbandWindow, FENetConfig, fenet_extract, haar_config
from teledrive.decoder.preprocess import FeatureStats
from teledrive.decoder.plsr import PLSRModel, plsr_fit
from teledrive.decoder.classifier import (
    HMMModel,
    LDAModel,
    fit_lda,
    fit_transition,
    hmm_filter_step,
    lda_posterior,
)
from teledrive.decoder.synth import (
    LiveSynth,
    SynthConfig,
    SyntheticSession,
    mixing_matrix,
    smooth_intent_trace,
)
from teledrive.decoder.pipeline import (
    DecodeOutput,
    DecoderModel,
    DecoderRig,
    StreamingDecoder,
    exp_smooth,
    load_model,
    save_model,
    train_decoder,
    train_synthetic_decoder,
)

__all__ = [
    "BroadbandWindow", "FENetConfig", "fenet_extract", "haar_config",
    "FeatureStats", "PLSRModel", "plsr_fit",
    "HMMModel", "LDAModel", "fit_lda", "fit_transition", "hmm_filter_step",
    "lda_posterior",
    "LiveSynth", "SynthConfig", "SyntheticSession", "mixing_matrix",
    "smooth_intent_trace",
    "DecodeOutput", "DecoderModel", "DecoderRig", "StreamingDecoder",
    "exp_smooth",
    "load_model", "save_model", "train_decoder", "train_synthetic_decoder",
]
