"""LSTM load forecasting under Gaussian input attacks, with FFT denoising."""

from ._loadrobust import (
    HORIZON,
    INPUT_LENGTH,
    SAMPLE_INTERVAL_S,
    LoadRobustError,
    Model,
    bin_frequency,
    default_calibration_snrs,
    default_cutoff_candidates,
    evaluate_matrix,
    fft_forward,
    fft_inverse,
    generate_synthetic,
    grid_search_cutoff,
    ingest_csv,
    inject_noise,
    lowpass,
    mae,
    make_windows,
    measure_snr,
    sae,
    signal_power,
    simulate,
    split_chronological,
    step_noise_seed,
    to_csv,
    train,
    window_noise_seed,
)

__version__ = "0.1.0"
