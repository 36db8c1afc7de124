"""Filter suite: particle filters, nudged variants, and Gaussian baselines."""

from .base import (FilterOutput, FilterState, init_filter, resample_multinomial,
                   run_filter)
from .kalman import (EKFModel, GaussianBelief, KalmanResult, build_tracking_ekf,
                     ekf_step, enkf_step, kalman_filter, run_ekf, run_enkf)
from .particle import (apf_step, bpf_step, implicit_kernel_sample, nupf_pw_step,
                       nupf_step, optimal_pf_step, run_apf, run_bpf, run_nupf,
                       run_nupf_pw, run_optimal_pf)

__all__ = [
    "FilterOutput", "FilterState", "init_filter", "resample_multinomial", "run_filter",
    "GaussianBelief", "KalmanResult", "kalman_filter",
    "EKFModel", "ekf_step", "run_ekf", "build_tracking_ekf",
    "enkf_step", "run_enkf",
    "bpf_step", "nupf_step", "nupf_pw_step", "optimal_pf_step", "apf_step",
    "implicit_kernel_sample",
    "run_bpf", "run_nupf", "run_nupf_pw", "run_optimal_pf", "run_apf",
]
