"""Reset-free single-shot readout: simulation, signal extraction and fits.

The data model is a flat stream of IQ-plane measurement outcomes acquired
round-robin over a cycle of K gate sequences.  Without active reset each
shot's initial state is the previous shot's outcome, so averaging collapses
the signal; the analysis here works on outcome-to-outcome changes instead.
"""

from .axis import (
    AxisDiagnostics,
    AxisRecoveryError,
    DiffSeries,
    difference_points,
    fold_first_quadrant,
    principal_axis,
    restless_axis,
    snr,
    standard_axis,
)
from .bench import BenchReport, full_svd_axis, gen_clusters, kmeans2, run_scaling
from .core import (
    GateSpec,
    IQPoint,
    InsufficientDataError,
    MODE_RESTLESS,
    MODE_STANDARD,
    SequenceMeta,
    ShotStream,
    SignalAxis,
    StreamValidationError,
    average_iq,
    average_iq_all,
    global_index,
    split_index,
    wrap_axis_angle,
)
from .discriminate import (
    DegenerateDataWarning,
    Discriminator,
    LABEL_A,
    LABEL_B,
    LabeledStream,
    METHOD_CDF_GAP,
    METHOD_QUANTILE,
    cdf_max_separation_threshold,
    discriminator_for_stream,
    label_shots,
    quantile_threshold,
)
from .fitting import (
    EpcDistribution,
    FitResult,
    RbFitResult,
    RestlessPopulationModel,
    ZTestResult,
    bootstrap_epc,
    fit_curve,
    fit_rabi,
    fit_rb,
    fit_restless_model,
    identify_ground_label,
    rb_curves_from_labels,
    rb_postselect,
    z_test,
)
from .io import read_stream, write_stream
from .pipeline import RestlessAnalysis, analyze_restless, standard_signal
from .signals import (
    BinomialEstimate,
    FidelityReport,
    PostSelection,
    SignalSeries,
    calibration_values,
    conditioned_signals,
    dprime_signal,
    jeffreys_interval,
    normalize_signal,
    post_select,
    readout_fidelities,
    recombine,
    restless_signal,
    spam_correct,
)
from .simulator import (
    RBCurves,
    SimConfig,
    TruthRecord,
    excited_population_trace,
    expected_initial_ground_share,
    expected_pa,
    rb_sequence_meta,
    restless_steady_state,
    simulate_rb_curves,
    simulate_restless,
    simulate_standard,
)

__version__ = "0.1.0"
