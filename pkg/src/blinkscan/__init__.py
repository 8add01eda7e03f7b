"""blinkscan: a blink-driven block-scanning input engine.

Subsystems:

* :mod:`blinkscan.blinksense`  - voltage classification and blink detection
* :mod:`blinkscan.linkframe`   - sensor-link frame codec (.blk captures)
* :mod:`blinkscan.blockscan`   - the scanning automaton
* :mod:`blinkscan.scanmetrics` - SA/FAR/SR metrics and study-table replay
* :mod:`blinkscan.simharness`  - synthetic-user simulation and traces
* :mod:`blinkscan.session`     - session engine, message stream and server
* :mod:`blinkscan.cli`         - the ``blinkscan`` command line
"""
from .blinksense import (
    BlinkEvent,
    SampleClass,
    SensorSample,
    SignalThresholds,
    StreamingBlinkDetector,
    calibrate_threshold,
    classify_sample,
    detect_blinks,
)
from .blockscan import (
    Phase,
    Region,
    ScanConfig,
    ScanState,
    blink,
    blinks_to_acquire,
    initial_state,
    quadrants,
    region_center,
    tick,
)
from .linkframe import DecodeStats, Frame, FrameDecoder, decode_stream, encode, encode_samples
from .scanmetrics import (
    MetricsSummary,
    TrialOutcome,
    aggregate,
    false_alarm_rate,
    selection_accuracy,
    success_rate,
    summarize,
)
from .session import QueueTransport, SessionConfig, run_session
from .simharness import BlinkTrace, TrialSpec, UserModel, run_trial, replay_trial, sweep

__version__ = "0.1.0"
