"""Process drift detection over distributions of partially ordered runs."""
from .concurrency import ConcurrencyState, alpha_oracle
from .gradual import GradualDrift, GradualStage, process_queue, test_gradual
from .log import Event, EventLog, Trace, parse_csv, parse_xes, stream_traces
from .runs import Run, run_histogram, trace_to_run
from .stats import Histogram, chi2_cdf, chi2_critical, chi2_independence
from .sudden import DetectorConfig, SuddenDetector, SuddenDrift

__all__ = [
    "ConcurrencyState", "alpha_oracle", "GradualDrift", "GradualStage", "process_queue",
    "test_gradual", "Event", "EventLog", "Trace", "parse_csv", "parse_xes", "stream_traces",
    "Run", "run_histogram", "trace_to_run", "Histogram", "chi2_cdf", "chi2_critical",
    "chi2_independence", "DetectorConfig", "SuddenDetector", "SuddenDrift",
]
