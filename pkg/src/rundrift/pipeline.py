"""End-to-end detection: trace stream to sudden detector to gradual stage."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Iterable

from .gradual import GradualDrift, GradualStage
from .sudden import DetectorConfig, SuddenDetector, SuddenDrift

REPORT_VERSION = 1


@dataclass
class DriftReport:
    log_id: str
    sudden: list[SuddenDrift] = field(default_factory=list)
    gradual: list[GradualDrift] = field(default_factory=list)
    config: dict = field(default_factory=dict)
    p_series_path: str | None = None
    n_traces: int = 0

    def to_json(self) -> dict:
        return {"version": REPORT_VERSION, "log_id": self.log_id, "n_traces": self.n_traces,
                "sudden": [d.to_json() for d in self.sudden],
                "gradual": [d.to_json() for d in self.gradual],
                "p_series_path": self.p_series_path, "config_echo": self.config}

    @classmethod
    def from_json(cls, obj: dict) -> "DriftReport":
        if obj.get("version") != REPORT_VERSION:
            raise ValueError(f"unsupported report version {obj.get('version')!r}")
        return cls(str(obj.get("log_id", "")),
                   [SuddenDrift.from_json(d) for d in obj["sudden"]],
                   [GradualDrift.from_json(d) for d in obj["gradual"]],
                   dict(obj.get("config_echo", {})), obj.get("p_series_path"),
                   int(obj.get("n_traces", 0)))


def detect(traces: Iterable, config: DetectorConfig | None = None, gradual: bool = False,
           alpha: float = 0.05, log_id: str = "") -> tuple[DriftReport, SuddenDetector]:
    """Run the full pipeline over an ordered trace stream.

    With ``gradual`` set, every sudden drift is forwarded to a
    :class:`GradualStage`; drifts that end up as endpoints of a gradual drift
    are reported only inside it.
    """
    config = config or DetectorConfig(phi_divisor=5 if gradual else 3)
    det = SuddenDetector(config)
    stage = GradualStage(alpha, cap=config.max_buffer) if gradual else None
    for t in traces:
        labels = tuple(t.labels if hasattr(t, "labels") else t)
        idx = det.n_seen
        drift = det.observe(labels)
        if stage is not None:
            stage.feed(idx, labels)
            if drift is not None:
                stage.on_drift(drift)
    if stage is not None:
        stage.finish()
        sudden, grad = stage.sudden, stage.gradual
    else:
        sudden, grad = list(det.drifts), []
    report = DriftReport(log_id, sudden, grad, asdict(config), n_traces=det.n_seen)
    report.config["gradual"] = gradual
    report.config["gradual_alpha"] = alpha
    return report, det
