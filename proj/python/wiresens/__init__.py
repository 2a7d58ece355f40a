"""Python bindings for the wiresens tactile sensing toolkit."""

import json as _json

from ._wiresens import (
    CalibrationError,
    CalibrationResult,
    CodecError,
    Error,
    Frame,
    IoError,
    ParamScore,
    ParseError,
    RecordingError,
    ValidationError,
    decode_packet,
    encode_packet,
    encoded_size,
    evaluate_params,
    export_csv,
    predict_frame,
    read_recording,
    should_send,
    solve_calibration,
    write_recording,
)
from . import _wiresens

__all__ = [
    "CalibrationError",
    "CalibrationResult",
    "CodecError",
    "Error",
    "Frame",
    "IoError",
    "ParamScore",
    "ParseError",
    "RecordingError",
    "ValidationError",
    "decode_packet",
    "encode_packet",
    "encoded_size",
    "evaluate_params",
    "export_csv",
    "grid_search",
    "parse_config",
    "power_table",
    "predict_frame",
    "read_recording",
    "should_send",
    "simulate",
    "solve_calibration",
    "write_recording",
]


def parse_config(text):
    """Validated device configs as a list of dicts, defaults filled in."""
    return _json.loads(_wiresens._parse_config(text))


def grid_search(frames, p_values, d_values, alpha=0.5, adc_bits=12, threads=0):
    """Optimization surface as a dict with ``cells`` and ``argmin``."""
    return _json.loads(_wiresens._grid_search(frames, list(p_values), list(d_values), alpha, adc_bits, threads))


def simulate(scenario_path, out_dir=""):
    """Runs a scenario file; writes recordings and stats.json, returns the stats."""
    return _json.loads(_wiresens._simulate(str(scenario_path), str(out_dir)))


def power_table(protocol="ble", t_a=(0.0, 0.01, 0.05, 0.1, 0.5, 1.0)):
    return _json.loads(_wiresens._power_table(protocol, list(t_a)))
