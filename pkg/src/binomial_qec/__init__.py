"""Binomial bosonic-code error-correction simulator."""

__version__ = "0.1.0"

from .params import (Config, DeviceParams, FidelityModel, GateCalibration,
                     MeasurementModel, NoiseParams, ProtocolConfig,
                     config_hash, load_config)

__all__ = [
    "Config", "DeviceParams", "FidelityModel", "GateCalibration",
    "MeasurementModel", "NoiseParams", "ProtocolConfig",
    "config_hash", "load_config", "__version__",
]
