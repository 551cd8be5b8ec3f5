"""On-orbit teleoperation training simulator and EEG workload analysis toolkit."""

__version__ = "0.1.0"
