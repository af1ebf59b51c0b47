"""EEG movement-intention detection with cross-task classifier transfer.

Train a lateralized-readiness-potential detector on windows around
motion-capture-labeled movement onsets and transfer it between bilateral
and unilateral reaching tasks.
"""

__version__ = "0.1.0"

from .channels import ChannelSet, make_channel_set, select_channels
from .types import LRP, NOLRP, RawRecording, MotionTrace, Trial, TrialTable, SessionData, StudyCondition, study_condition

__all__ = [
    "ChannelSet",
    "make_channel_set",
    "select_channels",
    "LRP",
    "NOLRP",
    "RawRecording",
    "MotionTrace",
    "Trial",
    "TrialTable",
    "SessionData",
    "StudyCondition",
    "study_condition",
    "__version__",
]
