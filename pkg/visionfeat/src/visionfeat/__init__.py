"""Offline image feature extraction into five-channel bundle files."""

from .bundleio import Bundle, save
from .config import CHANNEL_DIMS, ExtractorConfig, load_config
from .errors import ModelLoadError, UnreadableImage, VisionfeatError
from .extract import BatchReport, batch_extract, extract

__version__ = "0.1.0"
