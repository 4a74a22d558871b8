from .config import AdapterConfig
from .model import ByteLM
from .server import AdapterServer

__all__ = ["AdapterConfig", "AdapterServer", "ByteLM"]
