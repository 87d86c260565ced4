from infoflow.server.app import create_app
from infoflow.server.config import ServerConfig, load_config

__all__ = ["ServerConfig", "create_app", "load_config"]
