# Engine services for gatforge
from .workspace import Workspace
