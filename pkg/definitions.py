import os
from pathlib import Path

ROOT_DIR = Path(os.path.dirname(os.path.abspath(__file__)))
CONFIGS_DIR = ROOT_DIR / 'configs'
