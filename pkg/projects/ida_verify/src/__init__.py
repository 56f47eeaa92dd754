from pathlib import Path

# Set root directory
ROOT_DIR = Path(__file__).parent.parent.absolute()
CONFIG_DIR = ROOT_DIR / "config"
PRESETS_DIR = CONFIG_DIR / "presets"
