import sys
from pathlib import Path

# Make the oracle helpers importable as a top-level module from any cwd.
sys.path.insert(0, str(Path(__file__).resolve().parent))
