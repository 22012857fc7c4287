import sys
from pathlib import Path

# Let test modules import the shared oracles module as a sibling.
sys.path.insert(0, str(Path(__file__).parent))
