"""
Command-line entry point of the laboratory.

Examples:
    python scripts/rfim_lab.py exact --width 3 --height 3
    python scripts/rfim_lab.py run manifests/singularity.json --threads 4
    python scripts/rfim_lab.py report --out ./runs
"""
import logging
import sys
from pathlib import Path

# Add parent directory to path
sys.path.append(str(Path(__file__).parent.parent))

from src.config import config
from src.harness.cli import main

# Configure logging
logging.basicConfig(
    level=logging.INFO,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
    handlers=[
        logging.FileHandler(config.LOGS_DIR / 'rfim_lab.log'),
        logging.StreamHandler()
    ]
)


if __name__ == "__main__":
    sys.exit(main())
