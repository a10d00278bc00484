"""``python -m bus_saliency`` delegates to the CLI."""

import sys

from .cli import main

sys.exit(main())
