"""``python -m moead_acdp`` entry point."""

import sys

from .cli import main

sys.exit(main())
