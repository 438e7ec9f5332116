"""`python -m semilabel` runs the pipeline command line."""

import sys

from .cli import main

sys.exit(main())
