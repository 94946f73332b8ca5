"""Point d'entrée ``python -m gradps``."""

import sys

from gradps.cli import main

sys.exit(main())
