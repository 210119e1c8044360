import sys

from pnltl.cli import main

sys.exit(main())
