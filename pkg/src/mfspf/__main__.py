import sys

from mfspf.cli import main

sys.exit(main())
