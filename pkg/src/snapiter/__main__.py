import sys

from snapiter.harness.cli import main

sys.exit(main())
