import sys

from trilog.cli import main

sys.exit(main())
