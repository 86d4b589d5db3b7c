import sys

from lagreach.cli import main

sys.exit(main())
