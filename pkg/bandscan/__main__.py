import sys

from bandscan.cli import main

sys.exit(main())
