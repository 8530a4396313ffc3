import sys

from eacode.cli import main

sys.exit(main())
