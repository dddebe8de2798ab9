import sys

from blowlab.cli import main

sys.exit(main())
