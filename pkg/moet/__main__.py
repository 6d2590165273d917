import sys

from moet.cli import main

sys.exit(main())
