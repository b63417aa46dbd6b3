import sys

from itp.cli import main

sys.exit(main())
