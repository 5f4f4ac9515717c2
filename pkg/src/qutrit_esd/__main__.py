import sys

from qutrit_esd.cli import main

sys.exit(main())
